"""Reading and writing nodal fields.

Two formats: CSV with one ``index,value`` row per node (C-order flattened
index), and a binary dump::

    b"NFLD" | int64 N | int64 shape[N] | float64 lower[N] | float64 upper[N] | float64 payload

with every number little-endian.
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from app.core.errors import GridError
from app.models.problem import BoundaryData
from app.pde.grid import Grid, NodalField, transfinite_fill

logger = logging.getLogger(__name__)

MAGIC = b"NFLD"


def write_field_csv(u: NodalField, path: Path) -> None:
    frame = pd.DataFrame({"index": np.arange(u.values.size), "value": u.values.ravel()})
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug(f"wrote {u.values.size} values to {path}")


def _read_table(path: Path) -> pd.DataFrame:
    """Read an ``index,value`` CSV; unreadable or malformed files raise ValueError."""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ValueError(f"{path}: cannot read CSV ({e})") from e
    if list(frame.columns) != ["index", "value"]:
        raise ValueError(f"{path}: expected columns index,value, got {list(frame.columns)}")
    if not pd.api.types.is_integer_dtype(frame["index"]):
        raise ValueError(f"{path}: index column must hold integers")
    return frame


def read_field_csv(path: Path, grid: Grid) -> NodalField:
    """Read a CSV field; every node of ``grid`` must be present exactly once."""
    frame = _read_table(path)
    size = int(np.prod(grid.shape))
    index = frame["index"].to_numpy()
    if len(index) != size or not np.array_equal(np.sort(index), np.arange(size)):
        raise GridError(f"{path}: indices do not cover the {grid.shape} grid exactly once")
    values = np.empty(size)
    values[index] = frame["value"].to_numpy(dtype=float)
    return NodalField(grid, values.reshape(grid.shape))


def write_field_binary(u: NodalField, path: Path) -> None:
    grid = u.grid
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.asarray([grid.N], dtype="<i8").tobytes())
        f.write(np.asarray(grid.shape, dtype="<i8").tobytes())
        f.write(np.asarray(grid.lower, dtype="<f8").tobytes())
        f.write(np.asarray(grid.upper, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def read_field_binary(path: Path) -> NodalField:
    """Read a binary dump, restoring its grid."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ValueError(f"{path}: cannot read field dump ({e})") from e
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a field dump (bad magic {raw[:4]!r})")
    offset = 4
    N = int(np.frombuffer(raw, dtype="<i8", count=1, offset=offset)[0])
    offset += 8
    if not 2 <= N <= 3:
        raise ValueError(f"{path}: unsupported dimension N={N}")
    shape = tuple(int(n) for n in np.frombuffer(raw, dtype="<i8", count=N, offset=offset))
    offset += 8 * N
    lower = np.frombuffer(raw, dtype="<f8", count=N, offset=offset)
    offset += 8 * N
    upper = np.frombuffer(raw, dtype="<f8", count=N, offset=offset)
    offset += 8 * N
    size = int(np.prod(shape))
    if len(raw) - offset != 8 * size:
        raise ValueError(f"{path}: payload holds {(len(raw) - offset) // 8} values, header says {size}")
    payload = np.frombuffer(raw, dtype="<f8", count=size, offset=offset)
    grid = Grid(tuple(lower.tolist()), tuple(upper.tolist()), shape)
    return NodalField(grid, payload.reshape(shape))


def read_boundary_csv(path: Path, grid: Grid) -> BoundaryData:
    """Tabulated boundary data from a CSV of boundary (and optionally interior) nodes.

    Every boundary node must be listed; missing interior nodes are filled by
    transfinite interpolation.

    Raises:
        ValueError: The file is missing, unreadable or lacks the index,value columns.
        GridError: Indices fall outside ``grid`` or boundary nodes are missing.
    """
    frame = _read_table(path)
    size = int(np.prod(grid.shape))
    index = frame["index"].to_numpy()
    if np.any((index < 0) | (index >= size)):
        raise GridError(f"{path}: indices outside the {grid.shape} grid")
    known = np.zeros(size, dtype=bool)
    known[index] = True
    values = np.zeros(size)
    values[index] = frame["value"].to_numpy(dtype=float)
    if not np.all(known[grid.boundary_mask.ravel()]):
        raise GridError(f"{path}: some boundary nodes are missing")
    values = values.reshape(grid.shape)
    filled = transfinite_fill(values)
    missing = ~known.reshape(grid.shape)
    values[missing] = filled[missing]
    return BoundaryData(kind="tabulated", lower=grid.lower, upper=grid.upper, shape=grid.shape,
                        values=tuple(values.ravel().tolist()))
