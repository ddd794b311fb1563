"""Shared test fixtures."""

import numpy as np
import pytest
from sqlmodel import SQLModel, create_engine
from sqlmodel.pool import StaticPool

import app.models.archive  # noqa: F401
from app.core.database import get_session
from app.models.exponents import ExponentVector
from app.models.problem import BoundaryData, ModelParams, SolveConfig, TrigMode
from app.pde.grid import Grid
from app.pde.solver import solve


@pytest.fixture(name="engine")
def engine_fixture():
    """Create an in-memory SQLite database for testing."""
    engine = create_engine(
        "sqlite://",
        connect_args={"check_same_thread": False},
        poolclass=StaticPool,
    )
    SQLModel.metadata.create_all(engine)
    yield engine
    SQLModel.metadata.drop_all(engine)


@pytest.fixture(name="session")
def session_fixture(engine):
    """Create a new database session for each test."""
    with get_session(engine) as session:
        yield session


@pytest.fixture(name="grid")
def grid_fixture() -> Grid:
    """17 x 17 nodes on the unit square."""
    return Grid.uniform(17)


@pytest.fixture(name="fine_grid")
def fine_grid_fixture() -> Grid:
    return Grid.uniform(33)


def affine_data(N: int = 2, slope=(1.0, -0.5), offset: float = 0.25) -> BoundaryData:
    return BoundaryData(kind="affine", lower=(0.0,) * N, upper=(1.0,) * N, slope=slope, offset=offset)


def wave_data(amplitude: float = 0.3) -> BoundaryData:
    """A gentle two-mode oscillation plus a tilt on the unit square."""
    return BoundaryData(
        kind="trigonometric",
        lower=(0.0, 0.0),
        upper=(1.0, 1.0),
        slope=(0.5, 0.25),
        modes=(
            TrigMode(amplitude=amplitude, wavevector=(1.0, 0.0)),
            TrigMode(amplitude=amplitude / 2, wavevector=(0.0, 1.0), phase=0.5),
        ),
    )


@pytest.fixture(name="affine")
def affine_fixture() -> BoundaryData:
    return affine_data()


@pytest.fixture(name="wave")
def wave_fixture() -> BoundaryData:
    return wave_data()


@pytest.fixture(name="params_p2")
def params_p2_fixture() -> ModelParams:
    return ModelParams(p=ExponentVector(p=(2, 2)), eps=0.0)


@pytest.fixture(name="params_p4")
def params_p4_fixture() -> ModelParams:
    return ModelParams(p=ExponentVector(p=(2, 4)), eps=0.05)


@pytest.fixture(name="tight")
def tight_fixture() -> SolveConfig:
    return SolveConfig(tol=1e-11, max_iters=20_000)


@pytest.fixture(name="affine_solution")
def affine_solution_fixture(grid, affine, params_p4, tight):
    """Converged solve on affine data (the exact minimizer)."""
    return solve(params_p4, affine, grid, tight)


@pytest.fixture(name="wave_solution")
def wave_solution_fixture(grid, wave, params_p4, tight):
    return solve(params_p4, wave, grid, tight)


@pytest.fixture(name="rng")
def rng_fixture() -> np.random.Generator:
    return np.random.default_rng(20240611)
