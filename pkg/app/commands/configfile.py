"""Loading experiment files.

Experiment files are flat INI files::

    [problem]
    p = 2, 6
    q0 = 4

    [data]
    kind = random-smooth
    seed = 7

    [discretization]
    resolutions = 17, 33, 65

    [solver]
    eps = 0.05, 0.01

    [checks]
    names = caccioppoli, lipschitz

    [check.caccioppoli]
    j = 2
    t = 0.1
    s = 0.3

Every validation failure is raised as a ConfigError naming ``section.key``.
"""
import configparser
import logging
from pathlib import Path

from pydantic import BaseModel, TypeAdapter, ValidationError

from app.core.errors import ConfigError
from app.models.experiment import (
    CHECK_NAMES,
    CheckSpec,
    ChecksSection,
    DataSection,
    DiscretizationSection,
    ExperimentConfig,
    OutputSection,
    ProblemSection,
    SolverSection,
)

logger = logging.getLogger(__name__)

SECTIONS: dict[str, type[BaseModel]] = {
    "problem": ProblemSection,
    "data": DataSection,
    "discretization": DiscretizationSection,
    "solver": SolverSection,
    "output": OutputSection,
}

_check_adapter = TypeAdapter(CheckSpec)


def _error_key(prefix: str, error: ValidationError) -> tuple[str, str]:
    first = error.errors()[0]
    fields = [str(part) for part in first["loc"] if str(part) not in CHECK_NAMES]
    key = f"{prefix}.{fields[-1]}" if fields else prefix
    return key, first["msg"]


def _validate(model, section: str, values: dict):
    try:
        if isinstance(model, TypeAdapter):
            return model.validate_python(values)
        return model.model_validate(values)
    except ValidationError as e:
        key, message = _error_key(section, e)
        raise ConfigError(key, message) from e


def parse_experiment(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate the INI text of an experiment file.

    Relative data file paths are resolved against ``base_dir`` (the working
    directory when it is None); the file must exist.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys such as R0 are case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError("config", str(e)) from e

    sections: dict[str, BaseModel] = {}
    names: tuple[str, ...] = ()
    check_values: dict[str, dict] = {}
    for section in parser.sections():
        values = dict(parser[section])
        if section == "checks":
            names = _validate(ChecksSection, section, values).names
        elif section.startswith("check."):
            check_values[section.removeprefix("check.")] = values
        elif section in SECTIONS:
            if section == "data" and base_dir is not None and values.get("file"):
                values["file"] = str(base_dir / values["file"])
            sections[section] = _validate(SECTIONS[section], section, values)
        else:
            raise ConfigError(section, "unknown section")

    if "problem" not in sections:
        raise ConfigError("problem", "section is required")

    for name in names:
        if name not in CHECK_NAMES:
            raise ConfigError("checks.names", f"unknown check {name!r}")
    if len(set(names)) != len(names):
        raise ConfigError("checks.names", "each check may be named once")
    for name in check_values:
        if name not in names:
            raise ConfigError(f"check.{name}", "section is not listed in [checks] names")
    checks = tuple(
        _validate(_check_adapter, f"check.{name}", {**check_values.get(name, {}), "name": name})
        for name in names
    )

    problem = sections["problem"]
    solver = sections.get("solver", SolverSection())
    if max(solver.eps) > problem.eps0:
        raise ConfigError("solver.eps", f"eps values must not exceed eps0 = {problem.eps0}")

    return ExperimentConfig(
        problem=problem,
        data=sections.get("data", DataSection()),
        discretization=sections.get("discretization", DiscretizationSection()),
        solver=solver,
        checks=checks,
        output=sections.get("output", OutputSection()),
    )


def load_experiment(path: Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}") from e
    config = parse_experiment(text, base_dir=path.parent)
    logger.info(f"loaded experiment {path} with checks {[c.name for c in config.checks]}")
    return config
