"""Tests for experiment files."""

from pathlib import Path

import pytest

from app.commands.configfile import load_experiment, parse_experiment
from app.core.errors import ConfigError
from app.models.experiment import CaccioppoliCheck, LipschitzCheck, WeirdCaccioppoliCheck

EXPERIMENT = """
[problem]
p = 2, 6
q0 = 4

[data]
kind = trigonometric
slope = 1, 0
mode_amplitudes = 0.3, 0.1
mode_wavevectors = 1, 0; 0, 2
mode_phases = 0, 0.5

[discretization]
resolutions = 9, 17

[solver]
tol = 1e-9
eps = 0.1, 0.05

[checks]
names = caccioppoli, lipschitz, weird_caccioppoli

[check.caccioppoli]
j = 2
t = 0.1
s = 0.3

[check.lipschitz]
r0 = 0.1
R0 = 0.3

[check.weird_caccioppoli]
s_exp = 1
m_exp = 2
"""


def _with(section: str, body: str) -> str:
    return f"[problem]\np = 2, 4\n\n[{section}]\n{body}\n"


class TestParseExperiment:
    """Tests for parse_experiment."""

    def test_full_file(self):
        config = parse_experiment(EXPERIMENT)
        assert config.problem.p.p == (2, 6)
        assert config.problem.q0 == 4
        assert config.problem.center == (0.5, 0.5)
        assert [g.shape for g in config.grids()] == [(9, 9), (17, 17)]
        assert config.solver.eps == (0.1, 0.05)
        assert config.solver.solve_config().tol == 1e-9

        modes = config.data.modes()
        assert [m.wavevector for m in modes] == [(1.0, 0.0), (0.0, 2.0)]
        assert modes[1].phase == 0.5

        caccioppoli, lipschitz, weird = config.checks
        assert isinstance(caccioppoli, CaccioppoliCheck)
        assert caccioppoli.j == 2
        assert caccioppoli.cutoff(config.problem.center).s == 0.3
        assert isinstance(lipschitz, LipschitzCheck)
        assert lipschitz.R0 == 0.3
        assert isinstance(weird, WeirdCaccioppoliCheck)

    def test_defaults(self):
        config = parse_experiment("[problem]\np = 2, 2\n")
        assert config.checks == ()
        assert config.data.kind == "affine"
        assert config.output.formats == ("json", "csv", "binary", "markdown")
        assert [g.shape for g in config.grids()] == [(17, 17)]

    def test_checks_without_sections_use_defaults(self):
        config = parse_experiment("[problem]\np = 2, 3\n[checks]\nnames = self_improving, higher_integrability\n")
        assert [c.name for c in config.checks] == ["self_improving", "higher_integrability"]

    def test_domain(self):
        config = parse_experiment("[problem]\np = 2, 3\nlower = -1, 0\nupper = 1, 2\n")
        assert config.problem.center == (0.0, 1.0)
        assert config.grids()[0].lower == (-1.0, 0.0)

    @pytest.mark.parametrize(
        "text,key",
        [
            (_with("checks", "names = caccioppoli, bogus"), "checks.names"),
            (_with("checks", "names = lipschitz, lipschitz"), "checks.names"),
            (_with("solver", "tol = -1"), "solver.tol"),
            (_with("solver", "eps = 0.01, 0.1"), "solver.eps"),
            (_with("solver", "eps = 0.9"), "solver.eps"),
            (_with("solver", "speed = 3"), "solver.speed"),
            (_with("discretization", "resolutions = 17, 9"), "discretization.resolutions"),
            (_with("output", "formats = json, xml"), "output.formats"),
            (_with("check.lipschitz", "r0 = 0.1"), "check.lipschitz"),
            (_with("plots", "x = 1"), "plots"),
            ("[problem]\np = 2\n", "problem.p"),
            ("[problem]\np = 3, 2\n", "problem.p"),
            ("[data]\nkind = affine\n", "problem"),
            ("[problem]\np = 2, 4\n[checks]\nnames = caccioppoli\n[check.caccioppoli]\nj = 0\n",
             "check.caccioppoli.j"),
            ("[problem]\np = 2, 4\n[checks]\nnames = weird_caccioppoli\n[check.weird_caccioppoli]\n"
             "s_exp = 2\nm_exp = 1\n", "check.weird_caccioppoli"),
            ("[problem\np = 2, 4\n", "config"),
        ],
    )
    def test_errors_name_the_key(self, text, key):
        with pytest.raises(ConfigError) as info:
            parse_experiment(text)
        assert info.value.key == key

    def test_case_sensitive_keys(self):
        config = parse_experiment(
            "[problem]\np = 2, 4\n[checks]\nnames = lipschitz\n[check.lipschitz]\nr0 = 0.05\nR0 = 0.2\n"
        )
        assert config.checks[0].r0 == 0.05
        assert config.checks[0].R0 == 0.2


class TestLoadExperiment:
    """Tests for load_experiment."""

    def test_relative_data_file(self, tmp_path):
        (tmp_path / "boundary.csv").write_text("index,value\n0,0\n")
        path = tmp_path / "exp.ini"
        path.write_text("[problem]\np = 2, 4\n[data]\nkind = tabulated\nfile = boundary.csv\n")
        assert load_experiment(path).data.file == tmp_path / "boundary.csv"

    def test_absolute_data_file(self, tmp_path):
        data_file = tmp_path / "tables" / "boundary.csv"
        data_file.parent.mkdir()
        data_file.write_text("index,value\n0,0\n")
        path = tmp_path / "exp.ini"
        path.write_text(f"[problem]\np = 2, 4\n[data]\nkind = tabulated\nfile = {data_file}\n")
        assert load_experiment(path).data.file == data_file

    def test_missing_data_file(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text("[problem]\np = 2, 4\n[data]\nkind = tabulated\nfile = boundary.csv\n")
        with pytest.raises(ConfigError) as info:
            load_experiment(path)
        assert info.value.key == "data.file"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_experiment(tmp_path / "missing.ini")
        assert info.value.key == "config"

    def test_tabulated_needs_file(self):
        with pytest.raises(ConfigError) as info:
            parse_experiment(_with("data", "kind = tabulated"))
        assert info.value.key == "data"

    def test_accepts_path(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(EXPERIMENT)
        assert len(load_experiment(Path(str(path))).checks) == 3
