"""``solve``, ``sweep``, ``verify`` and ``study`` commands, driven by an experiment file."""
import argparse
import logging
from dataclasses import dataclass
from pathlib import Path

from app.commands.configfile import load_experiment
from app.core.config import settings
from app.core.database import create_db_and_tables, get_engine, get_session
from app.core.errors import ConfigError
from app.core.executor import run_jobs
from app.models.experiment import ExperimentConfig
from app.models.problem import BoundaryData, ModelParams, SolveConfig
from app.models.report import EstimateReport
from app.pde.fieldio import read_boundary_csv, write_field_binary, write_field_csv
from app.pde.grid import Grid
from app.pde.solver import solve, sweep_eps
from app.verify import export
from app.verify.archive import archive_reports, new_run_id
from app.verify.studies import run_check, run_study

logger = logging.getLogger(__name__)

COMMANDS = ("solve", "sweep", "verify", "study")


def register(sub: argparse._SubParsersAction) -> None:
    sub.add_parser("solve", help="solve on the finest grid at the smallest eps")
    sub.add_parser("sweep", help="solve for every eps on the finest grid")
    sub.add_parser("verify", help="run the configured checks on the finest grid")
    sub.add_parser("study", help="run the configured checks as refinement studies")


@dataclass
class Experiment:
    """An experiment file resolved into solver inputs."""

    config: ExperimentConfig
    params: ModelParams
    data: BoundaryData
    grids: list[Grid]
    solve_config: SolveConfig
    out: Path
    formats: tuple[str, ...]
    emit_plot_data: bool

    @property
    def finest(self) -> Grid:
        return self.grids[-1]

    @property
    def center(self) -> tuple[float, ...]:
        return self.config.problem.center


def prepare(args: argparse.Namespace) -> Experiment:
    if args.config is None:
        raise ConfigError("config", f"the {args.command} command needs --config")
    config = load_experiment(args.config)
    problem = config.problem
    grids = config.grids()
    lower, upper = problem.domain

    if config.data.kind == "tabulated":
        try:
            data = read_boundary_csv(config.data.file, grids[-1])
        except ValueError as e:
            raise ConfigError("data.file", str(e)) from e
    else:
        data = config.data.boundary_data(lower, upper, seed=args.seed)

    out = args.out or config.output.directory or settings.results_dir
    out.mkdir(parents=True, exist_ok=True)
    return Experiment(
        config=config,
        params=ModelParams(p=problem.p, eps=config.solver.eps[-1], eps0=problem.eps0),
        data=data,
        grids=grids,
        solve_config=config.solver.solve_config(),
        out=out,
        formats=config.output.formats,
        emit_plot_data=args.emit_plot_data or config.output.emit_plot_data,
    )


def _archive(args: argparse.Namespace, reports: list[EstimateReport]) -> None:
    if not (args.archive or settings.archive_reports) or not reports:
        return
    engine = get_engine()
    create_db_and_tables(engine)
    with get_session(engine) as session:
        archive_reports(session, reports, new_run_id())


def _solve(args: argparse.Namespace, exp: Experiment) -> int:
    result = solve(exp.params, exp.data, exp.finest, exp.solve_config)
    record = {
        "p": list(exp.params.p.p),
        "eps": exp.params.eps,
        "shape": list(exp.finest.shape),
        "method": result.method,
        "energy": result.energy,
        "initial_energy": result.initial_energy,
        "residual_max": result.residual_max,
        "iterations": result.iterations,
        "converged": result.converged,
        "boundary_max": result.u.boundary_max(),
        "interior_max": result.u.interior_max(),
    }
    if "csv" in exp.formats:
        write_field_csv(result.u, exp.out / "u.csv")
    if "binary" in exp.formats:
        write_field_binary(result.u, exp.out / "u.nfld")
    if "json" in exp.formats:
        export.write_json(record, exp.out / "solve.json")
    print(f"energy {export.format_float(result.energy)} after {result.iterations} iterations")
    return 0


def _sweep(args: argparse.Namespace, exp: Experiment) -> int:
    sweep = sweep_eps(exp.params, exp.config.solver.eps, exp.data, exp.finest, exp.solve_config,
                      threads=args.threads)
    if "csv" in exp.formats:
        export.write_csv(sweep.table, exp.out / "sweep.csv")
    if "json" in exp.formats:
        record = {
            "p": list(exp.params.p.p),
            "shape": list(exp.finest.shape),
            "energy_bound_holds": sweep.energy_bound_holds,
            "rows": sweep.table.to_dict(orient="records"),
        }
        export.write_json(record, exp.out / "sweep.json")
    print(sweep.table.to_string(index=False))
    return 0 if sweep.energy_bound_holds else 1


def _verify(args: argparse.Namespace, exp: Experiment) -> int:
    result = solve(exp.params, exp.data, exp.finest, exp.solve_config)
    q0 = exp.config.problem.q0
    reports = run_jobs(lambda spec: run_check(spec, result, exp.params, q0, exp.center),
                       exp.config.checks, threads=args.threads, label="check")
    if "json" in exp.formats:
        export.write_json([export.report_record(r) for r in reports], exp.out / "reports.json")
    if "csv" in exp.formats:
        export.write_csv(export.reports_frame(reports), exp.out / "reports.csv")
    if "markdown" in exp.formats:
        export.write_summary(exp.out / "summary.md", "Verification", reports=reports,
                             facts={"p": str(list(exp.params.p.p)), "eps": exp.params.eps,
                                    "shape": str(list(exp.finest.shape))})
    _archive(args, reports)
    failed = [r.check for r in reports if not r.passed]
    for report in reports:
        print(f"{report.check}: constant {export.format_float(report.constant)} "
              f"{'pass' if report.passed else 'FAIL'}")
    if failed:
        logger.warning(f"failed checks: {failed}")
    return 1 if failed else 0


def _study(args: argparse.Namespace, exp: Experiment) -> int:
    solutions = dict(zip(
        exp.grids,
        run_jobs(lambda g: solve(exp.params, exp.data, g, exp.solve_config), exp.grids,
                 threads=args.threads, label="study solve"),
        strict=True,
    ))
    q0 = exp.config.problem.q0
    studies = [
        run_study(spec, exp.params, exp.data, exp.solve_config, exp.grids, q0, exp.center,
                  threads=args.threads, solutions=solutions)
        for spec in exp.config.checks
    ]
    if "json" in exp.formats:
        export.write_json([export.study_record(s) for s in studies], exp.out / "study.json")
    if "csv" in exp.formats:
        export.write_csv(export.studies_frame(studies), exp.out / "study.csv")
    if exp.emit_plot_data:
        for study in studies:
            export.write_plot_data(study, exp.out)
    if "markdown" in exp.formats:
        export.write_summary(exp.out / "summary.md", "Refinement study", studies=studies,
                             facts={"p": str(list(exp.params.p.p)), "eps": exp.params.eps,
                                    "levels": str([list(g.shape) for g in exp.grids])})
    _archive(args, [level.report for s in studies for level in s.levels])
    for study in studies:
        print(f"{study.check}: {study.criterion} {'pass' if study.passed else 'FAIL'} "
              f"constants {[export.format_float(c) for c in study.constants]}")
    return 0 if all(s.passed for s in studies) else 1


def handle(args: argparse.Namespace) -> int | None:
    if args.command not in COMMANDS:
        return None
    exp = prepare(args)
    match args.command:
        case "solve":
            return _solve(args, exp)
        case "sweep":
            return _sweep(args, exp)
        case "verify":
            return _verify(args, exp)
        case "study":
            return _study(args, exp)
