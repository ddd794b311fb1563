"""``exponents`` and ``beta`` commands: the exponent bookkeeping, printed as JSON."""
import argparse
import logging
from pathlib import Path

from app.core.errors import NotStabilizedError
from app.models.beta import BetaTrace
from app.models.exponents import ExponentVector, MoserSchedule
from app.theory.beta import beta_run, beta_sweep_all
from app.theory.exponents import (
    compute_moser_schedule,
    compute_q_sequence,
    epsilon_asymptote,
    ratio_is_increasing,
)
from app.verify.export import dumps

logger = logging.getLogger(__name__)

COMMANDS = ("exponents", "beta")


def register(sub: argparse._SubParsersAction) -> None:
    exponents_cmd = sub.add_parser("exponents", help="q_j sequence and Moser schedule for p")
    exponents_cmd.add_argument("--p", type=str, required=True, help="comma-separated exponents, e.g. 2,3,4")
    exponents_cmd.add_argument("--q0", type=float, default=2.0)
    exponents_cmd.add_argument("--jmax", type=int, default=None)

    beta_cmd = sub.add_parser("beta", help="run the beta recursion to its fixpoint")
    beta_cmd.add_argument("--p", type=str, required=True)
    beta_cmd.add_argument("--q0", type=float, default=2.0)
    beta_cmd.add_argument("--j", type=int, default=None, help="outer index, 2 <= j <= N")
    beta_cmd.add_argument("--max-levels", type=int, default=None)
    beta_cmd.add_argument("--all", action="store_true", help="run every j = N, ..., 2")


def schedule_record(schedule: MoserSchedule, p: ExponentVector) -> dict:
    return {
        "N": schedule.N,
        "jmax": schedule.jmax,
        "sobolev2star": schedule.sobolev2star,
        "j0": schedule.j0,
        "j1": schedule.j1,
        "J": schedule.J,
        "theta": schedule.theta,
        "theta_tail": schedule.theta_tail,
        "eps_asymptote": epsilon_asymptote(p),
        "ratio_increasing": ratio_is_increasing(p),
        "gamma": list(schedule.gamma),
        "tau": list(schedule.tau),
        "eps": list(schedule.eps),
    }


def trace_record(trace: BetaTrace) -> dict:
    return {
        "j": trace.j,
        "ell0": trace.ell0,
        "fixpoint": list(trace.states[-1].target),
        "levels": [
            {"level": s.level, "beta": list(s.beta), "delta": d}
            for s, d in zip(trace.states, trace.delta, strict=True)
        ],
    }


def _emit(payload: dict, out: Path | None, name: str) -> None:
    text = dumps(payload)
    print(text, end="")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")


def _exponents(args: argparse.Namespace) -> int:
    p = ExponentVector.parse(args.p)
    q = compute_q_sequence(p, args.q0)
    schedule = compute_moser_schedule(p, args.jmax) if p.N >= 3 else None
    payload = {
        "p": list(p.p),
        "q0": q.q0,
        "q": list(q.q),
        "schedule": schedule_record(schedule, p) if schedule else None,
    }
    _emit(payload, args.out, "exponents.json")
    return 0


def _beta(args: argparse.Namespace) -> int:
    p = ExponentVector.parse(args.p)
    try:
        if args.all:
            traces = beta_sweep_all(p, args.q0, args.max_levels)
        elif args.j is None:
            raise ValueError("beta needs --j or --all")
        else:
            traces = [beta_run(p, args.q0, args.j, args.max_levels)]
    except NotStabilizedError as e:
        _emit({"p": list(p.p), "q0": args.q0, "traces": [trace_record(e.trace)]}, args.out, "beta.json")
        raise
    payload = {"p": list(p.p), "q0": args.q0, "traces": [trace_record(t) for t in traces]}
    if args.all:
        payload["final_exponents"] = [x * args.q0 for x in p.p]
    _emit(payload, args.out, "beta.json")
    return 0


def handle(args: argparse.Namespace) -> int | None:
    if args.command == "exponents":
        return _exponents(args)
    if args.command == "beta":
        return _beta(args)
    return None
