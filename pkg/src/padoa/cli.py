"""Command line front end.

Exit codes: 0 optimal, 1 bad input, 2 infeasible, 3 not converged.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as pio
from .baselines import enumerate_solve, milp_direct
from .oa import InvariantViolation, Status, oa_solve
from .padoa import padoa_solve
from .tcl import TclConfig, decode_solution, generate, load_ambient

log = logging.getLogger("padoa")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED = 0, 1, 2, 3
ALGORITHMS = ("padoa", "oa", "milp-direct", "enumerate")


def _configure_logging() -> None:
    level = os.environ.get("PADOA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _z0(text: str | None):
    if text is None:
        return None
    return np.array([float(t) for t in text.split(",") if t.strip()])


def run_algorithm(problem, algorithm: str, eps: float, eps_L: float | None, threads: int, max_iter: int, z0=None,
                  prune: bool = False):
    if algorithm == "padoa":
        return padoa_solve(problem, eps, eps_L, z0, workers=threads, max_iter=max_iter, prune_cuts=prune)
    if algorithm == "oa":
        return oa_solve(problem, eps, z0, max_iter=max_iter)
    if algorithm == "milp-direct":
        return milp_direct(problem)
    if algorithm == "enumerate":
        return enumerate_solve(problem)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _exit_code(result) -> int:
    return {Status.OPTIMAL: EXIT_OK, Status.INFEASIBLE: EXIT_INFEASIBLE}.get(result.status, EXIT_NOT_CONVERGED)


def _write_outputs(result, wall_ms, args, out_dir: Path | None = None, tag: str = "") -> None:
    sol = pio.solution_dict(result, 0.0 if args.no_timings else wall_ms)
    sol_path = args.solution_out if out_dir is None else out_dir / f"solution{tag}.json"
    trace_path = args.trace_out if out_dir is None else out_dir / f"trace{tag}.csv"
    text = json.dumps(sol, indent=1)
    if sol_path:
        Path(sol_path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if trace_path:
        result.trace.to_csv(trace_path, timings=not args.no_timings)
    if result.certificate is not None:
        cert_path = args.certificate_out or (Path(sol_path).with_suffix(".certificate.json") if sol_path else None)
        if out_dir is not None:
            cert_path = out_dir / f"certificate{tag}.json"
        payload = json.dumps(result.certificate.to_dict(), indent=1)
        if cert_path:
            Path(cert_path).write_text(payload + "\n", encoding="utf-8")
        else:
            print(payload, file=sys.stderr)


def cmd_solve(args) -> int:
    try:
        text = Path(args.instance).read_text(encoding="utf-8")
        problem = pio.loads_problem(text, args.instance)
    except (OSError, pio.InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    msgs = pio.validation_messages(problem, text, args.instance)
    if msgs:
        for m in msgs:
            print(f"error: {m}", file=sys.stderr)
        return EXIT_INPUT
    if args.algorithm == "padoa" and args.epsilon_l is not None and args.epsilon_l > args.epsilon:
        print("error: --epsilon-l may not exceed --epsilon", file=sys.stderr)
        return EXIT_INPUT
    t0 = time.perf_counter()
    try:
        result = run_algorithm(problem, args.algorithm, args.epsilon, args.epsilon_l, args.threads, args.max_iter,
                               _z0(args.z0), args.prune)
    except InvariantViolation as exc:
        print(f"error: invariant violated: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    wall_ms = (time.perf_counter() - t0) * 1e3
    _write_outputs(result, wall_ms, args)
    return _exit_code(result)


def cmd_validate(args) -> int:
    try:
        text = Path(args.instance).read_text(encoding="utf-8")
        problem = pio.loads_problem(text, args.instance)
    except (OSError, pio.InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    msgs = pio.validation_messages(problem, text, args.instance)
    for m in msgs:
        print(f"error: {m}", file=sys.stderr)
    if msgs:
        return EXIT_INPUT
    print(f"{args.instance}: ok ({problem.N} blocks, {problem.n_x} continuous, {problem.n_z} integer, "
          f"{problem.A.shape[0]} coupling rows)")
    return EXIT_OK


def cmd_bench_tcl(args) -> int:
    try:
        ambient = load_ambient(args.ambient, args.horizon) if args.ambient else None
        cfg = TclConfig(
            rooms=args.rooms, horizon=args.horizon, topology=args.topology, gamma=args.gamma, order=args.order,
            ambient=ambient, penalty=args.penalty,
        )
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    problem = generate(cfg)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        pio.save_problem(problem, out_dir / "instance.json")
    rows = []
    code = EXIT_OK
    for alg in args.algorithm or ["padoa"]:
        t0 = time.perf_counter()
        try:
            result = run_algorithm(problem, alg, args.epsilon, args.epsilon_l, args.threads, args.max_iter)
        except ValueError as exc:
            print(f"error: {alg}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        wall_ms = (time.perf_counter() - t0) * 1e3
        if out_dir is not None:
            _write_outputs(result, wall_ms, args, out_dir, f"-{alg}")
        energy = comfort = float("nan")
        if result.x is not None:
            sol = decode_solution(cfg, result.x, result.z)
            energy, comfort = sol.energy_cost, sol.comfort_cost
        rows.append([alg, result.status.value, repr(float(result.value)), result.iterations,
                     f"{0.0 if args.no_timings else wall_ms:.1f}", repr(energy), repr(comfort)])
        code = max(code, _exit_code(result))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["algorithm", "status", "objective", "iters", "wall_ms", "energy", "comfort"])
    w.writerows(rows)
    return code


def cmd_trace(args) -> int:
    run = Path(args.run_dir)
    files = sorted(run.glob("trace*.csv")) if run.is_dir() else [run]
    if not files or not all(f.exists() for f in files):
        print(f"error: no trace CSV under {run}", file=sys.stderr)
        return EXIT_INPUT
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["run", "iter", "U", "LB", "gap"])
    for f in files:
        with open(f, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                w.writerow([f.stem, row["iter"], row["U"], row["LB"], row["gap"]])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padoa", description="Outer approximation solvers for block-structured MICPs")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--epsilon", type=_positive, default=1e-6)
        p.add_argument("--epsilon-l", type=_positive, default=None, help="block subproblem tolerance (padoa)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--max-iter", type=int, default=100)
        p.add_argument("--seed", type=int, default=0, help="recorded for reproducibility; the solvers are deterministic")
        p.add_argument("--no-timings", action="store_true", help="write zero timings so traces are byte-identical")
        p.add_argument("--certificate-out", default=None)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("instance")
    s.add_argument("--algorithm", choices=ALGORITHMS, default="padoa")
    s.add_argument("--z0", default=None, help="comma separated starting integer point")
    s.add_argument("--prune", action="store_true", help="drop inactive cuts after each master solve (padoa)")
    s.add_argument("--trace-out", default=None)
    s.add_argument("--solution-out", default=None)
    solver_flags(s)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check an instance file")
    v.add_argument("instance")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench-tcl", help="generate and solve a room scheduling instance")
    b.add_argument("--rooms", type=int, default=3)
    b.add_argument("--horizon", type=int, default=8)
    b.add_argument("--gamma", type=float, default=0.0)
    b.add_argument("--order", type=int, choices=(2, 4), default=2)
    b.add_argument("--topology", default=None, help="three-room, four-room or linear-N")
    b.add_argument("--ambient", default=None, help="CSV with one temperature per row")
    b.add_argument("--penalty", type=float, default=1e4)
    b.add_argument("-a", "--algorithm", action="append", choices=ALGORITHMS)
    b.add_argument("--out-dir", default=None)
    solver_flags(b)
    b.set_defaults(func=cmd_bench_tcl, trace_out=None, solution_out=None)

    t = sub.add_parser("trace", help="re-emit bound progression from a run directory")
    t.add_argument("run_dir")
    t.set_defaults(func=cmd_trace)
    return ap


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
