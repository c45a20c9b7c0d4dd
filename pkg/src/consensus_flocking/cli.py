"""Command-line experiment runner.

Subcommands: simulate, verify, flocking, gen-schedule. Exit codes: 0 ok,
1 verification failed, 2 config error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as cfg
from .integrate import NumericalError, simulate
from .metrics import diameters, write_metrics_csv
from .schedule import (gen_isc_star, gen_pe_matrix, validate_isc, validate_pe_matrix)
from .theory import FCase, FCaseKind, flocking_check
from .verify import _jsonable, run_verification, window_count

log = logging.getLogger("consensus_flocking")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _dump(obj: dict, path: Path) -> str:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return text


def _load(args) -> cfg.ExperimentConfig:
    return cfg.load(args.config, step=args.step, seed=args.seed, out=args.out)


def cmd_simulate(args) -> int:
    exp = _load(args)
    n_max = window_count(exp.horizon, exp.system.window)
    traj = simulate(exp.system, exp.kernel, exp.matrix, exp.initial_state, exp.horizon, exp.step,
                    seed=exp.seed, config_hash=exp.hash,
                    checkpoints=[n * exp.system.window for n in range(1, n_max + 1)])
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    traj.write_csv(exp.out_dir / "trajectory.csv", every=args.every)
    write_metrics_csv(traj, exp.out_dir / "metrics.csv", every=args.every)
    log.info("wrote %d states to %s", len(traj), exp.out_dir)
    return EXIT_OK


def cmd_verify(args) -> int:
    exp = _load(args)
    report = run_verification(exp.system, exp.kernel, exp.matrix, exp.initial_state,
                              exp.horizon, exp.step, config_hash=exp.hash)
    text = _dump(report.to_dict(), exp.out_dir / "report.json")
    sys.stdout.write(text)
    for rec in report.failures():
        log.warning("check %s failed: %.6g > %.6g", rec.name, rec.empirical_value,
                    rec.theoretical_bound)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_flocking(args) -> int:
    exp = _load(args)
    if exp.order != 2:
        raise cfg.ConfigError("flocking needs a second-order config (\"order\": 2)")
    sysc = exp.system
    case = FCase(FCaseKind.of(sysc.condition, sysc.scaling), exp.kernel.p, sysc.n_agents,
                 sysc.window, sysc.service)
    x0, v0 = exp.initial_state.positions, exp.initial_state.velocities
    dx0, dv0 = diameters(x0[None])[0], diameters(v0[None])[0]
    try:
        verdict = flocking_check(case, exp.kernel, dx0, dv0)
    except ValueError as exc:
        raise cfg.ConfigError(str(exc)) from exc
    out = {"config_hash": exp.hash, "f_case": case.kind.value, "D_X0": dx0, "D_V0": dv0,
           "flocking": {"classification": verdict.classification.value,
                        "integral": verdict.integral_value,
                        "guaranteed": verdict.guaranteed}}
    if verdict.guaranteed:
        traj = simulate(sysc, exp.kernel, exp.matrix, exp.initial_state, exp.horizon, exp.step,
                        seed=exp.seed, config_hash=exp.hash)
        dx = diameters(traj.positions)
        dv = diameters(traj.velocities)
        out["simulation"] = {"horizon": exp.horizon, "max_D_X": float(dx.max()),
                             "final_D_X": float(dx[-1]), "final_D_V": float(dv[-1])}
    else:
        out["status"] = "Inconclusive-at-runtime"
    sys.stdout.write(_dump(out, exp.out_dir / "flocking.json"))
    return EXIT_OK


def cmd_gen_schedule(args) -> int:
    T, mu = args.window, args.service
    if not (T > 0 and mu > 0) or mu > T:
        raise cfg.ConfigError(f"need 0 < service <= window, got mu={mu}, T={T}")
    if args.kind == "pe":
        matrix = gen_pe_matrix(args.n, T, mu, duty_phase=args.phase, seed=args.seed)
        ok = all(r.holds for r in validate_pe_matrix(matrix, T, mu).values())
    else:
        if not 0 <= args.hub < args.n:
            raise cfg.ConfigError(f"hub {args.hub} out of range for N={args.n}")
        matrix = gen_isc_star(args.n, T, mu, args.hub, seed=args.seed, duty_phase=args.phase)
        ok = validate_isc(matrix, T, mu).holds
    if not ok:
        log.error("generated schedule fails its own validator; nothing written")
        return EXIT_FAILED
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    matrix.dump(out)
    return EXIT_OK


def _phase(text: str):
    return None if text.lower() == "random" else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="consensus-flocking", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("simulate", cmd_simulate), ("verify", cmd_verify),
                     ("flocking", cmd_flocking)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment JSON file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--step", type=float, help="integration step override")
        p.add_argument("--seed", type=int, help="seed override for randomized sections")
        if name == "simulate":
            p.add_argument("--every", type=int, default=1, help="write every k-th state")
        p.set_defaults(func=fn)

    p = sub.add_parser("gen-schedule")
    p.add_argument("--kind", choices=("pe", "isc-star"), required=True)
    p.add_argument("--n", type=int, default=2, help="number of agents")
    p.add_argument("--window", "-T", type=float, required=True)
    p.add_argument("--service", "--mu", type=float, required=True)
    p.add_argument("--hub", type=int, default=0, help="0-based hub agent for isc-star")
    p.add_argument("--phase", type=_phase, default=0.0,
                   help="on-window offset as a fraction of T, or 'random'")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="schedule JSON path")
    p.set_defaults(func=cmd_gen_schedule)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except cfg.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
