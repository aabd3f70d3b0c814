"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical or validity
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from ..classical import Ensemble, ensemble_energy, lyapunov
from ..errors import ConfigurationError, RotorError
from ..evolution import SystemParams
from ..theory import TheoryInputs, crossover_time
from .config import load_config
from .export import load_record, write_table
from .runner import run
from .sweep import AXES, SweepReport, summarize, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _d_cl(k: float, size: int, t_max: int, seed: int) -> float:
    return ensemble_energy(Ensemble.uniform(size, seed), SystemParams(k, k, 0.0), t_max).d_cl


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        cfg = cfg.replace(output=args.output)
    rec = run(cfg, resume=args.resume)
    print(f"wrote {cfg.output}: {len(rec)} rows, first breach at t={rec.first_breach}")
    if not rec.complete:
        print(f"run stopped early: {rec.extras.get('error')}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.strict and rec.first_breach is not None:
        print(f"momentum edge population exceeded the threshold at t={rec.first_breach}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _print_summaries(rows, header) -> None:
    print(",".join(header))
    for row in rows:
        print(",".join("" if isinstance(v, float) and math.isnan(v) else str(v) for v in row))


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        cfg = cfg.replace(output=args.output)
    d_cl = args.d_cl if args.d_cl is not None else _d_cl(cfg.k1, 20000, 500, cfg.seed)
    report = sweep(cfg, args.axis, sorted(args.values), d_cl, workers=args.workers)
    write_table(Path(cfg.output) / "sweep.csv", SweepReport.COLUMNS, report.table())
    _print_summaries(report.table(), SweepReport.COLUMNS)
    if args.axis == "xi12":
        print(f"beta = {report.beta:.4g} +- {report.beta_stderr:.2g}")
    for value, err in report.failures.items():
        print(f"failed {args.axis}={value:g}: {err}", file=sys.stderr)
    return EXIT_NUMERICAL if report.failures else EXIT_OK


def cmd_classical(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.output or cfg.output)
    params = cfg.params
    ens = ensemble_energy(Ensemble.uniform(args.size, cfg.seed), params, args.t_max)
    summary = {
        "k1": cfg.k1, "k2": cfg.k2, "xi12": cfg.xi12,
        "lyapunov_coupled": lyapunov(params, seed=cfg.seed),
        "lyapunov_k1": lyapunov(SystemParams(cfg.k1, cfg.k1, 0.0), seed=cfg.seed),
        "lyapunov_k2": lyapunov(SystemParams(cfg.k2, cfg.k2, 0.0), seed=cfg.seed),
        "d_cl": ens.d_cl,
        "quasilinear_d": cfg.k1**2 / 4.0,
        "ensemble_size": args.size,
        "t_max": args.t_max,
    }
    write_table(out / "classical_energy.csv", ("t", "e1"), zip(ens.t.astype(int), ens.energy))
    (out / "classical.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_predict(args) -> int:
    t = crossover_time(TheoryInputs(args.xi, args.hbar, args.dq, args.c_slope))
    print(repr(t))
    return EXIT_OK


def cmd_report(args) -> int:
    rows, status = [], EXIT_OK
    cache: dict[float, float] = {}
    for path in args.paths:
        rec = load_record(path)
        cfg = rec.config
        k1 = cfg["params"]["k1"]
        if args.d_cl is not None:
            d_cl = args.d_cl
        else:
            d_cl = cache.setdefault(k1, _d_cl(k1, 20000, 500, 0))
        try:
            s = summarize(rec, cfg["params"]["xi12"], cfg["grid"]["hbar_s"], d_cl, cfg["params"]["xi12"])
        except (RotorError, ValueError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = EXIT_NUMERICAL
            continue
        rows.append((str(path),) + SweepReport("xi12", [s]).table()[0])
    _print_summaries(rows, ("path",) + SweepReport.COLUMNS)
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coupled-rotors", description="Coupled quantum kicked rotor simulations.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("config")
    p.add_argument("--output")
    p.add_argument("--resume", action="store_true", help="continue from the run's checkpoint if present")
    p.add_argument("--strict", action="store_true", help="exit 3 if any row is flagged invalid")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("config")
    p.add_argument("--axis", choices=AXES, default="xi12")
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--d-cl", type=float, dest="d_cl", help="classical diffusion constant (default: ensemble estimate)")
    p.add_argument("--output")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("classical", help="classical Lyapunov exponents and diffusion")
    p.add_argument("config")
    p.add_argument("--size", type=int, default=100_000)
    p.add_argument("--t-max", type=int, dest="t_max", default=1000)
    p.add_argument("--output")
    p.set_defaults(fn=cmd_classical)

    p = sub.add_parser("predict-tstar", help="closed-form crossover time")
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--dq", type=float, required=True)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--c-slope", type=float, dest="c_slope", default=1.0)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("report", help="summarize saved runs")
    p.add_argument("paths", nargs="+")
    p.add_argument("--d-cl", type=float, dest="d_cl")
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RotorError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
