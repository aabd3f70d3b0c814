"""Shared argument handling for the reproduction scripts."""

import argparse
from pathlib import Path

from coupled_rotors.classical import Ensemble, ensemble_energy
from coupled_rotors.evolution import SystemParams
from coupled_rotors.harness.config import RunConfig, ScheduleConfig


def base_parser(description: str, out: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--n", type=int, default=512, help="grid size per rotor")
    ap.add_argument("--t-max", type=int, default=5000, dest="t_max")
    ap.add_argument("--k1", type=float, default=9.0)
    ap.add_argument("--k2", type=float, default=10.0)
    ap.add_argument("--hbar", type=float, default=1.0)
    ap.add_argument("--out", type=Path, default=Path(out))
    ap.add_argument("--d-cl", type=float, dest="d_cl", help="skip the classical ensemble and use this D_cl")
    return ap


def config(args, xi: float, **kw) -> RunConfig:
    return RunConfig(n=args.n, k1=args.k1, k2=args.k2, xi12=xi, t_max=args.t_max, hbar_s=args.hbar,
                     schedule=ScheduleConfig("log", 200), output=str(args.out / f"xi_{xi:g}"), **kw)


def classical_d(args) -> float:
    if args.d_cl is not None:
        return args.d_cl
    ens = Ensemble.uniform(20_000, 0)
    return ensemble_energy(ens, SystemParams(args.k1, args.k1, 0.0), 500).d_cl
