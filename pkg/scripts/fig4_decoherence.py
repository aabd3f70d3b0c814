"""Decoherence of rotor 1 for an uncoupled and a weakly coupled run.

Writes ``decoherence.csv`` (D(t)/D(0) per coupling) and ``fits.csv``
(exponential rate on [t_b, t*] and power-law exponent beyond 3 t*).
"""

import sys

import numpy as np

from _common import base_parser, classical_d, config

from coupled_rotors.errors import RotorError
from coupled_rotors.evolution import ProbeSet
from coupled_rotors.harness import run
from coupled_rotors.harness.export import write_table
from coupled_rotors.harness.sweep import summarize
from coupled_rotors.observables import Model, fit_timeseries, smooth


def main(argv=None) -> int:
    ap = base_parser(__doc__.splitlines()[0], "results/fig4")
    ap.add_argument("--xi", type=float, nargs="+", default=[0.0, 0.05])
    args = ap.parse_args(argv)
    d_cl = classical_d(args)
    rows, fits = [], []
    for xi in args.xi:
        rec = run(config(args, xi, probes=ProbeSet(decoherence=True)))
        m = np.isfinite(rec.dcoh)
        t, d = rec.t[m], rec.dcoh[m] / rec.dcoh[m][0]
        rows += [(xi, int(a), b) for a, b in zip(t, d)]
        if xi == 0:
            continue
        s = summarize(rec, xi, args.hbar, d_cl)
        ds = smooth(d)
        try:
            e = fit_timeseries(t, ds, Model.EXPONENTIAL, window=(s.t_b, s.t_star_numeric))
            p = fit_timeseries(t, ds, Model.POWER_LAW, window=(3 * s.t_star_numeric, float(t[-1])))
        except (RotorError, ValueError) as exc:
            print(f"xi={xi:g}: {exc}", file=sys.stderr)
            continue
        fits.append((xi, s.t_b, s.t_star_numeric, e.params[0], e.r2, -p.params[0], p.r2))
        print(f"xi={xi:g}: exp rate {e.params[0]:.3e} (R2 {e.r2:.3f}), power exponent {-p.params[0]:.3f}")
    write_table(args.out / "decoherence.csv", ("xi", "t", "dcoh_ratio"), rows)
    write_table(args.out / "fits.csv", ("xi", "t_b", "t_star", "exp_rate", "exp_r2", "power_exponent", "power_r2"), fits)
    return 0


if __name__ == "__main__":
    sys.exit(main())
