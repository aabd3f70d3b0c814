"""Long reference runs shared by the acceptance and integration tests.

Each run is persisted through the harness under a directory keyed by a
hash of the modules that produce it, so a rerun of the suite reuses results
only while that code is unchanged.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

import coupled_rotors
from coupled_rotors.classical import Ensemble, ensemble_energy
from coupled_rotors.evolution import ProbeSet, SystemParams
from coupled_rotors.harness import load_record, run
from coupled_rotors.harness.config import RunConfig, ScheduleConfig

N = 512
T_MAX = 5000
T_MAX_UNCOUPLED = 8000
XI_VALUES = (0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.2)


# Modules whose code determines what a run writes to disk.
RUN_SOURCES = (
    "grid.py", "evolution.py", "entanglement.py", "record.py", "observables.py",
    "harness/config.py", "harness/runner.py", "harness/export.py",
)


def _source_hash() -> str:
    h = hashlib.sha256()
    root = Path(coupled_rotors.__file__).parent
    for f in (root / name for name in RUN_SOURCES):
        h.update(f.relative_to(root).as_posix().encode())
        h.update(f.read_bytes())
    return h.hexdigest()[:12]


def cache_root() -> Path:
    base = os.environ.get("ROTOR_RUN_CACHE")
    if base is None:
        base = Path(__file__).resolve().parent.parent / ".pytest_cache" / "rotor_runs"
    return Path(base) / _source_hash()


def classical_dcl(k: float, size: int = 100_000, t_max: int = 1000, seed: int = 0) -> tuple[float, float]:
    """Ensemble D_cl and its standard error, cached on disk per classical.py version."""
    src = Path(coupled_rotors.__file__).parent / "classical.py"
    tag = hashlib.sha256(src.read_bytes()).hexdigest()[:12]
    path = cache_root().parent / f"classical_{tag}.json"
    key = f"{k:g}/{size}/{t_max}/{seed}"
    cache = json.loads(path.read_text()) if path.exists() else {}
    if key not in cache:
        ens = ensemble_energy(Ensemble.uniform(size, seed), SystemParams(k, k, 0.0), t_max)
        cache[key] = [ens.d_cl, ens.stderr]
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(cache))
    return tuple(cache[key])


def reference_config(xi: float) -> RunConfig:
    probes = ProbeSet(
        marginals=xi == 0.05,
        decoherence=xi in (0.0, 0.05),
        husimi=xi == 0.1,
    )
    t_max = T_MAX_UNCOUPLED if xi == 0.0 else T_MAX
    return RunConfig(
        n=N, k1=9.0, k2=10.0, xi12=xi, t_max=t_max,
        schedule=ScheduleConfig("log", 200), probes=probes,
    )


# Runs whose final state is kept next to the exported record.
KEEP_STATE = (0.1,)


def reference_run(xi: float):
    cfg = reference_config(xi)
    out = cache_root() / f"xi_{xi:g}"
    if (out / "record.json").exists():
        return load_record(out)
    rec = run(cfg.replace(output=str(out)))
    if xi in KEEP_STATE:
        np.save(out / "final_state.npy", rec.state)
    return rec


def reference_state(xi: float) -> np.ndarray:
    path = cache_root() / f"xi_{xi:g}" / "final_state.npy"
    if not path.exists():
        reference_run(xi)
    return np.load(path)


if __name__ == "__main__":
    import time

    for xi in (0.0,) + XI_VALUES:
        t0 = time.perf_counter()
        rec = reference_run(xi)
        print(f"xi={xi:g}: {len(rec)} rows, {time.perf_counter() - t0:.0f} s", flush=True)
