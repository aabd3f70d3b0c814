"""Run orchestration: memory check, initial state, checkpoints, ensembles."""

from __future__ import annotations

import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import ConfigurationError, RotorError
from ..evolution import build_phase_tables, evolve
from ..grid import CoherentStateSpec, WaveFunction2D, coherent_state, product_state
from ..record import ROW_COLUMNS, RunRecord
from .config import RunConfig, parse_config, serialize_config

CHECKPOINT_SCHEMA = "coupled_rotors.checkpoint/1"
CHECKPOINT_NAME = "checkpoint.npz"
# Live complex n x n arrays: state, two phase tables, FFT and SVD workspace.
MEMORY_FACTOR = 8


class MemoryCapError(ConfigurationError):
    pass


class CheckpointError(RotorError):
    pass


def memory_estimate_mb(n: int) -> float:
    return MEMORY_FACTOR * 16.0 * n * n / 2**20


def check_memory(cfg: RunConfig) -> None:
    need = memory_estimate_mb(cfg.n)
    if need > cfg.memory_cap_mb:
        raise MemoryCapError(
            f"grid n={cfg.n} needs about {need:.0f} MB, over memory_cap_mb={cfg.memory_cap_mb:g}"
        )


def provenance() -> dict:
    return {
        "code_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "machine": platform.machine(),
    }


def initial_state(cfg: RunConfig, spec1: CoherentStateSpec | None = None, spec2: CoherentStateSpec | None = None) -> WaveFunction2D:
    grid = cfg.grid
    psi1 = coherent_state(grid, 1, spec1 or cfg.initial1)
    psi2 = coherent_state(grid, 2, spec2 or cfg.initial2)
    return product_state(grid, psi1, psi2)


def ensemble_specs(cfg: RunConfig) -> list[tuple[CoherentStateSpec, CoherentStateSpec]]:
    """Member 0 is the configured state; the others get uniform random
    position centres drawn from ``seed`` with the configured momenta and widths."""
    specs = [(cfg.initial1, cfg.initial2)]
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.ensemble - 1):
        x = rng.uniform(0.0, 2.0 * math.pi, size=2)
        specs.append((
            CoherentStateSpec(float(x[0]), cfg.initial1.p0, cfg.initial1.sigma),
            CoherentStateSpec(float(x[1]), cfg.initial2.p0, cfg.initial2.sigma),
        ))
    return specs


# --- checkpoints -------------------------------------------------------------


def save_checkpoint(path, cfg: RunConfig, t: int, amp: np.ndarray, record: RunRecord) -> None:
    arrays = {c: getattr(record, c) for c in ROW_COLUMNS}
    arrays.update(
        energy_t=record.energy_t, energy_e1=record.energy_e1,
        energy_e2=record.energy_e2, energy_edge=record.energy_edge,
    )
    for mt, parts in record.marginals.items():
        for key, values in parts.items():
            arrays[f"marginal_{mt}_{key}"] = values
    meta = {
        "t": t,
        "first_breach": record.first_breach,
        "extras": record.extras,
        "provenance": record.provenance,
        "rng_seed": cfg.seed,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp.npz")
    with open(tmp, "wb") as fh:
        np.savez(
            fh,
            schema=np.array(CHECKPOINT_SCHEMA),
            config=np.array(serialize_config(cfg)),
            meta=np.array(json.dumps(meta)),
            state=amp,
            **arrays,
        )
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[RunConfig, int, np.ndarray, RunRecord]:
    with np.load(path, allow_pickle=False) as z:
        schema = str(z["schema"]) if "schema" in z.files else None
        if schema != CHECKPOINT_SCHEMA:
            raise CheckpointError(f"{path}: unsupported checkpoint schema {schema!r}")
        cfg = parse_config(str(z["config"]))
        meta = json.loads(str(z["meta"]))
        state = z["state"].copy()
        marginals: dict = {}
        for name in z.files:
            if name.startswith("marginal_"):
                _, mt, key = name.split("_")
                marginals.setdefault(int(mt), {})[key] = z[name].copy()
        rec = RunRecord(
            **{c: z[c].copy() for c in ROW_COLUMNS},
            energy_t=z["energy_t"].copy(), energy_e1=z["energy_e1"].copy(),
            energy_e2=z["energy_e2"].copy(), energy_edge=z["energy_edge"].copy(),
            marginals=dict(sorted(marginals.items())),
            first_breach=meta["first_breach"],
            complete=False,
            extras=meta["extras"],
            provenance=meta["provenance"],
        )
    return cfg, int(meta["t"]), state, rec


# --- runs --------------------------------------------------------------------


def _single(cfg: RunConfig, psi0: WaveFunction2D, tables, checkpoint_path, resume: bool) -> RunRecord:
    schedule = cfg.sample_schedule()
    kw = {}
    if cfg.checkpoint_every and checkpoint_path is not None:
        kw = dict(
            checkpoint_every=cfg.checkpoint_every,
            on_checkpoint=lambda t, amp, rec: save_checkpoint(checkpoint_path, cfg, t, amp, rec),
        )
    if resume and checkpoint_path is not None and Path(checkpoint_path).exists():
        saved_cfg, t0, state, partial = load_checkpoint(checkpoint_path)
        if saved_cfg.replace(t_max=cfg.t_max) != cfg:
            raise CheckpointError(f"{checkpoint_path} was written by a different configuration")
        psi = WaveFunction2D(state, cfg.grid)
        return evolve(psi, cfg.params, cfg.t_max, schedule, cfg.probes, tables=tables,
                      t_start=t0, record=partial, **kw)
    return evolve(psi0, cfg.params, cfg.t_max, schedule, cfg.probes, tables=tables, **kw)


def _average(records: list[RunRecord]) -> RunRecord:
    base = records[0]
    n = min(len(r) for r in records)
    m = min(r.energy_t.size for r in records)
    mean = lambda name, k: np.mean([getattr(r, name)[:k] for r in records], axis=0)
    marginals = {}
    for mt in base.marginals:
        if all(mt in r.marginals for r in records):
            marginals[mt] = {k: np.mean([r.marginals[mt][k] for r in records], axis=0) for k in base.marginals[mt]}
    breaches = [r.first_breach for r in records if r.first_breach is not None]
    return RunRecord(
        t=base.t[:n].copy(),
        svn=mean("svn", n), slin=mean("slin", n), e1=mean("e1", n), e2=mean("e2", n), dcoh=mean("dcoh", n),
        valid=np.all([r.valid[:n] for r in records], axis=0),
        energy_t=base.energy_t[:m].copy(),
        energy_e1=mean("energy_e1", m), energy_e2=mean("energy_e2", m),
        energy_edge=np.max([r.energy_edge[:m] for r in records], axis=0),
        marginals=marginals,
        first_breach=min(breaches) if breaches else None,
        complete=all(r.complete for r in records),
        extras={"ensemble_size": len(records)},
    )


def run(cfg: RunConfig, *, resume: bool = False, write: bool = True) -> RunRecord:
    """Execute one configured run and, with ``write``, persist it under
    ``cfg.output``.

    Ensemble runs (``ensemble > 1``) average the rows of all members and do
    not checkpoint.
    """
    check_memory(cfg)
    if cfg.ensemble > 1 and cfg.checkpoint_every:
        raise ConfigurationError("checkpoint_every: checkpoints are only supported for single-state runs")
    out = Path(cfg.output)
    ckpt = None
    if write and cfg.checkpoint_every:
        out.mkdir(parents=True, exist_ok=True)
        ckpt = out / CHECKPOINT_NAME
    wall0 = time.perf_counter()
    tables = build_phase_tables(cfg.grid, cfg.params)
    if cfg.ensemble == 1:
        rec = _single(cfg, initial_state(cfg), tables, ckpt, resume)
    else:
        members = [
            evolve(initial_state(cfg, s1, s2), cfg.params, cfg.t_max, cfg.sample_schedule(), cfg.probes, tables=tables)
            for s1, s2 in ensemble_specs(cfg)
        ]
        rec = _average(members)
        rec.extras.update({f"member_error_{i}": r.extras["error"] for i, r in enumerate(members) if "error" in r.extras})
    rec.config = cfg.to_dict()
    prov = provenance()
    prov["wall_time"] = time.perf_counter() - wall0
    rec.provenance = prov
    if write:
        from .export import export_record

        export_record(rec, out)
        if ckpt is not None and rec.complete and ckpt.exists():
            ckpt.unlink()
    return rec
