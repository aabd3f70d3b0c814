"""Floquet propagation of the coupled kicked rotors.

One period applies ``U = (U1 x U2) U12`` with ``U_j = exp(-i p_j^2 / 2 hbar)
exp(-i K_j cos(x_j) / hbar)`` and ``U12 = exp(-i xi cos(x1 - x2) / hbar)``:
position-diagonal phases first (coupling, then kicks), then the free
rotation in the momentum basis.  The kicks are delta kicks, so the map is
exact per period with no Trotter error.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

from . import entanglement as ent
from .errors import BasisError, ConfigurationError, RotorError
from .grid import Basis, GridSpec, WaveFunction2D, edge_fraction
from .record import RunRecord

EDGE_THRESHOLD = 1e-8


@dataclass(frozen=True)
class SystemParams:
    k1: float
    k2: float
    xi12: float
    hbar_s: float = 1.0

    def __post_init__(self):
        vals = (self.k1, self.k2, self.xi12, self.hbar_s)
        if not all(math.isfinite(v) for v in vals):
            raise ConfigurationError(f"non-finite system parameters {vals}")
        if self.xi12 < 0:
            raise ConfigurationError(f"xi12 must be >= 0, got {self.xi12}")
        if self.hbar_s <= 0:
            raise ConfigurationError(f"hbar_s must be > 0, got {self.hbar_s}")


@dataclass(frozen=True, eq=False)
class PhaseTables:
    """Unimodular phase factors of one Floquet period.

    ``coupling_phase`` is ``None`` in low-memory mode, where the coupling is
    recomputed in row blocks every step.
    """

    grid: GridSpec
    coupling_phase: np.ndarray | None
    kick_phase1: np.ndarray
    kick_phase2: np.ndarray
    free_phase1: np.ndarray
    free_phase2: np.ndarray
    xi_over_hbar: float = 0.0

    @cached_property
    def position_phase(self) -> np.ndarray | None:
        if self.coupling_phase is None:
            return None
        return self.coupling_phase * np.outer(self.kick_phase1, self.kick_phase2)

    @cached_property
    def free_phase(self) -> np.ndarray:
        return np.outer(self.free_phase1, self.free_phase2)

    def apply_position_phase(self, amp: np.ndarray, block: int = 64) -> None:
        """Multiply ``amp`` in place by coupling and kick phases."""
        full = self.position_phase
        if full is not None:
            amp *= full
            return
        x1 = self.grid.positions(1)
        x2 = self.grid.positions(2)
        for lo in range(0, amp.shape[0], block):
            hi = min(lo + block, amp.shape[0])
            rows = np.exp(-1j * self.xi_over_hbar * np.cos(x1[lo:hi, None] - x2[None, :]))
            rows *= np.outer(self.kick_phase1[lo:hi], self.kick_phase2)
            amp[lo:hi] *= rows


def build_phase_tables(grid: GridSpec, params: SystemParams, low_memory: bool = False) -> PhaseTables:
    if not math.isclose(grid.hbar_s, params.hbar_s, rel_tol=0, abs_tol=0):
        raise ConfigurationError(f"grid hbar_s={grid.hbar_s} != params hbar_s={params.hbar_s}")
    h = params.hbar_s
    x1, x2 = grid.positions(1), grid.positions(2)
    p1, p2 = grid.momenta(1), grid.momenta(2)
    coupling = None
    if not low_memory:
        if params.xi12 == 0.0:
            coupling = np.ones(grid.shape, dtype=np.complex128)
        else:
            coupling = np.exp(-1j * (params.xi12 / h) * np.cos(x1[:, None] - x2[None, :]))
    return PhaseTables(
        grid=grid,
        coupling_phase=coupling,
        kick_phase1=np.exp(-1j * (params.k1 / h) * np.cos(x1)),
        kick_phase2=np.exp(-1j * (params.k2 / h) * np.cos(x2)),
        free_phase1=np.exp(-1j * p1**2 / (2.0 * h)),
        free_phase2=np.exp(-1j * p2**2 / (2.0 * h)),
        xi_over_hbar=params.xi12 / h,
    )


def _edges_from_momentum(amp_p: np.ndarray) -> tuple[float, float]:
    n1, n2 = amp_p.shape
    r = np.abs(amp_p[[n1 // 2 - 1, n1 // 2], :]) ** 2
    c = np.abs(amp_p[:, [n2 // 2 - 1, n2 // 2]]) ** 2
    return float(r.sum()), float(c.sum())


def step(psi: WaveFunction2D, tables: PhaseTables, edge_threshold: float = EDGE_THRESHOLD) -> WaveFunction2D:
    """Apply one Floquet period.  ``psi`` must be in the position basis on both axes."""
    if psi.basis1 is not Basis.POSITION or psi.basis2 is not Basis.POSITION:
        raise BasisError("step requires the position basis on both axes")
    amp = np.array(psi.amplitudes, copy=True)
    tables.apply_position_phase(amp)
    amp = sfft.fft2(amp, norm="ortho", overwrite_x=True)
    amp *= tables.free_phase
    e1, e2 = _edges_from_momentum(amp)
    amp = sfft.ifft2(amp, norm="ortho", overwrite_x=True)
    valid = psi.valid and max(e1, e2) <= edge_threshold
    return psi.replace(amp, valid=valid)


@dataclass(frozen=True)
class SampleSchedule:
    times: tuple[int, ...]

    def __post_init__(self):
        ts = tuple(int(t) for t in self.times)
        if not ts:
            raise ConfigurationError("sample schedule is empty")
        if any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] < 0:
            raise ConfigurationError("sample times must be sorted, unique and >= 0")
        object.__setattr__(self, "times", ts)

    @classmethod
    def logarithmic(cls, t_max: int, count: int = 200, include_zero: bool = True) -> "SampleSchedule":
        if t_max < 1:
            return cls((0,))
        ts = np.unique(np.rint(np.logspace(0.0, math.log10(t_max), count)).astype(int))
        ts = ts[(ts >= 1) & (ts <= t_max)]
        return cls(((0,) if include_zero else ()) + tuple(int(t) for t in ts))

    @classmethod
    def linear(cls, t_max: int, count: int = 200, include_zero: bool = True) -> "SampleSchedule":
        ts = np.unique(np.rint(np.linspace(1, max(t_max, 1), count)).astype(int))
        ts = ts[ts <= t_max]
        return cls(((0,) if include_zero else ()) + tuple(int(t) for t in ts))

    @classmethod
    def every(cls, t_max: int, stride: int = 1) -> "SampleSchedule":
        return cls(tuple(range(0, t_max + 1, stride)))

    def clipped(self, t_max: int) -> "SampleSchedule":
        return SampleSchedule(tuple(t for t in self.times if t <= t_max) or (0,))


@dataclass(frozen=True)
class ProbeSet:
    svn: bool = True
    slin: bool = True
    energy: bool = True
    marginals: bool = False
    decoherence: bool = False
    husimi: bool = False
    marginal_times: tuple[int, ...] | None = None

    @property
    def needs_schmidt(self) -> bool:
        return self.svn or self.slin


class _Builder:
    def __init__(self, base: RunRecord | None):
        base = base if base is not None else RunRecord.empty()
        self.rows = {c: list(getattr(base, c)) for c in ("t", "svn", "slin", "e1", "e2", "dcoh", "valid")}
        self.energy = [list(base.energy_t), list(base.energy_e1), list(base.energy_e2), list(base.energy_edge)]
        self.marginals = dict(base.marginals)
        self.first_breach = base.first_breach
        self.extras = {k: list(v) if isinstance(v, list) else v for k, v in base.extras.items()}
        self.config = dict(base.config)
        self.provenance = dict(base.provenance)

    def finish(self, complete=True) -> RunRecord:
        r = self.rows
        return RunRecord(
            t=np.asarray(r["t"], dtype=np.int64),
            svn=np.asarray(r["svn"], dtype=float),
            slin=np.asarray(r["slin"], dtype=float),
            e1=np.asarray(r["e1"], dtype=float),
            e2=np.asarray(r["e2"], dtype=float),
            dcoh=np.asarray(r["dcoh"], dtype=float),
            valid=np.asarray(r["valid"], dtype=bool),
            energy_t=np.asarray(self.energy[0], dtype=np.int64),
            energy_e1=np.asarray(self.energy[1], dtype=float),
            energy_e2=np.asarray(self.energy[2], dtype=float),
            energy_edge=np.asarray(self.energy[3], dtype=float),
            marginals=self.marginals,
            first_breach=self.first_breach,
            complete=complete,
            config=self.config,
            provenance=self.provenance,
            extras=self.extras,
        )


def _probe(t, amp, f1, f2, grid, probes, b: _Builder, valid):
    nan = float("nan")
    p1, p2 = grid.momenta(1), grid.momenta(2)
    row = {"t": t, "svn": nan, "slin": nan, "e1": nan, "e2": nan, "dcoh": nan, "valid": valid}
    if probes.needs_schmidt:
        spec = ent.schmidt(amp)
        if probes.svn:
            row["svn"] = ent.svn(spec)
        if probes.slin:
            row["slin"] = ent.slin(spec)
    if probes.energy:
        row["e1"] = float(np.dot(f1, p1**2) / 2.0)
        row["e2"] = float(np.dot(f2, p2**2) / 2.0)
    if probes.decoherence:
        row["dcoh"] = ent.decoherence(ent.reduced_density(amp, Basis.MOMENTUM))
    if probes.marginals and (probes.marginal_times is None or t in probes.marginal_times):
        prob = np.abs(amp) ** 2
        b.marginals[t] = {
            "x1": prob.sum(axis=1),
            "x2": prob.sum(axis=0),
            "p1": np.fft.fftshift(f1),
            "p2": np.fft.fftshift(f2),
        }
    if probes.husimi:
        from .observables import husimi_slin_of_state

        b.extras.setdefault("slin_husimi", []).append((t, husimi_slin_of_state(amp, grid)))
    for c, v in row.items():
        b.rows[c].append(v)


def evolve(
    psi0: WaveFunction2D,
    params: SystemParams,
    t_max: int,
    schedule: SampleSchedule,
    probes: ProbeSet = ProbeSet(),
    *,
    tables: PhaseTables | None = None,
    t_start: int = 0,
    record: RunRecord | None = None,
    checkpoint_every: int | None = None,
    on_checkpoint: Callable[[int, np.ndarray, RunRecord], None] | None = None,
    edge_threshold: float = EDGE_THRESHOLD,
    low_memory: bool = False,
) -> RunRecord:
    """Propagate ``psi0`` (the state at ``t_start``) up to ``t_max`` kicks.

    Energies are recorded every kick when enabled; the other probes run at
    the scheduled times.  Passing the partial ``record`` of an interrupted run
    together with its saved state continues that run.
    """
    if psi0.basis1 is not Basis.POSITION or psi0.basis2 is not Basis.POSITION:
        raise BasisError("evolve requires a position-basis initial state")
    if t_max < 0:
        raise ConfigurationError("t_max must be >= 0")
    grid = psi0.grid
    if tables is None:
        tables = build_phase_tables(grid, params, low_memory=low_memory)
    sample = set(schedule.times)
    p1sq, p2sq = grid.momenta(1) ** 2 / 2.0, grid.momenta(2) ** 2 / 2.0
    b = _Builder(record)
    wall0 = time.perf_counter()

    amp = np.array(psi0.amplitudes, dtype=np.complex128, copy=True)

    def marginals_now(a_p):
        prob = a_p.real**2 + a_p.imag**2
        return prob.sum(axis=1), prob.sum(axis=0)

    def is_valid(t):
        return b.first_breach is None or t < b.first_breach

    try:
        if t_start == 0 and record is None:
            f1, f2 = marginals_now(sfft.fft2(amp, norm="ortho"))
            if max(edge_fraction(f1), edge_fraction(f2)) > edge_threshold:
                b.first_breach = 0
            if probes.energy:
                b.energy[0].append(0)
                b.energy[1].append(float(np.dot(f1, p1sq)))
                b.energy[2].append(float(np.dot(f2, p2sq)))
                b.energy[3].append(max(edge_fraction(f1), edge_fraction(f2)))
            if 0 in sample:
                _probe(0, amp, f1, f2, grid, probes, b, is_valid(0))

        for t in range(t_start + 1, t_max + 1):
            tables.apply_position_phase(amp)
            amp = sfft.fft2(amp, norm="ortho", overwrite_x=True)
            amp *= tables.free_phase
            need_full = probes.energy or (t in sample and probes.marginals)
            if need_full:
                f1, f2 = marginals_now(amp)
                e1, e2 = edge_fraction(f1), edge_fraction(f2)
            else:
                f1 = f2 = None
                e1, e2 = _edges_from_momentum(amp)
            if b.first_breach is None and max(e1, e2) > edge_threshold:
                b.first_breach = t
            if probes.energy:
                b.energy[0].append(t)
                b.energy[1].append(float(np.dot(f1, p1sq)))
                b.energy[2].append(float(np.dot(f2, p2sq)))
                b.energy[3].append(max(e1, e2))
            amp = sfft.ifft2(amp, norm="ortho", overwrite_x=True)
            if t in sample:
                _probe(t, amp, f1, f2, grid, probes, b, is_valid(t))
            if checkpoint_every and on_checkpoint is not None and t % checkpoint_every == 0 and t < t_max:
                on_checkpoint(t, amp, b.finish(complete=False))
    except (RotorError, np.linalg.LinAlgError, FloatingPointError) as exc:
        b.extras["error"] = f"{type(exc).__name__}: {exc}"
        b.provenance["wall_time"] = b.provenance.get("wall_time", 0.0) + time.perf_counter() - wall0
        return b.finish(complete=False)

    b.provenance["wall_time"] = b.provenance.get("wall_time", 0.0) + time.perf_counter() - wall0
    rec = b.finish(complete=True)
    rec.state = amp
    return rec


def run_single_rotor(
    psi0: np.ndarray, k: float, hbar_s: float, t_max: int
) -> tuple[np.ndarray, np.ndarray]:
    """Uncoupled one-rotor propagation with the same kick-then-drift order.

    Returns ``(energy_series, final_state)``; the energy series has
    ``t_max + 1`` entries starting at t=0.
    """
    n = psi0.shape[0]
    x = 2.0 * math.pi * np.arange(n) / n
    p = hbar_s * np.fft.fftfreq(n, 1.0 / n)
    kick = np.exp(-1j * (k / hbar_s) * np.cos(x))
    free = np.exp(-1j * p**2 / (2.0 * hbar_s))
    psi = np.array(psi0, dtype=np.complex128, copy=True)
    energies = np.empty(t_max + 1)
    energies[0] = float(np.dot(np.abs(sfft.fft(psi, norm="ortho")) ** 2, p**2) / 2.0)
    for t in range(1, t_max + 1):
        psi *= kick
        psi = sfft.fft(psi, norm="ortho", overwrite_x=True)
        psi *= free
        energies[t] = float(np.dot(psi.real**2 + psi.imag**2, p**2) / 2.0)
        psi = sfft.ifft(psi, norm="ortho", overwrite_x=True)
    return energies, psi


def final_state(record: RunRecord, grid: GridSpec) -> WaveFunction2D | None:
    return None if record.state is None else WaveFunction2D(record.state, grid)
