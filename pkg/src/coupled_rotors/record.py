"""Time-series container produced by :func:`coupled_rotors.evolution.evolve`."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .entanglement import decoherence_ratio

ROW_COLUMNS = ("t", "svn", "slin", "e1", "e2", "dcoh", "valid")


@dataclass(eq=False)
class RunRecord:
    """Sampled observables of one run.

    ``t``/``svn``/``slin``/``e1``/``e2``/``dcoh``/``valid`` are the scheduled
    rows; columns of disabled probes hold NaN.  ``energy_*`` are dense
    per-kick series starting at ``energy_t[0]``; ``energy_edge`` is the larger
    of the two edge-bin populations at each kick.  ``marginals`` maps a sample
    time to ``{"x1", "p1", "x2", "p2"}`` probability arrays (momentum arrays
    ordered by increasing p).  ``state`` holds the final position-basis
    amplitudes of a completed run and is never serialized.
    """

    t: np.ndarray
    svn: np.ndarray
    slin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    dcoh: np.ndarray
    valid: np.ndarray
    energy_t: np.ndarray
    energy_e1: np.ndarray
    energy_e2: np.ndarray
    energy_edge: np.ndarray = field(default_factory=lambda: np.zeros(0))
    marginals: dict = field(default_factory=dict)
    first_breach: int | None = None
    complete: bool = True
    config: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    state: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def empty(cls) -> "RunRecord":
        f = lambda: np.zeros(0)
        return cls(
            t=np.zeros(0, dtype=np.int64), svn=f(), slin=f(), e1=f(), e2=f(), dcoh=f(),
            valid=np.zeros(0, dtype=bool), energy_t=np.zeros(0, dtype=np.int64),
            energy_e1=f(), energy_e2=f(), energy_edge=f(),
        )

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def rows(self):
        for i in range(len(self)):
            yield tuple(getattr(self, c)[i] for c in ROW_COLUMNS)

    def dcoh_ratio(self) -> tuple[np.ndarray, bool]:
        return decoherence_ratio(self.dcoh)

    def at(self, t: int) -> dict:
        i = int(np.searchsorted(self.t, t))
        if i >= len(self) or self.t[i] != t:
            raise KeyError(t)
        return {c: getattr(self, c)[i] for c in ROW_COLUMNS}

    def window(self, lo: float, hi: float) -> np.ndarray:
        """Boolean mask of scheduled rows with ``lo <= t <= hi``."""
        return (self.t >= lo) & (self.t <= hi)

    def dense_window(self, lo: float, hi: float) -> np.ndarray:
        return (self.energy_t >= lo) & (self.energy_t <= hi)

    def wrap_time(self, threshold: float) -> int | None:
        """First kick at which the edge population exceeds ``threshold``."""
        over = self.energy_edge > threshold
        if not over.any():
            return None
        return int(self.energy_t[np.argmax(over)])
