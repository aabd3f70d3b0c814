"""Classical coupled standard maps on the cylinder.

Kick then drift, mirroring the quantum operator order::

    p1' = p1 + K1 sin x1 + xi sin(x1 - x2)
    p2' = p2 + K2 sin x2 - xi sin(x1 - x2)
    x_j' = (x_j + p_j') mod 2 pi

The kick force is ``-dV/dx`` for ``V = K cos x``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .evolution import SystemParams

TWO_PI = 2.0 * math.pi


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ClassicalState:
    """One phase-space point, or a batch when the fields are arrays."""

    x1: np.ndarray | float
    x2: np.ndarray | float
    p1: np.ndarray | float
    p2: np.ndarray | float

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.x1, self.x2, self.p1, self.p2), axis=-1)


@dataclass(frozen=True, eq=False)
class Ensemble:
    states: ClassicalState
    rng_seed: int

    @classmethod
    def uniform(cls, size: int, seed: int = 0) -> "Ensemble":
        """Uniform positions on the torus, zero momenta."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, TWO_PI, size=(2, size))
        z = np.zeros(size)
        return cls(ClassicalState(x[0], x[1], z, z.copy()), seed)

    def __len__(self) -> int:
        return int(np.size(self.states.x1))


def wrap(x):
    """Reduce angles to [0, 2 pi); ``np.mod`` alone can round up to 2 pi."""
    r = np.mod(x, TWO_PI)
    return np.where(r >= TWO_PI, 0.0, r)


def classical_step(s: ClassicalState, params: SystemParams) -> ClassicalState:
    coup = params.xi12 * np.sin(s.x1 - s.x2)
    p1 = s.p1 + params.k1 * np.sin(s.x1) + coup
    p2 = s.p2 + params.k2 * np.sin(s.x2) - coup
    return ClassicalState(wrap(s.x1 + p1), wrap(s.x2 + p2), p1, p2)


def jacobian(s: ClassicalState, params: SystemParams) -> np.ndarray:
    """One-step Jacobian in the ordering (x1, x2, p1, p2)."""
    c = params.xi12 * math.cos(s.x1 - s.x2)
    a11 = params.k1 * math.cos(s.x1) + c
    a22 = params.k2 * math.cos(s.x2) + c
    kick = np.array([[a11, -c], [-c, a22]])
    j = np.zeros((4, 4))
    j[2:, :2] = kick
    j[2:, 2:] = np.eye(2)
    j[:2, :2] = np.eye(2) + kick
    j[:2, 2:] = np.eye(2)
    return j


@dataclass(frozen=True, eq=False)
class EnsembleEnergy:
    t: np.ndarray
    energy: np.ndarray
    d_cl: float
    stderr: float


def ensemble_energy(ens: Ensemble, params: SystemParams, t_max: int) -> EnsembleEnergy:
    """Mean ``p1^2 / 2`` over the ensemble at t = 0..t_max, with its
    least-squares slope ``d_cl`` over the whole series.

    The slope of the mean equals the mean of per-trajectory slopes, so the
    standard error is taken from their spread across the ensemble.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1 to fit a slope")
    t = np.arange(t_max + 1, dtype=float)
    w = (t - t.mean()) / np.sum((t - t.mean()) ** 2)
    s = ens.states
    e = np.asarray(s.p1, dtype=float) ** 2 / 2.0
    energy = np.empty(t_max + 1)
    energy[0] = float(np.mean(e))
    slopes = w[0] * e
    for k in range(1, t_max + 1):
        s = classical_step(s, params)
        e = s.p1**2 / 2.0
        energy[k] = float(np.mean(e))
        slopes += w[k] * e
    m = slopes.size
    stderr = float(np.std(slopes, ddof=1) / math.sqrt(m)) if m > 1 else math.nan
    return EnsembleEnergy(t, energy, float(np.mean(slopes)), stderr)


def diffusion_coefficient(k: float, *, size: int = 20000, t_max: int = 500, seed: int = 0) -> float:
    """Classical energy diffusion of a single rotor with kick strength ``k``."""
    return ensemble_energy(Ensemble.uniform(size, seed), SystemParams(k, k, 0.0), t_max).d_cl


def lyapunov(
    params: SystemParams,
    t_max: int = 10_000,
    n_samples: int = 16,
    seed: int = 0,
    transient: int = 100,
) -> float:
    """Largest Lyapunov exponent by tangent-vector renormalization.

    With ``xi12 = 0`` the result is the larger of the two single-rotor
    exponents, so use ``k1 = k2 = K`` for the exponent of one rotor.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, TWO_PI, size=(2, n_samples))
    p = rng.uniform(0.0, TWO_PI, size=(2, n_samples))
    v = rng.normal(size=(4, n_samples))
    v /= np.linalg.norm(v, axis=0)
    k1, k2, xi = params.k1, params.k2, params.xi12
    log_sum = np.zeros(n_samples)
    running = np.empty(t_max)
    for t in range(-transient, t_max):
        d = x[0] - x[1]
        c = xi * np.cos(d)
        a11 = k1 * np.cos(x[0]) + c
        a22 = k2 * np.cos(x[1]) + c
        dp1 = v[2] + a11 * v[0] - c * v[1]
        dp2 = v[3] - c * v[0] + a22 * v[1]
        v = np.array([v[0] + dp1, v[1] + dp2, dp1, dp2])
        coup = xi * np.sin(d)
        p[0] = p[0] + k1 * np.sin(x[0]) + coup
        p[1] = p[1] + k2 * np.sin(x[1]) - coup
        x = wrap(x + p)
        norm = np.linalg.norm(v, axis=0)
        v /= norm
        if t >= 0:
            log_sum += np.log(norm)
            running[t] = float(np.mean(log_sum)) / (t + 1)
    lam = float(running[-1])
    tail = running[t_max // 2 :]
    spread = float(tail.max() - tail.min())
    if spread > 0.05 * max(abs(lam), 1e-3) and abs(lam) > 1e-2:
        warnings.warn(f"Lyapunov estimate not converged: {lam:.4f} varies by {spread:.3g}", ConvergenceWarning)
    return lam
