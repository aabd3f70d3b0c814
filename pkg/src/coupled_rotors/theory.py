"""Closed-form entanglement predictions for weak coupling.

Early times: ``S_lin = (xi/hbar)^2 C(t)`` with ``C(t) ~ c_slope * t``.
Late times (diffusive, Gaussian Husimi function): ``S_lin = 1 - hbar /
sqrt(4 pi D_q t)``.  The crossover time is where the two meet.

Writing ``a = c_slope (xi/hbar)^2``, ``b = hbar / sqrt(4 pi D_q)`` and
``tau = a t``, squaring ``a t - 1 = -b / sqrt(t)`` gives the cubic
``tau (tau - 1)^2 = q`` with ``q = a b^2 = c_slope xi^2 / (4 pi D_q)``,
whose Cardano solution is ``tau = (2 + G + 1/G) / 3``.  Squaring introduces
a spurious root (``a t - 1 = +b/sqrt(t)``); the principal cube root lands on
it, so :func:`crossover_time` evaluates all three branches and keeps the
largest root of the unsquared equation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import FitDomainError, WindowError
from .record import RunRecord


@dataclass(frozen=True)
class TheoryInputs:
    xi12: float
    hbar_s: float
    d_q: float
    c_slope: float = 1.0

    def __post_init__(self):
        for name in ("xi12", "hbar_s", "d_q", "c_slope"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


def perturbative_slin(inputs: TheoryInputs, c_of_t) -> np.ndarray:
    return (inputs.xi12 / inputs.hbar_s) ** 2 * np.asarray(c_of_t, dtype=float)


def asymptotic_slin(t, hbar_s: float, d_q: float):
    t = np.asarray(t, dtype=float)
    out = 1.0 - hbar_s / np.sqrt(4.0 * math.pi * d_q * t)
    return float(out) if out.ndim == 0 else out


def g_factor(xi12: float, d_q: float, c_slope: float = 1.0) -> complex:
    """Principal cube root of the Cardano bracket (complex in general)."""
    x2 = c_slope * xi12**2
    radicand = -1.0 / (math.pi * d_q) + 27.0 / (16.0 * math.pi**2) * x2 / d_q**2
    bracket = (
        -1.0
        + 27.0 / (8.0 * math.pi) * x2 / d_q
        + 3.0**1.5 * math.sqrt(x2) / 2.0 * cmath.sqrt(radicand)
    )
    return bracket ** (1.0 / 3.0) if bracket != 0 else 0j


def _unsquared_residual(t: float, a: float, b: float) -> float:
    return a * t - 1.0 + b / math.sqrt(t)


def crossover_roots(a: float, b: float) -> list[float]:
    """Real positive roots of ``a t = 1 - b/sqrt(t)``, ascending.

    ``a`` is the early linear rate, ``b`` the late-time coefficient.
    """
    if not (a > 0 and b >= 0):
        return []
    q = a * b * b
    x2 = q * 4.0 * math.pi  # plays the role of c*xi^2/D with D = 1
    g = g_factor(math.sqrt(x2), 1.0) if q > 0 else cmath.exp(1j * math.pi / 3.0)
    roots = []
    if g == 0:
        return []
    for k in range(3):
        gk = g * cmath.exp(2j * math.pi * k / 3.0)
        tau = (2.0 + gk + 1.0 / gk) / 3.0
        t = tau / a
        if abs(t.imag) > 1e-8 * max(abs(t), 1e-300) or t.real <= 0:
            continue
        t = t.real
        if abs(_unsquared_residual(t, a, b)) < 1e-7:
            roots.append(t)
    return sorted(roots)


def crossover_time(inputs: TheoryInputs) -> float:
    """Crossover time from the closed form, on the physical branch.

    Raises :class:`FitDomainError` when the early and late expressions never
    meet (strong coupling, ``xi^2 > 16 pi D_q / 27``).
    """
    h = inputs.hbar_s
    a = inputs.c_slope * (inputs.xi12 / h) ** 2
    b = h / math.sqrt(4.0 * math.pi * inputs.d_q)
    g = g_factor(inputs.xi12, inputs.d_q, inputs.c_slope)
    pref = h**2 / (3.0 * inputs.c_slope * inputs.xi12**2)
    best = None
    for k in range(3):
        gk = g * cmath.exp(2j * math.pi * k / 3.0)
        t = pref * (2.0 + 1.0 / gk + gk)
        if t.real <= 0:
            continue
        assert abs(t.imag) < 1e-8 * abs(t), f"complex crossover time {t}"
        if abs(_unsquared_residual(t.real, a, b)) < 1e-7 and (best is None or t.real > best):
            best = t.real
    if best is None:
        raise FitDomainError(f"no real crossover for {inputs}")
    return best


@dataclass(frozen=True, eq=False)
class CorrelationEstimate:
    t: np.ndarray
    c_of_t: np.ndarray
    c_slope: float
    window: tuple[float, float]


def extract_correlation(
    record: RunRecord,
    inputs: TheoryInputs | None = None,
    *,
    xi12: float | None = None,
    hbar_s: float = 1.0,
    max_slin: float = 0.1,
    min_points: int = 5,
) -> CorrelationEstimate:
    """Invert ``S_lin = (xi/hbar)^2 C(t)`` on a weak-coupling record.

    ``c_slope`` is the through-origin slope of ``C(t)`` over the samples with
    ``S_lin <= max_slin``.
    """
    if inputs is not None:
        xi12, hbar_s = inputs.xi12, inputs.hbar_s
    if xi12 is None or not xi12 > 0:
        raise WindowError("coupling is zero; C(t) is undefined")
    m = (record.t >= 1) & np.isfinite(record.slin)
    t = record.t[m].astype(float)
    s = record.slin[m]
    c = s * (hbar_s / xi12) ** 2
    early = s <= max_slin
    # Only the leading perturbative stretch counts; stop at the first excursion.
    if early.any() and not early.all():
        early[np.argmin(early):] = False
    if early.sum() < min_points:
        raise WindowError(
            f"only {int(early.sum())} samples with S_lin <= {max_slin}; record is already saturating"
        )
    te, ce = t[early], c[early]
    slope = float(np.dot(te, ce) / np.dot(te, te))
    return CorrelationEstimate(t=t, c_of_t=c, c_slope=slope, window=(float(te[0]), float(te[-1])))
