"""Discretized two-rotor Hilbert space on the cylinder.

Positions are sampled at ``x_k = 2*pi*k/N``.  Momentum-basis amplitudes are
stored in FFT order, i.e. bin ``j`` holds ``p = hbar_s * m`` with
``m = fftfreq(N) * N``, so ``m`` runs over ``[-N/2, N/2)``.  Transforms use
the unitary ``1/sqrt(N)`` convention, which keeps ``sum |psi|^2`` basis
independent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import BasisError, ConfigurationError, DimensionError, PrecisionError

TWO_PI = 2.0 * math.pi
NORM_TOL = 1e-10


class Basis(enum.Enum):
    POSITION = "position"
    MOMENTUM = "momentum"


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    n1: int
    n2: int
    hbar_s: float
    period: float = TWO_PI

    def __post_init__(self):
        for name in ("n1", "n2"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or not _is_pow2(int(n)):
                raise ConfigurationError(f"{name}={n!r} is not a power of two")
        if not (math.isfinite(self.hbar_s) and self.hbar_s > 0):
            raise ConfigurationError(f"hbar_s must be positive, got {self.hbar_s!r}")
        if self.period != TWO_PI:
            raise ConfigurationError("position period is fixed to 2*pi")

    def size(self, axis: int) -> int:
        return {1: self.n1, 2: self.n2}[axis]

    def positions(self, axis: int) -> np.ndarray:
        n = self.size(axis)
        return TWO_PI * np.arange(n) / n

    def momentum_indices(self, axis: int) -> np.ndarray:
        """Integer momentum quantum numbers in FFT order."""
        n = self.size(axis)
        return np.fft.fftfreq(n, 1.0 / n).astype(np.int64)

    def momenta(self, axis: int) -> np.ndarray:
        return self.hbar_s * self.momentum_indices(axis)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)


def make_grid(n1: int, n2: int, hbar_s: float, min_size: int = 16) -> GridSpec:
    if n1 < min_size or n2 < min_size:
        raise ConfigurationError(f"grid sizes must be >= {min_size}, got ({n1}, {n2})")
    return GridSpec(int(n1), int(n2), float(hbar_s))


@dataclass(frozen=True)
class CoherentStateSpec:
    x0: float
    p0: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigurationError(f"sigma must be positive, got {self.sigma!r}")


def default_coherent_spec(hbar_s: float) -> CoherentStateSpec:
    return CoherentStateSpec(x0=math.pi + 0.1, p0=0.0, sigma=math.sqrt(hbar_s / 2.0))


def image_overlap(sigma: float, period: float = TWO_PI) -> float:
    """Normalized overlap of neighbouring Gaussian images one period apart."""
    return math.exp(-(period**2) / (8.0 * sigma**2))


def coherent_state(
    grid: GridSpec,
    axis: int,
    spec: CoherentStateSpec,
    max_overlap: float = 1e-3,
) -> np.ndarray:
    """Periodized Gaussian wave packet on one rotor axis, position basis.

    Images ``x0 - 2*pi*w`` are summed until a new pair of windings adds less
    than 1e-16 of the norm.  Each image carries its own plane-wave phase so
    the packet is genuinely 2*pi periodic.
    """
    overlap = image_overlap(spec.sigma, grid.period)
    if overlap > max_overlap:
        raise PrecisionError(
            f"sigma={spec.sigma} too wide for the period: image overlap {overlap:.3e}"
        )
    x = grid.positions(axis)
    hbar = grid.hbar_s

    def image(w):
        d = x - spec.x0 + grid.period * w
        return np.exp(-(d**2) / (4.0 * spec.sigma**2) + 1j * spec.p0 * d / hbar)

    psi = image(0) + image(-1) + image(1)
    ref = np.sum(np.abs(psi) ** 2)
    w = 2
    while True:
        extra = image(w) + image(-w)
        if np.sum(np.abs(extra) ** 2) < 1e-16 * ref:
            break
        psi = psi + extra
        w += 1
    return psi / np.linalg.norm(psi)


def coherent_states(
    grid: GridSpec, axis: int, x0s: np.ndarray, p0s: np.ndarray, sigma: float
) -> np.ndarray:
    """Normalized periodized wave packets centred at each ``(x0s[i], p0s[i])``.

    Returns an ``(M, N)`` array of position-basis amplitudes.
    """
    x = grid.positions(axis)
    x0s = np.asarray(x0s, dtype=float)[:, None]
    p0s = np.asarray(p0s, dtype=float)[:, None]
    d0 = (x[None, :] - x0s + math.pi) % TWO_PI - math.pi
    w_max = int(math.ceil(9.0 * sigma / TWO_PI)) + 1
    out = np.zeros((x0s.shape[0], x.shape[0]), dtype=np.complex128)
    for w in range(-w_max, w_max + 1):
        d = d0 + TWO_PI * w
        out += np.exp(-(d**2) / (4.0 * sigma**2) + 1j * p0s * d / grid.hbar_s)
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out


def momentum_eigenstate(grid: GridSpec, axis: int, m: int) -> np.ndarray:
    x = grid.positions(axis)
    return np.exp(1j * m * x) / math.sqrt(grid.size(axis))


@dataclass(frozen=True, eq=False)
class WaveFunction2D:
    amplitudes: np.ndarray
    grid: GridSpec
    basis1: Basis = Basis.POSITION
    basis2: Basis = Basis.POSITION
    valid: bool = True
    _owned: bool = field(default=False, repr=False)

    def __post_init__(self):
        a = self.amplitudes
        if a.shape != self.grid.shape:
            raise DimensionError(f"amplitudes shape {a.shape} != grid {self.grid.shape}")
        if not self._owned:
            a = np.array(a, dtype=np.complex128, copy=True)
            object.__setattr__(self, "amplitudes", a)
        a.flags.writeable = False

    def basis(self, axis: int) -> Basis:
        return {1: self.basis1, 2: self.basis2}[axis]

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def replace(self, amplitudes, **changes) -> "WaveFunction2D":
        kw = dict(grid=self.grid, basis1=self.basis1, basis2=self.basis2, valid=self.valid)
        kw.update(changes)
        return WaveFunction2D(amplitudes, _owned=True, **kw)


def product_state(grid: GridSpec, psi1: np.ndarray, psi2: np.ndarray) -> WaveFunction2D:
    psi1 = np.asarray(psi1, dtype=np.complex128)
    psi2 = np.asarray(psi2, dtype=np.complex128)
    if psi1.shape != (grid.n1,) or psi2.shape != (grid.n2,):
        raise DimensionError(
            f"factor shapes {psi1.shape}, {psi2.shape} do not match grid {grid.shape}"
        )
    amp = np.outer(psi1, psi2)
    amp /= math.sqrt(np.sum(np.abs(amp) ** 2))
    return WaveFunction2D(amp, grid, _owned=True)


def _axes(axis) -> tuple[int, ...]:
    if axis in ("both", (1, 2)):
        return (1, 2)
    if axis in (1, 2):
        return (axis,)
    raise ValueError(f"axis must be 1, 2 or 'both', got {axis!r}")


def _transform(psi: WaveFunction2D, axis, target: Basis, strict: bool) -> WaveFunction2D:
    todo = []
    for ax in _axes(axis):
        if psi.basis(ax) is target:
            if strict:
                raise BasisError(f"axis {ax} already in {target.value} basis")
            continue
        todo.append(ax - 1)
    if not todo:
        return psi
    fn = sfft.fftn if target is Basis.MOMENTUM else sfft.ifftn
    amp = fn(psi.amplitudes, axes=todo, norm="ortho")
    bases = {"basis1": psi.basis1, "basis2": psi.basis2}
    for ax in todo:
        bases[f"basis{ax + 1}"] = target
    return psi.replace(amp, **bases)


def to_momentum(psi: WaveFunction2D, axis="both", strict: bool = True) -> WaveFunction2D:
    return _transform(psi, axis, Basis.MOMENTUM, strict)


def to_position(psi: WaveFunction2D, axis="both", strict: bool = True) -> WaveFunction2D:
    return _transform(psi, axis, Basis.POSITION, strict)


def momentum_marginals(amplitudes_p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row and column sums of ``|psi|^2`` for an array already in momentum basis."""
    prob = np.abs(amplitudes_p) ** 2
    return prob.sum(axis=1), prob.sum(axis=0)


def edge_fraction(marginal_fft_order: np.ndarray) -> float:
    """Probability in the two outermost momentum bins (m = -N/2 and N/2 - 1)."""
    n = marginal_fft_order.shape[0]
    return float(marginal_fft_order[n // 2] + marginal_fft_order[n // 2 - 1])


def edge_population(psi: WaveFunction2D) -> tuple[float, float]:
    """Per-axis probability in the outermost two momentum bins.

    Used to detect wrap-around of the periodic momentum grid.
    """
    mom = to_momentum(psi, "both", strict=False)
    f1, f2 = momentum_marginals(mom.amplitudes)
    return edge_fraction(f1), edge_fraction(f2)


def circular_moments(x: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Circular mean in [0, 2*pi) and circular standard deviation."""
    z = np.sum(weights * np.exp(1j * x)) / np.sum(weights)
    mean = float(np.angle(z) % TWO_PI)
    r = min(abs(z), 1.0)
    std = math.sqrt(-2.0 * math.log(r)) if r > 0 else math.inf
    return mean, std


def momentum_moments(psi_x: np.ndarray, hbar_s: float) -> tuple[float, float]:
    """Mean and standard deviation of p for a 1D position-basis amplitude."""
    n = psi_x.shape[0]
    f = np.abs(sfft.fft(psi_x, norm="ortho")) ** 2
    p = hbar_s * np.fft.fftfreq(n, 1.0 / n)
    f = f / f.sum()
    mean = float(np.sum(f * p))
    return mean, float(math.sqrt(max(np.sum(f * (p - mean) ** 2), 0.0)))
