"""Schmidt analysis of the bipartite two-rotor state.

The Schmidt probabilities are the squared singular values of the ``n1 x n2``
amplitude matrix; the full ``N^2 x N^2`` density matrix is never formed.
Entropies are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import NumericalError
from .grid import Basis, WaveFunction2D

CLIP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SchmidtSpectrum:
    probabilities: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.probabilities > 1e-14))


@dataclass(frozen=True, eq=False)
class ReducedDensityMatrix:
    entries: np.ndarray
    basis: Basis

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries, self.entries)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)[::-1]


def _amplitudes(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, WaveFunction2D) else np.asarray(psi)


def _clip(lam: np.ndarray, what: str) -> np.ndarray:
    worst = lam.min()
    if worst < -CLIP_TOL:
        raise NumericalError(f"{what}: eigenvalue {worst:.3e} below -{CLIP_TOL}")
    return np.where(lam < 0, 0.0, lam)


def schmidt(psi) -> SchmidtSpectrum:
    """Schmidt probabilities of a pure bipartite state, in descending order."""
    amp = _amplitudes(psi)
    try:
        s = np.linalg.svd(amp, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        finite = bool(np.isfinite(amp).all())
        raise NumericalError(
            f"SVD failed ({exc}); shape={amp.shape}, finite={finite}, "
            f"norm={np.linalg.norm(amp) if finite else float('nan'):.3e}"
        ) from exc
    lam = _clip(s * s, "schmidt")
    return SchmidtSpectrum(np.sort(lam)[::-1])


def svn(spec: SchmidtSpectrum) -> float:
    lam = spec.probabilities
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def slin(spec: SchmidtSpectrum) -> float:
    lam = spec.probabilities
    return float(1.0 - np.sum(lam * lam))


def reduced_density(psi, basis: Basis = Basis.MOMENTUM) -> ReducedDensityMatrix:
    """Reduced density matrix of rotor 1, ``rho1 = Tr_2 |psi><psi|``.

    Axis 1 is transformed to ``basis`` as needed; the basis of axis 2 does not
    affect the partial trace.
    """
    if isinstance(psi, WaveFunction2D):
        amp = psi.amplitudes
        current = psi.basis1
    else:
        amp = np.asarray(psi)
        current = Basis.POSITION
    if current is not basis:
        fn = sfft.fft if basis is Basis.MOMENTUM else sfft.ifft
        amp = fn(amp, axis=0, norm="ortho")
    rho = amp @ amp.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return ReducedDensityMatrix(rho, basis)


def decoherence(rho1: ReducedDensityMatrix) -> float:
    """Summed magnitude of the off-diagonal elements of ``rho1``."""
    rho = rho1.entries
    return float(np.sum(np.abs(rho)) - np.sum(np.abs(np.diag(rho))))


def decoherence_ratio(values) -> tuple[np.ndarray, bool]:
    """Normalize a decoherence series by its first value.

    Returns ``(series, ok)``.  When the initial value vanishes the ratio is
    undefined; the raw series is returned with ``ok=False``.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0 or not values[0] > 0:
        return values, False
    return values / values[0], True


def entropy_bounds(n1: int, n2: int) -> tuple[float, float]:
    r = min(n1, n2)
    return math.log(r), 1.0 - 1.0 / r
