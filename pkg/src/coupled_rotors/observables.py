"""Physical probes: energies, marginals, fits, Husimi function, regimes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.ndimage import median_filter

from .entanglement import ReducedDensityMatrix
from .errors import FitDomainError, InsufficientDataError, RegimeError
from .grid import TWO_PI, Basis, GridSpec, WaveFunction2D, coherent_states, to_momentum, to_position
from .record import RunRecord
from .theory import crossover_roots


class Model(enum.Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    POWER_LAW = "power_law"
    LINEAR = "linear"
    LOG_LINEAR = "log_linear"


@dataclass(frozen=True, eq=False)
class MarginalDistribution:
    axis: int
    basis: Basis
    values: np.ndarray
    coords: np.ndarray
    time: int = 0

    def max_deviation_from_uniform(self) -> float:
        n = self.values.shape[0]
        return float(np.max(np.abs(self.values - 1.0 / n)))


@dataclass(frozen=True, eq=False)
class FitReport:
    """Least-squares fit in a linearizing representation.

    ``params`` are the fitted coefficients, ``residual`` the RMS deviation in
    the fitted representation (log-density for distribution fits) and ``r2``
    the coefficient of determination in that representation.
    """

    model: Model
    params: np.ndarray
    residual: float
    window: tuple[float, float]
    stderr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r2: float = float("nan")
    derived: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RegimeReport:
    t_b: int | None
    idl_interval: tuple[float, float] | None
    t_star_numeric: float | None
    diagnostics: dict = field(default_factory=dict)


# --- energies and marginals -------------------------------------------------


def mean_energy(psi: WaveFunction2D, rotor: int) -> float:
    m = marginal(psi, rotor, Basis.MOMENTUM)
    return float(np.dot(m.values, m.coords**2) / 2.0)


def marginal(psi: WaveFunction2D, axis: int, basis: Basis, time: int = 0) -> MarginalDistribution:
    if basis is Basis.MOMENTUM:
        psi = to_momentum(psi, axis, strict=False)
    else:
        psi = to_position(psi, axis, strict=False)
    prob = np.abs(psi.amplitudes) ** 2
    values = prob.sum(axis=1 if axis == 1 else 0)
    g = psi.grid
    if basis is Basis.MOMENTUM:
        return MarginalDistribution(axis, basis, np.fft.fftshift(values), np.fft.fftshift(g.momenta(axis)), time)
    return MarginalDistribution(axis, basis, values, g.positions(axis), time)


def average_marginals(dists: list[MarginalDistribution]) -> MarginalDistribution:
    if not dists:
        raise InsufficientDataError("no marginal snapshots to average")
    vals = np.mean([d.values for d in dists], axis=0)
    d0 = dists[0]
    return MarginalDistribution(d0.axis, d0.basis, vals, d0.coords, d0.time)


def record_marginal(record: RunRecord, t: int, key: str, grid: GridSpec) -> MarginalDistribution:
    axis = int(key[1])
    if key[0] == "p":
        return MarginalDistribution(axis, Basis.MOMENTUM, record.marginals[t][key], np.fft.fftshift(grid.momenta(axis)), t)
    return MarginalDistribution(axis, Basis.POSITION, record.marginals[t][key], grid.positions(axis), t)


# --- distribution fits -------------------------------------------------------


def _lstsq(a: np.ndarray, y: np.ndarray):
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    dof = max(len(y) - a.shape[1], 1)
    s2 = float(resid @ resid) / dof
    try:
        cov = s2 * np.linalg.inv(a.T @ a)
        stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        stderr = np.full(a.shape[1], np.nan)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    rms = float(math.sqrt(np.mean(resid**2)))
    return coef, rms, stderr, r2


def fit_distribution(dist: MarginalDistribution, model: Model, floor: float = 1e-12, min_bins: int = 8) -> FitReport:
    """Fit ``ln f(p)``: quadratic for a Gaussian, linear in ``|p - p_c|`` for an
    exponential.  Bins below ``floor`` times the peak are ignored."""
    if dist.basis is not Basis.MOMENTUM:
        raise ValueError("fit_distribution expects a momentum-basis distribution")
    f, p = dist.values, dist.coords
    use = f > floor * f.max()
    if use.sum() < min_bins:
        raise InsufficientDataError(f"{int(use.sum())} usable bins (< {min_bins})")
    y, pu = np.log(f[use]), p[use]
    window = (float(pu.min()), float(pu.max()))
    if model is Model.GAUSSIAN:
        a = np.column_stack([np.ones_like(pu), pu, pu**2])
        coef, rms, se, r2 = _lstsq(a, y)
        var = -0.5 / coef[2] if coef[2] < 0 else float("inf")
        return FitReport(model, coef, rms, window, se, r2, {"variance": var, "center": coef[1] * var})
    if model is Model.EXPONENTIAL:
        i0 = int(np.argmax(f))
        dp = abs(p[1] - p[0])
        best = None
        for k in range(-3, 4):
            pc = p[i0] + k * dp
            a = np.column_stack([np.ones_like(pu), np.abs(pu - pc)])
            coef, rms, se, r2 = _lstsq(a, y)
            if best is None or rms < best[1]:
                best = (coef, rms, se, r2, pc)
        coef, rms, se, r2, pc = best
        ell = -1.0 / coef[1] if coef[1] < 0 else float("inf")
        return FitReport(model, coef, rms, window, se, r2, {"localization_length": ell, "center": pc})
    raise ValueError(f"unsupported distribution model {model}")


# --- time-series fits --------------------------------------------------------


def fit_timeseries(t, y, model: Model, window: tuple[float, float] | None = None, min_samples: int = 8) -> FitReport:
    """Least squares in the linearizing representation of ``model``.

    Linear: ``y = a t + b``; LogLinear: ``y = a ln t + b``; PowerLaw:
    ``ln y = a ln t + ln c``; Exponential: ``ln y = a t + ln c``.  In every
    case ``params[0]`` is the slope ``a``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.isfinite(t) & np.isfinite(y)
    if window is not None:
        m &= (t >= window[0]) & (t <= window[1])
    t, y = t[m], y[m]
    if t.size < min_samples:
        raise InsufficientDataError(f"{t.size} samples in window {window} (< {min_samples})")
    if model in (Model.POWER_LAW, Model.LOG_LINEAR) and np.any(t <= 0):
        raise FitDomainError("nonpositive times in a log-time fit", list(t[t <= 0]))
    if model in (Model.POWER_LAW, Model.EXPONENTIAL) and np.any(y <= 0):
        bad = [(float(a), float(b)) for a, b in zip(t[y <= 0], y[y <= 0])]
        raise FitDomainError(f"{len(bad)} nonpositive samples in a log-value fit", bad)
    if model not in (Model.LINEAR, Model.LOG_LINEAR, Model.POWER_LAW, Model.EXPONENTIAL):
        raise ValueError(f"unsupported time-series model {model}")
    x = np.log(t) if model in (Model.LOG_LINEAR, Model.POWER_LAW) else t
    ys = np.log(y) if model in (Model.POWER_LAW, Model.EXPONENTIAL) else y
    a = np.column_stack([x, np.ones_like(x)])
    coef, rms, se, r2 = _lstsq(a, ys)
    derived = {}
    if model in (Model.POWER_LAW, Model.EXPONENTIAL):
        derived["prefactor"] = float(math.exp(coef[1]))
    return FitReport(model, coef, rms, (float(t[0]), float(t[-1])), se, r2, derived)


# --- Husimi function ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HusimiLattice:
    xs: np.ndarray
    ps: np.ndarray

    @property
    def cell(self) -> float:
        return float((self.xs[1] - self.xs[0]) * (self.ps[1] - self.ps[0]))

    @classmethod
    def midpoint(cls, p_max: float, points: int = 64, p_center: float = 0.0) -> "HusimiLattice":
        xs = (np.arange(points) + 0.5) * TWO_PI / points
        ps = p_center - p_max + (np.arange(points) + 0.5) * 2.0 * p_max / points
        return cls(xs, ps)

    @classmethod
    def for_diffusion(cls, grid: GridSpec, p2: float, points: int = 64) -> "HusimiLattice":
        """Cover ``+-4 sqrt(<p^2> + hbar)``, clipped to the grid's momentum range."""
        p_max = min(4.0 * math.sqrt(p2 + grid.hbar_s), grid.hbar_s * grid.n1 / 2.0)
        return cls.midpoint(p_max, points)


def _coherent_bank(grid: GridSpec, lattice: HusimiLattice, sigma: float) -> np.ndarray:
    xx, pp = np.meshgrid(lattice.xs, lattice.ps, indexing="ij")
    return coherent_states(grid, 1, xx.ravel(), pp.ravel(), sigma)


def husimi(rho1: ReducedDensityMatrix, grid: GridSpec, lattice: HusimiLattice, sigma: float | None = None) -> np.ndarray:
    """``H(x, p) = <alpha_{x,p}| rho1 |alpha_{x,p}>`` on ``lattice`` (shape ``(nx, np)``)."""
    sigma = math.sqrt(grid.hbar_s / 2.0) if sigma is None else sigma
    rho = rho1.entries
    if rho1.basis is Basis.MOMENTUM:
        rho = sfft.ifft(sfft.fft(rho, axis=1, norm="ortho"), axis=0, norm="ortho")
    bank = _coherent_bank(grid, lattice, sigma)
    h = np.real(np.sum((bank.conj() @ rho) * bank, axis=1))
    return h.reshape(lattice.xs.size, lattice.ps.size)


def husimi_of_state(amp: np.ndarray, grid: GridSpec, lattice: HusimiLattice, sigma: float | None = None) -> np.ndarray:
    """Husimi function of rotor 1 straight from position-basis amplitudes."""
    sigma = math.sqrt(grid.hbar_s / 2.0) if sigma is None else sigma
    bank = _coherent_bank(grid, lattice, sigma)
    proj = bank.conj() @ amp
    h = np.sum(proj.real**2 + proj.imag**2, axis=1)
    return h.reshape(lattice.xs.size, lattice.ps.size)


def husimi_norm(h: np.ndarray, lattice: HusimiLattice, hbar_s: float) -> float:
    return float(h.sum() * lattice.cell / (TWO_PI * hbar_s))


def husimi_linear_entropy(h: np.ndarray, lattice: HusimiLattice, hbar_s: float) -> float:
    return float(1.0 - np.sum(h * h) * lattice.cell / (TWO_PI * hbar_s))


def _momentum_rho(rho1: ReducedDensityMatrix) -> np.ndarray:
    if rho1.basis is Basis.MOMENTUM:
        return rho1.entries
    return sfft.ifft(sfft.fft(rho1.entries, axis=0, norm="ortho"), axis=1, norm="ortho")


def husimi_moments(
    rho1: ReducedDensityMatrix, grid: GridSpec, sigma: float | None = None, oversample: int = 4
) -> tuple[float, float]:
    """Normalization and ``(1/2 pi hbar) int H^2`` of rotor 1's Husimi function.

    In the momentum basis a coherent state is a Gaussian window of a few
    bins, so ``H(., p0)`` has only a handful of harmonics in x and its x
    integrals follow from Parseval exactly.  The p0 integral is a rectangle
    rule with step ``hbar / oversample``, which converges exponentially
    because ``H`` is Gaussian-smooth in p.
    """
    hbar = grid.hbar_s
    sigma = math.sqrt(hbar / 2.0) if sigma is None else sigma
    sig_p = hbar / (2.0 * sigma)
    n = grid.n1
    rho = np.fft.fftshift(_momentum_rho(rho1))  # row/col i <-> m = i - n/2
    half = int(math.ceil(9.2 * sig_p / hbar)) + 1
    width = min(2 * half + 1, n)
    u = np.arange(-n // 2 * oversample, n // 2 * oversample) / oversample  # p0 / hbar
    m = np.rint(u).astype(np.int64)[:, None] + np.arange(width)[None, :] - width // 2
    a = np.exp(-((m - u[:, None]) * hbar) ** 2 / (4.0 * sig_p**2))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    idx = (m + n // 2) % n
    block = rho[idx[:, :, None], idx[:, None, :]] * a[:, :, None] * a[:, None, :]
    norm = float(np.sum(np.trace(block, axis1=1, axis2=2).real)) / oversample
    sq = 0.0
    for d in range(-(width - 1), width):
        sq += float(np.sum(np.abs(np.trace(block, offset=d, axis1=1, axis2=2)) ** 2))
    return norm, sq / oversample


def husimi_slin(rho1: ReducedDensityMatrix, grid: GridSpec, sigma: float | None = None, oversample: int = 4) -> float:
    """Husimi linear entropy ``1 - (1/2 pi hbar) int H^2 dx dp`` of rotor 1."""
    return 1.0 - husimi_moments(rho1, grid, sigma, oversample)[1]


def husimi_slin_of_state(amp: np.ndarray, grid: GridSpec, oversample: int = 4) -> float:
    amp_p = sfft.fft(amp, axis=0, norm="ortho")
    rho = ReducedDensityMatrix(amp_p @ amp_p.conj().T, Basis.MOMENTUM)
    return husimi_slin(rho, grid, oversample=oversample)


def gaussian_husimi(lattice: HusimiLattice, hbar_s: float, variance: float) -> np.ndarray:
    """Uniform-in-x Gaussian-in-p Husimi function with momentum variance ``variance``."""
    prof = hbar_s / math.sqrt(TWO_PI * variance) * np.exp(-(lattice.ps**2) / (2.0 * variance))
    return np.broadcast_to(prof, (lattice.xs.size, lattice.ps.size)).copy()


# --- diffusion and regimes ---------------------------------------------------


def _energy_series(record: RunRecord) -> tuple[np.ndarray, np.ndarray]:
    if record.energy_t.size:
        return record.energy_t.astype(float), record.energy_e1
    m = np.isfinite(record.e1)
    return record.t[m].astype(float), record.e1[m]


def estimate_dq(record: RunRecord, window: tuple[float, float], min_samples: int = 10) -> float:
    """Diffusion coefficient as the slope of ``<E_1>(t)`` over ``window``.

    The slope must be positive and its total rise across the window must
    exceed twice the RMS scatter about the fit, otherwise the window is not
    diffusive and :class:`RegimeError` is raised.
    """
    t, e = _energy_series(record)
    m = (t >= window[0]) & (t <= window[1])
    if m.sum() < min_samples:
        raise InsufficientDataError(f"{int(m.sum())} energy samples in {window} (< {min_samples})")
    fit = fit_timeseries(t[m], e[m], Model.LINEAR, min_samples=min_samples)
    slope = float(fit.params[0])
    span = float(t[m][-1] - t[m][0])
    if slope <= 0 or slope * span < 2.0 * fit.residual:
        raise RegimeError(
            f"no diffusive growth in {window}: slope={slope:.3g}, rise={slope * span:.3g}, scatter={fit.residual:.3g}"
        )
    return slope


def smooth(y: np.ndarray, size: int = 5) -> np.ndarray:
    """Centered moving median; ``size <= 1`` returns a copy."""
    y = np.asarray(y, dtype=float)
    if size <= 1 or y.size < size:
        return y.copy()
    return median_filter(y, size=size, mode="nearest")


def break_time(
    t: np.ndarray, e: np.ndarray, d_cl: float, tolerance: float = 0.5, smoothing: int = 5
) -> int | None:
    """Last time the running slope ``(E(t) - E(0)) / t`` stays within
    ``tolerance * d_cl`` of ``d_cl`` continuously from t=1.

    The slope series is median-smoothed first, which suppresses single-kick
    excursions of one quantum trajectory.
    """
    if t.size < 2 or t[0] != 0:
        raise InsufficientDataError("energy series must start at t=0")
    slope = smooth((e[1:] - e[0]) / t[1:], smoothing)
    inside = np.abs(slope - d_cl) <= tolerance * d_cl
    if not inside[0]:
        return None
    if inside.all():
        return int(t[-1])
    return int(t[1:][np.argmin(inside) - 1])


def _segmented_fit(t: np.ndarray, s: np.ndarray, min_segment: int):
    best = None
    for i in range(min_segment, t.size - min_segment + 1):
        te, se = t[:i], s[:i]
        tl, sl = t[i:], s[i:]
        c = float(np.dot(te, se) / np.dot(te, te))
        u = tl**-0.5
        a = float(np.dot(1.0 - sl, u) / np.dot(u, u))
        ssr = float(np.sum((se - c * te) ** 2) + np.sum((sl - 1.0 + a * u) ** 2))
        if best is None or ssr < best["ssr"]:
            best = {"ssr": ssr, "c": c, "a": a, "split": float(t[i]), "n_early": i, "n_late": t.size - i,
                    "rms_early": float(np.sqrt(np.mean((se - c * te) ** 2))),
                    "rms_late": float(np.sqrt(np.mean((sl - 1.0 + a * u) ** 2)))}
    return best


def detect_regimes(
    record: RunRecord,
    d_cl: float,
    *,
    slope_tolerance: float = 0.5,
    smoothing: int = 5,
    min_segment: int = 5,
    min_slin: float = 1e-6,
) -> RegimeReport:
    """Break time from the energy series and numeric crossover time from S_lin.

    The crossover is the intersection of a through-origin line fitted to the
    early S_lin samples and ``1 - a t^{-1/2}`` fitted to the late ones; the
    split between the two windows minimizes the total squared residual.
    """
    diag: dict = {}
    te, ee = _energy_series(record)
    if te.size < 50:
        raise InsufficientDataError(f"{te.size} energy samples (< 50)")
    t_b = break_time(te, ee, d_cl, slope_tolerance, smoothing)
    diag["d_cl"] = d_cl

    m = (record.t >= 1) & np.isfinite(record.slin)
    ts, ss = record.t[m].astype(float), smooth(record.slin[m], smoothing)
    t_star = None
    if ts.size < 2 * min_segment:
        diag["t_star"] = f"only {ts.size} S_lin samples"
    elif np.max(np.abs(ss)) < min_slin:
        diag["t_star"] = "S_lin never leaves zero"
    else:
        fit = _segmented_fit(ts, ss, min_segment)
        diag.update({f"seg_{k}": v for k, v in fit.items()})
        roots = crossover_roots(fit["c"], fit["a"]) if fit["c"] > 0 and fit["a"] >= 0 else []
        if roots:
            t_star = roots[-1]
        else:
            diag["t_star"] = "early and late fits do not intersect"
    idl = None
    if t_b is not None and t_star is not None and t_b < t_star:
        idl = (float(t_b), float(t_star))
    return RegimeReport(t_b=t_b, idl_interval=idl, t_star_numeric=t_star, diagnostics=diag)
