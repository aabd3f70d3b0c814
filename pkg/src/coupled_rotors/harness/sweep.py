"""Parameter sweeps and the per-run analysis they aggregate."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import RotorError
from ..observables import Model, detect_regimes, estimate_dq, fit_timeseries
from ..record import RunRecord
from ..theory import TheoryInputs, crossover_time
from .config import RunConfig
from .runner import run

AXES = ("xi12", "hbar_s", "k1k2")
# Edge population above which momentum wrap-around visibly distorts <E>;
# analysis windows end here even though rows are flagged earlier.
WRAP_LIMIT = 1e-3


class SweepError(RotorError):
    pass


@dataclass
class RunSummary:
    value: float
    xi12: float
    hbar_s: float
    gamma: float = math.nan
    t_star_numeric: float = math.nan
    t_star_pred: float = math.nan
    d_q: float = math.nan
    dq_source: str = ""
    t_b: float = math.nan
    idl_start: float = math.nan
    idl_end: float = math.nan
    wrap_time: float = math.nan
    error: str = ""

    @property
    def idl_length(self) -> float:
        return self.idl_end - self.idl_start


def rate_window(t_star: float) -> tuple[float, float]:
    return (1.0, t_star / 4.0)


def dq_window(record: RunRecord, t_star: float, wrap_limit: float = WRAP_LIMIT) -> tuple[float, float]:
    wrap = record.wrap_time(wrap_limit)
    hi = float(record.energy_t[-1]) if wrap is None else float(wrap)
    return (2.0 * t_star, hi)


def summarize(record: RunRecord, xi12: float, hbar_s: float, d_cl: float, value: float | None = None) -> RunSummary:
    """Regime times, early entanglement rate and late diffusion of one run."""
    s = RunSummary(value=xi12 if value is None else value, xi12=xi12, hbar_s=hbar_s)
    wrap = record.wrap_time(WRAP_LIMIT)
    s.wrap_time = math.nan if wrap is None else float(wrap)
    reg = detect_regimes(record, d_cl)
    if reg.t_b is not None:
        s.t_b = float(reg.t_b)
    if reg.idl_interval is not None:
        s.idl_start, s.idl_end = reg.idl_interval
    if reg.t_star_numeric is None:
        s.error = f"no crossover: {reg.diagnostics.get('t_star', '')}"
        return s
    s.t_star_numeric = reg.t_star_numeric
    notes = []
    try:
        fit = fit_timeseries(record.t.astype(float), record.svn, Model.LINEAR, window=rate_window(s.t_star_numeric))
        s.gamma = float(fit.params[0])
    except (RotorError, ValueError) as exc:
        notes.append(f"rate: {exc}")
    try:
        s.d_q = estimate_dq(record, dq_window(record, s.t_star_numeric))
        s.dq_source = "own"
    except (RotorError, ValueError) as exc:
        notes.append(f"d_q: {exc}")
    if math.isfinite(s.d_q) and xi12 > 0:
        try:
            s.t_star_pred = crossover_time(TheoryInputs(xi12, hbar_s, s.d_q))
        except (RotorError, ValueError) as exc:
            notes.append(f"prediction: {exc}")
    s.error = "; ".join(notes)
    return s


@dataclass
class SweepReport:
    axis: str
    summaries: list[RunSummary]
    beta: float = math.nan
    beta_stderr: float = math.nan
    failures: dict = field(default_factory=dict)

    COLUMNS = ("value", "xi12", "hbar_s", "gamma", "t_star_numeric", "t_star_pred", "d_q", "dq_source",
               "t_b", "idl_start", "idl_end", "wrap_time", "error")

    def table(self) -> list[tuple]:
        return [tuple(asdict(s)[c] for c in self.COLUMNS) for s in self.summaries]

    def by_value(self) -> dict[float, RunSummary]:
        return {s.value: s for s in self.summaries}


def fill_pooled_dq(summaries: list[RunSummary]) -> None:
    """Values without their own diffusive window borrow D_q from the largest
    coupling that has one (diffusion is set by the rotors, not by xi)."""
    own = [s for s in summaries if s.dq_source == "own"]
    if not own:
        return
    ref = max(own, key=lambda s: s.xi12)
    for s in summaries:
        if s.dq_source or not (s.xi12 > 0) or s.hbar_s != ref.hbar_s:
            continue
        s.d_q, s.dq_source = ref.d_q, f"pooled:{ref.xi12:g}"
        try:
            s.t_star_pred = crossover_time(TheoryInputs(s.xi12, s.hbar_s, s.d_q))
        except (RotorError, ValueError) as exc:
            s.error = (s.error + "; " if s.error else "") + f"prediction: {exc}"


def rate_exponent(summaries: list[RunSummary]) -> tuple[float, float]:
    pts = [(s.xi12, s.gamma) for s in summaries if s.xi12 > 0 and s.gamma > 0]
    if len(pts) < 2:
        return math.nan, math.nan
    xi, gamma = np.array(pts).T
    fit = fit_timeseries(xi, gamma, Model.POWER_LAW, min_samples=2)
    return float(fit.params[0]), float(fit.stderr[0]) if len(pts) > 2 else math.nan


def config_for(base: RunConfig, axis: str, value: float) -> RunConfig:
    out = str(Path(base.output) / f"{axis}_{value:g}")
    if axis == "xi12":
        return base.replace(xi12=float(value), output=out)
    if axis == "hbar_s":
        return base.replace(hbar_s=float(value), output=out)
    if axis == "k1k2":
        return base.replace(k1=float(value), k2=float(value), output=out)
    raise SweepError(f"unknown sweep axis {axis!r}; expected one of {AXES}")


def _job(args) -> tuple[float, RunSummary | None, str]:
    cfg, value, d_cl, write = args
    try:
        rec = run(cfg, write=write)
        if not rec.complete:
            return value, None, rec.extras.get("error", "incomplete run")
        return value, summarize(rec, cfg.xi12, cfg.hbar_s, d_cl, value), ""
    except (RotorError, ValueError, OSError, ArithmeticError) as exc:
        return value, None, f"{type(exc).__name__}: {exc}"


def sweep(base: RunConfig, axis: str, values, d_cl: float, workers: int = 1, write: bool = True) -> SweepReport:
    values = sorted(float(v) for v in values)
    if len(set(values)) != len(values):
        raise SweepError("sweep values must be distinct")
    jobs = [(config_for(base, axis, v), v, d_cl, write) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    summaries, failures = [], {}
    for value, summary, err in sorted(results, key=lambda r: r[0]):
        if summary is None:
            failures[value] = err
        else:
            summaries.append(summary)
    if not summaries:
        raise SweepError(f"all {len(values)} runs failed: {failures}")
    fill_pooled_dq(summaries)
    beta, beta_err = rate_exponent(summaries) if axis == "xi12" else (math.nan, math.nan)
    return SweepReport(axis, summaries, beta, beta_err, failures)
