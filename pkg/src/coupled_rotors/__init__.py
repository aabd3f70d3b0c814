"""Simulation and analysis of two coupled quantum kicked rotors."""

__version__ = "0.1.0"

from .entanglement import SchmidtSpectrum, reduced_density, schmidt, slin, svn
from .errors import RotorError
from .evolution import ProbeSet, SampleSchedule, SystemParams, evolve, step
from .grid import Basis, CoherentStateSpec, GridSpec, WaveFunction2D, coherent_state, make_grid, product_state
from .observables import Model, detect_regimes, estimate_dq, fit_distribution, fit_timeseries
from .record import RunRecord
from .theory import TheoryInputs, crossover_time, g_factor

__all__ = [
    "Basis", "CoherentStateSpec", "GridSpec", "Model", "ProbeSet", "RotorError", "RunRecord",
    "SampleSchedule", "SchmidtSpectrum", "SystemParams", "TheoryInputs", "WaveFunction2D",
    "coherent_state", "crossover_time", "detect_regimes", "estimate_dq", "evolve",
    "fit_distribution", "fit_timeseries", "g_factor", "make_grid", "product_state",
    "reduced_density", "schmidt", "slin", "step", "svn",
]
