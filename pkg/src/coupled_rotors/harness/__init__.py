"""Configuration, run orchestration, sweeps and persistence."""

from .config import RunConfig, load_config, parse_config, serialize_config
from .export import export_record, load_record
from .runner import run
from .sweep import SweepReport, summarize, sweep

__all__ = [
    "RunConfig", "SweepReport", "export_record", "load_config", "load_record",
    "parse_config", "run", "serialize_config", "summarize", "sweep",
]
