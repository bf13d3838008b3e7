"""Simulator for pulsed time-bin entangled twin-photon experiments."""

from .components import AnalyzerConfig, SourceConfig, bell_state, twin_photon_source
from .detection import ClickPattern, CoincidenceRule, DetectorConfig
from .fock import Band, Element, FockState, MixedState, Mode

__version__ = "0.1.0"

__all__ = [
    "AnalyzerConfig", "Band", "ClickPattern", "CoincidenceRule", "DetectorConfig", "Element", "FockState",
    "MixedState", "Mode", "SourceConfig", "bell_state", "twin_photon_source",
]
