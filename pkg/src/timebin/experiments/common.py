from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .. import fock
from ..detection import IDEAL, ClickPattern, DetectorConfig, click_distribution, frequencies, sample_clicks
from ..errors import ConfigError

EXACT, MONTECARLO = "exact", "montecarlo"
MODES = (EXACT, MONTECARLO)


def normalize_mode(mode: str) -> str:
    m = {"mc": MONTECARLO, "montecarlo": MONTECARLO, "exact": EXACT}.get(str(mode).lower())
    if m is None:
        raise ConfigError("mode", f"expected exact|mc|montecarlo, got {mode!r}")
    return m


@dataclass
class ScenarioResult:
    scenario: str
    parameters: dict
    metrics: dict
    per_outcome: list
    seed: int | None = None
    trials: int | None = None
    mode: str = EXACT
    warnings: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "seed": self.seed,
            "trials": self.trials,
            "parameters": self.parameters,
            "metrics": {k: _finite(v) for k, v in self.metrics.items()},
            "per_outcome": [{k: _finite(v) for k, v in row.items()} for row in self.per_outcome],
            "warnings": list(self.warnings),
        }


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def ratio(num: float, den: float) -> float:
    return num / den if den > 0 else math.nan


def resolve_detectors(names, detectors) -> dict[str, DetectorConfig]:
    """Accept None (ideal), one DetectorConfig for all, or a name->config map
    (a ``"default"`` entry fills unnamed detectors)."""
    if detectors is None:
        return {n: IDEAL for n in names}
    if isinstance(detectors, DetectorConfig):
        return {n: detectors for n in names}
    unknown = set(detectors) - set(names) - {"default"}
    if unknown:
        raise ConfigError("detectors", f"unknown detector(s) {sorted(unknown)}; expected {sorted(names)}")
    default = detectors.get("default", IDEAL)
    return {n: detectors.get(n, default) for n in names}


@dataclass
class Setup:
    """Prepared state plus the detection stage that reads it out."""

    state: fock.MixedState
    detectors: Mapping[str, DetectorConfig]
    wiring: Mapping[str, str | None]
    bins: tuple

    def ideal(self) -> dict:
        return fock.outcome_distribution(self.state, self.state.modes())

    def exact(self) -> dict[ClickPattern, float]:
        return click_distribution(self.ideal(), self.detectors, self.wiring, self.bins)

    def sample(self, trials: int, seed: int, workers: int = 1):
        return sample_clicks(self.state, self.detectors, trials, seed, self.wiring, self.bins, workers)

    def clicks(self, mode: str, trials: int | None = None, seed: int | None = None,
               workers: int = 1) -> dict[ClickPattern, float]:
        if mode == EXACT:
            return self.exact()
        if trials is None or seed is None:
            raise ValueError("Monte Carlo mode needs trials and seed")
        return frequencies(self.sample(trials, seed, workers))
