"""Two-photon interference with both twin photons sent through one analyzer."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .. import fock
from ..components import AnalyzerConfig, SourceConfig, analyzer_device, twin_photon_source
from ..detection import CoincidenceRule, classify_coincidence, derive_seed
from ..errors import ConfigError
from .common import EXACT, ScenarioResult, Setup, resolve_detectors

DETECTORS = ("D1", "D2")
WIRING = {"signal.T": "D1", "idler.T": "D1", "signal.R": "D2", "idler.R": "D2"}


def default_phases(n: int = 40) -> list[float]:
    return list(np.linspace(0.0, 2 * math.pi, n, endpoint=False))


def franson_setup(source: SourceConfig, analyzer: AnalyzerConfig, detectors=None) -> Setup:
    if analyzer.delay_bins != source.delay_bins:
        raise ConfigError("analyzer.delay_bins",
                          f"analyzer delay {analyzer.delay_bins} differs from source delay {source.delay_bins}")
    state = twin_photon_source(source, "signal", "idler")
    elems = analyzer_device(analyzer, "signal", "signal.T", "signal.R")
    elems += analyzer_device(analyzer, "idler", "idler.T", "idler.R")
    state = fock.apply_elements(state, elems)
    return Setup(state, resolve_detectors(DETECTORS, detectors), WIRING,
                 tuple(range(2 * source.delay_bins + 1)))


def coincidence_rate(clicks: dict, rule: CoincidenceRule) -> float:
    """Probability of a D1-D2 coincidence with both clicks in the medium bin."""
    total = 0.0
    for pat, p in clicks.items():
        c = classify_coincidence(pat, rule)
        if c.accepted and c.tags == ("medium", "medium"):
            total += p
    return total


def fringe_visibility(rates) -> float:
    hi, lo = max(rates), min(rates)
    return (hi - lo) / (hi + lo) if hi + lo > 0 else math.nan


def fit_visibility(phases, rates, harmonic: int = 2) -> float:
    """Least-squares fit of a + b cos(k x) + c sin(k x); returns sqrt(b^2 + c^2)/a."""
    x = np.asarray(phases, dtype=float)
    design = np.column_stack([np.ones_like(x), np.cos(harmonic * x), np.sin(harmonic * x)])
    (a, b, c), *_ = np.linalg.lstsq(design, np.asarray(rates, dtype=float), rcond=None)
    return float(math.hypot(b, c) / a) if a > 0 else math.nan


def run_franson(source: SourceConfig = SourceConfig(), phases=None, analyzer: AnalyzerConfig | None = None,
                detectors=None, trials: int | None = None, seed: int | None = None, mode: str = EXACT,
                workers: int = 1) -> ScenarioResult:
    """Phase scan of the shared analyzer; reports fringe visibility of medium-medium coincidences."""
    phases = default_phases() if phases is None else list(phases)
    analyzer = AnalyzerConfig(delay_bins=source.delay_bins) if analyzer is None else analyzer
    rule = CoincidenceRule(DETECTORS, window_bins=0, fold=3, delay_bins=source.delay_bins)
    rates, sigmas = [], []
    for k, phase in enumerate(phases):
        setup = franson_setup(source, replace(analyzer, phase=float(phase)), detectors)
        sub_seed = None if seed is None else derive_seed(seed, k)
        r = coincidence_rate(setup.clicks(mode, trials, sub_seed, workers), rule)
        rates.append(r)
        sigmas.append(math.sqrt(r * (1 - r) / trials) if mode != EXACT else 0.0)
    fit_v = fit_visibility(phases, rates)
    rows = [{"phase": float(p), "coincidence_rate": r, "fit_visibility": fit_v}
            for p, r in zip(phases, rates)]
    if mode != EXACT:
        for row, s in zip(rows, sigmas):
            row["sigma"] = s
    metrics = {
        "visibility": fringe_visibility(rates),
        "fit_visibility": fit_v,
        "max_rate": max(rates),
        "min_rate": min(rates),
    }
    params = {
        "source": source.to_dict(), "analyzer": analyzer.to_dict(),
        "detectors": {k: v.to_dict() for k, v in resolve_detectors(DETECTORS, detectors).items()},
        "phases": [float(p) for p in phases],
    }
    return ScenarioResult("franson", params, metrics, rows, seed, trials, mode)
