"""Three-photon GHZ post-selection with one analyzer detector removed."""

from __future__ import annotations

import cmath
import math

from .. import fock
from ..components import SourceConfig, ghz_target, twin_photon_source
from ..fock import Mode
from . import bsa
from .common import EXACT, ScenarioResult, Setup, resolve_detectors

DETECTORS = ("D1", "port", "bob", "charly")
WIRING = {bsa.OUT_C: "D1", bsa.OUT_D: "port", "bob": "bob", "charly": "charly"}
TARGET_CHANNELS = ("charly", bsa.OUT_D, "bob")


def convention_phase(source_b: SourceConfig, source_c: SourceConfig) -> float:
    """Relative phase of the heralded GHZ state under the coupler convention.

    Herald terms pick up i*i from two cross-couplings in one branch and 1*1 in
    the other, hence the offset of pi on top of the source phases.
    """
    return float((math.pi + source_c.phi - source_b.phi) % (2 * math.pi))


def ghz_setup(source_b: SourceConfig, source_c: SourceConfig, detectors=None) -> Setup:
    b = twin_photon_source(source_b, "bob", bsa.IN_A, pump_channel="pumpB")
    c = twin_photon_source(source_c, bsa.IN_B, "charly", pump_channel="pumpC")
    state = fock.apply_elements(fock.tensor_mixed(b, c), [bsa.bsa_coupler()])
    top = max(source_b.delay_bins, source_c.delay_bins)
    return Setup(state, resolve_detectors(DETECTORS, detectors), WIRING, tuple(range(top + 1)))


def heralded(pattern) -> bool:
    """Short click at the kept detector and a click in each of the three output ports."""
    return 0 in pattern.bins("D1") and all(pattern.bins(p) for p in ("port", "bob", "charly"))


def heralded_state(setup: Setup):
    """Exact post-selection: one photon in the short bin of the kept detector's
    port, nothing else there, and one photon in each remaining port."""
    c_modes = {m for m in setup.state.modes() if m.channel == bsa.OUT_C} | {Mode(bsa.OUT_C, 0)}
    cond = fock.condition_on(setup.state, {Mode(bsa.OUT_C, 0): 1}, modes=c_modes)
    if not cond.possible:
        return cond

    def one_each(key):
        counts = {ch: 0 for ch in TARGET_CHANNELS}
        for m, n in key:
            counts[m.channel] = counts.get(m.channel, 0) + n
        return all(counts[ch] == 1 for ch in TARGET_CHANNELS)

    proj = fock.project(cond.state, one_each)
    return fock.Conditioned(proj.state, cond.probability * proj.probability)


def relative_phase(state, d1: int, d2: int) -> float:
    """Phase of the second target term relative to the first, from the ensemble coherence."""
    keys = list(ghz_target(TARGET_CHANNELS, d1, d2, 0.0).terms)
    k1 = next(k for k in keys if Mode("charly", 0) in dict(k))
    k2 = next(k for k in keys if k != k1)
    coh = sum(w * s.amplitude(k1).conjugate() * s.amplitude(k2) for w, s in fock.as_mixed(state))
    return float(cmath.phase(coh) % (2 * math.pi)) if abs(coh) > 1e-14 else math.nan


def run_ghz(source_b: SourceConfig = SourceConfig(delay_bins=1), source_c: SourceConfig = SourceConfig(delay_bins=2),
            detectors=None, trials: int | None = None, seed: int | None = None, mode: str = EXACT,
            workers: int = 1) -> ScenarioResult:
    d1, d2 = source_b.delay_bins, source_c.delay_bins
    warnings = []
    if d1 == d2:
        warnings.append("degenerate: equal source delays make long_1 = long_2; the target is not a GHZ state")
    setup = ghz_setup(source_b, source_c, detectors)
    clicks = setup.clicks(mode, trials, seed, workers)
    p_click = sum(p for pat, p in clicks.items() if heralded(pat))
    cond = heralded_state(setup)
    phase = convention_phase(source_b, source_c)
    metrics = {
        "postselection_probability": p_click,
        "postselection_probability_state": cond.probability,
        "convention_phase": phase,
        "degenerate": float(d1 == d2),
    }
    if cond.possible:
        metrics["fidelity"] = fock.fidelity(cond.state, ghz_target(TARGET_CHANNELS, d1, d2, phase))
        metrics["fidelity_plus_sign"] = fock.fidelity(cond.state, ghz_target(TARGET_CHANNELS, d1, d2, 0.0))
        metrics["relative_phase"] = relative_phase(cond.state, d1, d2)
    if mode != EXACT:
        metrics["postselection_sigma"] = math.sqrt(p_click * (1 - p_click) / trials)
    rows = [{"pattern": pat.label(), "heralded": heralded(pat), "probability": p} for pat, p in clicks.items()]
    params = {
        "source_b": source_b.to_dict(), "source_c": source_c.to_dict(),
        "detectors": {k: v.to_dict() for k, v in setup.detectors.items()},
        "target_channels": list(TARGET_CHANNELS),
    }
    return ScenarioResult("ghz", params, metrics, rows, seed, trials, mode, warnings)
