"""Passive two-basis key distribution with one analyzer per side.

Key map: in the time basis (short or long arrival on both sides) the bit is
short -> 0, long -> 1. In the medium basis the bit is the index of the
detector that fired (0 for the transmit port, 1 for the reflect port).
Events where a side has zero or several clicks are discarded.
"""

from __future__ import annotations

import math
from collections import defaultdict

from .. import fock
from ..components import AnalyzerConfig, SourceConfig, analyzer_device, twin_photon_source
from ..detection import LONG, MEDIUM, SHORT, CoincidenceRule
from ..errors import ConfigError
from .common import EXACT, ScenarioResult, Setup, ratio, resolve_detectors

DETECTORS = ("A0", "A1", "B0", "B1")
WIRING = {"alice.T": "A0", "alice.R": "A1", "bob.T": "B0", "bob.R": "B1"}
INVALID = "invalid"


def qkd_setup(source: SourceConfig, alice: AnalyzerConfig, bob: AnalyzerConfig, detectors=None) -> Setup:
    for name, an in (("alice", alice), ("bob", bob)):
        if an.delay_bins != source.delay_bins:
            raise ConfigError(f"{name}.delay_bins", "analyzer delay must equal the source delay")
    state = twin_photon_source(source, "alice", "bob")
    elems = analyzer_device(alice, "alice", "alice.T", "alice.R")
    elems += analyzer_device(bob, "bob", "bob.T", "bob.R")
    return Setup(fock.apply_elements(state, elems), resolve_detectors(DETECTORS, detectors), WIRING,
                 tuple(range(2 * source.delay_bins + 1)))


def side_event(pattern, detectors, rule: CoincidenceRule):
    """(tag, detector index) for a side with exactly one click, else None."""
    hits = [(i, b) for i, d in enumerate(detectors) for b, n in pattern.detector(d) for _ in range(n)]
    if len(hits) != 1:
        return None
    i, b = hits[0]
    return rule.tag(b), i


def outcome_table(clicks: dict, delay_bins: int = 1) -> list[dict]:
    rule = CoincidenceRule(("A0", "B0"), delay_bins=delay_bins)
    acc: dict[tuple, float] = defaultdict(float)
    for pat, p in clicks.items():
        a = side_event(pat, ("A0", "A1"), rule)
        b = side_event(pat, ("B0", "B1"), rule)
        a = a or (INVALID, -1)
        b = b or (INVALID, -1)
        acc[a + b] += p
    return [
        {"alice_tag": at, "alice_detector": ad, "bob_tag": bt, "bob_detector": bd, "probability": p}
        for (at, ad, bt, bd), p in sorted(acc.items())
    ]


def qkd_metrics(rows: list[dict]) -> dict:
    """All QKD metrics are recomputed from the per-outcome table alone."""
    time_ok = time_err = med_ok = med_err = 0.0
    bit = {SHORT: 0, LONG: 1}
    for r in rows:
        at, bt, p = r["alice_tag"], r["bob_tag"], r["probability"]
        if at in bit and bt in bit:
            if bit[at] == bit[bt]:
                time_ok += p
            else:
                time_err += p
        elif at == MEDIUM and bt == MEDIUM:
            if r["alice_detector"] == r["bob_detector"]:
                med_ok += p
            else:
                med_err += p
    p_time, p_med = time_ok + time_err, med_ok + med_err
    q_time, q_med = ratio(time_err, p_time), ratio(med_err, p_med)
    return {
        "time_fraction": p_time,
        "medium_fraction": p_med,
        "sifted_fraction": p_time + p_med,
        "qber_time": q_time,
        "qber_medium": q_med,
        "qber": ratio(time_err + med_err, p_time + p_med),
        "time_correlation": 1 - 2 * q_time,
        "medium_correlation": 1 - 2 * q_med,
    }


def run_qkd(source: SourceConfig = SourceConfig(), alice: AnalyzerConfig | None = None,
            bob: AnalyzerConfig | None = None, detectors=None, trials: int | None = None,
            seed: int | None = None, mode: str = EXACT, workers: int = 1) -> ScenarioResult:
    alice = AnalyzerConfig(delay_bins=source.delay_bins) if alice is None else alice
    bob = AnalyzerConfig(delay_bins=source.delay_bins) if bob is None else bob
    setup = qkd_setup(source, alice, bob, detectors)
    rows = outcome_table(setup.clicks(mode, trials, seed, workers), source.delay_bins)
    metrics = qkd_metrics(rows)
    metrics["phase_sum"] = source.phi + alice.phase + bob.phase
    if mode != EXACT:
        n_time = metrics["time_fraction"] * trials
        n_med = metrics["medium_fraction"] * trials
        for name, n in (("qber_time", n_time), ("qber_medium", n_med)):
            q = metrics[name]
            metrics[name + "_sigma"] = math.sqrt(q * (1 - q) / n) if n > 0 and math.isfinite(q) else math.nan
    params = {
        "source": source.to_dict(), "alice": alice.to_dict(), "bob": bob.to_dict(),
        "detectors": {k: v.to_dict() for k, v in setup.detectors.items()},
    }
    return ScenarioResult("qkd", params, metrics, rows, seed, trials, mode)
