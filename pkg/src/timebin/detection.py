"""Photon counting: efficiency, dark counts, gating, deadtime and coincidences.

Detection is applied classically to the ideal photon-number distribution,
which is exact because every measurement here is diagonal in the occupation
basis. ``click_distribution`` enumerates the resulting click law exactly;
``sample_clicks`` draws from the same law with a counter-based RNG.

RNG scheme: trials are cut into blocks of ``BLOCK_SIZE``. Block ``b`` draws
from ``Philox(key=seed).jumped(b)``, so the sample multiset depends only on
``(seed, trials, configuration)`` and never on the number of workers.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from . import fock
from .errors import ConfigError, check_int, check_range
from .fock import Mode, OccKey

BLOCK_SIZE = 8192
SHORT, MEDIUM, LONG = "short", "medium", "long"

# illustrative defaults for the gating comparison, not measured values
UNGATED_EFFICIENCY = 0.05
GATED_EFFICIENCY = 0.25


@dataclass(frozen=True)
class DetectorConfig:
    efficiency: float = 1.0
    dark_prob: float = 0.0
    gate_bins: frozenset = frozenset()
    deadtime_bins: int = 0
    resolving: bool = False

    def __post_init__(self):
        check_range("efficiency", self.efficiency, 0.0, 1.0)
        check_range("dark_prob", self.dark_prob, 0.0, 1.0, hi_open=True)
        check_int("deadtime_bins", self.deadtime_bins, 0)
        gates = frozenset(self.gate_bins)
        for b in gates:
            check_int("gate_bins", b)
        object.__setattr__(self, "gate_bins", gates)
        if not isinstance(self.resolving, bool):
            raise ConfigError("resolving", f"expected true/false, got {self.resolving!r}")

    def accepts(self, timebin: int) -> bool:
        return not self.gate_bins or timebin in self.gate_bins

    def dark_bins(self, universe: Iterable[int]) -> tuple[int, ...]:
        return tuple(sorted(self.gate_bins or universe))

    def to_dict(self):
        d = asdict(self)
        d["gate_bins"] = sorted(self.gate_bins)
        return d


IDEAL = DetectorConfig()


@dataclass(frozen=True, order=True)
class ClickPattern:
    """Per-detector click record: ``((detector, ((bin, count), ...)), ...)``.

    Every configured detector appears, silent ones with an empty tuple.
    """

    clicks: tuple = ()

    @classmethod
    def from_counts(cls, counts: Mapping[str, Mapping[int, int]], detectors: Iterable[str]) -> "ClickPattern":
        rows = []
        for det in sorted(detectors):
            per = counts.get(det, {})
            rows.append((det, tuple(sorted((b, n) for b, n in per.items() if n > 0))))
        return cls(tuple(rows))

    def detector(self, name: str) -> tuple:
        for det, bins in self.clicks:
            if det == name:
                return bins
        raise KeyError(name)

    def bins(self, name: str) -> tuple[int, ...]:
        return tuple(b for b, _ in self.detector(name))

    def total(self, name: str) -> int:
        return sum(n for _, n in self.detector(name))

    def label(self) -> str:
        parts = []
        for det, bins in self.clicks:
            body = ",".join(f"{b}" if n == 1 else f"{b}x{n}" for b, n in bins) or "-"
            parts.append(f"{det}:{body}")
        return " ".join(parts)


def _wire(key: OccKey, wiring: Mapping[str, str | None] | None) -> dict[str, dict[int, int]]:
    counts: dict[str, dict[int, int]] = defaultdict(lambda: defaultdict(int))
    for mode, n in key:
        det = mode.channel if wiring is None else wiring.get(mode.channel, mode.channel)
        if det is None:
            continue
        counts[det][mode.timebin] += n
    return counts


def _post_map(bins: tuple, cfg: DetectorConfig) -> tuple:
    """Deadtime suppression, then the click/no-click reduction."""
    out = []
    last = None
    for b, n in bins:
        if cfg.deadtime_bins and last is not None and b - last <= cfg.deadtime_bins:
            continue
        out.append((b, n if cfg.resolving else 1))
        last = b
    return tuple(out)


@lru_cache(maxsize=4096)
def _detector_law(photons: tuple, cfg: DetectorConfig, universe: tuple) -> tuple:
    """Exact click law of one detector given ``((bin, photons), ...)``."""
    occupied = dict(photons)
    bins = sorted(set(occupied) | set(cfg.dark_bins(universe)))
    dark_set = set(cfg.dark_bins(universe))
    per_bin = []
    for b in bins:
        n = occupied.get(b, 0) if cfg.accepts(b) else 0
        e = cfg.efficiency
        law = {k: math.comb(n, k) * e**k * (1 - e) ** (n - k) for k in range(n + 1)}
        if b in dark_set and cfg.dark_prob > 0:
            p = cfg.dark_prob
            mixed: dict[int, float] = defaultdict(float)
            for k, q in law.items():
                mixed[k] += q * (1 - p)
                mixed[k + 1] += q * p
            law = dict(mixed)
        per_bin.append([(b, k, q) for k, q in law.items() if q > 0])
    out: dict[tuple, float] = defaultdict(float)
    for combo in itertools.product(*per_bin):
        q = 1.0
        for _, _, qq in combo:
            q *= qq
        raw = tuple((b, k) for b, k, _ in combo if k > 0)
        out[_post_map(raw, cfg)] += q
    return tuple(sorted(out.items()))


def _check_detectors(dist_keys: Iterable[OccKey], detectors, wiring):
    for key in dist_keys:
        for det in _wire(key, wiring):
            if det not in detectors:
                raise ConfigError("detectors", f"no detector configured for {det!r}")


def click_distribution(dist: Mapping[OccKey, float], detectors: Mapping[str, DetectorConfig],
                       wiring: Mapping[str, str | None] | None = None,
                       bins: Iterable[int] = range(3)) -> dict[ClickPattern, float]:
    """Exact click-pattern law from an ideal outcome distribution.

    ``wiring`` maps channel names to detector names (``None`` drops the channel
    undetected; unlisted channels map to a detector of the same name). Dark
    counts occur in the detector's gate bins, or in ``bins`` when the gate is
    always open.
    """
    universe = tuple(sorted(bins))
    _check_detectors(dist, detectors, wiring)
    names = sorted(detectors)
    out: dict[ClickPattern, float] = defaultdict(float)
    for key, p in dist.items():
        if p == 0:
            continue
        counts = _wire(key, wiring)
        laws = [_detector_law(tuple(sorted(counts.get(d, {}).items())), detectors[d], universe) for d in names]
        for combo in itertools.product(*laws):
            q = p
            for _, qq in combo:
                q *= qq
            out[ClickPattern(tuple((d, c[0]) for d, c in zip(names, combo)))] += q
    return dict(sorted(out.items()))


def derive_seed(seed: int, *path: int) -> int:
    """Independent 128-bit key for a labelled sub-run (e.g. one scan point)."""
    words = np.random.SeedSequence([int(seed), *map(int, path)]).generate_state(2, np.uint64)
    return int(words[0]) | (int(words[1]) << 64)


class _Layout:
    """Slot table (detector, bin) used by the vectorized sampler."""

    def __init__(self, outcomes, detectors, wiring, universe):
        self.names = sorted(detectors)
        wired = [_wire(k, wiring) for k in outcomes]
        slots = []
        for d in self.names:
            cfg = detectors[d]
            seen = set(cfg.dark_bins(universe))
            for c in wired:
                seen |= set(c.get(d, {}))
            slots += [(d, b) for b in sorted(seen)]
        self.slots = slots
        index = {s: i for i, s in enumerate(slots)}
        self.counts = np.zeros((len(outcomes), len(slots)), dtype=np.int64)
        for r, c in enumerate(wired):
            for d, per in c.items():
                for b, n in per.items():
                    self.counts[r, index[(d, b)]] = n
        self.eff = np.array([detectors[d].efficiency if detectors[d].accepts(b) else 0.0 for d, b in slots])
        self.dark = np.array([detectors[d].dark_prob if b in set(detectors[d].dark_bins(universe)) else 0.0
                              for d, b in slots])
        self.groups = [(detectors[d], [i for i, s in enumerate(slots) if s[0] == d]) for d in self.names]


def _sample_block(layout: _Layout, cum: np.ndarray, n: int, key: int, block: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=key).jumped(block))
    idx = np.searchsorted(cum, rng.random(n), side="right")
    idx = np.minimum(idx, len(cum) - 1)
    photons = layout.counts[idx]
    detected = rng.binomial(photons, layout.eff)
    darks = rng.random(photons.shape) < layout.dark
    total = detected + darks
    for cfg, cols in layout.groups:
        if cfg.deadtime_bins:
            last = np.full(n, -(10**9))
            for i in cols:
                b = layout.slots[i][1]
                clicked = total[:, i] > 0
                blocked = clicked & (b - last <= cfg.deadtime_bins)
                total[blocked, i] = 0
                last = np.where(clicked & ~blocked, b, last)
        if not cfg.resolving:
            total[:, cols] = np.minimum(total[:, cols], 1)
    return total


def sample_clicks(state, detectors: Mapping[str, DetectorConfig], trials: int, seed: int,
                  wiring: Mapping[str, str | None] | None = None, bins: Iterable[int] = range(3),
                  workers: int = 1) -> Counter:
    """Draw ``trials`` i.i.d. click patterns; returns a Counter of ClickPattern."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    mixed = fock.as_mixed(state)
    dist = fock.outcome_distribution(mixed, mixed.modes())
    return sample_from_distribution(dist, detectors, trials, seed, wiring, bins, workers)


def sample_from_distribution(dist: Mapping[OccKey, float], detectors, trials: int, seed: int, wiring=None,
                             bins: Iterable[int] = range(3), workers: int = 1) -> Counter:
    universe = tuple(sorted(bins))
    _check_detectors(dist, detectors, wiring)
    outcomes = list(dist)
    probs = np.array([dist[k] for k in outcomes])
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {probs.sum()}, expected 1")
    cum = np.cumsum(probs / probs.sum())
    layout = _Layout(outcomes, detectors, wiring, universe)
    key = int(seed) % (1 << 128)
    sizes = [min(BLOCK_SIZE, trials - s) for s in range(0, trials, BLOCK_SIZE)]
    jobs = [(layout, cum, n, key, b) for b, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda a: _sample_block(*a), jobs))
    else:
        blocks = [_sample_block(*a) for a in jobs]
    rows, freq = np.unique(np.concatenate(blocks), axis=0, return_counts=True)
    out = Counter()
    for row, f in zip(rows, freq):
        counts: dict[str, dict[int, int]] = defaultdict(dict)
        for (d, b), n in zip(layout.slots, row):
            if n:
                counts[d][b] = int(n)
        out[ClickPattern.from_counts(counts, layout.names)] += int(f)
    return Counter(dict(sorted(out.items())))


def frequencies(samples: Counter) -> dict[ClickPattern, float]:
    total = sum(samples.values())
    return {p: n / total for p, n in sorted(samples.items())}


@dataclass(frozen=True)
class CoincidenceRule:
    """Coincidence between ``required`` detectors.

    ``fold`` counts the laser pulse as an extra party when it exceeds the
    number of required detectors (``fold == len(required) + 1``).
    """

    required: tuple
    window_bins: int = 0
    fold: int = 2
    reference_bin: int = 0
    delay_bins: int = 1

    def __post_init__(self):
        object.__setattr__(self, "required", tuple(self.required))
        check_int("window_bins", self.window_bins, 0)
        if self.fold not in (len(self.required), len(self.required) + 1):
            raise ConfigError("fold", f"fold {self.fold} incompatible with {len(self.required)} detectors")

    def tag(self, timebin: int) -> str:
        rel = timebin - self.reference_bin
        return {0: SHORT, self.delay_bins: MEDIUM, 2 * self.delay_bins: LONG}.get(rel, f"bin{rel}")


@dataclass(frozen=True)
class Coincidence:
    accepted: bool
    bins: tuple = ()
    tags: tuple = ()


def classify_coincidence(pattern: ClickPattern, rule: CoincidenceRule) -> Coincidence:
    """Accept when each required detector has a click and one click per
    detector can be chosen with all pairwise separations within the window.
    The earliest such choice is reported."""
    options = []
    for det in rule.required:
        b = pattern.bins(det)
        if not b:
            return Coincidence(False)
        options.append(b)
    for combo in itertools.product(*options):
        if max(combo) - min(combo) <= rule.window_bins:
            return Coincidence(True, combo, tuple(rule.tag(b) for b in combo))
    return Coincidence(False)


def click_rate(dist: Mapping[ClickPattern, float], detector: str) -> float:
    """Probability that ``detector`` registers at least one click."""
    return float(sum(p for pat, p in dist.items() if pat.detector(detector)))
