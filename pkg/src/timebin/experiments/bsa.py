"""Linear-optics Bell-state analysis: one 50/50 coupler and two detectors."""

from __future__ import annotations

from collections import defaultdict
from functools import lru_cache

from .. import fock
from ..components import BELL_LABELS, bell_state, coupler
from ..detection import IDEAL, ClickPattern, click_distribution, derive_seed
from .common import EXACT, ScenarioResult, Setup, resolve_detectors

IN_A, IN_B = "bsa.a", "bsa.b"
OUT_C, OUT_D = "bsa.c", "bsa.d"
DETECTORS = ("D1", "D2")
WIRING = {OUT_C: "D1", OUT_D: "D2"}
PSI_PLUS, PSI_MINUS, PHI_SS, PHI_LL, INCONCLUSIVE = "psi+", "psi-", "phi_ss", "phi_ll", "inconclusive"
LABELS = (PSI_PLUS, PSI_MINUS, PHI_SS, PHI_LL, INCONCLUSIVE)
CONCLUSIVE = (PSI_PLUS, PSI_MINUS)


def bsa_coupler():
    return coupler(IN_A, IN_B, OUT_C, OUT_D, 0.5)


@lru_cache(maxsize=None)
def outcome_map(delay: int = 1) -> dict[ClickPattern, str]:
    """Click pattern -> label, generated by enumerating every Bell input.

    A pattern reached by exactly one Bell state is labelled with it. Patterns
    shared only by phi+ and phi- are labelled by their time tag. Anything else
    is left out and so reads as inconclusive.
    """
    ideal = {d: IDEAL for d in DETECTORS}
    sources: dict[ClickPattern, set] = defaultdict(set)
    for which in BELL_LABELS:
        out = fock.apply_element(bell_state(which, IN_A, IN_B, delay), bsa_coupler())
        dist = fock.outcome_distribution(out, out.modes())
        for pat, p in click_distribution(dist, ideal, WIRING, range(delay + 1)).items():
            if p > 1e-12:
                sources[pat].add(which)
    table = {}
    for pat, src in sorted(sources.items()):
        if len(src) == 1 and next(iter(src)) in (PSI_PLUS, PSI_MINUS):
            table[pat] = next(iter(src))
        elif src <= {"phi+", "phi-"}:
            bins = {b for d in DETECTORS for b in pat.bins(d)}
            if bins == {0}:
                table[pat] = PHI_SS
            elif bins == {delay}:
                table[pat] = PHI_LL
    return table


def classify(pattern: ClickPattern, delay: int = 1) -> str:
    return outcome_map(delay).get(pattern, INCONCLUSIVE)


def bsa_setup(which: str, detectors=None, delay: int = 1) -> Setup:
    state = fock.apply_element(bell_state(which, IN_A, IN_B, delay), bsa_coupler())
    return Setup(fock.as_mixed(state), resolve_detectors(DETECTORS, detectors), WIRING, tuple(range(delay + 1)))


def label_distribution(clicks: dict, delay: int = 1) -> dict[str, float]:
    acc = {label: 0.0 for label in LABELS}
    for pat, p in clicks.items():
        acc[classify(pat, delay)] += p
    return acc


def run_bsa_classification(inputs=BELL_LABELS, detectors=None, trials: int | None = None,
                           seed: int | None = None, mode: str = EXACT, workers: int = 1) -> ScenarioResult:
    """Confusion table of the analyzer over the given Bell-state inputs."""
    inputs = (inputs,) if isinstance(inputs, str) else tuple(inputs)
    rows, table = [], {}
    for k, which in enumerate(inputs):
        setup = bsa_setup(which, detectors)
        sub = None if seed is None else derive_seed(seed, k)
        dist = label_distribution(setup.clicks(mode, trials, sub, workers))
        table[which] = dist
        rows += [{"input": which, "label": lab, "probability": p} for lab, p in dist.items()]
    metrics = {f"P({lab}|{w})": table[w][lab] for w in inputs for lab in LABELS}
    metrics["conclusive_fraction"] = sum(table[w][l] for w in inputs for l in CONCLUSIVE) / len(inputs)
    if "phi+" in table and "phi-" in table:
        metrics["tv_phi+_phi-"] = 0.5 * sum(abs(table["phi+"][l] - table["phi-"][l]) for l in LABELS)
    params = {"inputs": list(inputs),
              "detectors": {k: v.to_dict() for k, v in resolve_detectors(DETECTORS, detectors).items()}}
    return ScenarioResult("bsa", params, metrics, rows, seed, trials, mode)
