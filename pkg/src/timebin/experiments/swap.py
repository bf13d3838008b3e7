"""Entanglement swapping between two synchronized twin-photon sources."""

from __future__ import annotations

from collections import defaultdict

from .. import fock
from ..components import SourceConfig, bell_state, twin_photon_source
from ..detection import click_distribution
from ..errors import ConfigError
from . import bsa
from .bell import max_chsh, qubit_density
from .common import EXACT, ScenarioResult, Setup, resolve_detectors

OUTER = ("bob", "charly")
WIRING = {**bsa.WIRING, "bob": None, "charly": None}


def source_pair(source_b: SourceConfig, source_c: SourceConfig, order: int = 1) -> fock.MixedState:
    """Both sources with their inner photons entering the analyzer coupler."""
    b = twin_photon_source(source_b, "bob", bsa.IN_A, pump_channel="pumpB", order=order)
    c = twin_photon_source(source_c, bsa.IN_B, "charly", pump_channel="pumpC", order=order)
    return fock.apply_elements(fock.tensor_mixed(b, c), [bsa.bsa_coupler()])


def condition_on_clicks(setup: Setup, channels) -> dict:
    """Click pattern -> Conditioned state of the unmeasured modes.

    The detection law is applied to each photon-number branch of ``channels``,
    so losses and dark counts turn the conditional state into an ensemble.
    """
    chans = set(channels)
    measured = {m for m in setup.state.modes() if m.channel in chans}
    prob: dict = defaultdict(float)
    parts: dict = defaultdict(list)
    for br in fock.partition(setup.state, measured):
        law = click_distribution({br.pattern: 1.0}, setup.detectors, setup.wiring, setup.bins)
        for pat, q in law.items():
            w = br.probability * q
            if w > 0:
                prob[pat] += w
                parts[pat].append((w, br.state))
    out = {}
    for pat in sorted(prob):
        p = prob[pat]
        out[pat] = fock.Conditioned(fock.mixture((w / p, s) for w, s in parts[pat]), p)
    return out


def swap_setup(source_b: SourceConfig, source_c: SourceConfig, detectors=None, order: int = 1) -> Setup:
    if source_b.delay_bins != source_c.delay_bins:
        raise ConfigError("source_c.delay_bins", "swapping needs synchronized sources with equal delays")
    return Setup(source_pair(source_b, source_c, order), resolve_detectors(bsa.DETECTORS, detectors), WIRING,
                 tuple(range(source_b.delay_bins + 1)))


def run_swap(source_b: SourceConfig = SourceConfig(), source_c: SourceConfig = SourceConfig(), detectors=None,
             trials: int | None = None, seed: int | None = None, order: int = 1, mode: str = EXACT,
             workers: int = 1) -> ScenarioResult:
    """BSA on the inner photons; fidelity and CHSH of the heralded outer pair.

    Fidelities and CHSH values always come from the exact conditional state;
    in Monte Carlo mode only the outcome frequencies are sampled.
    """
    setup = swap_setup(source_b, source_c, detectors, order)
    d = source_b.delay_bins
    conditioned = condition_on_clicks(setup, (bsa.OUT_C, bsa.OUT_D))
    observed = setup.clicks(mode, trials, seed, workers)
    rows = []
    success = fid_sum = chsh_sum = exact_success = 0.0
    per_label = defaultdict(lambda: [0.0, 0.0])
    for pat in sorted(set(conditioned) | set(observed)):
        label = bsa.classify(pat, d)
        p = observed.get(pat, 0.0)
        row = {"pattern": pat.label(), "label": label, "probability": p}
        cond = conditioned.get(pat)
        if label in bsa.CONCLUSIVE and cond is not None and cond.possible:
            f = fock.fidelity(cond.state, bell_state(label, *OUTER, delay=d))
            rho, _ = qubit_density(cond.state, *OUTER, bins_a=(0, d), bins_b=(0, d))
            s, _ = max_chsh(rho)
            row.update(fidelity=f, chsh=s)
            pe = cond.probability
            exact_success += pe
            fid_sum += pe * f
            chsh_sum += pe * s
            per_label[label][0] += pe
            per_label[label][1] += pe * f
            success += p
        rows.append(row)
    metrics = {
        "success_probability": success,
        "mean_fidelity": fid_sum / exact_success if exact_success else float("nan"),
        "chsh": chsh_sum / exact_success if exact_success else float("nan"),
    }
    for label, (pe, fs) in sorted(per_label.items()):
        metrics[f"fidelity[{label}]"] = fs / pe
    params = {
        "source_b": source_b.to_dict(), "source_c": source_c.to_dict(), "order": order,
        "detectors": {k: v.to_dict() for k, v in setup.detectors.items()},
    }
    return ScenarioResult("swap", params, metrics, rows, seed, trials, mode)
