"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary
(see conftest.py). Run standalone with ``python3 tests/test_acceptance.py``.
"""

import math
import time
from pathlib import Path

import pytest

from timebin import cli, fock
from timebin.components import SourceConfig, coupler
from timebin.detection import DetectorConfig, derive_seed
from timebin.experiments import run_bsa_classification, run_eberhard, run_franson, run_ghz, run_qkd, run_swap
from timebin.fock import Element, Mode

from conftest import chi2_pvalue, haar_unitary

RESULTS: dict[str, tuple[bool, str]] = {}
CONFIGS = Path(__file__).parent.parent / "configs"


def record(name, checks):
    """checks: list of (ok, description). Stores one summary line and asserts."""
    ok = all(c for c, _ in checks)
    detail = "; ".join(f"{'ok' if c else 'FAIL'} {d}" for c, d in checks)
    RESULTS[name] = (ok, detail)
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def test_c1_franson_visibility():
    t0 = time.perf_counter()
    v1 = run_franson(SourceConfig(mu=1.0)).metrics
    elapsed = time.perf_counter() - t0
    v84 = run_franson(SourceConfig(mu=0.84)).metrics
    v95 = run_franson(SourceConfig(mu=0.95)).metrics
    record("C1 franson visibility", [
        (abs(v1["visibility"] - 1) <= 1e-9, f"V(mu=1)={v1['visibility']:.12f}"),
        (abs(v84["visibility"] - 0.84) <= 1e-3, f"V(mu=0.84)={v84['visibility']:.6f}"),
        (abs(v95["visibility"] - 0.95) <= 1e-9, f"V(mu=0.95)={v95['visibility']:.9f}"),
        (elapsed < 1.0, f"40-point scan {elapsed:.3f}s < 1s"),
    ])


def test_c2_qkd_correlations():
    t0 = time.perf_counter()
    ideal = run_qkd(SourceConfig(mu=1.0)).metrics
    mism = run_qkd(SourceConfig(mu=0.84)).metrics
    mc = run_qkd(SourceConfig(mu=0.84), trials=100_000, seed=11, mode="mc").metrics
    elapsed = time.perf_counter() - t0
    z_med = abs(mc["qber_medium"] - mism["qber_medium"]) / mc["qber_medium_sigma"]
    record("C2 qkd correlations", [
        (ideal["qber_time"] == 0.0 and mism["qber_time"] == 0.0, "time-basis QBER == 0"),
        (ideal["qber_medium"] == 0.0, f"medium QBER(mu=1)={ideal['qber_medium']!r}"),
        (abs(mism["qber_medium"] - 0.080) <= 1e-6, f"medium QBER(mu=0.84)={mism['qber_medium']:.9f}"),
        (z_med <= 4, f"MC medium QBER {mc['qber_medium']:.5f} within {z_med:.2f} sigma"),
        (mc["qber_time"] == 0.0, f"MC time QBER {mc['qber_time']!r}"),
        (elapsed < 5.0, f"runtime {elapsed:.2f}s < 5s"),
    ])


def test_c3_bell_analyzer_confusion():
    m = run_bsa_classification().metrics
    record("C3 bell analyzer", [
        (abs(m["P(psi+|psi+)"] - 1) <= 1e-12, f"P(psi+|psi+)={m['P(psi+|psi+)']:.12f}"),
        (abs(m["P(psi-|psi-)"] - 1) <= 1e-12, f"P(psi-|psi-)={m['P(psi-|psi-)']:.12f}"),
        (m["tv_phi+_phi-"] < 1e-10, f"TV(phi+,phi-)={m['tv_phi+_phi-']:.1e}"),
        (abs(m["conclusive_fraction"] - 0.5) <= 1e-10, f"conclusive={m['conclusive_fraction']:.12f}"),
    ])


def test_c4_entanglement_swapping():
    t0 = time.perf_counter()
    m = run_swap().metrics
    elapsed = time.perf_counter() - t0
    record("C4 entanglement swapping", [
        (abs(m["mean_fidelity"] - 1) <= 1e-9, f"fidelity={m['mean_fidelity']:.12f}"),
        (abs(m["chsh"] - 2 * math.sqrt(2)) <= 1e-6, f"S={m['chsh']:.9f}"),
        (elapsed < 5.0, f"runtime {elapsed:.2f}s < 5s"),
    ])


def test_c5_ghz_postselection():
    m = run_ghz(SourceConfig(delay_bins=1), SourceConfig(delay_bins=2)).metrics
    record("C5 ghz post-selection", [
        (abs(m["fidelity"] - 1) <= 1e-9, f"fidelity={m['fidelity']:.12f} at phase {m['convention_phase']:.6f}"),
        (m["postselection_probability"] > 0, f"P(herald)={m['postselection_probability']:.6f}"),
    ])


def test_c6_eberhard_scan():
    kw = cli.build_kwargs(cli.parse_config(CONFIGS / "eberhard.toml"))
    assert len(kw["eta_grid"]) == 10 and len(kw["efficiency_grid"]) == 20
    t0 = time.perf_counter()
    res = run_eberhard(**kw)
    elapsed = time.perf_counter() - t0
    crit = [res.metrics[f"critical_efficiency[eta={e}]"] for e in kw["eta_grid"]]
    target = 2 * (math.sqrt(2) - 1)
    record("C6 eberhard scan", [
        (abs(crit[0] - target) <= 2e-3, f"eta=0.5 critical={crit[0]:.5f} vs {target:.5f}"),
        (all(a >= b for a, b in zip(crit, crit[1:])), "monotone in decreasing eta"),
        (min(crit) <= 0.70, f"min critical={min(crit):.4f} <= 0.70"),
        (min(crit) > 2 / 3, "stays above 2/3"),
        (elapsed < 60.0, f"runtime {elapsed:.1f}s < 60s"),
    ])


def _chi2_all():
    from test_detection import SETUPS
    worst = 1.0
    for k, name in enumerate(sorted(SETUPS)):
        setup = SETUPS[name]()
        worst = min(worst, chi2_pvalue(setup.sample(100_000, derive_seed(77, k)), setup.exact(), 100_000))
    return worst


def test_c7_property_suites():
    modes = [Mode(x) for x in "abc"]
    norms = []
    for seed in range(20):
        start = fock.product_state([modes[0], modes[1], modes[1]])
        norms.append(fock.apply_element(start, Element(modes, modes, haar_unitary(3, seed))).norm2)
    norm_err = max(abs(n - 1) for n in norms)

    p_min = _chi2_all()

    hom = fock.apply_element(fock.product_state([Mode("a"), Mode("b")]), coupler("a", "b", "c", "d", bins=[0]))
    p_coinc = fock.outcome_distribution(hom, hom.modes()).get(fock.make_key({Mode("c"): 1, Mode("d"): 1}), 0.0)

    v_full = run_franson(SourceConfig(mu=1.0)).metrics["visibility"]
    lin_err = max(abs(run_franson(SourceConfig(mu=mu)).metrics["visibility"] - mu * v_full)
                  for mu in (0.2, 0.5, 0.84, 0.95))

    from test_detection import SETUPS
    phase_err = 0.0
    for name in sorted(SETUPS):
        setup = SETUPS[name]()
        base = setup.exact()
        setup.state = setup.state.map(lambda s: fock.global_phase(s, 1.234))
        rot = setup.exact()
        phase_err = max(phase_err, max(abs(base[k] - rot.get(k, 0.0)) for k in base))

    record("C7 property suites", [
        (norm_err <= 1e-10, f"norm error {norm_err:.1e}"),
        (p_min > 1e-3, f"min chi2 p-value {p_min:.3g} > 1e-3 over 5 scenarios"),
        (p_coinc <= 1e-12, f"HOM coincidence {p_coinc:.1e}"),
        (lin_err <= 1e-9, f"V(mu)-mu*V(1) max {lin_err:.1e}"),
        (phase_err <= 1e-12, f"global-phase max diff {phase_err:.1e}"),
    ])


def test_c8_determinism(tmp_path):
    cfg = CONFIGS / "qkd.toml"
    blobs = []
    for k, workers in enumerate((1, 1, 4)):
        out = tmp_path / f"run{k}"
        assert cli.main(["run", str(cfg), "--out", str(out), "--workers", str(workers)]) == 0
        blobs.append((out / "results.jsonl").read_bytes())
    franson_blobs = []
    for k, workers in enumerate((1, 3)):
        out = tmp_path / f"fr{k}"
        assert cli.main(["run", str(CONFIGS / "franson.toml"), "--mode", "mc", "--trials", "20000",
                         "--out", str(out), "--workers", str(workers)]) == 0
        franson_blobs.append((out / "results.jsonl").read_bytes() + (out / "franson_plot.csv").read_bytes())
    record("C8 determinism", [
        (blobs[0] == blobs[1], "qkd rerun identical"),
        (blobs[0] == blobs[2], "qkd workers=1 vs 4 identical"),
        (franson_blobs[0] == franson_blobs[1], "franson mc workers=1 vs 3 identical"),
    ])


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
