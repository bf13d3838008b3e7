import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timebin import fock
from timebin.components import coupler
from timebin.fock import Band, Element, FockError, FockState, Mode

from conftest import haar_unitary


def permanent(m):
    n = m.shape[0]
    if n == 0:
        return 1.0
    return sum(np.prod([m[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n)))


def oracle_amplitude(u, occ_in, occ_out):
    """<out|U|in> by the permanent formula, an independent route to the amplitudes."""
    cols = [i for i, n in enumerate(occ_in) for _ in range(n)]
    rows = [j for j, n in enumerate(occ_out) for _ in range(n)]
    sub = u[np.ix_(rows, cols)]
    norm = math.sqrt(np.prod([math.factorial(n) for n in occ_in]) * np.prod([math.factorial(n) for n in occ_out]))
    return permanent(sub) / norm


def basis(modes, occ):
    return FockState({fock.make_key({m: n for m, n in zip(modes, occ) if n}): 1.0})


def occupations(m, n):
    for combo in itertools.combinations_with_replacement(range(m), n):
        yield tuple(combo.count(i) for i in range(m))


def test_vacuum_and_create():
    v = fock.vacuum()
    assert v.terms == {(): 1.0}
    a = Mode("a")
    two = fock.create(fock.create(v, a), a)
    assert two.amplitude(fock.make_key({a: 2})) == pytest.approx(math.sqrt(2))


def test_create_beyond_cutoff_raises():
    s = fock.vacuum(cutoff=1)
    s = fock.create(s, Mode("a"))
    with pytest.raises(FockError):
        fock.create(s, Mode("b"))


def test_mode_rejects_far_timebin():
    with pytest.raises(FockError):
        Mode("a", fock.MAX_TIMEBIN + 1)


def test_key_is_canonical_under_insertion_order():
    ms = [Mode("x", 2), Mode("a", 0), Mode("p", 1, Band.PUMP)]
    k1 = fock.make_key({m: 1 for m in ms})
    k2 = fock.make_key({m: 1 for m in reversed(ms)})
    assert k1 == k2
    assert [m for m, _ in k1][0].band == Band.PUMP


def test_state_is_immutable():
    s = fock.vacuum()
    with pytest.raises(TypeError):
        s.terms[()] = 2.0


def test_hom_dip_has_no_coincidences():
    a, b, c, d = (Mode(x) for x in "abcd")
    out = fock.apply_element(fock.product_state([a, b]), coupler("a", "b", "c", "d", 0.5, bins=[0]))
    dist = fock.outcome_distribution(out, [c, d])
    assert dist.get(fock.make_key({c: 1, d: 1}), 0.0) <= 1e-12
    assert dist[fock.make_key({c: 2})] == pytest.approx(0.5, abs=1e-12)
    assert dist[fock.make_key({d: 2})] == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_amplitudes_match_permanent_oracle(n):
    modes = [Mode(x) for x in "abc"]
    u = haar_unitary(3, seed=n)
    elem = Element(modes, modes, u)
    for occ_in in occupations(3, n):
        out = fock.apply_element(basis(modes, occ_in), elem)
        for occ_out in occupations(3, n):
            key = fock.make_key({m: k for m, k in zip(modes, occ_out) if k})
            assert out.amplitude(key) == pytest.approx(oracle_amplitude(u, occ_in, occ_out), abs=1e-10)


occ_strategy = st.lists(st.integers(0, 2), min_size=3, max_size=3).filter(lambda o: 0 < sum(o) <= 4)


@settings(max_examples=60, deadline=None)
@given(occ=occ_strategy, seed=st.integers(0, 10_000))
def test_unitary_preserves_norm(occ, seed):
    modes = [Mode(x) for x in "abc"]
    out = fock.apply_element(basis(modes, occ), Element(modes, modes, haar_unitary(3, seed)))
    assert out.norm2 == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(occ=occ_strategy, seed=st.integers(0, 10_000))
def test_adjoint_undoes_element(occ, seed):
    modes = [Mode(x) for x in "abc"]
    start = basis(modes, occ)
    elem = Element(modes, modes, haar_unitary(3, seed))
    back = fock.apply_element(fock.apply_element(start, elem), elem.adjoint())
    assert back.allclose(start, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(-10, 10), seed=st.integers(0, 1000))
def test_global_phase_leaves_probabilities(theta, seed):
    modes = [Mode(x) for x in "abc"]
    s = fock.superpose([(0.6, basis(modes, (1, 1, 0))), (0.8j, basis(modes, (0, 0, 2)))])
    elem = Element(modes, modes, haar_unitary(3, seed))
    p1 = fock.outcome_distribution(fock.apply_element(s, elem), modes)
    p2 = fock.outcome_distribution(fock.apply_element(fock.global_phase(s, theta), elem), modes)
    assert set(p1) == set(p2)
    for k in p1:
        assert p1[k] == pytest.approx(p2[k], abs=1e-12)


def test_element_rejects_non_isometry():
    with pytest.raises(FockError):
        Element([Mode("a")], [Mode("b")], np.array([[2.0]]))


def test_untouched_mode_collision_raises():
    s = fock.product_state([Mode("a"), Mode("b")])
    with pytest.raises(FockError):
        fock.apply_element(s, Element([Mode("a")], [Mode("b")], np.eye(1)))


def test_outcome_distribution_requires_all_occupied_modes():
    s = fock.product_state([Mode("a"), Mode("b")])
    with pytest.raises(FockError):
        fock.outcome_distribution(s, [Mode("a")])


def test_partition_probabilities_sum_to_one():
    a, b, c, d = (Mode(x) for x in "abcd")
    out = fock.apply_element(fock.product_state([a, b]), coupler("a", "b", "c", "d", 0.3, bins=[0]))
    brs = fock.partition(out, [c])
    assert sum(br.probability for br in brs) == pytest.approx(1.0, abs=1e-12)


def test_condition_on_impossible_outcome():
    a, b, c, d = (Mode(x) for x in "abcd")
    out = fock.apply_element(fock.product_state([a, b]), coupler("a", "b", "c", "d", 0.5, bins=[0]))
    res = fock.condition_on(out, {c: 1}, [c])
    assert not res.possible and res.probability == 0.0


def test_condition_on_returns_normalized_remainder():
    a, b = Mode("a"), Mode("b")
    s = fock.superpose([(0.6, fock.product_state([a])), (0.8, fock.product_state([b]))])
    res = fock.condition_on(s, {a: 1})
    assert res.probability == pytest.approx(0.36)
    (w, rest), = list(res.state)
    assert w == pytest.approx(1.0) and rest.allclose(fock.vacuum())


def _fringe_weight(state, channel_bins):
    """Coherence |rho_{01}| between two single-photon kets, summed over the ensemble."""
    k0, k1 = (fock.make_key({Mode("x", t): 1}) for t in channel_bins)
    return abs(sum(w * s.amplitude(k0) * s.amplitude(k1).conjugate() for w, s in state))


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(0, 1))
def test_dephasing_scales_coherence_linearly(mu):
    s = fock.superpose([(1 / math.sqrt(2), fock.product_state([Mode("x", 0)])),
                        (cmath.exp(0.3j) / math.sqrt(2), fock.product_state([Mode("x", 1)]))])
    full = _fringe_weight(fock.as_mixed(s), (0, 1))
    assert _fringe_weight(fock.dephase_timebins(s, mu, {"x"}), (0, 1)) == pytest.approx(mu * full, abs=1e-12)


def test_dephasing_keeps_populations():
    s = fock.superpose([(0.6, fock.product_state([Mode("x", 0)])), (0.8, fock.product_state([Mode("x", 1)]))])
    before = fock.outcome_distribution(s, s.modes())
    after = fock.outcome_distribution(fock.dephase_timebins(s, 0.3, {"x"}), s.modes())
    assert before == pytest.approx(after)


def test_mixed_state_rejects_bad_weights():
    with pytest.raises(FockError):
        fock.MixedState([(0.5, fock.vacuum())])


def test_tensor_rejects_shared_modes():
    s = fock.product_state([Mode("a")])
    with pytest.raises(FockError):
        fock.tensor(s, s)


def test_fidelity_of_state_with_itself():
    s = fock.superpose([(0.6, fock.product_state([Mode("a")])), (0.8j, fock.product_state([Mode("b")]))])
    assert fock.fidelity(s, s) == pytest.approx(1.0, abs=1e-12)
