import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from timebin.fock import Mode


def haar_unitary(n, seed):
    return unitary_group.rvs(n, random_state=np.random.default_rng(seed))


def chi2_pvalue(counts, probs, trials, pool_below=5.0):
    """Pearson chi-square p-value; cells with expected count below ``pool_below`` are pooled."""
    from scipy.stats import chi2

    keys = set(probs) | set(counts)
    big, small_obs, small_exp = [], 0.0, 0.0
    for k in keys:
        e = probs.get(k, 0.0) * trials
        o = counts.get(k, 0)
        if e >= pool_below:
            big.append((o, e))
        else:
            small_obs += o
            small_exp += e
    if small_exp > 0:
        big.append((small_obs, small_exp))
    elif small_obs > 0:
        return 0.0
    stat = sum((o - e) ** 2 / e for o, e in big)
    dof = max(len(big) - 1, 1)
    return float(chi2.sf(stat, dof))


@pytest.fixture
def modes3():
    return [Mode("a"), Mode("b"), Mode("c")]


def close(a, b, tol):
    return math.isfinite(a) and abs(a - b) <= tol


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(RESULTS):
        ok, detail = RESULTS[name]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
