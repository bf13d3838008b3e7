"""Abstract time-bin analyzers, CHSH maximization and the Eberhard functional.

An abstract analyzer with setting ``(theta, delta)`` projects onto
``cos(theta)|short> + exp(i delta) sin(theta)|long>`` without the
interferometric post-selection loss of the three-bin device.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .. import fock
from ..fock import Mode

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def analyzer_vector(theta: float, delta: float = 0.0) -> np.ndarray:
    return np.array([math.cos(theta), np.exp(1j * delta) * math.sin(theta)])


def _observable(theta, delta):
    v = analyzer_vector(theta, delta)
    return 2 * np.outer(v, v.conj()) - np.eye(2)


def qubit_density(state, channel_a: str, channel_b: str, bins_a=(0, 1), bins_b=(0, 1)):
    """Two-qubit density matrix of the one-photon-per-channel part of ``state``.

    Returns ``(rho, weight)`` where ``weight`` is the ensemble probability of
    that subspace and ``rho`` is renormalized to unit trace (basis order
    ss, sl, ls, ll).
    """
    rho = np.zeros((4, 4), dtype=complex)
    for w, s in fock.as_mixed(state):
        vec = np.zeros(4, dtype=complex)
        for i, ta in enumerate(bins_a):
            for j, tb in enumerate(bins_b):
                key = fock.make_key({Mode(channel_a, ta): 1, Mode(channel_b, tb): 1})
                vec[2 * i + j] = s.amplitude(key)
        rho += w * np.outer(vec, vec.conj())
    weight = float(np.trace(rho).real)
    if weight <= 0:
        raise fock.FockError("state has no weight in the two-qubit subspace")
    return rho / weight, weight


def correlator(rho: np.ndarray, a: tuple, b: tuple) -> float:
    return float(np.trace(rho @ np.kron(_observable(*a), _observable(*b))).real)


def chsh_value(rho: np.ndarray, settings) -> float:
    a1, a2, b1, b2 = settings
    return (correlator(rho, a1, b1) + correlator(rho, a1, b2)
            + correlator(rho, a2, b1) - correlator(rho, a2, b2))


def horodecki_chsh(rho: np.ndarray) -> float:
    """Closed-form CHSH maximum from the correlation matrix."""
    t = np.array([[np.trace(rho @ np.kron(p, q)).real for q in PAULI] for p in PAULI])
    ev = np.sort(np.linalg.eigvalsh(t.T @ t))[::-1]
    return float(2 * math.sqrt(ev[0] + ev[1]))


def max_chsh(rho: np.ndarray, restarts: int = 8, seed: int = 0):
    """Numerically maximize CHSH over four abstract analyzer settings."""
    rng = np.random.default_rng(seed)

    def neg(x):
        s = [(x[2 * k], x[2 * k + 1]) for k in range(4)]
        return -chsh_value(rho, s)

    best = None
    for _ in range(restarts):
        res = minimize(neg, rng.uniform(-math.pi, math.pi, 8), method="BFGS", options={"gtol": 1e-10})
        if best is None or res.fun < best.fun:
            best = res
    settings = [(best.x[2 * k], best.x[2 * k + 1]) for k in range(4)]
    return -best.fun, settings


def source_qubit_state(eta: float, phi: float = 0.0) -> np.ndarray:
    """sqrt(1-eta)|ss> + sqrt(eta) e^{i phi} |ll> as a 4-vector."""
    return np.array([math.sqrt(1 - eta), 0, 0, math.sqrt(eta) * np.exp(1j * phi)])


def eberhard_parts(psi, thetas) -> tuple[float, float]:
    """Quantum CH combination and single-side marginals for ideal detection.

    Settings are real (``delta = 0``), which is optimal for the real-amplitude
    source states scanned here.
    """
    m00, m01, m10, m11 = (complex(x) for x in psi)
    ta1, ta2, tb1, tb2 = thetas
    ca1, sa1, ca2, sa2 = math.cos(ta1), math.sin(ta1), math.cos(ta2), math.sin(ta2)
    cb1, sb1, cb2, sb2 = math.cos(tb1), math.sin(tb1), math.cos(tb2), math.sin(tb2)

    def p11(ca, sa, cb, sb):
        return abs(ca * (cb * m00 + sb * m01) + sa * (cb * m10 + sb * m11)) ** 2

    def pa(c, s):
        return abs(c * m00 + s * m10) ** 2 + abs(c * m01 + s * m11) ** 2

    def pb(c, s):
        return abs(c * m00 + s * m01) ** 2 + abs(c * m10 + s * m11) ** 2

    q = (p11(ca1, sa1, cb1, sb1) + p11(ca2, sa2, cb1, sb1)
         + p11(ca1, sa1, cb2, sb2) - p11(ca2, sa2, cb2, sb2))
    return q, pa(ca1, sa1) + pb(cb1, sb1)


def eberhard_j(psi, efficiency: float, thetas) -> float:
    """J = P11(a1,b1)+P11(a2,b1)+P11(a1,b2)-P11(a2,b2)-P1(a1)-P1(b1).

    Undetected photons count as no-click on both sides.
    """
    q, m = eberhard_parts(psi, thetas)
    return efficiency**2 * q - efficiency * m


@dataclass
class JOptimum:
    j: float
    thetas: tuple
    converged: bool


def max_eberhard_j(psi, efficiency: float, restarts: int = 6, maxiter: int = 2000, seed: int = 0,
                   warm: tuple | None = None) -> JOptimum:
    rng = np.random.default_rng(seed)
    starts = [np.asarray(warm)] if warm is not None else []
    starts += [rng.uniform(-math.pi / 2, math.pi / 2, 4) for _ in range(restarts)]
    best, ok = None, False
    for x0 in starts:
        res = minimize(lambda x: -eberhard_j(psi, efficiency, x), x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": maxiter})
        ok = ok or bool(res.success)
        if best is None or res.fun < best.fun:
            best = res
    return JOptimum(float(-best.fun), tuple(best.x), ok)


def critical_efficiency(psi, restarts: int = 6, maxiter: int = 2000, seed: int = 0, tol: float = 1e-6,
                        threshold: float = 1e-13):
    """Smallest efficiency with max J > 0, by bisection on the violation flag.

    Returns ``(efficiency, converged)``; efficiency is NaN when even perfect
    detectors give no violation.
    """
    top = max_eberhard_j(psi, 1.0, restarts, maxiter, seed)
    if top.j <= threshold:
        return math.nan, top.converged
    lo, hi, warm, ok = 0.5, 1.0, top.thetas, top.converged
    step = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        step += 1
        opt = max_eberhard_j(psi, mid, restarts, maxiter, seed + step, warm)
        ok = ok and opt.converged
        if opt.j > threshold:
            hi, warm = mid, opt.thetas
        else:
            lo = mid
    return hi, ok
