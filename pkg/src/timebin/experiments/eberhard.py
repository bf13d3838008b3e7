"""Detection-efficiency threshold of the CH/Eberhard inequality versus entanglement."""

from __future__ import annotations

import math

from .bell import critical_efficiency, max_eberhard_j, source_qubit_state
from .common import ScenarioResult

J_THRESHOLD = 1e-13


def run_eberhard(eta_grid, efficiency_grid, restarts: int = 6, maxiter: int = 2000,
                 seed: int = 0) -> ScenarioResult:
    """Scan max J over (coupling ratio, efficiency) and locate the critical efficiency per ratio.

    ``restarts`` and ``maxiter`` form the optimizer budget per cell.
    """
    etas, effs = list(eta_grid), list(efficiency_grid)
    if not etas or not effs:
        raise ValueError("eta and efficiency grids must be non-empty")
    rows, metrics, warnings = [], {}, []
    crit = {}
    for i, eta in enumerate(etas):
        psi = source_qubit_state(eta)
        warm = None
        for j, eff in enumerate(sorted(effs, reverse=True)):
            opt = max_eberhard_j(psi, eff, restarts, maxiter, seed + 1000 * i + j, warm)
            warm = opt.thetas
            rows.append({"eta": float(eta), "efficiency": float(eff), "J": opt.j,
                         "violated": opt.j > J_THRESHOLD, "converged": opt.converged})
            if not opt.converged:
                warnings.append(f"optimizer did not converge at eta={eta:g}, efficiency={eff:g}")
            if eff == 1.0:
                metrics[f"chsh_equivalent[eta={eta:g}]"] = 4 * opt.j + 2
        c, ok = critical_efficiency(psi, restarts=max(2, restarts // 2), maxiter=maxiter, seed=seed + 7919 * (i + 1),
                                    threshold=J_THRESHOLD)
        if not ok:
            warnings.append(f"bisection optimizer did not converge at eta={eta:g}")
        crit[eta] = c
        metrics[f"critical_efficiency[eta={eta:g}]"] = c
    rows.sort(key=lambda r: (etas.index(r["eta"]), r["efficiency"]))
    ordered = sorted(crit, key=lambda e: abs(e - 0.5))
    values = [crit[e] for e in ordered]
    metrics["monotone"] = float(all(b <= a + 1e-9 for a, b in zip(values, values[1:])))
    metrics["min_critical_efficiency"] = min((v for v in values if not math.isnan(v)), default=math.nan)
    params = {"eta_grid": [float(e) for e in etas], "efficiency_grid": [float(e) for e in effs],
              "restarts": restarts, "maxiter": maxiter, "seed": seed}
    return ScenarioResult("eberhard", params, metrics, rows, seed, None, "exact", warnings)
