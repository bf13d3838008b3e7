"""Scenario drivers. Each returns a ScenarioResult and runs in exact or Monte Carlo mode."""

from .bsa import run_bsa_classification
from .common import EXACT, MONTECARLO, ScenarioResult, Setup
from .eberhard import run_eberhard
from .franson import run_franson
from .ghz import run_ghz
from .qkd import run_qkd
from .swap import run_swap

SCENARIOS = {
    "franson": run_franson,
    "qkd": run_qkd,
    "bsa": run_bsa_classification,
    "swap": run_swap,
    "ghz": run_ghz,
    "eberhard": run_eberhard,
}

__all__ = [
    "EXACT", "MONTECARLO", "SCENARIOS", "ScenarioResult", "Setup", "run_bsa_classification", "run_eberhard",
    "run_franson", "run_ghz", "run_qkd", "run_swap",
]
