"""Batch front-end: ``timebin run|validate|list-scenarios``.

Configs are TOML. Phases are in radians and delays in time bins; the bin
width (1.2 ns in the demonstrator) is metadata only. Results are written as
JSON lines, one record per scenario, plus a CSV table for scans.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .components import AnalyzerConfig, SourceConfig
from .detection import DetectorConfig
from .errors import ConfigError, check_int
from .experiments import SCENARIOS, ScenarioResult
from .experiments import bsa, franson, ghz, qkd
from .experiments.common import EXACT, MONTECARLO, normalize_mode

log = logging.getLogger("timebin")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
BIN_WIDTH_NS = 1.2

SOURCE_KEYS = {"eta", "phi", "delay_bins", "mu", "g"}
ANALYZER_KEYS = {"phase", "delay_bins", "switch"}
DETECTOR_KEYS = {"efficiency", "dark_prob", "gate_bins", "deadtime_bins", "resolving"}
TOP_KEYS = {"scenario", "mode", "seed", "trials", "output"}
OUTPUT_KEYS = {"dir", "results", "plot"}

DESCRIPTIONS = {
    "franson": "two-photon fringe through a shared analyzer; visibility vs mode match",
    "qkd": "passive two-basis key distribution; sifting and QBER per basis",
    "bsa": "Bell-state analyzer confusion table (one coupler, two detectors)",
    "swap": "entanglement swapping between two sources; heralded fidelity and CHSH",
    "ghz": "three-photon GHZ post-selection with one analyzer detector removed",
    "eberhard": "CH/Eberhard critical detector efficiency vs coupling ratio",
}

SECTIONS = {
    "franson": {"source": SOURCE_KEYS, "analyzer": ANALYZER_KEYS | {"phases", "num_phases"}, "detectors": None},
    "qkd": {"source": SOURCE_KEYS, "alice": ANALYZER_KEYS, "bob": ANALYZER_KEYS, "detectors": None},
    "bsa": {"bsa": {"inputs"}, "detectors": None},
    "swap": {"source_b": SOURCE_KEYS, "source_c": SOURCE_KEYS, "swap": {"order"}, "detectors": None},
    "ghz": {"source_b": SOURCE_KEYS, "source_c": SOURCE_KEYS, "detectors": None},
    "eberhard": {"eberhard": {"eta_grid", "efficiency_grid", "restarts", "maxiter"}},
}
DETECTOR_NAMES = {
    "franson": franson.DETECTORS, "qkd": qkd.DETECTORS, "bsa": bsa.DETECTORS,
    "swap": bsa.DETECTORS, "ghz": ghz.DETECTORS,
}


@dataclass
class RunManifest:
    scenario: str
    config: dict
    seed: int = 0
    trials: int = 100_000
    mode: str = EXACT
    output: dict = field(default_factory=dict)

    def to_mapping(self) -> dict:
        out = {"scenario": self.scenario, "mode": self.mode, "seed": self.seed, "trials": self.trials}
        out.update(copy.deepcopy(self.config))
        if self.output:
            out["output"] = dict(self.output)
        return out


def _section(blob: dict, name: str, allowed) -> dict:
    sec = blob.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(name, "expected a table")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", f"unknown key; allowed: {sorted(allowed)}")
    return sec


def _build(factory, section: str, values: dict):
    try:
        return factory(**values)
    except ConfigError as err:
        raise ConfigError(f"{section}.{err.field}", str(err).split(": ", 1)[-1]) from None
    except TypeError as err:
        raise ConfigError(section, str(err)) from None


def _detectors(scenario: str, blob: dict) -> dict:
    sec = blob.get("detectors", {})
    if not isinstance(sec, dict):
        raise ConfigError("detectors", "expected a table of detector tables")
    names = set(DETECTOR_NAMES[scenario])
    out = {}
    for name, values in sec.items():
        if name != "default" and name not in names:
            raise ConfigError(f"detectors.{name}", f"unknown detector; expected default or one of {sorted(names)}")
        if not isinstance(values, dict):
            raise ConfigError(f"detectors.{name}", "expected a table")
        unknown = set(values) - DETECTOR_KEYS
        if unknown:
            raise ConfigError(f"detectors.{name}.{sorted(unknown)[0]}", f"unknown key; allowed: {sorted(DETECTOR_KEYS)}")
        vals = dict(values)
        if "gate_bins" in vals:
            vals["gate_bins"] = frozenset(vals["gate_bins"])
        out[name] = _build(DetectorConfig, f"detectors.{name}", vals)
    return out


def manifest_from_mapping(blob: dict) -> RunManifest:
    if "scenario" not in blob:
        raise ConfigError("scenario", f"missing scenario id; expected one of {sorted(SCENARIOS)}")
    scenario = blob["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {scenario!r}; expected one of {sorted(SCENARIOS)}")
    sections = SECTIONS[scenario]
    unknown = set(blob) - TOP_KEYS - set(sections)
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown key for scenario {scenario!r}")
    mode = normalize_mode(blob.get("mode", EXACT))
    seed = check_int("seed", blob.get("seed", 0), 0)
    trials = check_int("trials", blob.get("trials", 100_000), 1)
    output = _section(blob, "output", OUTPUT_KEYS)
    config = {name: copy.deepcopy(blob[name]) for name in sections if name in blob}
    manifest = RunManifest(scenario, config, seed, trials, mode, dict(output))
    build_kwargs(manifest)  # full validation of every section
    return manifest


def parse_config(path) -> RunManifest:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("path", f"config file {str(path)!r} not found")
    try:
        blob = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as err:
        raise ConfigError("path", f"invalid TOML: {err}") from None
    return manifest_from_mapping(blob)


def _phases(sec: dict) -> list[float]:
    if "phases" in sec and "num_phases" in sec:
        raise ConfigError("analyzer.phases", "give either phases or num_phases, not both")
    if "phases" in sec:
        phases = sec["phases"]
        if not isinstance(phases, list) or not phases:
            raise ConfigError("analyzer.phases", "expected a non-empty list of radians")
        try:
            return [float(p) for p in phases]
        except (TypeError, ValueError):
            raise ConfigError("analyzer.phases", "phases must be numbers") from None
    n = check_int("analyzer.num_phases", sec.get("num_phases", 40), 3)
    return franson.default_phases(n)


def build_kwargs(m: RunManifest) -> dict:
    """Translate a manifest into keyword arguments for the scenario driver."""
    blob, sc = m.config, m.scenario
    secs = {name: _section(blob, name, allowed) for name, allowed in SECTIONS[sc].items() if allowed is not None}
    kw: dict = {}
    if sc != "eberhard":
        kw.update(detectors=_detectors(sc, blob), trials=m.trials, seed=m.seed, mode=m.mode)
    if sc == "franson":
        source = _build(SourceConfig, "source", secs["source"])
        an = {k: v for k, v in secs["analyzer"].items() if k in ANALYZER_KEYS}
        an.setdefault("delay_bins", source.delay_bins)
        kw.update(source=source, analyzer=_build(AnalyzerConfig, "analyzer", an), phases=_phases(secs["analyzer"]))
    elif sc == "qkd":
        source = _build(SourceConfig, "source", secs["source"])
        for side in ("alice", "bob"):
            vals = dict(secs[side])
            vals.setdefault("delay_bins", source.delay_bins)
            kw[side] = _build(AnalyzerConfig, side, vals)
        kw["source"] = source
    elif sc == "bsa":
        inputs = secs["bsa"].get("inputs", list(bsa.BELL_LABELS))
        if not isinstance(inputs, list) or not inputs or any(i not in bsa.BELL_LABELS for i in inputs):
            raise ConfigError("bsa.inputs", f"expected a non-empty list drawn from {list(bsa.BELL_LABELS)}")
        kw["inputs"] = tuple(inputs)
    elif sc in ("swap", "ghz"):
        defaults = {"swap": (1, 1), "ghz": (1, 2)}[sc]
        for name, d in zip(("source_b", "source_c"), defaults):
            vals = dict(secs[name])
            vals.setdefault("delay_bins", d)
            kw[name] = _build(SourceConfig, name, vals)
        if sc == "swap":
            order = secs["swap"].get("order", 1)
            if order not in (1, 2) or isinstance(order, bool):
                raise ConfigError("swap.order", f"expected 1 or 2, got {order!r}")
            kw["order"] = order
    elif sc == "eberhard":
        sec = secs["eberhard"]
        for key, lo, lo_open in (("eta_grid", 0.0, True), ("efficiency_grid", 0.0, False)):
            grid = sec.get(key)
            if not isinstance(grid, list) or not grid:
                raise ConfigError(f"eberhard.{key}", "expected a non-empty list")
            for v in grid:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"eberhard.{key}", f"expected numbers, got {v!r}")
                if not (lo < v <= 1.0 if lo_open else lo <= v <= 1.0):
                    raise ConfigError(f"eberhard.{key}", f"value {v} outside {'(' if lo_open else '['}0, 1]")
            kw[key] = [float(v) for v in grid]
        kw["restarts"] = check_int("eberhard.restarts", sec.get("restarts", 6), 1)
        kw["maxiter"] = check_int("eberhard.maxiter", sec.get("maxiter", 2000), 10)
        kw["seed"] = m.seed
    return kw


def run_manifest(m: RunManifest, workers: int = 1) -> ScenarioResult:
    kw = build_kwargs(m)
    if m.scenario != "eberhard":
        kw["workers"] = workers
    return SCENARIOS[m.scenario](**kw)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def plot_table(result: ScenarioResult) -> str | None:
    """CSV text for scan scenarios, None otherwise."""
    columns = {
        "franson": ("phase", "coincidence_rate", "fit_visibility"),
        "eberhard": ("eta", "efficiency", "J", "violated"),
    }.get(result.scenario)
    if columns is None:
        return None
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in result.per_outcome:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def result_line(m: RunManifest, result: ScenarioResult) -> str:
    record = {"manifest": m.to_mapping(), "units": {"bin_width_ns": BIN_WIDTH_NS, "phase": "rad"}}
    record.update(result.to_record())
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def run_and_emit(m: RunManifest, out_dir=None, workers: int = 1) -> int:
    out = Path(out_dir or m.output.get("dir", "out"))
    try:
        result = run_manifest(m, workers)
    except ConfigError as err:
        log.error("config error: %s", err)
        return EXIT_CONFIG
    except Exception as err:  # noqa: BLE001 - any scenario failure maps to the runtime exit code
        log.error("scenario %s failed: %s", m.scenario, err)
        return EXIT_RUNTIME
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / m.output.get("results", "results.jsonl")
    results_path.write_text(result_line(m, result))
    table = plot_table(result)
    if table is not None:
        (out / m.output.get("plot", f"{m.scenario}_plot.csv")).write_text(table)
    for w in result.warnings:
        log.warning("%s", w)
    log.info("wrote %s", results_path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timebin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config")
    run.add_argument("--mode", choices=("exact", "mc", "montecarlo"))
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo sampling")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    sub.add_parser("list-scenarios", help="list available scenarios")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "list-scenarios":
        for name in SCENARIOS:
            print(f"{name:10s} {DESCRIPTIONS[name]}")
        return EXIT_OK
    try:
        m = parse_config(args.config)
        if args.command == "run":
            overrides = m.to_mapping()
            if args.mode:
                overrides["mode"] = args.mode
            if args.trials is not None:
                overrides["trials"] = args.trials
            if args.seed is not None:
                overrides["seed"] = args.seed
            m = manifest_from_mapping(overrides)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"ok: scenario={m.scenario} mode={m.mode} seed={m.seed} trials={m.trials}")
        return EXIT_OK
    return run_and_emit(m, args.out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
