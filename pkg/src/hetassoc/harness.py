"""Monte-Carlo experiment driver: seeded trials, parameter sweeps, CSV output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .association import SolverConfig, Strategy, solve
from .channel import RadioParams, build_link_table
from .metrics import DEFAULT_TARGET_RATE, MetricsReport, aggregate, summarize
from .topology import DeploymentConfig, generate_topology

log = logging.getLogger(__name__)

WORKERS_ENV = "HETASSOC_WORKERS"
SWEEP_VARIABLES = ("users_per_macrocell", "pbs_per_macrocell")
ALL_STRATEGIES = tuple(s.value for s in Strategy)
DEFAULT_SWEEPS = {
    "users_per_macrocell": (10, 20, 30, 40, 50, 60),
    "pbs_per_macrocell": (2, 4, 6, 8, 10),
}
CSV_COLUMNS = (["sweep_variable", "sweep_value", "trial", "seed", "strategy", "num_bs",
                "num_users"] + MetricsReport.field_names())


class TrialError(RuntimeError):
    def __init__(self, sweep_value: int, trial_index: int, cause: Exception):
        super().__init__(f"trial failed at sweep_value={sweep_value}, "
                         f"trial={trial_index}: {cause}")
        self.sweep_value = sweep_value
        self.trial_index = trial_index
        self.cause = cause

    def __reduce__(self):
        return TrialError, (self.sweep_value, self.trial_index, self.cause)


@dataclass(frozen=True)
class ExperimentConfig:
    deployment: DeploymentConfig = field(default_factory=DeploymentConfig)
    radio: RadioParams = field(default_factory=RadioParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    strategies: tuple[str, ...] = ALL_STRATEGIES
    sweep_variable: str = "users_per_macrocell"
    sweep_values: tuple[int, ...] = DEFAULT_SWEEPS["users_per_macrocell"]
    trials: int = 100
    base_seed: int = 0
    target_rate: float = DEFAULT_TARGET_RATE
    output_path: str = "results.csv"

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep_variable must be one of {SWEEP_VARIABLES}")
        vals = list(self.sweep_values)
        if not vals:
            raise ValueError("sweep_values must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("sweep_values must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        # normalise names, rejecting unknown ones
        object.__setattr__(self, "strategies",
                           tuple(Strategy(s).value for s in self.strategies))
        object.__setattr__(self, "sweep_values", tuple(int(v) for v in vals))

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def trial_seed(base_seed: int, sweep_value: int, trial_index: int) -> int:
    """Stable 64-bit seed per trial; adding sweep points leaves other trials untouched."""
    key = f"{base_seed}:{sweep_value}:{trial_index}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def trial_inputs(cfg: ExperimentConfig, sweep_value: int, trial_index: int):
    """Topology and link table for one trial, plus the trial seed."""
    seed = trial_seed(cfg.base_seed, sweep_value, trial_index)
    topo_seed, shadow_seed = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    deployment = replace(cfg.deployment, seed=int(topo_seed),
                         **{cfg.sweep_variable: int(sweep_value)})
    topology = generate_topology(deployment)
    links = build_link_table(topology, cfg.radio, int(shadow_seed))
    return seed, topology, links


def run_trial_full(cfg: ExperimentConfig, sweep_value: int, trial_index: int):
    """Reports and solver traces for every enabled strategy."""
    try:
        seed, _, links = trial_inputs(cfg, sweep_value, trial_index)
        reports, traces = {}, {}
        for name in cfg.strategies:
            assoc, trace = solve(name, links, cfg.radio.circuit_power_mw, cfg.solver)
            reports[name] = summarize(assoc, links, cfg.radio.circuit_power_mw, cfg.target_rate)
            traces[name] = trace
    except Exception as exc:
        raise TrialError(sweep_value, trial_index, exc) from exc
    return seed, links, reports, traces


def run_trial(cfg: ExperimentConfig, sweep_value: int, trial_index: int) -> dict[str, MetricsReport]:
    return run_trial_full(cfg, sweep_value, trial_index)[2]


def _trial_rows(args) -> list[list]:
    cfg, value, trial = args
    seed, links, reports, _ = run_trial_full(cfg, value, trial)
    return [[cfg.sweep_variable, value, trial, seed, name, links.N, links.K]
            + [reports[name].as_dict()[m] for m in MetricsReport.field_names()]
            for name in cfg.strategies]


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def header_lines(cfg: ExperimentConfig) -> list[str]:
    lines = ["# hetassoc sweep", f"# config_digest {cfg.digest()}",
             f"# target_rate {cfg.target_rate!r} (assumed default; no published value)"]
    for key, value in sorted(flatten_config(cfg).items()):
        lines.append(f"# {key} = {value}")
    return lines


def companion_paths(output_path: str | Path) -> dict[str, Path]:
    out = Path(output_path)
    paths = {"summary": out.with_name(out.stem + "_summary.csv")}
    for s in ALL_STRATEGIES:
        paths[f"trace_{s}"] = out.with_name(f"{out.stem}_trace_{s}.txt")
    return paths


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(cfg: ExperimentConfig) -> dict[str, Path]:
    """Run every (sweep value, trial) and write the row CSV, a mean/std summary
    and the first trial's convergence traces. Returns the written paths."""
    out = Path(cfg.output_path)
    paths = {"rows": out, **companion_paths(out)}
    jobs = [(cfg, v, t) for v in cfg.sweep_values for t in range(cfg.trials)]
    buf = io.StringIO()
    buf.write("\n".join(header_lines(cfg)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)

    rows: list[list] = []
    failure: TrialError | None = None
    workers = _workers()
    try:
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                # map yields in submission order whatever the completion order
                for chunk in pool.map(_trial_rows, jobs):
                    rows.extend(chunk)
        else:
            for job in jobs:
                rows.extend(_trial_rows(job))
    except TrialError as exc:
        failure = exc
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    if failure is not None:
        buf.write(f"# PARTIAL OUTPUT: {failure}\n")

    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc}") from exc
    if failure is not None:
        raise failure

    problems = validate_csv(out)
    if problems:
        raise ValueError(f"{out}: schema check failed: {problems[:5]}")

    _write_summary(cfg, rows, paths["summary"])
    _, _, _, traces = run_trial_full(cfg, cfg.sweep_values[0], 0)
    for name, trace in traces.items():
        if trace is not None:
            paths[f"trace_{name}"].write_text(trace.to_text())
    log.info("wrote %d rows to %s", len(rows), out)
    return {k: p for k, p in paths.items() if p.exists()}


def _write_summary(cfg: ExperimentConfig, rows: list[list], path: Path) -> None:
    names = MetricsReport.field_names()
    offset = len(CSV_COLUMNS) - len(names)
    buf = io.StringIO()
    buf.write("\n".join(header_lines(cfg)) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sweep_variable", "sweep_value", "strategy", "trials"]
                    + [f"{n}_{stat}" for n in names for stat in ("mean", "std")])
    for value in cfg.sweep_values:
        for strategy in cfg.strategies:
            sel = [r for r in rows if r[1] == value and r[4] == strategy]
            reports = [MetricsReport(*r[offset:]) for r in sel]
            stats = aggregate(reports)
            writer.writerow([cfg.sweep_variable, value, strategy, len(sel)]
                            + [_fmt(x) for n in names for x in stats[n]])
    path.write_text(buf.getvalue())


def read_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def validate_csv(path: str | Path) -> list[str]:
    problems = []
    for i, row in enumerate(read_rows(path)):
        rep = MetricsReport(*(float(row[n]) for n in MetricsReport.field_names()))
        problems.extend(f"row {i}: {p}" for p in rep.violations(int(row["num_bs"])))
    return problems


# -- flat key/value view used by the config file and the CLI ------------------

_SECTIONS = {"deployment": DeploymentConfig, "radio": RadioParams, "solver": SolverConfig}


def flatten_config(cfg: ExperimentConfig) -> dict[str, str]:
    flat = {}
    for section in _SECTIONS:
        for key, value in asdict(getattr(cfg, section)).items():
            if section == "deployment" and key == "seed":
                continue
            flat[key] = _to_text(value)
    for key in ("strategies", "sweep_variable", "sweep_values", "trials", "base_seed",
                "target_rate", "output_path"):
        flat[key] = _to_text(getattr(cfg, key))
    return flat


def _to_text(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(_to_text(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_keys() -> dict[str, tuple[str | None, object]]:
    """Every settable key -> (section or None, default value)."""
    keys: dict[str, tuple[str | None, object]] = {}
    for section, cls in _SECTIONS.items():
        for key, value in asdict(cls()).items():
            if not (section == "deployment" and key == "seed"):
                keys[key] = (section, value)
    defaults = ExperimentConfig()
    for key in ("strategies", "sweep_variable", "sweep_values", "trials", "base_seed",
                "target_rate", "output_path"):
        keys[key] = (None, getattr(defaults, key))
    return keys


def _parse_value(text: str, default):
    text = text.strip()
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        parts = [p for p in text.split(",") if p.strip()]
        if default and not isinstance(default[0], str):
            return tuple(_parse_value(p, default[0]) for p in parts)
        return tuple(p.strip() for p in parts)
    return text


def read_config_file(path: str | Path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in config_keys():
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(values: dict[str, str]) -> ExperimentConfig:
    """ExperimentConfig from flat textual key/values (file and flags merged)."""
    keys = config_keys()
    sections: dict[str, dict] = {s: {} for s in _SECTIONS}
    top: dict[str, object] = {}
    for key, text in values.items():
        section, default = keys[key]
        parsed = _parse_value(text, default)
        if section is None:
            top[key] = parsed
        else:
            sections[section][key] = parsed
    if "sweep_variable" in top and "sweep_values" not in top:
        top["sweep_values"] = DEFAULT_SWEEPS[str(top["sweep_variable"])]
    return ExperimentConfig(
        deployment=DeploymentConfig(**sections["deployment"]),
        radio=RadioParams(**sections["radio"]),
        solver=SolverConfig(**sections["solver"]),
        **top,
    )
