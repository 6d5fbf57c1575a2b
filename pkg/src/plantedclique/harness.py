"""Experiment configuration, seed sweeps, presets and output management.

Configs are flat key = value text files with an explicit version, one file per
experiment; presets ship inside the package. A run produces one trajectory
CSV per seed plus an aggregate summary.json whose only non-deterministic
field is the "created" timestamp in the header.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

from .chains import (GibbsChain, GradientDescent, TiePolicy, run_chain,
                     run_coupled_gd, run_peel)
from .energy import GammaParam
from .graphs import gen_contaminated, gen_er, gen_planted
from .landscape import binary_entropy, brute_force_min, enumerate_local_minima

__all__ = ["ExperimentConfig", "LandscapeConfig", "RunSummary", "ConfigError",
           "parse_config", "parse_config_text", "write_config", "config_text",
           "load_preset", "preset_names", "run_experiment", "run_sweep",
           "run_landscape", "run_coupled_cells", "run_peel_cells",
           "default_out_dir", "OUT_DIR_ENV"]

CONFIG_VERSION = 1
OUT_DIR_ENV = "PLANTEDCLIQUE_OUT"


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists (field, message) pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"{f}: {m}" for f, m in self.errors)
        super().__init__(f"invalid config: {lines}")


def default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, "runs")


# ---------------------------------------------------------------------------
# Config dataclasses and the flat key = value format
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One chain experiment: a graph model, a chain, an init and a seed set."""

    version: int = CONFIG_VERSION
    task: str = "run"
    model: str = "planted"        # er | planted | contaminated
    n: int = 100
    k: int = 10
    m: int = 0
    q: float = 0.5
    chain: str = "gd"             # gd | gibbs
    gamma: str = "4"
    beta: float = 0.0
    tie_policy: str = "halt"      # halt | drift:<budget>
    init: str = "full"            # full | empty | explicit:v1,v2,...
    max_steps: int = 1000
    seeds: str = "0..9"
    hold_window: int = 0          # 0 -> gibbs default of 10 * n
    record_every: int = 1
    out_dir: str = ""
    jobs: int = 1

    def gamma_param(self) -> GammaParam:
        return GammaParam.from_value(self.gamma)

    def seed_list(self) -> list[int]:
        return _parse_seeds(self.seeds)

    def tie(self) -> TiePolicy:
        return _parse_tie(self.tie_policy)

    def chain_kind(self):
        if self.chain == "gd":
            return GradientDescent(self.tie())
        return GibbsChain(self.beta)

    def init_value(self):
        return _parse_init(self.init)

    def resolved_out_dir(self) -> Path:
        return Path(self.out_dir or default_out_dir())

    def validate(self) -> None:
        errors = []
        if self.version != CONFIG_VERSION:
            errors.append(("version", f"unsupported version {self.version}"))
        if self.task != "run":
            errors.append(("task", f"expected task = run, got {self.task!r}"))
        if self.model not in ("er", "planted", "contaminated"):
            errors.append(("model", f"unknown model {self.model!r}"))
        if self.n < 1:
            errors.append(("n", "n must be >= 1"))
        if self.model == "er":
            if self.k != 0:
                errors.append(("k", "model er takes k = 0"))
        elif not 1 <= self.k <= self.n:
            errors.append(("k", f"need 1 <= k <= n, got k={self.k}, n={self.n}"))
        if self.model == "contaminated":
            if self.m < 1:
                errors.append(("m", "contaminated model needs m >= 1"))
            elif self.k + self.m > self.n:
                errors.append(("m", f"k + m = {self.k + self.m} exceeds n"))
            if not 0.5 <= self.q < 1.0:
                errors.append(("q", f"q must lie in [1/2, 1), got {self.q}"))
        elif self.m != 0:
            errors.append(("m", f"model {self.model} takes m = 0"))
        if self.chain not in ("gd", "gibbs"):
            errors.append(("chain", f"unknown chain {self.chain!r}"))
        try:
            self.gamma_param()
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            errors.append(("gamma", str(exc)))
        if self.chain == "gibbs":
            if not (math.isfinite(self.beta) and self.beta >= 0):
                errors.append(("beta", f"beta must be finite and >= 0, got {self.beta}"))
        try:
            self.tie()
        except ValueError as exc:
            errors.append(("tie_policy", str(exc)))
        try:
            init = self.init_value()
            if not isinstance(init, str):
                bad = [v for v in init if not 0 <= v < self.n]
                if bad:
                    errors.append(("init", f"vertices out of range: {bad}"))
        except ValueError as exc:
            errors.append(("init", str(exc)))
        if self.max_steps < 1:
            errors.append(("max_steps", "max_steps must be >= 1"))
        try:
            seeds = self.seed_list()
            if not seeds:
                errors.append(("seeds", "no seeds specified"))
        except ValueError as exc:
            errors.append(("seeds", str(exc)))
        if self.hold_window < 0:
            errors.append(("hold_window", "hold_window must be >= 0"))
        if self.record_every < 1:
            errors.append(("record_every", "record_every must be >= 1"))
        if self.jobs < 1:
            errors.append(("jobs", "jobs must be >= 1"))
        if errors:
            raise ConfigError(errors)


@dataclass
class LandscapeConfig:
    """A landscape scan: brute-force oracle, local-minima scan or kappa table."""

    version: int = CONFIG_VERSION
    task: str = "landscape"
    mode: str = "brute"           # brute | scan | kappa
    model: str = "planted"
    n: int = 12
    k: int = 8
    gamma: str = "2"
    gammas: str = ""              # kappa mode: comma list
    m_values: str = ""            # scan mode: "6..8" or "6,7,8"
    budget: int = 200000
    seeds: str = "0..9"
    out_dir: str = ""

    def gamma_param(self) -> GammaParam:
        return GammaParam.from_value(self.gamma)

    def seed_list(self) -> list[int]:
        return _parse_seeds(self.seeds)

    def m_list(self) -> list[int]:
        return _parse_seeds(self.m_values)

    def gamma_list(self) -> list[GammaParam]:
        return [GammaParam.from_value(tok.strip())
                for tok in self.gammas.split(",") if tok.strip()]

    def resolved_out_dir(self) -> Path:
        return Path(self.out_dir or default_out_dir())

    def validate(self) -> None:
        errors = []
        if self.version != CONFIG_VERSION:
            errors.append(("version", f"unsupported version {self.version}"))
        if self.mode not in ("brute", "scan", "kappa"):
            errors.append(("mode", f"unknown mode {self.mode!r}"))
        if self.mode == "kappa":
            try:
                if not self.gamma_list():
                    errors.append(("gammas", "kappa mode needs a gamma list"))
            except (ValueError, TypeError, ZeroDivisionError) as exc:
                errors.append(("gammas", str(exc)))
        else:
            if self.n < 1:
                errors.append(("n", "n must be >= 1"))
            if not 1 <= self.k <= self.n:
                errors.append(("k", f"need 1 <= k <= n"))
            try:
                self.gamma_param()
            except (ValueError, TypeError, ZeroDivisionError) as exc:
                errors.append(("gamma", str(exc)))
            try:
                seeds = self.seed_list()
                if not seeds:
                    errors.append(("seeds", "no seeds specified"))
            except ValueError as exc:
                errors.append(("seeds", str(exc)))
        if self.mode == "brute" and self.n > 24:
            errors.append(("n", "brute mode is limited to n <= 24"))
        if self.mode == "scan":
            try:
                if not self.m_list():
                    errors.append(("m_values", "scan mode needs subset sizes"))
            except ValueError as exc:
                errors.append(("m_values", str(exc)))
            if self.budget < 1:
                errors.append(("budget", "budget must be >= 1"))
        if errors:
            raise ConfigError(errors)


def _parse_seeds(text: str) -> list[int]:
    """Parse "0..39", "1,5,9" or "7" into an integer list."""
    text = text.strip()
    if not text:
        return []
    out: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if ".." in token:
            lo, hi = token.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty range {token!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(token))
    return out


def _parse_tie(text: str) -> TiePolicy:
    text = text.strip()
    if text == "halt":
        return TiePolicy.halt()
    if text.startswith("drift:"):
        return TiePolicy.drift(int(text.split(":", 1)[1]))
    raise ValueError(f"tie policy must be 'halt' or 'drift:<steps>', got {text!r}")


def _parse_init(text: str):
    text = text.strip()
    if text in ("full", "empty"):
        return text
    if text.startswith("explicit:"):
        body = text.split(":", 1)[1]
        return tuple(int(tok) for tok in body.split(",") if tok.strip())
    raise ValueError(f"init must be 'full', 'empty' or 'explicit:v1,v2,...', got {text!r}")


def parse_config_text(text: str) -> Union[ExperimentConfig, LandscapeConfig]:
    """Parse the flat key = value format; dispatches on the task key."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError([(f"line {lineno}", f"expected key = value, got {raw!r}")])
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if key in pairs:
            raise ConfigError([(key, "duplicate key")])
        pairs[key] = value
    task = pairs.get("task", "run")
    cls = ExperimentConfig if task == "run" else LandscapeConfig
    if task not in ("run", "landscape"):
        raise ConfigError([("task", f"unknown task {task!r}")])
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    errors = []
    for key, value in pairs.items():
        if key not in fields:
            errors.append((key, "unknown key"))
            continue
        ftype = fields[key].type
        try:
            if ftype == "int":
                kwargs[key] = int(value)
            elif ftype == "float":
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except ValueError:
            errors.append((key, f"cannot parse {value!r} as {ftype}"))
    if errors:
        raise ConfigError(errors)
    config = cls(**kwargs)
    config.validate()
    return config


def parse_config(path) -> Union[ExperimentConfig, LandscapeConfig]:
    return parse_config_text(Path(path).read_text())


def config_text(config) -> str:
    """Canonical serialization; parse(config_text(c)) round-trips losslessly."""
    lines = [f"# plantedclique config (version {config.version})"]
    for f in dataclasses.fields(config):
        lines.append(f"{f.name} = {getattr(config, f.name)}")
    return "\n".join(lines) + "\n"


def write_config(path, config) -> None:
    Path(path).write_text(config_text(config))


def preset_names() -> list[str]:
    pkg = resources.files("plantedclique") / "presets"
    return sorted(p.name[:-4] for p in pkg.iterdir() if p.name.endswith(".cfg"))


def load_preset(name: str) -> Union[ExperimentConfig, LandscapeConfig]:
    pkg = resources.files("plantedclique") / "presets" / f"{name}.cfg"
    if not pkg.is_file():
        raise ConfigError([("preset", f"unknown preset {name!r}; "
                            f"available: {', '.join(preset_names())}")])
    return parse_config_text(pkg.read_text())


# ---------------------------------------------------------------------------
# Experiment execution
# ---------------------------------------------------------------------------


@dataclass
class RunSummary:
    """Per-seed terminal rows plus aggregates recomputable from them."""

    rows: list[dict]
    aggregates: dict

    @staticmethod
    def from_rows(rows: list[dict]) -> "RunSummary":
        return RunSummary(rows, RunSummary.compute_aggregates(rows))

    @staticmethod
    def compute_aggregates(rows: list[dict]) -> dict:
        def med(values):
            values = [v for v in values if v is not None]
            return statistics.median(values) if values else None

        total = len(rows)
        succ = sum(1 for r in rows if r.get("reached_pc"))
        return {
            "runs": total,
            "success_rate": succ / total if total else None,
            "median_steps_to_pc": med(r.get("first_pc_step") for r in rows),
            "median_absorb_steps": med(r["steps"] for r in rows if r.get("absorbed")),
            "median_terminal_size": med(r.get("terminal_size") for r in rows),
            "median_terminal_overlap": med(r.get("terminal_n1") for r in rows),
        }


def _build_instance(config: ExperimentConfig, seed: int):
    if config.model == "er":
        return gen_er(config.n, seed)
    if config.model == "planted":
        return gen_planted(config.n, config.k, seed)
    return gen_contaminated(config.n, config.k, config.m, config.q, seed)


def _run_cell(config: ExperimentConfig, seed: int):
    """One (config, seed) cell; module-level so worker pools can pickle it."""
    instance = _build_instance(config, seed)
    traj = run_chain(
        instance, config.init_value(), config.chain_kind(),
        config.gamma_param(), config.max_steps, seed,
        hold_window=config.hold_window or None,
        record_every=config.record_every,
    )
    labels = getattr(instance, "labels", None)
    row = {"seed": seed, **traj.summary_dict(),
           "tau": None, "first_divergence": None, "retained_count": None}
    return seed, row, traj.csv_text(labels)


def _summary_payload(config, rows) -> dict:
    return {
        "created": datetime.now(timezone.utc).isoformat(),
        "params": dataclasses.asdict(config),
        "rows": rows,
        "aggregates": RunSummary.compute_aggregates(rows),
    }


def _write_outputs(out_dir: Path, config, results, csv_prefix: str) -> RunSummary:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed, row, csv_text in sorted(results, key=lambda r: r[0]):
        rows.append(row)
        if csv_text is not None:
            (out_dir / f"{csv_prefix}_s{seed}.csv").write_text(csv_text)
    payload = _summary_payload(config, rows)
    (out_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")
    return RunSummary(rows, payload["aggregates"])


def run_experiment(config: ExperimentConfig) -> RunSummary:
    """Execute every (seed x config) cell, in parallel when jobs > 1, and
    write per-run trajectory CSVs plus an aggregate summary.json. Results are
    merged in seed order, so parallel and serial outputs are identical."""
    config.validate()
    seeds = config.seed_list()
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_cell, [config] * len(seeds), seeds))
    else:
        results = [_run_cell(config, s) for s in seeds]
    return _write_outputs(config.resolved_out_dir(), config, results, "traj")


def run_sweep(config: ExperimentConfig, param: str,
              values: Sequence[str]) -> dict[str, RunSummary]:
    """Run the experiment once per swept value of ``param`` (gamma or beta),
    each into its own subdirectory of the config's output directory."""
    if param not in ("gamma", "beta"):
        raise ConfigError([("param", f"can only sweep gamma or beta, got {param!r}")])
    base = config.resolved_out_dir()
    out = {}
    for value in values:
        cell = dataclasses.replace(config)
        if param == "gamma":
            cell.gamma = str(value)
        else:
            cell.beta = float(value)
        cell.out_dir = str(base / f"{param}={value}")
        out[str(value)] = run_experiment(cell)
    return out


# ---------------------------------------------------------------------------
# Peel and coupled cells (flag-driven verbs share the summary shape)
# ---------------------------------------------------------------------------


def run_peel_cells(config: ExperimentConfig, stop_n2: int, c1: Optional[float]
                   ) -> RunSummary:
    """Peel each seed's instance down to at most stop_n2 non-clique vertices;
    writes trajectory, per-step count CSVs and retention diagnostics."""
    config.validate()
    out_dir = config.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in config.seed_list():
        instance = _build_instance(config, seed)
        traj, diag = run_peel(instance, stop_n2, seed, c1=c1,
                              gamma=config.gamma_param())
        traj.to_csv(out_dir / f"peel_s{seed}.csv", instance.labels)
        with open(out_dir / f"peel_counts_s{seed}.csv", "w") as f:
            header = "t,n1,n2,n3" if instance.contamination else "t,n1,n2"
            f.write(header + "\n")
            for t, counts in enumerate(diag.counts):
                f.write(",".join(str(c) for c in (t, *counts)) + "\n")
        diag_payload = {
            "tau0": diag.tau0,
            "c1": diag.c1,
            "retained_count": len(diag.retained) if diag.retained is not None else None,
            "retained": sorted(diag.retained) if diag.retained is not None else None,
            "removal_times": {str(x): t for x, t in sorted(diag.removal_times.items())},
        }
        (out_dir / f"peel_diag_s{seed}.json").write_text(
            json.dumps(diag_payload, indent=2) + "\n")
        rows.append({"seed": seed, **traj.summary_dict(), "tau": None,
                     "first_divergence": None,
                     "retained_count": diag_payload["retained_count"]})
    payload = _summary_payload(config, rows)
    (out_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")
    return RunSummary(rows, payload["aggregates"])


def run_coupled_cells(config: ExperimentConfig, max_steps: Optional[int] = None
                      ) -> RunSummary:
    """Coupled planted/unplanted gradient descents per seed."""
    config.validate()
    out_dir = config.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in config.seed_list():
        res = run_coupled_gd(config.n, config.k, config.gamma_param(),
                             config.tie(), max_steps or config.max_steps, seed,
                             init=config.init_value())
        res.planted.to_csv(out_dir / f"coupled_planted_s{seed}.csv")
        res.unplanted.to_csv(out_dir / f"coupled_unplanted_s{seed}.csv")
        row = {"seed": seed, **res.planted.summary_dict(),
               "tau": res.tau, "first_divergence": res.first_divergence,
               "identical_before_tau": res.identical_before_tau,
               "identical_through_absorption": res.identical_through_absorption,
               "retained_count": None}
        rows.append(row)
    payload = _summary_payload(config, rows)
    (out_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")
    return RunSummary(rows, payload["aggregates"])


# ---------------------------------------------------------------------------
# Landscape scans
# ---------------------------------------------------------------------------

SCAN_CSV_HEADER = "m,count_or_estimate,stderr,predicted_exponent,kappa,h_kappa,n,gamma"


def run_landscape(config: LandscapeConfig) -> list[dict]:
    """Drive the landscape module per the config's mode; returns the rows it
    wrote (one dict per CSV row)."""
    config.validate()
    out_dir = config.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)

    if config.mode == "kappa":
        rows = []
        with open(out_dir / "kappa_table.csv", "w") as f:
            f.write("gamma,kappa,h_kappa\n")
            for g in config.gamma_list():
                h = binary_entropy(float(g.kappa))
                f.write(f"{g},{g.kappa},{h:.12g}\n")
                rows.append({"gamma": str(g), "kappa": str(g.kappa), "h_kappa": h})
        return rows

    gamma = config.gamma_param()
    if config.mode == "brute":
        rows = []
        pc = frozenset(range(config.k))
        with open(out_dir / "brute_force.csv", "w") as f:
            f.write("seed,min_scaled_energy,n_argmins,argmin_is_pc,argmin_contains_pc\n")
            for seed in config.seed_list():
                instance = gen_planted(config.n, config.k, seed)
                best, argmins = brute_force_min(instance.graph, gamma)
                unique_pc = len(argmins) == 1 and argmins[0] == pc
                contains = len(argmins) == 1 and pc <= argmins[0]
                f.write(f"{seed},{best},{len(argmins)},{int(unique_pc)},{int(contains)}\n")
                rows.append({"seed": seed, "min_scaled_energy": best,
                             "n_argmins": len(argmins), "argmin_is_pc": unique_pc,
                             "argmin_contains_pc": contains})
        freq = sum(r["argmin_is_pc"] for r in rows) / len(rows)
        (out_dir / "brute_force_summary.json").write_text(json.dumps({
            "created": datetime.now(timezone.utc).isoformat(),
            "params": dataclasses.asdict(config),
            "unique_pc_frequency": freq,
            "rows": len(rows),
        }, indent=2) + "\n")
        return rows

    # mode == "scan": per-seed CSV of local-minima counts across sizes
    h_kappa = binary_entropy(float(gamma.kappa))
    all_rows = []
    for seed in config.seed_list():
        instance = gen_planted(config.n, config.k, seed)
        with open(out_dir / f"scan_s{seed}.csv", "w") as f:
            f.write(SCAN_CSV_HEADER + "\n")
            for m in config.m_list():
                found, est = enumerate_local_minima(
                    instance.graph, m, instance.pc, gamma, config.budget,
                    seed=seed)
                pred = "" if est.predicted_exponent is None else f"{est.predicted_exponent:.6g}"
                f.write(f"{m},{est.count_estimate:.6g},{est.stderr:.6g},{pred},"
                        f"{float(gamma.kappa):.6g},{h_kappa:.6g},{config.n},{gamma}\n")
                all_rows.append({"seed": seed, "m": m, "found": len(found),
                                 "count_estimate": est.count_estimate,
                                 "stderr": est.stderr,
                                 "predicted_exponent": est.predicted_exponent,
                                 "sampled": est.sampled})
    return all_rows
