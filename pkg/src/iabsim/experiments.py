"""Experiment runner: deterministic CSV outputs and summary statistics.

Five experiments are available:

  ga-trace         per-iteration best coverage of the power optimizer,
                   one column per seed (convergence ladders)
  coverage-vs-ues  coverage vs UE count for optimized / max / random
                   power, one file per RBs-per-UE value
  coverage-vs-sinr coverage vs median access SINR under separated vs
                   simultaneous access/backhaul slots, swept by applying a
                   network-wide EIRP back-off after power selection
  intercell        one-cell vs two-cell coverage vs UE count
  power-cdf        optimized per-node EIRPs across trials, labeled by role
                   and serving station, for several minimum data rates

Every output starts with a comment header carrying the fully resolved
config; re-running with the same header settings reproduces the file
byte-for-byte. Partial files are removed on failure.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .config import ConfigError, ScenarioConfig, config_lines
from .coverage import build_instance, monte_carlo_coverage
from .ga import GaParams, optimize
from .policies import make_policy
from .rng import derive_rng
from .topology import NodeRole

EXPERIMENT_NAMES = ("ga-trace", "coverage-vs-ues", "coverage-vs-sinr",
                    "intercell", "power-cdf")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    out: str
    rbs_values: tuple[int, ...] = (2, 4)  # coverage-vs-ues variants

    def __post_init__(self) -> None:
        if self.name not in EXPERIMENT_NAMES:
            raise ConfigError(f"unknown experiment {self.name!r}; expected one "
                              f"of {', '.join(EXPERIMENT_NAMES)}")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".10g")
    return str(value)


def _write_csv(path: str, config: ScenarioConfig, experiment: str,
               columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# iabsim experiment output\n")
        fh.write(f"# experiment = {experiment}\n")
        for line in config_lines(config):
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    os.replace(tmp, path)


def _map_ordered(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# ---------------------------------------------------------------------------
# Individual experiments
# ---------------------------------------------------------------------------

def run_ga_trace(config: ScenarioConfig, out: str, workers: int = 1) -> list[str]:
    """Optimizer convergence: one best-coverage column per seed."""
    params = GaParams.from_config(config)
    seeds = [config.seed + k for k in range(config.trace_seeds)]

    def one(seed: int) -> np.ndarray:
        instance = build_instance(config, seed, 0)
        rng = derive_rng(seed, 0, "policy")
        return optimize(instance, params, rng).trace

    traces = _map_ordered(one, seeds, workers)
    columns = ["iteration"] + [f"best_coverage_s{s}" for s in seeds]
    rows = [[it + 1] + [t[it] for t in traces]
            for it in range(params.n_iterations)]
    _write_csv(out, config, "ga-trace", columns, rows)
    return [out]


def _mean_coverage(config: ScenarioConfig, policy_name: str,
                   workers: int) -> float:
    policy = make_policy(policy_name, config)
    res = monte_carlo_coverage(config, policy, config.trials, config.seed,
                               workers=workers)
    return res.mean_coverage


def run_coverage_vs_ues(config: ScenarioConfig, out: str,
                        rbs_values: tuple[int, ...] = (2, 4),
                        workers: int = 1) -> list[str]:
    """Coverage vs UE count for the optimized and baseline power policies."""
    written = []
    for rbs in rbs_values:
        cfg_rb = config.replace(rbs_per_ue=rbs)
        rows = []
        for num_ues in config.sweep_ues:
            cfg = cfg_rb.replace(num_ues=num_ues)
            rows.append([num_ues,
                         _mean_coverage(cfg, "ga", workers),
                         _mean_coverage(cfg, "max", workers),
                         _mean_coverage(cfg, "random", workers)])
        path = _suffixed(out, f"_rb{rbs}") if len(rbs_values) > 1 else out
        _write_csv(path, cfg_rb, "coverage-vs-ues",
                   ["num_ues", "coverage_optimized", "coverage_max_power",
                    "coverage_random_power"], rows)
        written.append(path)
    return written


def run_coverage_vs_sinr(config: ScenarioConfig, out: str,
                         workers: int = 1) -> list[str]:
    """Coverage vs median access SINR, separated vs simultaneous slots.

    Powers are selected per trial under separated operation (via the
    configured policy) and the same vector is evaluated in both slot modes,
    so the comparison isolates the slot structure. The operating point is
    swept by a network-wide EIRP back-off applied at evaluation time.
    """
    backoffs = np.asarray(config.sweep_backoff_db, dtype=float)
    cfg_sep = config.replace(slot_mode="separated")
    cfg_sim = config.replace(slot_mode="simultaneous")
    policy = make_policy(config.power_policy, cfg_sep)

    def one(trial: int):
        inst_sep = build_instance(cfg_sep, config.seed, trial)
        inst_sim = build_instance(cfg_sim, config.seed, trial)
        powers = policy(inst_sep, derive_rng(config.seed, trial, "policy"))
        arr = powers.as_array(inst_sep.gene_ids)
        cov_sep = np.array([inst_sep.batch_coverage(arr, -b)[0] for b in backoffs])
        cov_sim = np.array([inst_sim.batch_coverage(arr, -b)[0] for b in backoffs])
        sinr_sep = np.array([inst_sep.access_sinr_db(arr, -b) for b in backoffs])
        sinr_sim = np.array([inst_sim.access_sinr_db(arr, -b) for b in backoffs])
        return cov_sep, cov_sim, sinr_sep, sinr_sim

    results = _map_ordered(one, range(config.trials), workers)
    cov_sep = np.mean([r[0] for r in results], axis=0)
    cov_sim = np.mean([r[1] for r in results], axis=0)
    sinr_sep = np.median(np.concatenate([r[2] for r in results], axis=1), axis=1)
    sinr_sim = np.median(np.concatenate([r[3] for r in results], axis=1), axis=1)
    rows = [[backoffs[i], sinr_sep[i], cov_sep[i], sinr_sim[i], cov_sim[i]]
            for i in range(len(backoffs))]
    _write_csv(out, config, "coverage-vs-sinr",
               ["backoff_db", "sep_median_sinr_db", "sep_coverage",
                "sim_median_sinr_db", "sim_coverage"], rows)
    return [out]


def run_intercell(config: ScenarioConfig, out: str,
                  workers: int = 1) -> list[str]:
    """One-cell vs two-cell coverage across the UE sweep."""
    rows = []
    for num_ues in config.sweep_ues:
        cov = []
        for cells in (1, 2):
            cfg = config.replace(num_ues=num_ues, num_cells=cells)
            cov.append(_mean_coverage(cfg, config.power_policy, workers))
        rows.append([num_ues, cov[0], cov[1]])
    _write_csv(out, config, "intercell",
               ["num_ues", "coverage_1cell", "coverage_2cell"], rows)
    return [out]


def run_power_cdf(config: ScenarioConfig, out: str,
                  workers: int = 1) -> list[str]:
    """Optimized per-node EIRPs across trials for several minimum rates."""
    rows = []
    for rate in config.powercdf_rates_bps:
        cfg = config.replace(min_rate_bps=rate)
        res = monte_carlo_coverage(cfg, "ga", cfg.trials, cfg.seed,
                                   workers=workers)
        for outcome in res.outcomes:
            topo, assoc = outcome.topology, outcome.assoc
            for node_id in sorted(outcome.powers.eirp_dbm):
                node = topo.node(node_id)
                if node.role is NodeRole.UE:
                    server = topo.node(assoc.ue_to_bs[node_id]).role.value
                else:
                    server = NodeRole.DONOR.value
                rows.append([rate, outcome.trial_index, node_id,
                             node.role.value, server,
                             outcome.powers.of(node_id)])
    _write_csv(out, config, "power-cdf",
               ["min_rate_bps", "trial", "node_id", "role", "server_role",
                "eirp_dbm"], rows)
    return [out]


def _suffixed(path: str, suffix: str) -> str:
    stem, ext = os.path.splitext(path)
    return stem + suffix + (ext or ".csv")


_RUNNERS = {
    "ga-trace": run_ga_trace,
    "coverage-vs-ues": run_coverage_vs_ues,
    "coverage-vs-sinr": run_coverage_vs_sinr,
    "intercell": run_intercell,
    "power-cdf": run_power_cdf,
}


def run_experiment(spec: ExperimentSpec, config: ScenarioConfig,
                   workers: int = 1) -> list[str]:
    """Run one experiment, returning the written CSV paths.

    On any failure every output (including partials) is removed before the
    error propagates.
    """
    written: list[str] = []
    try:
        if spec.name == "coverage-vs-ues":
            written = run_coverage_vs_ues(config, spec.out,
                                          rbs_values=spec.rbs_values,
                                          workers=workers)
        else:
            written = _RUNNERS[spec.name](config, spec.out, workers=workers)
        return written
    except BaseException:
        candidates = set(written)
        if spec.name == "coverage-vs-ues":
            candidates.update(_suffixed(spec.out, f"_rb{r}")
                              for r in spec.rbs_values)
        candidates.add(spec.out)
        for path in candidates:
            for p in (path, path + ".tmp"):
                if os.path.exists(p):
                    os.remove(p)
        raise


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

def read_csv(path: str) -> tuple[str, dict[str, str], list[str], np.ndarray,
                                 list[list[str]]]:
    """Parse an experiment CSV: (experiment, header kv, columns, numeric data,
    raw rows)."""
    experiment = ""
    header: dict[str, str] = {}
    columns: list[str] = []
    raw_rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key, value = key.strip(), value.strip()
                    if key == "experiment":
                        experiment = value
                    else:
                        header[key] = value
                continue
            if not line:
                continue
            if not columns:
                columns = line.split(",")
            else:
                raw_rows.append(line.split(","))
    if not columns:
        raise ConfigError(f"{path}: no column header found")
    numeric = np.array([[_to_float(v) for v in row] for row in raw_rows]) \
        if raw_rows else np.empty((0, len(columns)))
    return experiment, header, columns, numeric, raw_rows


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def crossing_point(x: np.ndarray, y: np.ndarray, target: float) -> Optional[float]:
    """Interpolated x where a (typically falling) curve crosses the target.

    Scanning in x order, the last downward crossing is returned; None when
    the curve never dips below the target, and the first x when it starts
    below it.
    """
    if y.size == 0:
        return None
    if y[0] < target:
        return float(x[0])
    crossing = None
    for i in range(len(x) - 1):
        y0, y1 = y[i], y[i + 1]
        if y0 >= target > y1:
            frac = (y0 - target) / (y0 - y1)
            crossing = float(x[i] + frac * (x[i + 1] - x[i]))
    return crossing


def summarize(path: str) -> str:
    """Headline statistics for an experiment CSV, as a text report."""
    experiment, _, columns, data, raw = read_csv(path)
    lines = [f"summary of {os.path.basename(path)} ({experiment or 'unknown'})"]
    if experiment == "coverage-vs-ues":
        ues = data[:, columns.index("num_ues")]
        crossings: dict[str, Optional[float]] = {}
        for col in ("coverage_optimized", "coverage_max_power",
                    "coverage_random_power"):
            cov = data[:, columns.index(col)]
            cross = crossing_point(ues, cov, 0.7)
            crossings[col] = cross
            if cross is None:
                lines.append(f"  {col}: above 70% at every swept count "
                             f"(supports >= {int(ues[-1])} UEs)")
            else:
                lines.append(f"  {col}: supports {cross:.2f} UEs at 70% coverage")
        best_base = _effective_crossing(crossings["coverage_max_power"], ues)
        best_base = max(best_base,
                        _effective_crossing(crossings["coverage_random_power"], ues))
        opt = _effective_crossing(crossings["coverage_optimized"], ues)
        if opt > best_base:
            lines.append(f"  optimized power shows positive gain at 70%: "
                         f"{opt:.2f} vs {best_base:.2f} UEs "
                         f"({opt / best_base:.2f}x)" if best_base > 0 else
                         f"  optimized power shows positive gain at 70%")
        else:
            lines.append(f"  no gain at 70%: optimized {opt:.2f} vs best "
                         f"baseline {best_base:.2f} UEs")
    elif experiment == "coverage-vs-sinr":
        gaps = {}
        for mode in ("sep", "sim"):
            cov = data[:, columns.index(f"{mode}_coverage")]
            sinr = data[:, columns.index(f"{mode}_median_sinr_db")]
            cross = crossing_point(np.arange(len(cov), dtype=float), cov, 0.7)
            if cross is None:
                gaps[mode] = None
                lines.append(f"  {mode}: coverage never crosses 70%")
            else:
                i = int(cross)
                frac = cross - i
                value = sinr[i] if i + 1 >= len(sinr) else \
                    sinr[i] + frac * (sinr[i + 1] - sinr[i])
                gaps[mode] = value
                lines.append(f"  {mode}: median access SINR at 70% coverage = "
                             f"{value:.2f} dB")
        if gaps.get("sep") is not None and gaps.get("sim") is not None:
            lines.append(f"  SINR gap at 70% (separated - simultaneous): "
                         f"{gaps['sep'] - gaps['sim']:.2f} dB")
    elif experiment == "intercell":
        c1 = data[:, columns.index("coverage_1cell")]
        c2 = data[:, columns.index("coverage_2cell")]
        delta = float(np.max(np.abs(c1 - c2))) if len(c1) else 0.0
        lines.append(f"  max |coverage(1 cell) - coverage(2 cells)| = {delta:.4f}")
    elif experiment == "ga-trace":
        for j, col in enumerate(columns[1:], start=1):
            trace = data[:, j]
            final = trace[-1]
            first = int(np.argmax(trace >= final)) + 1
            lines.append(f"  {col}: final best {final:.4f}, reached at "
                         f"iteration {first}")
    elif experiment == "power-cdf":
        rates = sorted(set(data[:, columns.index("min_rate_bps")]))
        role_col = columns.index("role")
        eirp_col = columns.index("eirp_dbm")
        rate_col = columns.index("min_rate_bps")
        for rate in rates:
            for role in ("ue", "iab"):
                values = np.array([
                    float(row[eirp_col]) for row in raw
                    if row[role_col] == role and float(row[rate_col]) == rate])
                if values.size:
                    q1, q3 = np.percentile(values, [25, 75])
                    lines.append(f"  rate {rate:.0f} bps, {role}: median "
                                 f"{np.median(values):.2f} dBm, IQR "
                                 f"{q3 - q1:.2f} dB")
    else:
        lines.append(f"  {len(raw)} data rows, columns: {', '.join(columns)}")
    return "\n".join(lines)


def _effective_crossing(cross: Optional[float], ues: np.ndarray) -> float:
    return float(ues[-1]) if cross is None else cross
