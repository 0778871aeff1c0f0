"""Config-driven experiment runner.

Subcommands map to the verification experiments; each run writes a JSON
report (config echo, seeds, tables, fits, pass/fail), CSV files of the raw
points, rendered figures, and a manifest listing every output.  Exit code 0
means every declared check passed, 1 names the failing invariant, 2 means the
configuration did not validate.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    ExperimentConfig,
    counterexample_sweep,
    duality_batch,
    exponent_violations,
    maximal_in_time_ratio,
    pointwise_convergence_scan,
    sobolev_quarter_system,
    strichartz_ratio_table,
)
from .grids import ball_grid, line_grid, torus_grid
from .norms import kernel_l2_norm, schatten_norm
from .oscillatory import (
    exp_sum_decay_scan,
    kernel_decay_scan,
    osc_integral,
    osc_integral_result,
    windowed_kernel_scan,
)
from .randomization import (
    RandomSeedPair,
    khinchin_ratio,
    stochastic_continuity_experiment,
)
from .reporting import (
    decay_report_csv,
    save_decay_figure,
    save_ratio_scatter,
    save_scaling_figure,
    save_series_figure,
    write_csv,
    write_json,
)
from .spectral import (
    CompactOperatorRep,
    operator_kernel,
    random_ball_system,
    random_band_limited_system,
)

SUBCOMMANDS = ("expsum", "kernel", "strichartz", "maximal", "converge", "randomize", "duality")

THREADS_ENV = "BQLAB_THREADS"

DEFAULT_CONFIG = {
    "seed": 7,
    "seed2": 11,
    "expsum": {
        "n_values": [64, 256, 1024],
        "t_samples": 32,
        "x_samples": 257,
        "spread_limit": 4.0,
    },
    "kernel": {
        "x_min": 0.05,
        "x_max": 1.0,
        "x_samples": 64,
        "t_values": [0.01, 0.1, 1.0],
        "s": 0.5,
        "cutoff": 64.0,
        "rel_tol": 1e-6,
        "spread_limit": 4.0,
        "window_scales": [0, 1, 2, 3, 4, 5, 6],
        "window_t": 0.5,
    },
    "strichartz": {
        "n_values": [64, 128, 256, 512, 1024],
        "p": 4.0,
        "q": 2.0,
        "beta": 4.0 / 3.0,
        "rank": 8,
        "n_t": 32,
        "systems_per_n": 20,
        "triples": [[4.0, 2.0, 4.0 / 3.0], [3.0, 3.0, 1.5], ["inf", 1.0, 1.0]],
        "slope_tol": 0.05,
        "spread_limit": 4.0,
    },
    "maximal": {
        "n_values": [64, 128, 256, 512, 1024],
        "beta": 2.0,
        "n_t": 32,
        "ranks": [1, 2, 4, 8, 16],
        "rank_beta": 1.5,
        "max_mode": 32,
        "line_points": 2048,
        "t_samples": 64,
        "slope_tol": 0.05,
        "spread_limit": 4.0,
    },
    "converge": {
        "line_points": 2048,
        "max_mode": 32,
        "rank": 4,
        "m_range": [2, 12],
        "ratio_limit": 0.01,
        "noise_tol": 0.05,
    },
    "randomize": {
        "khinchin_samples": 10000,
        "khinchin_tol": 0.05,
        "n_samples": 1000,
        "r": 2.0,
        "m_range": [2, 12],
        "ratio_limit": 0.1,
        "rank": 4,
        "torus_points": 256,
        "torus_max_mode": 2,
        "line_points": 1024,
        "line_max_mode": 24,
        "ball_points": 128,
        "ball_modes": 4,
    },
    "duality": {
        "batch": 32,
        "p": 4.0,
        "q": 2.0,
        "beta": 4.0 / 3.0,
        "n_max": 16,
        "n_x": 64,
        "n_t": 64,
        "rank": 4,
        "identity_tol": 1e-8,
    },
}


# ---------------------------------------------------------------------------
# configuration handling
# ---------------------------------------------------------------------------


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _positive_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def _positive_number(v) -> bool:
    return _is_number(v) and v > 0


def _int_list(v) -> bool:
    return isinstance(v, list) and len(v) >= 1 and all(isinstance(x, int) for x in v)


def _number_list(v) -> bool:
    return isinstance(v, list) and len(v) >= 1 and all(_is_number(x) for x in v)


_FIELD_CHECKS = {
    "seed": (lambda v: isinstance(v, int) and v >= 0, "nonnegative integer"),
    "seed2": (lambda v: isinstance(v, int) and v >= 0, "nonnegative integer"),
    "expsum.n_values": (_int_list, "list of integers"),
    "expsum.t_samples": (_positive_int, "integer >= 1"),
    "expsum.x_samples": (_positive_int, "integer >= 1"),
    "expsum.spread_limit": (_positive_number, "positive number"),
    "kernel.x_min": (_positive_number, "positive number"),
    "kernel.x_max": (_positive_number, "positive number"),
    "kernel.x_samples": (_positive_int, "integer >= 1"),
    "kernel.t_values": (_number_list, "list of numbers"),
    "kernel.s": (lambda v: _is_number(v) and v < 1.0, "number < 1"),
    "kernel.cutoff": (_positive_number, "positive number"),
    "kernel.rel_tol": (_positive_number, "positive number"),
    "kernel.spread_limit": (_positive_number, "positive number"),
    "kernel.window_scales": (_int_list, "list of integers"),
    "kernel.window_t": (lambda v: _is_number(v) and abs(v) <= 1.0, "number with |t| <= 1"),
    "strichartz.n_values": (_int_list, "list of integers"),
    "strichartz.p": (_positive_number, "positive number"),
    "strichartz.q": (_positive_number, "positive number"),
    "strichartz.beta": (_positive_number, "positive number"),
    "strichartz.rank": (_positive_int, "integer >= 1"),
    "strichartz.n_t": (_positive_int, "integer >= 1"),
    "strichartz.systems_per_n": (_positive_int, "integer >= 1"),
    "strichartz.triples": (lambda v: isinstance(v, list) and len(v) >= 1, "list of [p, q, beta]"),
    "strichartz.slope_tol": (_positive_number, "positive number"),
    "strichartz.spread_limit": (_positive_number, "positive number"),
    "maximal.n_values": (_int_list, "list of integers"),
    "maximal.beta": (_positive_number, "positive number"),
    "maximal.n_t": (_positive_int, "integer >= 1"),
    "maximal.ranks": (_int_list, "list of integers"),
    "maximal.rank_beta": (_positive_number, "positive number"),
    "maximal.max_mode": (_positive_int, "integer >= 1"),
    "maximal.line_points": (_positive_int, "integer >= 1"),
    "maximal.t_samples": (_positive_int, "integer >= 1"),
    "maximal.slope_tol": (_positive_number, "positive number"),
    "maximal.spread_limit": (_positive_number, "positive number"),
    "converge.line_points": (_positive_int, "integer >= 1"),
    "converge.max_mode": (_positive_int, "integer >= 1"),
    "converge.rank": (_positive_int, "integer >= 1"),
    "converge.m_range": (lambda v: _int_list(v) and len(v) == 2 and v[0] < v[1], "pair [m_lo, m_hi]"),
    "converge.ratio_limit": (_positive_number, "positive number"),
    "converge.noise_tol": (_positive_number, "positive number"),
    "randomize.khinchin_samples": (_positive_int, "integer >= 1"),
    "randomize.khinchin_tol": (_positive_number, "positive number"),
    "randomize.n_samples": (_positive_int, "integer >= 1"),
    "randomize.r": (lambda v: _is_number(v) and v >= 2.0, "number >= 2"),
    "randomize.m_range": (lambda v: _int_list(v) and len(v) == 2 and v[0] < v[1], "pair [m_lo, m_hi]"),
    "randomize.ratio_limit": (_positive_number, "positive number"),
    "randomize.rank": (_positive_int, "integer >= 1"),
    "randomize.torus_points": (_positive_int, "integer >= 1"),
    "randomize.torus_max_mode": (_positive_int, "integer >= 1"),
    "randomize.line_points": (_positive_int, "integer >= 1"),
    "randomize.line_max_mode": (_positive_int, "integer >= 1"),
    "randomize.ball_points": (_positive_int, "integer >= 1"),
    "randomize.ball_modes": (_positive_int, "integer >= 1"),
    "duality.batch": (_positive_int, "integer >= 1"),
    "duality.p": (_positive_number, "positive number"),
    "duality.q": (_positive_number, "positive number"),
    "duality.beta": (_positive_number, "positive number"),
    "duality.n_max": (_positive_int, "integer >= 1"),
    "duality.n_x": (_positive_int, "integer >= 1"),
    "duality.n_t": (_positive_int, "integer >= 1"),
    "duality.rank": (_positive_int, "integer >= 1"),
    "duality.identity_tol": (_positive_number, "positive number"),
}


def _parse_exponent(v) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "infinity"):
            return math.inf
        raise ValueError(f"not an exponent: {v!r}")
    return float(v)


def validate_config(config) -> list[str]:
    """Pure validation: an empty list means the configuration is runnable."""
    out = []
    if not isinstance(config, dict):
        return ["config root must be an object"]
    for key, value in config.items():
        if key in ("seed", "seed2"):
            check, desc = _FIELD_CHECKS[key]
            if not check(value):
                out.append(f"{key}: expected {desc} (got {value!r})")
            continue
        if key not in SUBCOMMANDS:
            out.append(f"{key}: unknown section")
            continue
        if not isinstance(value, dict):
            out.append(f"{key}: expected an object")
            continue
        for field_name, field_value in value.items():
            path = f"{key}.{field_name}"
            if path not in _FIELD_CHECKS:
                out.append(f"{path}: unknown field")
                continue
            check, desc = _FIELD_CHECKS[path]
            if not check(field_value):
                out.append(f"{path}: expected {desc} (got {field_value!r})")
    if out:
        return out

    for section in ("expsum", "strichartz", "maximal"):
        for n in config[section]["n_values"]:
            if n < 1:
                out.append(f"{section}.n_values: N must be >= 1 (got {n})")
    sc = config["strichartz"]
    for msg in exponent_violations(sc["p"], sc["q"], sc["beta"]):
        out.append(f"strichartz: {msg}")
    for triple in sc["triples"]:
        try:
            p, q, beta = (_parse_exponent(v) for v in triple)
        except (ValueError, TypeError):
            out.append(f"strichartz.triples: malformed triple {triple!r}")
            continue
        for msg in exponent_violations(p, q, beta):
            out.append(f"strichartz.triples {triple!r}: {msg}")
    if config["maximal"]["beta"] > 2.0:
        out.append("maximal: beta exceeds 2 (the maximal-in-space bound region)")
    if config["maximal"]["rank_beta"] >= 2.0:
        out.append("maximal: rank_beta must satisfy beta < 2 (maximal-in-time bound region)")
    if config["kernel"]["x_min"] >= config["kernel"]["x_max"]:
        out.append("kernel: x_min must be below x_max")
    for t in config["kernel"]["t_values"]:
        if not 0 < abs(t) <= 1:
            out.append(f"kernel.t_values: need 0 < |t| <= 1 (got {t})")
    return out


def _deep_merge(base: dict, extra: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _apply_override(config: dict, text: str) -> None:
    if "=" not in text:
        raise ValueError(f"override must look like key=value (got {text!r})")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


# ---------------------------------------------------------------------------
# checks and manifests
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def payload(self):
        return {"passed": self.passed, "detail": self.detail}


def _within(name, value, target, tol) -> Check:
    ok = abs(value - target) <= tol
    return Check(name, ok, f"value {value:.6g}, target {target:.6g} +/- {tol:g}")


def _spread(name, values, limit) -> Check:
    values = [float(v) for v in values]
    spread = max(values) / min(values) if min(values) > 0 else math.inf
    return Check(name, spread <= limit, f"max/min spread {spread:.4g}, limit {limit:g}")


class Reporter:
    """Collects files and checks for one experiment and writes its report."""

    def __init__(self, name: str, out_dir: Path, config: dict, seeds: RandomSeedPair):
        self.name = name
        self.dir = Path(out_dir) / name
        self.config = config
        self.seeds = seeds
        self.files: list[str] = []
        self.checks: list[Check] = []
        self.tables: dict = {}

    def path(self, filename: str) -> Path:
        self.files.append(filename)
        return self.dir / filename

    def seed_comments(self):
        return (f"seed_omega={self.seeds.seed_omega} seed_eigen={self.seeds.seed_eigen}",)

    def finish(self, duration: float, config_path: str | None, threads: int) -> bool:
        payload = {
            "experiment": self.name,
            "config": self.config,
            "seeds": {"seed_omega": self.seeds.seed_omega, "seed_eigen": self.seeds.seed_eigen},
            "tables": self.tables,
            "checks": {c.name: c.payload() for c in self.checks},
            "version": __version__,
        }
        write_json(self.path("report.json"), payload)
        manifest = {
            "experiment": self.name,
            "config_path": config_path,
            "output_dir": str(self.dir),
            "seeds": {"seed_omega": self.seeds.seed_omega, "seed_eigen": self.seeds.seed_eigen},
            "version": __version__,
            "threads": threads,
            "duration_seconds": duration,
            "outputs": sorted(set(self.files) | {"manifest.json"}),
        }
        write_json(self.dir / "manifest.json", manifest)
        return all(c.passed for c in self.checks)


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------


def _run_expsum(rep: Reporter):
    cfg = rep.config
    report = exp_sum_decay_scan(cfg["n_values"], cfg["t_samples"], cfg["x_samples"])
    decay_report_csv(rep.path("decay.csv"), report, comments=rep.seed_comments())
    save_decay_figure(rep.path("decay.png"), report, "t", "exponential-sum decay, |S_N| vs C t^{-1/2}")
    rep.tables["slice_max"] = [[n, r] for n, r in report.slice_max]
    rep.checks.append(_spread("decay_spread_across_N", [r for _, r in report.slice_max], cfg["spread_limit"]))


def _run_kernel(rep: Reporter):
    cfg = rep.config
    xs = np.linspace(cfg["x_min"], cfg["x_max"], cfg["x_samples"])
    report = kernel_decay_scan(xs, cfg["t_values"], cfg["s"], cfg["cutoff"], cfg["rel_tol"])
    decay_report_csv(rep.path("kernel.csv"), report, comments=rep.seed_comments())
    save_decay_figure(rep.path("kernel.png"), report, "x", "oscillatory kernel, |I| vs C x^{-1/2}")
    rep.tables["slice_max"] = [[t, r] for t, r in report.slice_max]
    rep.checks.append(_spread("kernel_spread_across_t", [r for _, r in report.slice_max], cfg["spread_limit"]))

    res = osc_integral_result(cfg["x_min"], max(cfg["t_values"]), cfg["s"], cfg["cutoff"], rel_tol=cfg["rel_tol"])
    again = osc_integral(cfg["x_min"], max(cfg["t_values"]), cfg["s"], cfg["cutoff"], step=res.step / 2.0, rel_tol=None)
    change = abs(again - res.value) / abs(res.value)
    rep.tables["self_convergence"] = {"accepted_step": res.step, "halving_change": change}
    rep.checks.append(Check("self_convergence", change <= cfg["rel_tol"],
                            f"extra halving changed the value by {change:.3e} (tol {cfg['rel_tol']:g})"))

    wrep = windowed_kernel_scan(cfg["window_scales"], cfg["window_t"], s=0.0)
    decay_report_csv(rep.path("windowed.csv"), wrep, comments=rep.seed_comments())
    save_decay_figure(rep.path("windowed.png"), wrep, "x", "dyadic windowed kernel vs claimed bound")
    rep.tables["window_slice_max"] = [[k, r] for k, r in wrep.slice_max]
    finite = all(math.isfinite(r) for _, r in wrep.slice_max)
    rep.checks.append(Check("windowed_ratios_finite", finite, "normalized constants finite across window scales"))


def _run_strichartz(rep: Reporter):
    cfg = rep.config
    p, q, beta = cfg["p"], cfg["q"], cfg["beta"]
    lhs_fit, ratio_fit = counterexample_sweep(cfg["n_values"], p, q, beta, cfg["n_t"])
    threshold = 2.0 * q / (q + 1.0)
    _, thr_fit = counterexample_sweep(cfg["n_values"], p, q, threshold, cfg["n_t"])
    write_csv(
        rep.path("counterexample.csv"),
        ("N", "lhs", "ratio_at_beta", "ratio_at_threshold"),
        [
            (n, lhs_fit.values[i], ratio_fit.values[i], thr_fit.values[i])
            for i, n in enumerate(cfg["n_values"])
        ],
        comments=rep.seed_comments(),
    )
    save_scaling_figure(
        rep.path("counterexample.png"),
        {"LHS": lhs_fit, f"LHS/RHS at beta={beta:.4g}": ratio_fit},
        "mode-range counterexample scaling",
    )
    rep.tables["counterexample"] = {
        "lhs_slope": lhs_fit.slope,
        "ratio_slope": ratio_fit.slope,
        "ratio_claim": ratio_fit.claimed_exponent,
        "threshold_beta": threshold,
        "threshold_slope": thr_fit.slope,
    }
    tol = cfg["slope_tol"]
    rep.checks.append(_within("counterexample_lhs_slope", lhs_fit.slope, 1.0, tol))
    rep.checks.append(_within("counterexample_ratio_slope", ratio_fit.slope, ratio_fit.claimed_exponent, tol))
    rep.checks.append(_within("counterexample_threshold_slope", thr_fit.slope, 0.0, tol))

    rows = []
    groups = {}
    for i, triple in enumerate(cfg["triples"]):
        tp, tq, tb = (_parse_exponent(v) for v in triple)
        table = strichartz_ratio_table(
            ExperimentConfig(
                p=tp, q=tq, beta=tb,
                n_values=tuple(cfg["n_values"]),
                n_t=cfg["n_t"], rank=cfg["rank"],
                systems_per_n=cfg["systems_per_n"],
                seeds=RandomSeedPair(rep.seeds.seed_omega + i, rep.seeds.seed_eigen + i),
            )
        )
        label = f"p={triple[0]},q={triple[1]},beta={float(tb):.4g}"
        rows.extend((label, n, s, r) for n, s, r in table)
        groups[label] = ([n for n, _, _ in table], [r for _, _, r in table])
        rep.checks.append(_spread(f"typicality_spread_{i}", [r for _, _, r in table], cfg["spread_limit"]))
    write_csv(rep.path("typicality.csv"), ("exponents", "N", "sample", "ratio"), rows,
              comments=rep.seed_comments())
    save_ratio_scatter(rep.path("typicality.png"), groups,
                       "random-system ratios LHS / (N^{1/p} ||lambda||_beta)", "N", "ratio")
    rep.tables["typicality_rows"] = len(rows)


def _run_maximal(rep: Reporter):
    cfg = rep.config
    lhs_fit, ratio_fit = counterexample_sweep(
        cfg["n_values"], 4.0, 2.0, cfg["beta"], cfg["n_t"], maximal=True
    )
    write_csv(
        rep.path("maximal_space.csv"),
        ("N", "lhs", "ratio"),
        [(n, lhs_fit.values[i], ratio_fit.values[i]) for i, n in enumerate(cfg["n_values"])],
        comments=rep.seed_comments(),
    )
    save_scaling_figure(rep.path("maximal_space.png"),
                        {"LHS (L^2_t L^inf_x)": lhs_fit, "LHS/RHS": ratio_fit},
                        "maximal-in-space counterexample scaling")
    tol = cfg["slope_tol"]
    rep.tables["maximal_space"] = {
        "lhs_slope": lhs_fit.slope,
        "ratio_slope": ratio_fit.slope,
        "ratio_claim": ratio_fit.claimed_exponent,
    }
    rep.checks.append(_within("maximal_space_lhs_slope", lhs_fit.slope, 1.0, tol))
    rep.checks.append(_within("maximal_space_ratio_slope", ratio_fit.slope, ratio_fit.claimed_exponent, tol))

    grid = line_grid(cfg["line_points"])
    rng = np.random.Generator(np.random.Philox(rep.seeds.seed_omega))
    ratios = []
    for rank in cfg["ranks"]:
        system = sobolev_quarter_system(grid, rank, cfg["max_mode"], rng)
        op = CompactOperatorRep(np.ones(rank), system)
        ratios.append(maximal_in_time_ratio(op, cfg["rank_beta"], t_samples=cfg["t_samples"]))
    write_csv(rep.path("maximal_time.csv"), ("rank", "ratio"),
              list(zip(cfg["ranks"], ratios)), comments=rep.seed_comments())
    save_series_figure(rep.path("maximal_time.png"), cfg["ranks"], {"ratio": ratios},
                       "maximal-in-time ratio across ranks", "rank", "LHS / ||lambda||_beta")
    rep.tables["maximal_time"] = {"ranks": list(cfg["ranks"]), "ratios": ratios}
    rep.checks.append(_spread("maximal_time_rank_spread", ratios, cfg["spread_limit"]))


def _run_converge(rep: Reporter):
    cfg = rep.config
    grid = line_grid(cfg["line_points"])
    rng = np.random.Generator(np.random.Philox(rep.seeds.seed_omega))
    system = random_band_limited_system(grid, cfg["rank"], cfg["max_mode"], rng)
    lam = np.linspace(1.0, 0.2, cfg["rank"])
    op = CompactOperatorRep(lam, system)
    m_lo, m_hi = cfg["m_range"]
    t_list = [2.0**-m for m in range(m_lo, m_hi + 1)]
    table = pointwise_convergence_scan(op, t_list)
    write_csv(rep.path("convergence.csv"), ("t", "sup_deviation"), table.rows(),
              comments=rep.seed_comments())
    save_series_figure(rep.path("convergence.png"), table.t,
                       {"sup |rho_t - rho_0|": table.sup_deviation},
                       "pointwise convergence of the density", "t", "sup deviation")
    dev = table.sup_deviation
    ratio = float(dev[-1] / dev[0])
    monotone = bool(np.all(np.diff(dev) < cfg["noise_tol"] * dev[:-1]))
    rep.tables["convergence"] = {"t": table.t.tolist(), "sup_deviation": dev.tolist(), "ratio": ratio}
    rep.checks.append(Check("convergence_ratio", ratio <= cfg["ratio_limit"],
                            f"deviation at t=2^-{m_hi} is {ratio:.3%} of t=2^-{m_lo} (limit {cfg['ratio_limit']:.0%})"))
    rep.checks.append(Check("convergence_monotone", monotone,
                            f"decreasing within {cfg['noise_tol']:.0%} noise"))


def _stochastic_case(rep: Reporter, name: str, op: CompactOperatorRep, cfg: dict, offset: int):
    m_lo, m_hi = cfg["m_range"]
    t_list = [2.0**-m for m in range(m_lo, m_hi + 1)] + [0.0]
    seeds = RandomSeedPair(rep.seeds.seed_omega + offset, rep.seeds.seed_eigen + offset)
    table = stochastic_continuity_experiment(op, t_list, cfg["r"], cfg["n_samples"], seeds)
    write_csv(
        rep.path(f"stochastic_{name}.csv"),
        ("t", "point_norm", "l2_norm"),
        table.rows(),
        comments=(f"seed_omega={seeds.seed_omega} seed_eigen={seeds.seed_eigen}",
                  f"x0={table.x0!r} r={cfg['r']} n_samples={cfg['n_samples']}"),
    )
    save_series_figure(rep.path(f"stochastic_{name}.png"), table.t[:-1],
                       {"point": table.point_norm[:-1], "L2_x": table.l2_norm[:-1]},
                       f"stochastic continuity on the {name}", "t", "MC L^r norm of F")
    zero_ok = table.point_norm[-1] == 0.0 and table.l2_norm[-1] == 0.0
    ratio = float(table.point_norm[-2] / table.point_norm[0])
    rep.tables[f"stochastic_{name}"] = {
        "t": table.t.tolist(), "point_norm": table.point_norm.tolist(),
        "l2_norm": table.l2_norm.tolist(), "ratio": ratio,
    }
    rep.checks.append(Check(f"stochastic_{name}_zero_at_t0", zero_ok, "t=0 entry is exactly zero"))
    rep.checks.append(Check(f"stochastic_{name}_ratio", ratio <= cfg["ratio_limit"],
                            f"norm at t=2^-{cfg['m_range'][1]} is {ratio:.3%} of t=2^-{cfg['m_range'][0]}"))


def _run_randomize(rep: Reporter):
    cfg = rep.config
    rng = np.random.Generator(np.random.Philox(rep.seeds.seed_omega))
    coeffs = np.array([0.3, 1.2, -0.7, 0.1])
    r2 = khinchin_ratio(coeffs, 2.0, cfg["khinchin_samples"], rng)
    r4 = khinchin_ratio(coeffs, 4.0, cfg["khinchin_samples"], rng)
    write_csv(rep.path("khinchin.csv"), ("r", "ratio", "target"),
              [(2.0, r2, 1.0), (4.0, r4, 3.0**0.25)], comments=rep.seed_comments())
    rep.tables["khinchin"] = {"r2": r2, "r4": r4}
    rep.checks.append(_within("khinchin_r2", r2, 1.0, cfg["khinchin_tol"]))
    rep.checks.append(_within("khinchin_r4", r4, 3.0**0.25, cfg["khinchin_tol"]))

    lam = np.linspace(1.0, 0.2, cfg["rank"])
    maker = np.random.Generator(np.random.Philox(rep.seeds.seed_eigen))
    torus_syst = random_band_limited_system(torus_grid(cfg["torus_points"]), cfg["rank"],
                                            cfg["torus_max_mode"], maker)
    _stochastic_case(rep, "torus", CompactOperatorRep(lam, torus_syst), cfg, offset=1)
    line_syst = random_band_limited_system(line_grid(cfg["line_points"]), cfg["rank"],
                                           cfg["line_max_mode"], maker)
    _stochastic_case(rep, "line", CompactOperatorRep(lam, line_syst), cfg, offset=2)
    ball_syst = random_ball_system(ball_grid(cfg["ball_points"]), cfg["rank"],
                                   cfg["ball_modes"], maker)
    _stochastic_case(rep, "ball", CompactOperatorRep(lam, ball_syst), cfg, offset=3)


def _run_duality(rep: Reporter):
    cfg = rep.config
    result = duality_batch(cfg["batch"], cfg["p"], cfg["q"], cfg["beta"], cfg["n_max"],
                           cfg["n_x"], cfg["n_t"], cfg["rank"], rep.seeds)
    write_csv(
        rep.path("duality.csv"),
        ("sample", "primal", "dual", "witness_dual", "pairing_gap"),
        [(i, r.primal, r.dual, r.witness_dual, r.pairing_gap) for i, r in enumerate(result.records)],
        comments=rep.seed_comments(),
    )
    save_ratio_scatter(
        rep.path("duality.png"),
        {
            "primal": (np.arange(1, len(result.records) + 1), [r.primal for r in result.records]),
            "witness dual": (np.arange(1, len(result.records) + 1), [r.witness_dual for r in result.records]),
        },
        f"duality batch (dual constant {result.dual_constant:.4g})",
        "sample", "ratio",
    )
    rep.tables["duality"] = {
        "dual_constant": result.dual_constant,
        "primal_max": max(r.primal for r in result.records),
        "pairing_gap_max": max(r.pairing_gap for r in result.records),
    }
    rep.checks.append(Check("duality_holds", result.holds,
                            f"every primal ratio below the dual constant {result.dual_constant:.4g}"))

    grid = torus_grid(cfg["n_x"])
    rng = np.random.Generator(np.random.Philox(rep.seeds.seed_omega + 99))
    system = random_band_limited_system(grid, cfg["rank"], cfg["n_max"], rng)
    op = CompactOperatorRep(rng.uniform(0.2, 1.0, cfg["rank"]), system)
    kernel = operator_kernel(op, 0.3)
    s2_matrix = schatten_norm(kernel, 2.0, grid.cell_measure)
    s2_kernel = kernel_l2_norm(kernel, grid.cell_measure)
    diff = abs(s2_matrix - s2_kernel) / max(1.0, s2_kernel)
    rep.tables["schatten2_kernel"] = {"schatten": s2_matrix, "kernel_l2": s2_kernel}
    rep.checks.append(Check("schatten2_kernel_identity", diff <= cfg["identity_tol"],
                            f"Schatten-2 vs kernel L2 differ by {diff:.3e} (tol {cfg['identity_tol']:g})"))


_RUNNERS = {
    "expsum": _run_expsum,
    "kernel": _run_kernel,
    "strichartz": _run_strichartz,
    "maximal": _run_maximal,
    "converge": _run_converge,
    "randomize": _run_randomize,
    "duality": _run_duality,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bqlab",
        description="Run the propagator verification experiments and write reports.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS + ("all",))
    parser.add_argument("--config", help="JSON config file (defaults are built in)")
    parser.add_argument("--out", default="runs", help="output directory (default: runs)")
    parser.add_argument("--seed", type=int, help="function-randomization stream seed")
    parser.add_argument("--seed2", type=int, help="eigenvalue stream seed")
    parser.add_argument("--threads", type=int,
                        help=f"worker cap (overrides ${THREADS_ENV}; computation is deterministic)")
    parser.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, repeatable (dotted keys, JSON values)")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    return parser


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return 1


def run(subcommand: str, config: dict, out_dir, seeds: RandomSeedPair,
        config_path: str | None = None, threads: int = 1, figures: bool = True) -> tuple[bool, list[str]]:
    """Execute one experiment; returns (all checks passed, failure names)."""
    rep = Reporter(subcommand, Path(out_dir), config[subcommand], seeds)
    if not figures:
        # reporting helpers are only reached through rep.path; drop figure files
        original_path = rep.path

        def path_no_fig(filename):
            if filename.endswith(".png"):
                return Path(os.devnull)
            return original_path(filename)

        rep.path = path_no_fig  # type: ignore[method-assign]
    start = time.perf_counter()
    _RUNNERS[subcommand](rep)
    ok = rep.finish(time.perf_counter() - start, config_path, threads)
    failures = [f"{subcommand}.{c.name}" for c in rep.checks if not c.passed]
    return ok, failures


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = copy.deepcopy(DEFAULT_CONFIG)
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            print(f"error: config file not found: {path}", file=sys.stderr)
            return 2
        try:
            loaded = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            print(f"error: {path}:{err.lineno}:{err.colno}: {err.msg}", file=sys.stderr)
            return 2
        if not isinstance(loaded, dict):
            print("error: config root must be a JSON object", file=sys.stderr)
            return 2
        config = _deep_merge(config, loaded)
    for text in args.override:
        try:
            _apply_override(config, text)
        except ValueError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
    if args.seed is not None:
        config["seed"] = args.seed
    if args.seed2 is not None:
        config["seed2"] = args.seed2

    violations = validate_config(config)
    if violations:
        for v in violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2

    seeds = RandomSeedPair(config["seed"], config["seed2"])
    threads = _resolve_threads(args)
    subs = SUBCOMMANDS if args.subcommand == "all" else (args.subcommand,)
    all_failures: list[str] = []
    for sub in subs:
        ok, failures = run(sub, config, args.out, seeds, args.config, threads,
                           figures=not args.no_figures)
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {sub} -> {Path(args.out) / sub}")
        all_failures.extend(failures)
    if all_failures:
        for name in all_failures:
            print(f"check failed: {name}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
