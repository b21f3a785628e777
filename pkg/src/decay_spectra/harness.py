"""Seeded Monte Carlo experiment runners with mergeable, byte-stable reports.

An experiment is a pure function of (config, trial index): every trial derives
its own seed chain from the master seed, so reports are identical no matter
how many worker processes execute the trials.  Aggregates carry exact rational
sums and sums of squares, which makes merging reports from disjoint trial
ranges bit-exact against a single combined run.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction
from functools import partial
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import stats

from .errors import NumericalError
from .limits import (LINEAR, LOG_RATIO, sample_clock, sample_limit_shape_critical,
                     sample_poisson_process, sample_sine_beta, simulate_rtilde)
from .operators import (discretize, eigenvalues_in_window, eigenvector,
                        free_operator, sturm_count)
from .pointproc import (energy_preimage, gap_statistics, local_process,
                        two_sample_ks)
from .potential import (DC, DECAYING, Envelope, FourierFunction, lyapunov_tau,
                        resolvent_function, sample_potential, sample_torus_path)
from .prufer import final_phases, integrate_prufer, shooting_eigenvalue
from .seeding import derive_seed
from .shape import (ShapeMeasure, cdf_distance, concentration_mass,
                    localization_center, shape_from_eigenpair,
                    shape_from_radius, tail_exponent)

LOCAL = "local"
GLOBAL = "global"
LIMIT = "limit"
CROSSCHECK = "crosscheck"
EXPERIMENTS = (LOCAL, GLOBAL, LIMIT, CROSSCHECK)

SEED_ENV_VAR = "DECAY_SPECTRA_SEED"
_FORMAT_VERSION = 1
_CONCENTRATION_WIDTH = 0.05
_LOCAL_DEFAULT_WINDOW = (-10.0 * math.pi, 10.0 * math.pi)
_GLOBAL_DEFAULT_WINDOW = (1.0 / 32.0, 1.0 / 8.0)
_CROSSCHECK_WINDOW = (0.2, 0.3)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment; hashable into a config digest.

    window means the rescaled-eigenvalue window for local/limit runs and the
    energy window J for global runs; None picks the experiment's default.
    """

    experiment: str
    alpha: float = 0.5
    e0: float = 1.0 / 16.0
    window: Optional[Tuple[float, float]] = None
    n: float = 2000.0
    h: float = 0.05
    cells: int = 256
    trials: int = 100
    master_seed: int = 0
    variant: str = DECAYING

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be a finite non-negative real")
        if not self.e0 > 0:
            raise ValueError("e0 must be positive")
        if not self.n > 0:
            raise ValueError("n must be positive")
        if not 0 < self.h <= self.n:
            raise ValueError("h must satisfy 0 < h <= n")
        if self.cells < 32:
            raise ValueError("cells must be at least 32")
        if self.trials < 0:
            raise ValueError("trials must be non-negative")
        if self.variant not in (DECAYING, DC):
            raise ValueError(f"variant must be {DECAYING!r} or {DC!r}")
        window = self.window
        if window is None:
            window = (_GLOBAL_DEFAULT_WINDOW if self.experiment == GLOBAL else
                      _CROSSCHECK_WINDOW if self.experiment == CROSSCHECK else
                      _LOCAL_DEFAULT_WINDOW)
        lo, hi = float(window[0]), float(window[1])
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError("window must be a finite pair with lo < hi")
        if self.experiment == GLOBAL and not lo > 0:
            raise ValueError("global experiment requires an energy window with lo > 0")
        object.__setattr__(self, "window", (lo, hi))

    @classmethod
    def from_dict(cls, data: dict, apply_env: bool = True) -> "ExperimentConfig":
        """Build from a plain mapping; unknown keys are an error.  When
        apply_env is set, DECAY_SPECTRA_SEED overrides master_seed."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        merged = dict(data)
        if "window" in merged and merged["window"] is not None:
            win = merged["window"]
            if not (hasattr(win, "__len__") and len(win) == 2):
                raise ValueError("window must be a pair [lo, hi]")
            merged["window"] = (float(win[0]), float(win[1]))
        for key in ("alpha", "e0", "n", "h"):
            if key in merged:
                merged[key] = float(merged[key])
        for key in ("cells", "trials", "master_seed"):
            if key in merged:
                merged[key] = int(merged[key])
        if apply_env and os.environ.get(SEED_ENV_VAR):
            merged["master_seed"] = int(os.environ[SEED_ENV_VAR])
        return cls(**merged)

    @classmethod
    def from_json(cls, path, apply_env: bool = True) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data, apply_env=apply_env)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "alpha": self.alpha,
            "e0": self.e0,
            "window": [self.window[0], self.window[1]],
            "n": self.n,
            "h": self.h,
            "cells": self.cells,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "variant": self.variant,
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True,
                             separators=(",", ":")).encode()
        return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class Aggregate:
    """Count / sum / sum-of-squares accumulator over exact rationals.

    Floats enter as exact dyadic fractions, so folding and merging are
    associative with no rounding: any split of the trials reproduces the
    combined run bit for bit.
    """

    count: int = 0
    total: Fraction = Fraction(0)
    total_sq: Fraction = Fraction(0)

    def add(self, value) -> "Aggregate":
        frac = Fraction(value)
        return Aggregate(self.count + 1, self.total + frac,
                         self.total_sq + frac * frac)

    def merge(self, other: "Aggregate") -> "Aggregate":
        return Aggregate(self.count + other.count, self.total + other.total,
                         self.total_sq + other.total_sq)

    def mean_fraction(self) -> Fraction:
        if self.count == 0:
            raise ValueError("empty aggregate has no mean")
        return self.total / self.count

    def variance_fraction(self) -> Fraction:
        # unbiased (ddof = 1); exact, so never negative beyond rounding
        if self.count < 2:
            raise ValueError("variance needs at least two values")
        centered = self.total_sq - self.total * self.total / self.count
        return max(centered, Fraction(0)) / (self.count - 1)

    @property
    def mean(self) -> float:
        return float(self.mean_fraction())

    @property
    def sd(self) -> float:
        return math.sqrt(float(self.variance_fraction()))

    @property
    def stderr(self) -> float:
        return self.sd / math.sqrt(self.count)

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "sum": [str(self.total.numerator), str(self.total.denominator)],
            "sumsq": [str(self.total_sq.numerator), str(self.total_sq.denominator)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Aggregate":
        return cls(int(data["count"]),
                   Fraction(int(data["sum"][0]), int(data["sum"][1])),
                   Fraction(int(data["sumsq"][0]), int(data["sumsq"][1])))


@dataclass(frozen=True)
class RunReport:
    """Config echo, per-trial rows, exact aggregates, derived statistics.

    wall_time is informational only and never serialized, so reports stay
    byte-identical across worker counts and machines.
    """

    config: ExperimentConfig
    rows: Tuple[dict, ...]
    aggregates: Dict[str, Aggregate]
    statistics: Dict[str, float]
    skipped: Tuple[int, ...]
    wall_time: float = field(default=0.0, compare=False)

    def to_json_dict(self) -> dict:
        return {
            "format": _FORMAT_VERSION,
            "config": self.config.to_dict(),
            "rows": list(self.rows),
            "aggregates": {k: v.to_json() for k, v in self.aggregates.items()},
            "statistics": dict(self.statistics),
            "skipped": list(self.skipped),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RunReport":
        config = ExperimentConfig.from_dict(doc["config"], apply_env=False)
        aggregates = {k: Aggregate.from_json(v)
                      for k, v in doc.get("aggregates", {}).items()}
        return cls(config=config, rows=tuple(doc.get("rows", ())),
                   aggregates=aggregates,
                   statistics=dict(doc.get("statistics", {})),
                   skipped=tuple(int(i) for i in doc.get("skipped", ())))

    @classmethod
    def load(cls, path) -> "RunReport":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# per-trial computations


def _model_tau(e0: float) -> float:
    return lyapunov_tau(FourierFunction.cosine(), e0)


def _build_operator(cfg: ExperimentConfig, seed: int):
    path = sample_torus_path(cfg.n, cfg.h, seed=seed)
    if cfg.variant == DC:
        env = Envelope(alpha=cfg.alpha, variant=DC, dc_scale_n=cfg.n)
    else:
        env = Envelope(alpha=cfg.alpha)
    pot = sample_potential(path, env, FourierFunction.cosine(), cfg.n)
    return pot, discretize(pot)


def _candidate_marks(op, energies, cfg: ExperimentConfig):
    """Shape marks for candidate eigenvalues; clustered levels fall back to a
    deflated solve and an unresolvable one becomes a None mark."""
    marks = []
    found = []
    for e in energies:
        try:
            pair = eigenvector(op, float(e))
        except NumericalError:
            try:
                pair = eigenvector(op, float(e), orthogonal_to=found)
            except NumericalError:
                marks.append(None)
                continue
        found.append(pair.vector)
        marks.append(shape_from_eigenpair(pair, pair.energy, cfg.n, cfg.cells))
    return tuple(marks)


def _mark_summaries(proc):
    centers, distances = [], []
    if proc.marks:
        uniform = None
        for mark in proc.marks:
            if mark is None:
                continue
            if uniform is None:
                uniform = ShapeMeasure.uniform(mark.cells)
            centers.append(localization_center(mark))
            distances.append(cdf_distance(mark, uniform))
    center = float(np.mean(centers)) if centers else None
    distance = float(np.mean(distances)) if distances else None
    return center, distance


def _gap_fields(points):
    if len(points) >= 2:
        gs = gap_statistics(points)
        return [float(g) for g in gs.gaps], float(gs.mean), float(gs.sd)
    return [], None, None


def _sample_limit_points(cfg: ExperimentConfig, tau: float, seed: int):
    if cfg.alpha > 0.5:
        return sample_clock(cfg.window, seed=seed)
    if cfg.alpha == 0.5:
        return sample_sine_beta(tau, cfg.window, seed=seed)
    return sample_poisson_process(cfg.window, seed=seed)


def _local_trial(cfg: ExperimentConfig, index: int) -> dict:
    seed = derive_seed(cfg.master_seed, index)
    tau = _model_tau(cfg.e0)
    _, op = _build_operator(cfg, derive_seed(seed, 0))
    lo, hi = cfg.window
    # widen by pi so every theta shift in [0, pi) is covered
    elo, ehi = energy_preimage(cfg.e0, cfg.n, (lo - math.pi, hi))
    energies = eigenvalues_in_window(op, elo, ehi)
    marks = _candidate_marks(op, energies, cfg)
    proc = local_process((energies, marks), cfg.e0, cfg.n, cfg.window,
                         cfg.alpha, seed=derive_seed(seed, 1))
    gaps, gap_mean, gap_sd = _gap_fields(proc.points)
    center, distance = _mark_summaries(proc)
    limit_points = _sample_limit_points(cfg, tau, derive_seed(seed, 2))
    limit_gaps, _, _ = _gap_fields(limit_points)
    return {
        "trial": index,
        "seed": seed,
        "theta": float(proc.theta_shift),
        "count": int(proc.size),
        "points": [float(p) for p in proc.points],
        "gaps": gaps,
        "gap_mean": gap_mean,
        "gap_sd": gap_sd,
        "mark_center_mean": center,
        "mark_cdf_uniform_mean": distance,
        "limit_count": int(len(limit_points)),
        "limit_gaps": limit_gaps,
    }


def _global_trial(cfg: ExperimentConfig, index: int) -> dict:
    seed = derive_seed(cfg.master_seed, index)
    _, op = _build_operator(cfg, derive_seed(seed, 0))
    energies = eigenvalues_in_window(op, cfg.window[0], cfg.window[1])
    if energies.size == 0:
        return {"trial": index, "seed": seed,
                "skipped": "no eigenvalue in window"}
    rng = np.random.default_rng(derive_seed(seed, 1))
    pick = int(rng.integers(energies.size))
    pair = eigenvector(op, float(energies[pick]))
    mu = shape_from_eigenpair(pair, pair.energy, cfg.n, cfg.cells)
    center = localization_center(mu)
    coordinate = LINEAR if cfg.variant == DC else LOG_RATIO
    try:
        slope = float(tail_exponent(mu, center, coordinate))
    except ValueError:
        slope = None
    target = -2.0 * lyapunov_tau(FourierFunction.cosine(), pair.energy)
    if cfg.variant == DC:
        target *= cfg.n ** (1.0 - 2.0 * cfg.alpha)
    return {
        "trial": index,
        "seed": seed,
        "energy": float(pair.energy),
        "num_candidates": int(energies.size),
        "cdf_uniform": float(cdf_distance(mu, ShapeMeasure.uniform(cfg.cells))),
        "center": float(center),
        "concentration": float(concentration_mass(mu, center,
                                                  _CONCENTRATION_WIDTH)),
        "tail_slope": slope,
        "tail_slope_target": float(target),
        "tail_slope_ratio": None if slope is None else float(slope / target),
        "shape": [float(d) for d in mu.density],
    }


def _limit_trial(cfg: ExperimentConfig, index: int) -> dict:
    seed = derive_seed(cfg.master_seed, index)
    tau = _model_tau(cfg.e0)
    points = _sample_limit_points(cfg, tau, derive_seed(seed, 0))
    gaps, gap_mean, gap_sd = _gap_fields(points)
    row = {
        "trial": index,
        "seed": seed,
        "count": int(len(points)),
        "points": [float(p) for p in points],
        "gaps": gaps,
        "gap_mean": gap_mean,
        "gap_sd": gap_sd,
    }
    if cfg.alpha == 0.5:
        variant = LINEAR if cfg.variant == DC else LOG_RATIO
        mu, u = sample_limit_shape_critical(tau, m=cfg.cells, variant=variant,
                                            seed=derive_seed(seed, 1))
        center = localization_center(mu)
        row.update({
            "u": float(u),
            "center": float(center),
            "cdf_uniform": float(cdf_distance(mu, ShapeMeasure.uniform(cfg.cells))),
            "concentration": float(concentration_mass(mu, u,
                                                      _CONCENTRATION_WIDTH)),
            "shape": [float(d) for d in mu.density],
        })
    return row


# ---------------------------------------------------------------------------
# cross-check battery: standing oracles, failures reported rather than raised


def _check_free_eigenvalues(cfg: ExperimentConfig, seed: int):
    length = min(cfg.n, 500.0)
    op = free_operator(length, cfg.h)
    size = op.size
    k = np.arange(1, size + 1)
    exact = (2.0 / (cfg.h * cfg.h)) * (1.0 - np.cos(k * math.pi / (size + 1)))
    lo, hi = cfg.window
    inside = exact[(exact >= lo) & (exact < hi)]
    found = eigenvalues_in_window(op, lo, hi)
    if found.size != inside.size:
        return float("inf")
    return float(np.max(np.abs(found - inside))) if inside.size else 0.0


def _check_free_shape_uniform(cfg: ExperimentConfig, seed: int):
    length = min(cfg.n, 500.0)
    op = free_operator(length, cfg.h)
    k = max(1, op.size // 3)
    energy = (2.0 / (cfg.h * cfg.h)) * (1.0 - math.cos(k * math.pi / (op.size + 1)))
    pair = eigenvector(op, energy)
    mu = shape_from_eigenpair(pair, pair.energy, length, 64)
    return cdf_distance(mu, ShapeMeasure.uniform(64))


def _check_sturm_vs_phase(cfg: ExperimentConfig, seed: int):
    pot, op = _build_operator(cfg, derive_seed(seed, 0))
    rng = np.random.default_rng(derive_seed(seed, 1))
    energies = rng.uniform(0.05, min(4.0, 2.0 / (cfg.h * cfg.h)), size=20)
    phases = final_phases(pot, np.sqrt(energies))
    worst = 0
    for e, phase in zip(energies, phases):
        diff = abs(int(sturm_count(op, e)) - int(math.floor(phase / math.pi)))
        worst = max(worst, diff)
    return float(worst)


def _check_window_count(cfg: ExperimentConfig, seed: int):
    _, op = _build_operator(cfg, derive_seed(seed, 0))
    lo, hi = cfg.window
    listed = eigenvalues_in_window(op, lo, hi).size
    counted = int(sturm_count(op, hi)) - int(sturm_count(op, lo))
    return float(abs(listed - counted))


def _check_shape_routes(cfg: ExperimentConfig, seed: int):
    # fixed moderate-decay setup: at small tau the shooting radius is not
    # swamped by the complementary growing solution, so both routes agree
    length, h, m = 100.0, 0.01, 64
    path = sample_torus_path(length, h, seed=derive_seed(seed, 0))
    pot = sample_potential(path, Envelope(alpha=0.5), FourierFunction.cosine(),
                           length)
    op = discretize(pot)
    energies = eigenvalues_in_window(op, 0.2, 0.32)
    e = float(energies[energies.size // 2])
    pair = eigenvector(op, e)
    mu_vec = shape_from_eigenpair(pair, pair.energy, length, m)
    # bump safely past the bisection bracket so the count includes e itself
    j = int(sturm_count(op, e + 1e-6))
    spacing = 2.0 * math.sqrt(e) * math.pi / length
    e_cont = shooting_eigenvalue(pot, j, (e - 0.45 * spacing, e + 0.45 * spacing))
    trace = integrate_prufer(pot, math.sqrt(e_cont))
    return cdf_distance(mu_vec, shape_from_radius(trace.logr[1:], m))


def _quadrature_tau(f: FourierFunction, energy: float, points: int = 4096) -> float:
    # periodic trapezoid of |d/dx (L + 2i sqrt(E))^-1 f|^2, exact for trig
    # polynomials below the Nyquist frequency; independent of the sum formula
    g = resolvent_function(f, math.sqrt(energy))
    dg = FourierFunction({k: 1j * k * c for k, c in g.coefficients.items()},
                         real=False)
    x = np.arange(points) * (2.0 * math.pi / points)
    return float(np.mean(np.abs(dg.evaluate(x)) ** 2)) / (8.0 * energy)


def _check_tau_quadrature(cfg: ExperimentConfig, seed: int):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        modes = int(rng.integers(1, 9))
        coeffs = {}
        for k in range(1, modes + 1):
            c = (rng.normal() + 1j * rng.normal()) / k
            coeffs[k] = c
            coeffs[-k] = np.conj(c)
        f = FourierFunction(coeffs)
        energy = float(rng.uniform(0.05, 4.0))
        exact = lyapunov_tau(f, energy)
        worst = max(worst, abs(exact - _quadrature_tau(f, energy)) / exact)
    return worst


def _check_rtilde_drift(cfg: ExperimentConfig, seed: int):
    tau, paths = 2.0, 4000
    grid = np.array([0.5, 1.0])
    increments = np.array([np.diff(
        simulate_rtilde(tau, grid, seed=derive_seed(seed, i)).values)[0]
        for i in range(paths)])
    target = tau * math.log(2.0)
    se = increments.std(ddof=1) / math.sqrt(paths)
    return float(abs(increments.mean() - target) / se)


def _check_sine_beta_intensity(cfg: ExperimentConfig, seed: int):
    tau = _model_tau(cfg.e0)
    window = (0.0, 20.0 * math.pi)
    counts = [sample_sine_beta(tau, window, seed=derive_seed(seed, i)).size
              for i in range(40)]
    return float(abs(np.mean(counts) - 20.0))


_CROSSCHECK_BATTERY = (
    ("free_eigenvalues", _check_free_eigenvalues, 1e-8),
    ("free_shape_uniform", _check_free_shape_uniform, None),  # 10 h at runtime
    ("sturm_vs_phase", _check_sturm_vs_phase, 1.0),
    ("window_count_vs_bisection", _check_window_count, 0.0),
    ("shape_route_equivalence", _check_shape_routes, 0.05),
    ("tau_sum_vs_quadrature", _check_tau_quadrature, 1e-8),
    ("rtilde_drift_sigmas", _check_rtilde_drift, 4.0),
    ("sine_beta_intensity", _check_sine_beta_intensity, 1.5),
)


def _crosscheck_trial(cfg: ExperimentConfig, index: int) -> dict:
    name, fn, tolerance = _CROSSCHECK_BATTERY[index]
    if tolerance is None:
        tolerance = 10.0 * cfg.h
    seed = derive_seed(cfg.master_seed, index)
    row = {"trial": index, "seed": seed, "check": name,
           "tolerance": float(tolerance)}
    try:
        detail = float(fn(cfg, seed))
        row["detail"] = detail
        row["status"] = "pass" if detail <= tolerance else "fail"
    except Exception as exc:  # a broken check is a finding, not a crash
        row["detail"] = None
        row["status"] = "fail"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


# ---------------------------------------------------------------------------
# orchestration

_TRIAL_FUNCTIONS = {
    LOCAL: _local_trial,
    GLOBAL: _global_trial,
    LIMIT: _limit_trial,
    CROSSCHECK: _crosscheck_trial,
}

_AGGREGATE_KEYS = {
    LOCAL: ("count", "gap_mean", "gap_sd", "mark_center_mean",
            "mark_cdf_uniform_mean", "limit_count"),
    GLOBAL: ("energy", "cdf_uniform", "center", "concentration",
             "tail_slope", "tail_slope_ratio"),
    LIMIT: ("count", "gap_mean", "gap_sd", "center", "cdf_uniform",
            "concentration"),
    CROSSCHECK: (),
}


def _trial_row(cfg: ExperimentConfig, index: int) -> dict:
    return _TRIAL_FUNCTIONS[cfg.experiment](cfg, index)


def _pooled(rows, key):
    out = []
    for row in rows:
        out.extend(row.get(key) or ())
    return np.asarray(out, dtype=float)


def _subwindow_dispersion(rows, window) -> Optional[float]:
    """Dispersion index of counts over disjoint length-pi subwindows tiled
    from the window's left edge, pooled across trials.

    Same tiling as pointproc.counting_statistics with an explicit origin;
    pooling the raw counts keeps the variance/mean diagnostic sharp even
    when a single trial holds only a handful of subwindows.
    """
    lo, hi = window
    num = int((hi - lo) / math.pi + 1e-9)
    if num < 2:
        return None
    edges = lo + math.pi * np.arange(num + 1)
    pooled = []
    for row in rows:
        if "points" not in row:
            continue
        pts = np.asarray(row["points"], dtype=float)
        pooled.append(np.diff(np.searchsorted(pts, edges, side="left")))
    if not pooled:
        return None
    counts = np.concatenate(pooled).astype(float)
    mean = counts.mean()
    if counts.size < 2 or mean == 0:
        return None
    return float(counts.var(ddof=1) / mean)


def _derive_statistics(cfg: ExperimentConfig, rows, aggregates) -> Dict[str, float]:
    stats_out: Dict[str, float] = {}

    def put_mean(name, key):
        agg = aggregates.get(key)
        if agg is not None and agg.count:
            stats_out[name] = agg.mean

    if cfg.experiment == LOCAL:
        put_mean("mean_count", "count")
        disp = _subwindow_dispersion(rows, cfg.window)
        if disp is not None:
            stats_out["count_dispersion"] = disp
        gaps = _pooled(rows, "gaps")
        if gaps.size:
            stats_out["pooled_gap_mean"] = float(gaps.mean())
            stats_out["pooled_gap_sd"] = float(gaps.std())
            stats_out["gap_exp_ks"] = float(stats.kstest(
                gaps, lambda x: 1.0 - np.exp(-x / math.pi)).statistic)
        limit_gaps = _pooled(rows, "limit_gaps")
        if gaps.size and limit_gaps.size:
            stats_out["gap_ks_vs_limit"] = two_sample_ks(gaps, limit_gaps)
    elif cfg.experiment == GLOBAL:
        put_mean("mean_cdf_uniform", "cdf_uniform")
        put_mean("mean_center", "center")
        put_mean("mean_concentration", "concentration")
        put_mean("mean_tail_slope", "tail_slope")
        put_mean("mean_tail_slope_ratio", "tail_slope_ratio")
        centers = np.array([row["center"] for row in rows
                            if "center" in row], dtype=float)
        if centers.size:
            stats_out["center_uniform_ks"] = float(stats.kstest(
                centers, lambda x: np.clip(x, 0.0, 1.0)).statistic)
        energies = np.array([row["energy"] for row in rows
                             if "energy" in row], dtype=float)
        if energies.size:
            a, b = cfg.window
            ra, rb = math.sqrt(a), math.sqrt(b)
            cdf = lambda e: np.clip((np.sqrt(np.clip(e, 0.0, None)) - ra)
                                    / (rb - ra), 0.0, 1.0)
            stats_out["energy_marginal_ks"] = float(
                stats.kstest(energies, cdf).statistic)
    elif cfg.experiment == LIMIT:
        put_mean("mean_count", "count")
        disp = _subwindow_dispersion(rows, cfg.window)
        if disp is not None:
            stats_out["count_dispersion"] = disp
        gaps = _pooled(rows, "gaps")
        if gaps.size:
            stats_out["pooled_gap_mean"] = float(gaps.mean())
            stats_out["pooled_gap_sd"] = float(gaps.std())
        put_mean("mean_center", "center")
        put_mean("mean_concentration", "concentration")
        put_mean("mean_cdf_uniform", "cdf_uniform")
    else:
        stats_out["checks"] = float(len(rows))
        stats_out["failures"] = float(sum(row.get("status") != "pass"
                                          for row in rows))
    return stats_out


def _fold_aggregates(cfg: ExperimentConfig, rows) -> Dict[str, Aggregate]:
    aggregates: Dict[str, Aggregate] = {}
    for row in rows:
        if "skipped" in row:
            continue
        for key in _AGGREGATE_KEYS[cfg.experiment]:
            value = row.get(key)
            if value is None:
                continue
            aggregates[key] = aggregates.get(key, Aggregate()).add(value)
    return aggregates


def _assemble(cfg: ExperimentConfig, rows, wall_time: float) -> RunReport:
    aggregates = _fold_aggregates(cfg, rows)
    statistics = _derive_statistics(cfg, rows, aggregates)
    skipped = tuple(row["trial"] for row in rows if "skipped" in row)
    return RunReport(config=cfg, rows=tuple(rows), aggregates=aggregates,
                     statistics=statistics, skipped=skipped,
                     wall_time=wall_time)


def _run(cfg: ExperimentConfig, jobs: int = 1, trial_range=None) -> RunReport:
    total = (len(_CROSSCHECK_BATTERY) if cfg.experiment == CROSSCHECK
             else cfg.trials)
    start, stop = trial_range if trial_range is not None else (0, total)
    if not 0 <= start <= stop <= total:
        raise ValueError("trial range must satisfy 0 <= start <= stop <= trials")
    if jobs < 1:
        raise ValueError("jobs must be at least one")
    indices = range(start, stop)
    began = time.monotonic()
    if jobs == 1 or len(indices) <= 1:
        rows = [_trial_row(cfg, i) for i in indices]
    else:
        # deterministic fold: results are collected in trial-index order no
        # matter which worker finishes first
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, len(indices) // (4 * jobs))
            rows = list(pool.map(partial(_trial_row, cfg), indices,
                                 chunksize=chunk))
    return _assemble(cfg, rows, time.monotonic() - began)


def run_local_experiment(cfg: ExperimentConfig, jobs: int = 1,
                         trial_range=None) -> RunReport:
    """Rescaled eigenvalue process near e0, per-trial gap and mark summaries,
    plus a matched draw of the regime's limiting process for each trial."""
    if cfg.experiment != LOCAL:
        raise ValueError("config does not describe a local experiment")
    return _run(cfg, jobs=jobs, trial_range=trial_range)


def run_global_experiment(cfg: ExperimentConfig, jobs: int = 1,
                          trial_range=None) -> RunReport:
    """One uniformly picked eigenvalue in the energy window per trial, with
    its shape measure and regime summary statistics."""
    if cfg.experiment != GLOBAL:
        raise ValueError("config does not describe a global experiment")
    return _run(cfg, jobs=jobs, trial_range=trial_range)


def run_limit_experiment(cfg: ExperimentConfig, jobs: int = 1,
                         trial_range=None) -> RunReport:
    """Samples of the limiting objects alone (no operator): clock, Sine_beta
    or Poisson points by regime, and the critical limit shape at alpha = 1/2."""
    if cfg.experiment != LIMIT:
        raise ValueError("config does not describe a limit experiment")
    return _run(cfg, jobs=jobs, trial_range=trial_range)


def run_crosscheck(cfg: ExperimentConfig, jobs: int = 1,
                   trial_range=None) -> RunReport:
    """Standing oracle battery; each check is a pass/fail row, never a raise."""
    if cfg.experiment != CROSSCHECK:
        raise ValueError("config does not describe a crosscheck run")
    return _run(cfg, jobs=jobs, trial_range=trial_range)


RUNNERS = {
    LOCAL: run_local_experiment,
    GLOBAL: run_global_experiment,
    LIMIT: run_limit_experiment,
    CROSSCHECK: run_crosscheck,
}


def merge_reports(a: RunReport, b: RunReport) -> RunReport:
    """Union of two runs of the same config over disjoint trial ranges;
    aggregates are summed exactly, derived statistics recomputed on the
    union, so the result is bit-identical to a single combined run."""
    if a.config.digest() != b.config.digest():
        raise ValueError("cannot merge reports with different configs")
    seen_a = {row["trial"] for row in a.rows}
    seen_b = {row["trial"] for row in b.rows}
    if seen_a & seen_b:
        raise ValueError("cannot merge reports with overlapping trial ranges")
    rows = tuple(sorted(a.rows + b.rows, key=lambda row: row["trial"]))
    keys = set(a.aggregates) | set(b.aggregates)
    aggregates = {k: a.aggregates.get(k, Aggregate()).merge(
        b.aggregates.get(k, Aggregate())) for k in sorted(keys)}
    statistics = _derive_statistics(a.config, rows, aggregates)
    skipped = tuple(sorted(a.skipped + b.skipped))
    return RunReport(config=a.config, rows=rows, aggregates=aggregates,
                     statistics=statistics, skipped=skipped,
                     wall_time=a.wall_time + b.wall_time)


# ---------------------------------------------------------------------------
# serialization


def _fmt(value) -> str:
    if value is None:
        return ""
    return "%.17g" % value


def _write_csv(path, header, rows_iter):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows_iter:
            writer.writerow(row)


def _summary_rows(report: RunReport):
    yield ("trials", "%d" % len(report.rows), "")
    yield ("skipped", "%d" % len(report.skipped), "")
    for key in sorted(report.aggregates):
        agg = report.aggregates[key]
        yield (key + "_mean", _fmt(agg.mean),
               _fmt(agg.stderr) if agg.count > 1 else "")
        if agg.count > 1:
            yield (key + "_sd", _fmt(agg.sd), "")
    for key in sorted(report.statistics):
        yield (key, _fmt(report.statistics[key]), "")


def emit_report(report: RunReport, format: str, path) -> None:
    """Write the report; csv adds _points/_gaps/_shape sidecar files next to
    the summary so external tools can consume the raw per-trial data."""
    path = os.fspath(path)
    if format == "json":
        with open(path, "w") as fh:
            fh.write(report.to_json())
        return
    if format != "csv":
        raise ValueError("format must be 'csv' or 'json'")
    base, ext = os.path.splitext(path)
    _write_csv(path, ("metric", "value", "stderr"), _summary_rows(report))

    def point_rows():
        for row in report.rows:
            if "points" in row:
                for p in row["points"]:
                    yield (row["trial"], _fmt(p))
            elif "energy" in row:
                yield (row["trial"], _fmt(row["energy"]))

    def gap_rows():
        for row in report.rows:
            for g in row.get("gaps") or ():
                yield (row["trial"], _fmt(g))

    def shape_rows():
        for row in report.rows:
            for cell, d in enumerate(row.get("shape") or ()):
                yield (row["trial"], cell, _fmt(d))

    _write_csv(base + "_points" + ext, ("trial", "lambda"), point_rows())
    _write_csv(base + "_gaps" + ext, ("trial", "gap"), gap_rows())
    _write_csv(base + "_shape" + ext, ("trial", "cell", "density"), shape_rows())
