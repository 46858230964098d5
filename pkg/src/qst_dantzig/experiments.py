"""Trial runner, rate fitting over parameter grids, and estimator comparisons."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .estimators import ESTIMATORS, EstimatorConfig
from .measurement import full_basis_dataset, noiseless_dataset, simulate_dataset
from .rng import stream
from .states import DensityMatrix, entropy_and_kl, random_state, schatten_norm

AXES = ("nK", "r", "m")
METRICS = ("err_1", "err_2", "err_inf", "kl")
MIN_POINTS = 4
MIN_SEEDS = 20


@dataclass(frozen=True)
class TrialSpec:
    """One simulated estimation run.  ``K=None`` means noiseless responses."""

    m: int
    r: int
    n: int
    K: int | None
    estimator: str = "entropy"
    epsilon: float | str = "auto"
    seed: int = 0
    C1: float = 4.0
    design: str = "uniform"  # or "full": every label once
    state: DensityMatrix | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}; expected one of {sorted(ESTIMATORS)}")
        if self.design not in ("uniform", "full"):
            raise ValueError(f"design must be 'uniform' or 'full', got {self.design!r}")
        if self.design == "full" and self.K is not None:
            raise ValueError("the full-basis design is noiseless (K=None)")
        if not 1 <= self.r <= self.m:
            raise ValueError(f"rank must lie in [1, {self.m}], got {self.r}")
        if self.n < 1 or (self.K is not None and self.K < 1):
            raise ValueError("n and K must be positive")


@dataclass(frozen=True)
class TrialResult:
    m: int
    r: int
    n: int
    K: int | None
    estimator: str
    epsilon: float
    seed: int
    err_1: float
    err_2: float
    err_inf: float
    kl: float
    kl_floored: bool
    converged: bool
    iterations: int
    constraint_value: float
    dataset_hash: str
    regime: str  # "K<=m" or "K>m" (noiseless trials report "noiseless")
    runtime: float = field(default=0.0, compare=False)

    @property
    def nK(self) -> float:
        return self.n * (self.K if self.K is not None else np.inf)

    def row(self) -> dict:
        """CSV row; runtime is left out so repeated sweeps give identical files."""
        d = asdict(self)
        d.pop("runtime")
        return d


def trial_state(spec: TrialSpec) -> DensityMatrix:
    if spec.state is not None:
        return spec.state
    return random_state(spec.m, spec.r, seed=stream(spec.seed, "state", spec.m, spec.r))


def trial_dataset(spec: TrialSpec, rho: DensityMatrix):
    if spec.design == "full":
        return full_basis_dataset(rho)
    if spec.K is None:
        return noiseless_dataset(rho, spec.n, seed=spec.seed)
    return simulate_dataset(rho, spec.n, spec.K, seed=spec.seed)


def run_trial(spec: TrialSpec) -> TrialResult:
    t0 = time.perf_counter()
    rho = trial_state(spec)
    ds = trial_dataset(spec, rho)
    config = EstimatorConfig(epsilon=spec.epsilon, C1=spec.C1, objective=spec.estimator)
    sol = ESTIMATORS[spec.estimator](ds, config)
    D = sol.matrix - rho.data
    div = entropy_and_kl(rho, sol.matrix)
    if spec.K is None:
        regime = "noiseless"
    else:
        regime = "K<=m" if spec.K <= spec.m else "K>m"
    return TrialResult(
        m=spec.m,
        r=spec.r,
        n=ds.n,
        K=spec.K,
        estimator=spec.estimator,
        epsilon=sol.epsilon,
        seed=spec.seed,
        err_1=schatten_norm(D, 1),
        err_2=schatten_norm(D, 2),
        err_inf=schatten_norm(D, np.inf),
        kl=div.kl,
        kl_floored=div.floored,
        converged=sol.converged,
        iterations=sol.iterations,
        constraint_value=sol.constraint_value,
        dataset_hash=ds.digest(),
        regime=regime,
        runtime=time.perf_counter() - t0,
    )


def run_trials(specs: Sequence[TrialSpec], threads: int = 1) -> list[TrialResult]:
    """Run trials in a pool; results come back in input order."""
    if threads <= 1 or len(specs) <= 1:
        return [run_trial(s) for s in specs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_trial, specs))


# ------------------------------------------------------------------ grids and fits


def _seed_list(seeds) -> list[int]:
    if isinstance(seeds, (int, np.integer)):
        return list(range(int(seeds)))
    return [int(s) for s in seeds]


def swept_axis(grid: dict) -> tuple[str, str]:
    """(axis name, grid key) of the single list-valued entry."""
    swept = [k for k, v in grid.items() if isinstance(v, (list, tuple))]
    if len(swept) != 1:
        raise ValueError(f"grid must vary exactly one parameter, got {swept or 'none'}")
    key = swept[0]
    axis = {"n": "nK", "K": "nK", "r": "r", "m": "m"}.get(key)
    if axis is None:
        raise ValueError(f"cannot sweep {key!r}; sweepable keys are n, K, r, m")
    return axis, key


def grid_specs(grid: dict, estimator: str, seeds, **extra) -> list[TrialSpec]:
    """Trial specs in (grid value, seed) order."""
    _, key = swept_axis(grid)
    base = {k: v for k, v in grid.items() if k != key}
    out = []
    for value in grid[key]:
        for s in _seed_list(seeds):
            out.append(TrialSpec(**{**base, key: value, "estimator": estimator, "seed": s, **extra}))
    return out


def axis_value(res: TrialResult, axis: str) -> float:
    return {"nK": res.nK, "r": res.r, "m": res.m}[axis]


@dataclass
class RateFit:
    axis: str
    metric: str
    slope: float
    intercept: float
    stderr: float
    r2: float
    points: list  # (x, median, IQR)
    seeds_per_point: int

    def to_dict(self) -> dict:
        return asdict(self)


def _loglog_fit(x, y):
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = intercept + slope * lx
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1 - np.sum((ly - pred) ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def fit_rate(
    results: Sequence[TrialResult],
    axis: str,
    metric: str = "err_2",
    min_points: int = MIN_POINTS,
    min_seeds: int = MIN_SEEDS,
    n_boot: int = 1000,
    boot_seed: int = 0,
) -> RateFit:
    """Log-log regression of the per-point median of ``metric`` against ``axis``."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    groups: dict[float, list[float]] = {}
    for res in results:
        groups.setdefault(axis_value(res, axis), []).append(getattr(res, metric))
    xs = sorted(groups)
    if len(xs) < min_points:
        raise ValueError(f"rate fit needs >= {min_points} grid points, got {len(xs)}")
    counts = [len(groups[x]) for x in xs]
    if min(counts) < min_seeds:
        raise ValueError(f"rate fit needs >= {min_seeds} seeds per point, got {min(counts)}")
    if not all(np.isfinite(x) and x > 0 for x in xs):
        raise ValueError("axis values must be finite and positive")
    vals = [np.asarray(groups[x], dtype=float) for x in xs]
    med = np.array([np.median(v) for v in vals])
    if np.any(med <= 0) or not np.all(np.isfinite(med)):
        raise ValueError("median errors must be finite and positive for a log-log fit")
    slope, intercept, r2 = _loglog_fit(xs, med)

    rng = stream(boot_seed, "bootstrap")
    boots = []
    for _ in range(n_boot):
        bm = np.array([np.median(v[rng.integers(0, len(v), len(v))]) for v in vals])
        if np.all(bm > 0):
            boots.append(_loglog_fit(xs, bm)[0])
    stderr = float(np.std(boots, ddof=1)) if len(boots) > 1 else float("nan")
    points = [(float(x), float(np.median(v)), float(np.subtract(*np.percentile(v, [75, 25])))) for x, v in zip(xs, vals)]
    return RateFit(axis, metric, slope, intercept, stderr, r2, points, min(counts))


def sweep_rate(
    grid: dict,
    estimator: str = "entropy",
    seeds=MIN_SEEDS,
    metric: str = "err_2",
    threads: int = 1,
    min_seeds: int = MIN_SEEDS,
) -> RateFit:
    axis, _ = swept_axis(grid)
    results = run_trials(grid_specs(grid, estimator, seeds), threads)
    return fit_rate(results, axis, metric, min_seeds=min_seeds)


# ------------------------------------------------------------------ comparisons


def compare_estimators(
    specs: Iterable[TrialSpec], estimators: Sequence[str] = ("entropy", "least_squares"), threads: int = 1
) -> list[dict]:
    """Median Schatten errors per (cell, estimator, p) on paired seeds.

    Each cell groups specs that differ only in seed; every estimator sees the same
    states and datasets.  Each row flags whether its estimator has the smallest
    median in that (cell, p).
    """
    specs = list(specs)
    runs = {est: run_trials([replace(s, estimator=est) for s in specs], threads) for est in estimators}
    cells: dict[tuple, list[int]] = {}
    for i, s in enumerate(specs):
        cells.setdefault((s.m, s.r, s.n, s.K), []).append(i)
    rows = []
    for cell, idx in cells.items():
        hashes = {est: [runs[est][i].dataset_hash for i in idx] for est in estimators}
        paired = all(h == hashes[estimators[0]] for h in hashes.values())
        for metric in ("err_1", "err_2", "err_inf"):
            meds = {est: float(np.median([getattr(runs[est][i], metric) for i in idx])) for est in estimators}
            best = min(meds.values())
            for est in estimators:
                rows.append(
                    {
                        "m": cell[0],
                        "r": cell[1],
                        "n": cell[2],
                        "K": cell[3],
                        "estimator": est,
                        "metric": metric,
                        "median": meds[est],
                        "wins": meds[est] == best,
                        "paired": paired,
                        "seeds": len(idx),
                    }
                )
    return rows


# ------------------------------------------------------------------ manifest sweeps


def trials_csv(results: Sequence[TrialResult]) -> str:
    names = [f.name for f in fields(TrialResult) if f.name != "runtime"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for res in results:
        row = res.row()
        w.writerow({k: ("" if row[k] is None else repr(row[k]) if isinstance(row[k], float) else row[k]) for k in names})
    return buf.getvalue()


def summary_markdown(grid: dict, estimators: Sequence[str], results: Sequence[TrialResult], fits: dict) -> str:
    axis, key = swept_axis(grid)
    lines = ["# Sweep summary", "", f"Grid: `{json.dumps(grid)}`", f"Swept axis: {axis} (via `{key}`)", ""]
    lines += ["| estimator | " + key + " | median err_1 | median err_2 | median err_inf | median kl | converged |"]
    lines += ["|---|---|---|---|---|---|---|"]
    for est in estimators:
        sub = [r for r in results if r.estimator == est]
        for value in grid[key]:
            cell = [r for r in sub if getattr(r, key) == value]
            if not cell:
                continue
            med = {mt: np.median([getattr(r, mt) for r in cell]) for mt in METRICS}
            conv = sum(r.converged for r in cell)
            lines.append(
                f"| {est} | {value} | {med['err_1']:.4g} | {med['err_2']:.4g} | {med['err_inf']:.4g} "
                f"| {med['kl']:.4g} | {conv}/{len(cell)} |"
            )
    lines += ["", "| estimator | metric | slope | stderr | r2 |", "|---|---|---|---|---|"]
    for est, by_metric in fits.items():
        for mt, fit in by_metric.items():
            if isinstance(fit, dict) and "slope" in fit:
                lines.append(f"| {est} | {mt} | {fit['slope']:.3f} | {fit['stderr']:.3f} | {fit['r2']:.3f} |")
            else:
                lines.append(f"| {est} | {mt} | n/a | | {fit.get('error', '')} |")
    return "\n".join(lines) + "\n"


def run_sweep(manifest: dict, output_dir=None, threads: int = 1) -> dict:
    """Execute a validated sweep manifest and write trials.csv, rates.json, summary.md."""
    grid = dict(manifest["grid"])
    estimators = manifest["estimator"]
    estimators = [estimators] if isinstance(estimators, str) else list(estimators)
    seeds = manifest["seeds"]
    out = Path(output_dir or manifest.get("output_dir") or ".")
    min_seeds = int(manifest.get("min_seeds", MIN_SEEDS))
    extra = {k: manifest[k] for k in ("epsilon", "C1") if k in manifest}
    axis, _ = swept_axis(grid)

    results: list[TrialResult] = []
    fits: dict = {}
    for est in estimators:
        res = run_trials(grid_specs(grid, est, seeds, **extra), threads)
        results += res
        fits[est] = {}
        for mt in METRICS:
            try:
                fits[est][mt] = fit_rate(res, axis, mt, min_seeds=min_seeds).to_dict()
            except ValueError as exc:
                fits[est][mt] = {"error": str(exc)}

    out.mkdir(parents=True, exist_ok=True)
    (out / "trials.csv").write_text(trials_csv(results))
    (out / "rates.json").write_text(json.dumps(fits, indent=2, sort_keys=True) + "\n")
    (out / "summary.md").write_text(summary_markdown(grid, estimators, results, fits))
    return {"results": results, "fits": fits, "output_dir": str(out)}


def grid_size(grid: dict) -> int:
    _, key = swept_axis(grid)
    return len(grid[key])

