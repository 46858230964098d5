"""Acceptance criteria, each checked at its stated tolerance.

Each test records one PASS/FAIL line that is echoed in the terminal summary.
"""

import numpy as np
import pytest

from qst_dantzig.checks import run_checks
from qst_dantzig.estimators import constraint_gap, default_epsilon
from qst_dantzig.experiments import TrialSpec, fit_rate, grid_specs, run_trials, trial_dataset, trial_state

SEEDS = 20
K_GRID = [50, 100, 200, 400, 800]


@pytest.fixture(scope="module")
def nk_sweep():
    """Entropy estimator, m=16, r=2, n=512, K swept, epsilon auto."""
    grid = {"m": 16, "r": 2, "n": 512, "K": K_GRID}
    return run_trials(grid_specs(grid, "entropy", SEEDS))


def test_frobenius_rate_in_nK(nk_sweep, report):
    fit = fit_rate(nk_sweep, "nK", "err_2")
    meds = ", ".join(f"{p[1]:.3g}" for p in fit.points)
    ok = -0.65 <= fit.slope <= -0.35
    report("frobenius rate in nK", ok, f"slope {fit.slope:+.3f} (stderr {fit.stderr:.3f}), target [-0.65, -0.35]; medians [{meds}]")
    assert ok, f"slope {fit.slope:.3f} outside [-0.65, -0.35]; medians {meds}"


def test_rank_scaling(report):
    grid = {"m": 32, "r": [1, 2, 4, 8], "n": 1024, "K": 200}
    res = run_trials(grid_specs(grid, "entropy", SEEDS))
    f2 = fit_rate(res, "r", "err_2")
    f1 = fit_rate(res, "r", "err_1")
    ok2 = 0.3 <= f2.slope <= 0.7
    ok1 = 0.7 <= f1.slope <= 1.3
    m2 = ", ".join(f"{p[1]:.3g}" for p in f2.points)
    m1 = ", ".join(f"{p[1]:.3g}" for p in f1.points)
    report("rank scaling, Frobenius", ok2, f"slope {f2.slope:+.3f}, target [0.3, 0.7]; medians [{m2}]")
    report("rank scaling, nuclear norm", ok1, f"slope {f1.slope:+.3f}, target [0.7, 1.3]; medians [{m1}]")
    assert ok2 and ok1, f"Frobenius slope {f2.slope:.3f}, nuclear slope {f1.slope:.3f}"


def test_noiseless_full_basis_recovery(report):
    worst = {}
    for est in ("entropy", "nuclear", "least_squares"):
        specs = [TrialSpec(m=m, r=r, n=1, K=None, design="full", estimator=est, seed=s) for m in (4, 8, 16) for r in (1, 2) for s in range(3)]
        worst[est] = max(res.err_2 for res in run_trials(specs))
    ok = all(v <= 1e-6 for v in worst.values())
    report("noiseless full-basis recovery", ok, ", ".join(f"{k} max err {v:.2e}" for k, v in worst.items()) + " (bound 1e-6)")
    assert ok, worst


def test_feasibility_calibration(report):
    m, n, K, trials = 16, 256, 100, 500
    eps = default_epsilon(m, n, K, C1=4, t=np.log(2 * m))
    hits = 0
    for seed in range(trials):
        spec = TrialSpec(m=m, r=2, n=n, K=K, seed=seed)
        rho = trial_state(spec)
        hits += constraint_gap(trial_dataset(spec, rho), rho).value <= eps
    rate = hits / trials
    ok = rate >= 0.95
    report("feasibility calibration", ok, f"truth feasible in {hits}/{trials} = {rate:.1%} of trials (need >= 95%)")
    assert ok


def test_property_suites(report):
    results = run_checks()
    failed = [r.name for r in results if not r.passed]
    report("property suites", not failed, f"{len(results) - len(failed)}/{len(results)} suites pass" + (f"; failing {failed}" if failed else ""))
    assert not failed


def test_kl_finiteness_and_trend(nk_sweep, report):
    floored = np.mean([r.kl_floored for r in nk_sweep])
    finite = all(np.isfinite(r.kl) for r in nk_sweep)
    meds = [float(np.median([r.kl for r in nk_sweep if r.K == K])) for K in K_GRID]
    monotone = all(b <= a for a, b in zip(meds, meds[1:]))
    fit = fit_rate(nk_sweep, "nK", "kl")
    ok = finite and floored < 0.10 and monotone and -0.8 <= fit.slope <= -0.2
    report(
        "KL finiteness and trend",
        ok,
        f"floored rate {floored:.1%}, non-increasing {monotone}, slope {fit.slope:+.3f} (target [-0.8, -0.2]); "
        f"medians [{', '.join(f'{v:.3g}' for v in meds)}]",
    )
    assert ok
