"""Dantzig-type estimators over the feasible set Lambda(eps) and a least-squares baseline.

Notation.  For a dataset with distinct labels k, let ``w_k = count_k/n`` and
``b_k = (1/n) sum_{i: X_i = E_k} Y_i``.  Writing ``s_k = <S, E_k>``, the residual is

    R(S) = (1/n) sum_i (Y_i - <S, X_i>) X_i = sum_k (b_k - w_k s_k) E_k,

and ``Lambda(eps) = {S : ||R(S)||_inf <= eps}``.  The linear map
``M(A) = sum_k w_k <A, E_k> E_k`` is self-adjoint and ``R(S) = B - M(S)``.

Entropy estimator.  ``min tr(S log S)`` over density matrices in Lambda(eps).  The
default solver works on the Lagrange dual

    phi(W) = log tr exp(M(W)) - <W, B> + eps ||W||_1,

whose minimizer gives the primal solution ``S = exp(M(W)) / tr exp(M(W))``.  The
smooth part has gradient ``-R(S_W)``, and the nuclear-norm prox is eigenvalue
soft-thresholding, so a Barzilai-Borwein proximal gradient method applies.  When it
does not certify optimality, a pseudo-Huber smoothing of ``||W||_1`` is minimized by
L-BFGS with a decreasing smoothing width.  The exact-penalty mirror-descent scheme
is available as ``method="penalty"``.

Nuclear-norm estimator.  ``min ||S||_1`` over Hermitian S in Lambda(eps), solved by
a primal-dual (Chambolle-Pock) iteration.

Least squares.  ``min (1/n) sum_i (Y_i - <S, X_i>)**2`` over density matrices by
projected gradient with step 1/L.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .measurement import MeasurementDataset
from .pauli import PauliSet
from .states import DensityMatrix, as_matrix, hermitian_part, project_spectrahedron

NOISELESS_EPSILON = 1e-10
BB_WARM_ITER = 500
BB_MAX_ITER = 2000
STALL_ITER = 1000  # primal-dual: stop when the best feasible objective stops improving
DUALITY_GAP_TOL = 1e-6  # relative primal-dual gap accepted after feasibility restoration
OBJECTIVES = ("entropy", "nuclear", "least_squares")
METHODS = ("dual", "penalty")


class NumericalError(RuntimeError):
    """An eigensolver or other dense kernel failed."""


class ConfigError(ValueError):
    """Invalid estimator configuration."""


@dataclass
class SolverConfig:
    method: str = "dual"
    max_outer: int = 20
    max_inner: int = 500
    eta0: float = 1.0
    mu0: float = 1.0
    mu_growth: float = 4.0
    obj_tol: float = 1e-8
    lambda_floor: float = 1e-12
    max_iter: int = 20000
    smoothing: tuple = (1e-2, 1e-4, 1e-6)

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown solver method {self.method!r}; expected one of {METHODS}")
        if self.mu_growth <= 1:
            raise ConfigError(f"mu_growth must exceed 1, got {self.mu_growth}")
        positive = ("max_outer", "max_inner", "eta0", "mu0", "obj_tol", "lambda_floor", "max_iter")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.smoothing or any(s <= 0 for s in self.smoothing):
            raise ConfigError("smoothing widths must be positive")
        return self


@dataclass
class EstimatorConfig:
    epsilon: float | str = "auto"
    C1: float = 4.0
    t: float | None = None  # defaults to log(2m)
    feas_tol: float = 0.02
    feas_atol: float = 1e-12  # only used when epsilon == 0
    objective: str = "entropy"
    solver: SolverConfig = field(default_factory=SolverConfig)

    def validate(self):
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVES}")
        if isinstance(self.epsilon, str):
            if self.epsilon != "auto":
                raise ConfigError(f"epsilon must be a number or 'auto', got {self.epsilon!r}")
        elif not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not self.C1 > 0:
            raise ConfigError(f"C1 must be positive, got {self.C1}")
        if self.t is not None and self.t < 0:
            raise ConfigError(f"t must be >= 0, got {self.t}")
        if not self.feas_tol > 0 or not self.feas_atol > 0:
            raise ConfigError("feasibility tolerances must be positive")
        if isinstance(self.solver, dict):
            self.solver = SolverConfig(**self.solver)
        self.solver.validate()
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solver"]["smoothing"] = list(self.solver.smoothing)
        return d


@dataclass
class EstimatorSolution:
    estimate: object  # DensityMatrix, or a Hermitian ndarray for the nuclear estimator
    epsilon: float
    constraint_value: float  # g(S) = ||R(S)||_inf
    objective_value: float
    iterations: int
    converged: bool
    objective: str
    method: str
    trace: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def feasibility_gap(self) -> float:
        return self.constraint_value - self.epsilon

    @property
    def matrix(self) -> np.ndarray:
        return as_matrix(self.estimate)

    def to_json_dict(self) -> dict:
        A = self.matrix
        m = A.shape[0]
        return {
            "m": m,
            "re": A.real.tolist(),
            "im": A.imag.tolist(),
            "estimator": self.objective,
            "diagnostics": {
                "epsilon": self.epsilon,
                "constraint_value": self.constraint_value,
                "feasibility_gap": self.feasibility_gap,
                "objective": self.objective_value,
                "iterations": self.iterations,
                "converged": self.converged,
                "method": self.method,
                "mu_trace": [[x if isinstance(x, str) else float(x) for x in row] for row in self.trace],
                **{k: v for k, v in self.diagnostics.items() if isinstance(v, (int, float, str, bool))},
            },
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "EstimatorSolution":
        A = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
        diag = dict(obj["diagnostics"])
        est = A if obj["estimator"] == "nuclear" else DensityMatrix(A, validate=False)
        known = {"epsilon", "constraint_value", "feasibility_gap", "objective", "iterations", "converged", "method", "mu_trace"}
        return cls(
            estimate=est,
            epsilon=diag["epsilon"],
            constraint_value=diag["constraint_value"],
            objective_value=diag["objective"],
            iterations=diag["iterations"],
            converged=diag["converged"],
            objective=obj["estimator"],
            method=diag["method"],
            trace=[tuple(row) for row in diag["mu_trace"]],
            diagnostics={k: v for k, v in diag.items() if k not in known},
        )


# ------------------------------------------------------------------ residual algebra


def _check_dim(dataset: MeasurementDataset, S: np.ndarray):
    if S.shape != (dataset.m, dataset.m):
        raise ValueError(f"dimension mismatch: dataset m={dataset.m}, matrix {S.shape}")


def residual(dataset: MeasurementDataset, S) -> np.ndarray:
    """R(S) = (1/n) sum_i (Y_i - <S, X_i>) X_i, aggregated over distinct labels."""
    S = hermitian_part(as_matrix(S))
    _check_dim(dataset, S)
    st = dataset.stats
    return st.pset.accumulate(st.bsum - st.w * st.pset.inner(S))


class Gap(NamedTuple):
    value: float  # ||R(S)||_inf
    vector: np.ndarray  # extremal eigenvector u of R(S)
    sign: float  # sign of the extremal eigenvalue
    residual: np.ndarray


def _eigh(A: np.ndarray):
    try:
        return np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        finite = bool(np.all(np.isfinite(A)))
        raise NumericalError(f"Hermitian eigensolve failed (m={A.shape[0]}, finite={finite}): {exc}") from exc


def spectral_norm(A: np.ndarray) -> float:
    try:
        lam = np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigensolve failed (m={A.shape[0]}): {exc}") from exc
    return float(max(-lam[0], lam[-1]))


def constraint_gap(dataset: MeasurementDataset, S) -> Gap:
    """||R(S)||_inf with its extremal eigenpair (first in eigensolver order on ties)."""
    R = residual(dataset, S)
    lam, V = _eigh(R)
    j = int(np.argmax(np.abs(lam)))
    return Gap(float(abs(lam[j])), V[:, j], float(np.sign(lam[j]) or 1.0), R)


def gap_subgradient(dataset: MeasurementDataset, S) -> np.ndarray:
    """A subgradient of S -> ||R(S)||_inf: -sign * M(u u*)."""
    g = constraint_gap(dataset, S)
    st = dataset.stats
    uu = np.outer(g.vector, g.vector.conj())
    return -g.sign * st.pset.accumulate(st.w * st.pset.inner(uu))


def default_epsilon(m: int, n: int, K: float, C1: float = 4.0, t: float | None = None) -> float:
    """(C1/m) sqrt((t + log 2m) / (n K)), with t = log(2m) unless given."""
    if t is None:
        t = np.log(2 * m)
    if min(m, n, K, C1) <= 0 or t < 0:
        raise ValueError("default_epsilon needs positive m, n, K, C1 and t >= 0")
    return float(C1 / m * np.sqrt((t + np.log(2 * m)) / (n * K)))


def resolve_epsilon(dataset: MeasurementDataset, config: EstimatorConfig) -> float:
    if config.epsilon != "auto":
        return float(config.epsilon)
    if dataset.noiseless:
        return NOISELESS_EPSILON
    return default_epsilon(dataset.m, dataset.n, dataset.K, config.C1, config.t)


def _feasible(g: float, eps: float, config: EstimatorConfig) -> bool:
    if eps == 0:
        return g <= config.feas_atol
    return g <= (1 + config.feas_tol) * eps


# ------------------------------------------------------------------ spectral helpers


def gibbs(H: np.ndarray):
    """exp(H)/tr exp(H) and log tr exp(H), via a shifted eigendecomposition."""
    lam, V = _eigh(H)
    top = lam[-1]
    e = np.exp(lam - top)
    z = e.sum()
    return (V * (e / z)) @ V.conj().T, float(np.log(z) + top)


def soft_threshold(W: np.ndarray, t: float):
    """Eigenvalue soft-thresholding (prox of t ||.||_1) and the nuclear norm of the result."""
    lam, V = _eigh(W)
    lam = np.sign(lam) * np.maximum(np.abs(lam) - t, 0.0)
    return (V * lam) @ V.conj().T, float(np.abs(lam).sum())


def clip_spectrum(A: np.ndarray, t: float) -> np.ndarray:
    """Projection onto the operator-norm ball of radius t."""
    lam, V = _eigh(A)
    return (V * np.clip(lam, -t, t)) @ V.conj().T


def neg_entropy(S: np.ndarray, floor: float = 1e-12) -> float:
    """tr(S log S) with the spectrum floored inside the log."""
    lam = np.clip(np.linalg.eigvalsh(S), 0.0, None)
    return float(np.sum(lam * np.log(np.maximum(lam, floor))))


def mirror_step(S: np.ndarray, G: np.ndarray, eta: float, floor: float = 1e-12) -> np.ndarray:
    """Exponentiated-gradient update normalize(exp(log S - eta G))."""
    lam, V = _eigh(hermitian_part(S))
    logS = (V * np.log(np.maximum(lam, floor))) @ V.conj().T
    return gibbs(logS - eta * G)[0]


# ------------------------------------------------------------------ entropy estimator


class _DualProblem:
    """phi(W) = log tr exp(M(W)) - <W, B> + eps ||W||_1 on the observed design."""

    def __init__(self, dataset: MeasurementDataset, eps: float):
        st = dataset.stats
        self.pset, self.w, self.bsum = st.pset, st.w, st.bsum
        self.m = dataset.m
        self.eps = eps

    def smooth(self, W):
        c = self.pset.inner(W)
        S, logz = gibbs(self.pset.accumulate(self.w * c))
        R = self.pset.accumulate(self.bsum - self.w * self.pset.inner(S))
        return logz - float(self.bsum @ c), -R, S


def _dual_bb(prob: _DualProblem, W0, max_iter: int, tol: float, history: int = 5):
    """Nonmonotone BB proximal gradient on phi; returns (S, W, iterations, certified)."""
    eps, m = prob.eps, prob.m
    W = np.zeros((m, m), dtype=complex) if W0 is None else W0
    f, G, S = prob.smooth(W)
    nrm = float(np.abs(np.linalg.eigvalsh(W)).sum())
    F = f + eps * nrm
    hist = [F]
    alpha = 1.0 / max(prob.w.max() ** 2, 1e-30)
    for it in range(max_iter):
        g = spectral_norm(G)
        comp = float(np.vdot(W, G).real) + eps * nrm  # complementarity <W, -R> + eps ||W||_1
        if g <= (1 + tol) * eps and abs(comp) <= 1e-9 * max(1.0, abs(F)):
            return S, W, it, True
        while True:
            Wn, nrmn = soft_threshold(W - alpha * G, eps * alpha)
            fn, Gn, Sn = prob.smooth(Wn)
            Fn = fn + eps * nrmn
            D = Wn - W
            dd = float(np.vdot(D, D).real)
            if Fn <= max(hist[-history:]) - 1e-4 / (2 * alpha) * dd or alpha < 1e-30:
                break
            alpha *= 0.25
        sy = float(np.vdot(D, Gn - G).real)
        W, f, G, S, nrm, F = Wn, fn, Gn, Sn, nrmn, Fn
        hist.append(F)
        alpha = dd / sy if sy > 0 else alpha * 4
        alpha = min(max(alpha, 1e-2), 1e20)
        if dd == 0 and sy == 0:
            break
    return S, W, max_iter, False


def _dual_lbfgs(dataset: MeasurementDataset, eps: float, W0, widths, max_iter: int):
    """Pseudo-Huber smoothed dual in Pauli coordinates, minimized by L-BFGS."""
    b, m = dataset.b, dataset.m
    full = PauliSet.full(b)
    st = dataset.stats
    pos = st.pset.indices - 1
    wf = np.zeros(m * m)
    wf[pos] = st.w
    bf = np.zeros(m * m)
    bf[pos] = st.bsum
    scale = float(m * m)

    def make(mu):
        def fg(x):
            om = x * scale
            S, logz = gibbs(full.accumulate(wf * om))
            lw, U = _eigh(full.accumulate(om))
            hub = np.sqrt(lw**2 + mu**2)
            f = logz - float(bf @ om) + eps * float(np.sum(hub - mu))
            dW = (U * (lw / hub)) @ U.conj().T
            grad = wf * full.inner(S) - bf + eps * full.inner(dW)
            return f, grad * scale

        return fg

    x = np.zeros(m * m) if W0 is None else full.inner(W0) / scale
    total = 0
    for mu in widths:
        res = optimize.minimize(
            make(mu),
            x,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iter, "maxcor": 30, "gtol": 1e-14, "ftol": 1e-16},
        )
        x = res.x
        total += int(res.nit)
    W = full.accumulate(x * scale)
    S = gibbs(full.accumulate(wf * x * scale))[0]
    return S, W, total


def _penalty_meg(dataset: MeasurementDataset, eps: float, config: EstimatorConfig):
    """Exact-penalty homotopy with matrix exponentiated gradient inner loops."""
    sc = config.solver
    m = dataset.m
    st = dataset.stats
    S = np.eye(m, dtype=complex) / m
    mu = sc.mu0
    trace = []
    iters = 0
    prev_obj = None
    for outer in range(sc.max_outer):
        for t in range(1, sc.max_inner + 1):
            lam, V = _eigh(S)
            logS = (V * np.log(np.maximum(lam, sc.lambda_floor))) @ V.conj().T
            G = logS + np.eye(m)
            g = constraint_gap(dataset, S)
            if g.value > eps:
                uu = np.outer(g.vector, g.vector.conj())
                G = G - mu * g.sign * st.pset.accumulate(st.w * st.pset.inner(uu))
            S = gibbs(logS - sc.eta0 / np.sqrt(t) * G)[0]
            iters += 1
        obj = neg_entropy(S, sc.lambda_floor)
        gval = constraint_gap(dataset, S).value
        trace.append((outer, mu, obj, gval))
        if _feasible(gval, eps, config):
            if prev_obj is not None and abs(obj - prev_obj) <= sc.obj_tol * max(1.0, abs(obj)):
                break
        else:
            mu *= sc.mu_growth
        prev_obj = obj
    return S, iters, trace, _feasible(constraint_gap(dataset, S).value, eps, config)


def _restore_feasibility(dataset, prob: _DualProblem, S, duals, eps: float):
    """Mix S toward the least-squares point until feasible; certify by the duality gap.

    g is convex along the segment, so bisection on the mixing weight finds a feasible
    point whenever the least-squares point is strictly feasible.  Any dual W gives
    neg_entropy(S) >= -phi(W) on Lambda(eps), so a small gap certifies near-optimality.
    """
    L = least_squares(dataset).matrix
    if constraint_gap(dataset, L).value >= eps:
        return S, False, float("nan")
    lo, hi = 0.0, 1.0
    for _ in range(60):
        t = 0.5 * (lo + hi)
        if constraint_gap(dataset, (1 - t) * S + t * L).value <= eps:
            hi = t
        else:
            lo = t
    St = (1 - hi) * S + hi * L
    phi = min(prob.smooth(W)[0] + eps * float(np.abs(np.linalg.eigvalsh(W)).sum()) for W in duals)
    obj = neg_entropy(St)
    dgap = obj + phi
    return St, bool(dgap <= DUALITY_GAP_TOL * max(1.0, abs(obj))), float(dgap)


def dantzig_entropy(dataset: MeasurementDataset, config: EstimatorConfig | None = None) -> EstimatorSolution:
    """Minimum negative-entropy density matrix in Lambda(eps)."""
    config = (config or EstimatorConfig()).validate()
    sc = config.solver
    t0 = time.perf_counter()
    eps = resolve_epsilon(dataset, config)
    m = dataset.m
    I_m = np.eye(m, dtype=complex) / m
    g0 = constraint_gap(dataset, I_m).value
    diag: dict = {"gap_at_uniform": g0}
    trace: list = []

    if g0 <= eps:
        # the unconstrained minimizer I/m is already feasible
        S, iters, ok, method = I_m, 0, True, "closed_form"
    elif sc.method == "penalty":
        S, iters, trace, ok = _penalty_meg(dataset, eps, config)
        method = "penalty"
    else:
        prob = _DualProblem(dataset, eps)
        S, W, iters, ok = _dual_bb(prob, None, min(sc.max_iter, BB_WARM_ITER), config.feas_tol)
        trace.append(("bb", iters, neg_entropy(S), constraint_gap(dataset, S).value))
        method = "dual_bb"
        if not ok:
            # smoothed L-BFGS gets close on ill-conditioned problems; BB then certifies
            S2, W2, it2 = _dual_lbfgs(dataset, eps, W, sc.smoothing, sc.max_iter)
            trace.append(("lbfgs", it2, neg_entropy(S2), constraint_gap(dataset, S2).value))
            S3, W3, it3, ok = _dual_bb(prob, W2, min(sc.max_iter, BB_MAX_ITER), config.feas_tol)
            trace.append(("bb", it3, neg_entropy(S3), constraint_gap(dataset, S3).value))
            iters += it2 + it3
            method = "dual_bb+lbfgs"
            if ok:
                S, W = S3, W3
            else:
                # no certificate: keep the most nearly feasible point
                cands = [(row[3], k) for k, row in enumerate(trace)]
                S, W = [(S, W), (S2, W2), (S3, W3)][min(cands)[1]]
                ok = _feasible(min(cands)[0], eps, config)
                if not ok:
                    S, ok, dgap = _restore_feasibility(dataset, prob, S, [W, W2, W3], eps)
                    diag["duality_gap"] = dgap
                    if ok:
                        method = "dual_bb+lbfgs+restore"
        diag["dual_nuclear_norm"] = float(np.abs(np.linalg.eigvalsh(W)).sum())

    est = DensityMatrix(S, validate=False)
    gval = constraint_gap(dataset, est.data).value
    converged = bool(ok and _feasible(gval, eps, config))
    return EstimatorSolution(
        estimate=est,
        epsilon=eps,
        constraint_value=gval,
        objective_value=neg_entropy(est.data, sc.lambda_floor),
        iterations=int(iters),
        converged=converged,
        objective="entropy",
        method=method,
        trace=trace,
        diagnostics=diag,
        runtime=time.perf_counter() - t0,
    )


# ------------------------------------------------------------------ nuclear-norm estimator


def _pdhg_nuclear(dataset: MeasurementDataset, eps: float, S0, config: EstimatorConfig):
    """Chambolle-Pock iteration for min ||S||_1 s.t. ||B - M(S)||_inf <= eps."""
    st = dataset.stats
    sc = config.solver
    pset, w = st.pset, st.w

    def Mop(A):
        return pset.accumulate(w * pset.inner(A))

    B = pset.accumulate(st.bsum)
    L = float(w.max())
    tau = sigma = 0.99 / L
    m = dataset.m
    S = np.zeros((m, m), dtype=complex) if S0 is None else hermitian_part(S0).copy()
    Z = np.zeros_like(S)
    Sbar = S.copy()
    best = None
    improved = 0
    prev = None
    trace = []
    every = 50
    for it in range(1, sc.max_iter + 1):
        V = Z + sigma * Mop(Sbar)
        Z = V - sigma * (B + clip_spectrum(V / sigma - B, eps))
        Sn, _ = soft_threshold(S - tau * Mop(Z), tau)
        Sbar = 2 * Sn - S
        S = Sn
        if it % every == 0 or it == sc.max_iter:
            g = spectral_norm(B - Mop(S))
            obj = float(np.abs(np.linalg.eigvalsh(S)).sum())
            trace.append((it, obj, g))
            feas = _feasible(g, eps, config)
            if feas and (best is None or obj < best[1] * (1 - 1e-6)):
                best, improved = (S.copy(), obj, g), it
            if feas and prev is not None and abs(obj - prev) <= max(1e-6 * obj, 1e-15):
                return S, it, trace, True
            if best is not None and it - improved >= STALL_ITER:
                return best[0], it, trace, True
            prev = obj
    if best is not None:
        return best[0], sc.max_iter, trace, True
    return S, sc.max_iter, trace, False


def dantzig_nuclear(
    dataset: MeasurementDataset, config: EstimatorConfig | None = None, init=None
) -> EstimatorSolution:
    """Minimum nuclear-norm Hermitian matrix in Lambda(eps) (no trace or PSD constraint)."""
    config = (config or EstimatorConfig(objective="nuclear")).validate()
    t0 = time.perf_counter()
    eps = resolve_epsilon(dataset, config)
    m = dataset.m
    zero = np.zeros((m, m), dtype=complex)
    g0 = constraint_gap(dataset, zero).value
    if g0 <= eps:
        S, iters, trace, ok, method = zero, 0, [], True, "closed_form"
    else:
        if init is None:
            init = dantzig_entropy(dataset, EstimatorConfig(**{**config.__dict__, "objective": "entropy"})).matrix
        S, iters, trace, ok = _pdhg_nuclear(dataset, eps, as_matrix(init), config)
        method = "pdhg"
    S = hermitian_part(S)
    S.setflags(write=False)
    gval = constraint_gap(dataset, S).value
    return EstimatorSolution(
        estimate=S,
        epsilon=eps,
        constraint_value=gval,
        objective_value=float(np.abs(np.linalg.eigvalsh(S)).sum()),
        iterations=int(iters),
        converged=bool(ok and _feasible(gval, eps, config)),
        objective="nuclear",
        method=method,
        trace=trace,
        diagnostics={"gap_at_zero": g0},
        runtime=time.perf_counter() - t0,
    )


# ------------------------------------------------------------------ least squares


def squared_loss(dataset: MeasurementDataset, S) -> float:
    """(1/n) sum_i (Y_i - <S, X_i>)**2."""
    st = dataset.stats
    s = st.pset.inner(hermitian_part(as_matrix(S)))
    y2 = float(np.mean(np.asarray(dataset.y) ** 2))
    return max(y2 - 2 * float(st.bsum @ s) + float(st.w @ s**2), 0.0)


def least_squares(dataset: MeasurementDataset, config: EstimatorConfig | None = None) -> EstimatorSolution:
    """Projected gradient for the empirical squared loss over density matrices.

    The loss has gradient -2 R(S) and Lipschitz constant 2 max_k w_k, so the fixed
    step 1/L gives the update S <- Proj(S + R(S) / max_k w_k) and a monotone loss.
    """
    config = (config or EstimatorConfig(objective="least_squares")).validate()
    sc = config.solver
    t0 = time.perf_counter()
    eps = resolve_epsilon(dataset, config)
    st = dataset.stats
    step = 1.0 / float(st.w.max())
    S = np.eye(dataset.m, dtype=complex) / dataset.m
    loss = squared_loss(dataset, S)
    trace = [(0, loss)]
    converged = False
    it = 0
    for it in range(1, sc.max_iter + 1):
        Sn = project_spectrahedron(S + step * residual(dataset, S)).data
        ln = squared_loss(dataset, Sn)
        if ln > loss:  # round-off: keep the best iterate, converged if it is a fixed point
            converged = float(np.linalg.norm(Sn - S)) <= 1e-9
            break
        change = loss - ln
        S, loss = Sn, ln
        trace.append((it, loss))
        if change <= sc.obj_tol * max(loss, 1e-300) or loss == 0.0 or change == 0.0:
            converged = True
            break
    est = DensityMatrix(S, validate=False)
    gval = constraint_gap(dataset, est.data).value
    return EstimatorSolution(
        estimate=est,
        epsilon=eps,
        constraint_value=gval,
        objective_value=loss,
        iterations=it,
        converged=converged or loss <= 1e-30,
        objective="least_squares",
        method="projected_gradient",
        trace=trace,
        runtime=time.perf_counter() - t0,
    )


ESTIMATORS = {
    "entropy": dantzig_entropy,
    "nuclear": dantzig_nuclear,
    "least_squares": least_squares,
}


def estimate(dataset: MeasurementDataset, config: EstimatorConfig | None = None) -> EstimatorSolution:
    config = config or EstimatorConfig()
    return ESTIMATORS[config.objective](dataset, config)
