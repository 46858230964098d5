"""Property battery run by ``qst check``: each suite returns pass/fail plus a detail line."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .estimators import constraint_gap, residual
from .measurement import simulate_dataset
from .pauli import PauliSet, densify_kron, build_basis, inner, accumulate
from .rng import stream
from .states import (
    binary_entropy,
    binomial_kl,
    build_packing,
    entropy_and_kl,
    experiment_kl,
    mix_identity,
    random_state,
    schatten_norm,
)

TOL = 1e-10


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def random_hermitian(m: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (A + A.conj().T) / 2


def _basis_labels(b: int, rng, sample: int | None):
    words = build_basis(b).words()
    if sample is None or sample >= len(words):
        return words
    pick = rng.choice(len(words), size=sample, replace=False)
    return [words[0]] + [words[i] for i in sorted(pick) if i != 0]


def suite_pauli(seed: int = 0) -> tuple[bool, str]:
    """Orthonormality, +-1/sqrt(m) spectrum, trace law and Parseval."""
    worst = {"orth": 0.0, "spec": 0.0, "trace": 0.0, "parseval": 0.0}
    for b in (1, 2, 3, 4):
        rng = stream(seed, "check", 1, b)
        m = 2**b
        words = _basis_labels(b, rng, None if b <= 2 else 48)
        D = np.array([densify_kron(w) for w in words])
        G = np.einsum("aij,bji->ab", D, D)
        worst["orth"] = max(worst["orth"], np.abs(G - np.eye(len(words))).max())
        for w, E in zip(words, D):
            lam = np.linalg.eigvalsh(E)
            if set(w) == {"I"}:
                target = np.full(m, 1 / np.sqrt(m))
                tr_target = np.sqrt(m)
            else:
                target = np.r_[np.full(m // 2, -1 / np.sqrt(m)), np.full(m // 2, 1 / np.sqrt(m))]
                tr_target = 0.0
            worst["spec"] = max(worst["spec"], np.abs(lam - target).max())
            worst["trace"] = max(worst["trace"], abs(np.trace(E) - tr_target))
        full = PauliSet.full(b)
        for _ in range(20):
            A = random_hermitian(m, rng)
            c = full.inner(A)
            rel = abs(np.sum(c**2) - np.linalg.norm(A) ** 2) / np.linalg.norm(A) ** 2
            worst["parseval"] = max(worst["parseval"], rel)
    ok = all(v <= TOL for v in worst.values())
    return ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


def suite_cone(seed: int = 0, count: int = 1000) -> tuple[bool, str]:
    """||S1 - S||_1 <= 2 sqrt(2l) ||S1 - S||_2 for rank(S) <= l."""
    bad = 0
    worst = 0.0
    for i in range(count):
        rng = stream(seed, "check", 2, i)
        m = int(rng.choice([2, 4, 8, 16]))
        l = int(rng.integers(1, m + 1))
        S = random_state(m, l, seed=rng).data
        S1 = random_state(m, int(rng.integers(1, m + 1)), seed=rng).data
        D = S1 - S
        ratio = schatten_norm(D, 1) / (2 * np.sqrt(2 * l) * schatten_norm(D, 2))
        worst = max(worst, ratio)
        bad += ratio > 1 + 1e-12
    return bad == 0, f"{count} instances, violations={bad}, max ratio={worst:.3f}"


INTERPOLATION_TRIPLES = ((1, 2, np.inf), (1, 4 / 3, 2), (2, 3, np.inf))


def suite_interpolation(seed: int = 0, count: int = 1000) -> tuple[bool, str]:
    """||A||_q <= ||A||_p^mu ||A||_r^(1-mu) with mu/p + (1-mu)/r = 1/q."""
    bad = 0
    worst = 0.0
    for i in range(count):
        rng = stream(seed, "check", 3, i)
        m = int(rng.choice([2, 4, 8, 16]))
        A = random_hermitian(m, rng)
        if rng.random() < 0.3:  # low-rank instances push toward equality
            lam, V = np.linalg.eigh(A)
            lam[: m - int(rng.integers(1, m + 1))] = 0
            A = (V * lam) @ V.conj().T
        for p, q, r in INTERPOLATION_TRIPLES:
            ir = 0.0 if np.isinf(r) else 1 / r
            mu = (1 / q - ir) / (1 / p - ir)
            lhs = schatten_norm(A, q)
            rhs = schatten_norm(A, p) ** mu * schatten_norm(A, r) ** (1 - mu)
            worst = max(worst, lhs / rhs)
            bad += lhs > rhs * (1 + 1e-12)
    return bad == 0, f"{count} matrices x {len(INTERPOLATION_TRIPLES)} triples, violations={bad}, max ratio={worst:.4f}"


def suite_binomial_kl(grid: int = 50) -> tuple[bool, str]:
    """KL(Bin(K,p) || Bin(K,q)) <= 8 K (p-q)^2 for p, q in [0.15, 0.85]."""
    ps = np.linspace(0.15, 0.85, grid)
    P, Q = np.meshgrid(ps, ps, indexing="ij")
    bad = 0
    worst = 0.0
    for K in (1, 10, 100):
        kl = binomial_kl(K, P, Q)
        bound = 8 * K * (P - Q) ** 2
        bad += int(np.sum(kl > bound + 1e-15))
        mask = bound > 0
        worst = max(worst, float(np.max(kl[mask] / bound[mask])))
    return bad == 0, f"{grid}x{grid} grid, K in (1,10,100), violations={bad}, max ratio={worst:.3f}"


def suite_packing_kl(seed: int = 0) -> tuple[bool, str]:
    """experiment_kl <= (nK/m) ||rho1 - rho2||_2^2 on an 8-state packing at b = 3."""
    n, K = 256, 100
    inst = build_packing(8, 2, n, K, p=2, target_count=8, seed=seed)
    bad = 0
    worst = 0.0
    pairs = 0
    for a in inst.states:
        for b in inst.states:
            if a is b:
                continue
            kl = experiment_kl(a, b, n, K)
            bound = n * K / a.m * np.linalg.norm(a.data - b.data) ** 2
            worst = max(worst, kl / bound)
            bad += kl > bound + 1e-9
            pairs += 1
    ok = bad == 0 and len(inst.states) == 8
    return ok, f"{len(inst.states)} states, {pairs} ordered pairs, violations={bad}, max ratio={worst:.3f}"


def suite_mixing(seed: int = 0, count: int = 200) -> tuple[bool, str]:
    """K(rho||S) <= (K(rho'||S) + h(delta)) / (1 - delta), rho' = (1-delta) rho + delta I/m."""
    bad = 0
    checked = 0
    for i in range(count):
        rng = stream(seed, "check", 6, i)
        m = int(rng.choice([2, 4, 8, 16]))
        rho = random_state(m, int(rng.integers(1, m + 1)), seed=rng)
        S = random_state(m, m, seed=rng)  # full rank keeps both sides finite
        for delta in (0.1, 0.01):
            lhs = entropy_and_kl(rho, S).kl
            rhs = (entropy_and_kl(mix_identity(rho, delta), S).kl + binary_entropy(delta)) / (1 - delta)
            bad += lhs > rhs + 1e-10
            checked += 1
    return bad == 0, f"{count} triples x 2 deltas, violations={bad}"


def suite_sparse_dense(seed: int = 0) -> tuple[bool, str]:
    """Sparse kernels agree with dense references: inner, accumulate, residual, constraint_gap."""
    worst = {"inner": 0.0, "accumulate": 0.0, "residual": 0.0, "gap": 0.0}
    for b in (1, 2, 3, 4):
        m = 2**b
        words = build_basis(b).words()
        for i in range(25):
            rng = stream(seed, "check", 7, b, i)
            A = random_hermitian(m, rng)
            w = words[int(rng.integers(len(words)))]
            worst["inner"] = max(worst["inner"], abs(inner(A, w) - np.trace(A @ densify_kron(w)).real))
            pick = rng.choice(len(words), size=min(6, len(words)), replace=False)
            coeffs = {words[j]: float(rng.standard_normal()) for j in pick}
            dense = sum(c * densify_kron(k) for k, c in coeffs.items())
            worst["accumulate"] = max(worst["accumulate"], np.abs(accumulate(coeffs) - dense).max())

            rho = random_state(m, int(rng.integers(1, m + 1)), seed=rng)
            ds = simulate_dataset(rho, 40, 7, seed=int(rng.integers(2**31)))
            S = random_state(m, m, seed=rng).data
            naive = np.zeros((m, m), dtype=complex)
            for lab, y in zip(ds.labels, ds.y):
                E = densify_kron(lab)
                naive += (y - np.trace(S @ E).real) * E
            naive /= ds.n
            worst["residual"] = max(worst["residual"], np.abs(residual(ds, S) - naive).max())
            g_dense = np.abs(np.linalg.eigvals(naive)).max()
            worst["gap"] = max(worst["gap"], abs(constraint_gap(ds, S).value - g_dense))
    ok = all(v <= TOL for v in worst.values())
    return ok, ", ".join(f"{k}={v:.1e}" for k, v in worst.items())


SUITES: dict[str, Callable[[], tuple[bool, str]]] = {
    "pauli_basis": suite_pauli,
    "cone_inequality": suite_cone,
    "interpolation_inequality": suite_interpolation,
    "binomial_kl_bound": suite_binomial_kl,
    "packing_experiment_kl": suite_packing_kl,
    "identity_mixing_bound": suite_mixing,
    "sparse_dense_equivalence": suite_sparse_dense,
}


def run_checks(names=None) -> list[SuiteResult]:
    out = []
    for name in names or SUITES:
        t0 = time.perf_counter()
        try:
            ok, detail = SUITES[name]()
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(SuiteResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out


def format_table(results: list[SuiteResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'suite'.ljust(width)}  status  time    detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name.ljust(width)}  {status}    {r.seconds:5.1f}s  {r.detail}")
    return "\n".join(lines)
