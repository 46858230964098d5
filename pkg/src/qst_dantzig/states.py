"""Density matrices, Schatten norms, entropies, projections and hard-instance packings."""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .pauli import (
    MAX_DIM,
    InvalidStateError,
    PauliSet,
    ResourceLimitError,
    qubits_for_dim,
)
from .rng import as_generator

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
PSD_TOL = 1e-9
LAMBDA_FLOOR = 1e-12


class DomainError(ValueError):
    """Inputs fall outside the region where a formula is valid."""


def hermitian_part(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    return (A + A.conj().T) / 2


class DensityMatrix:
    """Validated m x m state: Hermitian, unit trace, PSD within tolerance.

    The stored array is exactly Hermitian (its Hermitian part is kept) and read-only.
    """

    __slots__ = ("_data",)

    def __init__(self, data, validate: bool = True):
        A = np.array(data, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidStateError(f"expected a square matrix, got shape {A.shape}")
        if A.shape[0] > MAX_DIM:
            raise ResourceLimitError(f"dimension {A.shape[0]} exceeds cap {MAX_DIM}")
        if validate:
            dev = np.max(np.abs(A - A.conj().T))
            if dev > HERMITIAN_TOL:
                raise InvalidStateError(f"not Hermitian (max deviation {dev:.3e})")
        A = hermitian_part(A)
        if validate:
            tr = np.trace(A).real
            if abs(tr - 1) > TRACE_TOL:
                raise InvalidStateError(f"trace {tr:.12f} differs from 1")
            lmin = np.linalg.eigvalsh(A)[0]
            if lmin < -PSD_TOL:
                raise InvalidStateError(f"minimum eigenvalue {lmin:.3e} is negative")
        A.setflags(write=False)
        self._data = A

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def m(self) -> int:
        return self._data.shape[0]

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._data)

    def rank(self, tol: float = 1e-8) -> int:
        return int(np.sum(self.eigvalsh() > tol))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.m == other.m and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"DensityMatrix(m={self.m})"

    @classmethod
    def maximally_mixed(cls, m: int) -> "DensityMatrix":
        return cls(np.eye(m) / m)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    # serialization
    def to_json_dict(self) -> dict:
        return {"m": self.m, "re": self._data.real.tolist(), "im": self._data.imag.tolist()}

    @classmethod
    def from_json_dict(cls, obj: dict, validate: bool = True) -> "DensityMatrix":
        try:
            m = int(obj["m"])
            A = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidStateError(f"malformed density-matrix JSON: {exc}") from exc
        if A.shape != (m, m):
            raise InvalidStateError(f"declared m={m} but arrays have shape {A.shape}")
        return cls(A, validate=validate)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        return cls.from_json_dict(json.loads(text))

    def to_bytes(self) -> bytes:
        """Row-major little-endian float64 with interleaved (re, im)."""
        return np.ascontiguousarray(self._data, dtype="<c16").tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes, validate: bool = True) -> "DensityMatrix":
        if len(raw) % 16:
            raise InvalidStateError("binary state length is not a multiple of 16 bytes")
        count = len(raw) // 16
        m = int(round(np.sqrt(count)))
        if m * m != count:
            raise InvalidStateError(f"binary state holds {count} entries, not a square")
        A = np.frombuffer(raw, dtype="<c16").reshape(m, m)
        return cls(A, validate=validate)

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()[:16]


def as_matrix(S) -> np.ndarray:
    return S.data if isinstance(S, DensityMatrix) else np.asarray(S)


def haar_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    Q, R = np.linalg.qr(G)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_state(m: int, r: int, seed=None, equal_spectrum: bool = False) -> DensityMatrix:
    """Rank-r state with a Haar frame and a Dirichlet(1,...,1) spectrum."""
    qubits_for_dim(m)
    if not 1 <= r <= m:
        raise ValueError(f"rank must lie in [1, {m}], got {r}")
    rng = as_generator(seed, "state")
    U = haar_unitary(m, rng)[:, :r]
    if equal_spectrum:
        lam = np.full(r, 1.0 / r)
    else:
        lam = rng.dirichlet(np.ones(r))
        # keep every retained eigenvalue clearly nonzero
        lam = np.maximum(lam, 1e-6)
        lam /= lam.sum()
    if equal_spectrum and r == m:
        return DensityMatrix(np.eye(m) / m)
    return DensityMatrix((U * lam) @ U.conj().T)


def schatten_norm(A, p: float = 2) -> float:
    """(sum |lambda_j|**p)**(1/p) for Hermitian A; p = inf gives the operator norm."""
    if not p >= 1:
        raise ValueError(f"Schatten index must be >= 1, got {p}")
    lam = np.abs(np.linalg.eigvalsh(hermitian_part(as_matrix(A))))
    if np.isinf(p):
        return float(lam.max(initial=0.0))
    if p == 1:
        return float(lam.sum())
    if p == 2:
        return float(np.sqrt(np.sum(lam**2)))
    top = lam.max(initial=0.0)
    if top == 0:
        return 0.0
    return float(top * np.sum((lam / top) ** p) ** (1.0 / p))


class Divergences(NamedTuple):
    entropy: float  # V(S1) = -tr S1 log S1
    kl: float  # K(S1 || S2)
    symmetric_kl: float  # K(S1 || S2) + K(S2 || S1)
    floored: bool  # S1 has weight on the floored spectrum of S2
    symmetric_floored: bool


def _relative(l1, l2, V2, S1, floor):
    """tr S1 log S1 - tr S1 log S2 with spectra floored, plus the flooring flag."""
    w = np.einsum("ij,ik,kj->j", V2.conj(), S1, V2).real  # diag(V2* S1 V2)
    p = np.clip(l1, 0.0, None)
    neg = np.sum(p * np.log(np.maximum(p, floor)))
    cross = np.sum(w * np.log(np.maximum(l2, floor)))
    flagged = bool(np.sum(w[l2 < floor]) > floor)
    return max(float(neg - cross), 0.0), flagged


def entropy_and_kl(S1, S2, floor: float = LAMBDA_FLOOR) -> Divergences:
    """Von Neumann entropy of S1 and quantum relative entropies between S1 and S2.

    Eigenvalues are floored at ``floor`` before taking logs.  When S1 has weight on
    directions where S2 is below the floor, the exact divergence is infinite and the
    corresponding flag is set; the returned number is then the floored surrogate.
    """
    A1, A2 = hermitian_part(as_matrix(S1)), hermitian_part(as_matrix(S2))
    if A1.shape != A2.shape:
        raise ValueError(f"shape mismatch {A1.shape} vs {A2.shape}")
    l1, V1 = np.linalg.eigh(A1)
    l2, V2 = np.linalg.eigh(A2)
    p1 = np.clip(l1, 0.0, None)
    entropy = float(-np.sum(p1 * np.log(np.maximum(p1, floor))))
    k12, f12 = _relative(l1, l2, V2, A1, floor)
    k21, f21 = _relative(l2, l1, V1, A2, floor)
    return Divergences(entropy, k12, k12 + k21, f12, f12 or f21)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    k = idx[u - css / idx > 0][-1]
    return np.maximum(v - css[k - 1] / k, 0.0)


def project_spectrahedron(A) -> DensityMatrix:
    """Frobenius-nearest density matrix to a Hermitian A."""
    lam, V = np.linalg.eigh(hermitian_part(as_matrix(A)))
    return DensityMatrix((V * project_simplex(lam)) @ V.conj().T, validate=False)


def mix_identity(rho, delta: float) -> DensityMatrix:
    """(1 - delta) rho + delta I/m."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    A = as_matrix(rho)
    m = A.shape[0]
    return DensityMatrix((1 - delta) * A + delta * np.eye(m) / m)


def binary_entropy(delta: float) -> float:
    """h(d) = d log(1/d) + (1-d) log(1/(1-d))."""
    if delta in (0.0, 1.0):
        return 0.0
    return float(-delta * np.log(delta) - (1 - delta) * np.log1p(-delta))


def binomial_kl(K, p, q):
    """KL(Bin(K, p) || Bin(K, q)) via the per-trial Bernoulli divergence."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0, p * np.log(p / q), 0.0)
        b = np.where(p < 1, (1 - p) * np.log((1 - p) / (1 - q)), 0.0)
    return K * (a + b)


EXPERIMENT_COEF_MAX = 0.7


def outcome_probabilities(rho) -> np.ndarray:
    """p_k = (1 + sqrt(m) <rho, E_k>)/2 for every basis index (position 0 is E_1)."""
    A = hermitian_part(as_matrix(rho))
    m = A.shape[0]
    pset = PauliSet.full(qubits_for_dim(m))
    return (1 + np.sqrt(m) * pset.inner(A)) / 2


def experiment_kl(rho1, rho2, n: int, K: int) -> float:
    """KL divergence between the laws of n Binomial records under two states.

    Both states must satisfy sqrt(m) |<rho, E_k>| <= 0.7 for k >= 2, which keeps
    every success probability in [0.15, 0.85].
    """
    p1, p2 = outcome_probabilities(rho1)[1:], outcome_probabilities(rho2)[1:]
    for p in (p1, p2):
        worst = np.max(np.abs(2 * p - 1), initial=0.0)
        if worst > EXPERIMENT_COEF_MAX + 1e-12:
            raise DomainError(f"max sqrt(m)|<rho,E_k>| = {worst:.4f} exceeds {EXPERIMENT_COEF_MAX}")
    m = as_matrix(rho1).shape[0]
    return float(n / m**2 * np.sum(binomial_kl(K, p1, p2)))


def spread_quality(pset: PauliSet, V: np.ndarray) -> np.ndarray:
    """sqrt(m) max_{k>=2} |<E_k v, v>| for each unit row v of V."""
    return np.sqrt(pset.m) * np.abs(pset.quadratic(V)).max(axis=1)


def find_spread_vector(m: int, trials: int = 100_000, seed=None, chunk: int = 2000):
    """Best of ``trials`` random complex unit vectors for a flat Pauli profile.

    Returns ``(v, quality)`` with quality = sqrt(m) max_{k>=2} |<E_k v, v>|.
    """
    b = qubits_for_dim(m)
    rng = as_generator(seed, "spread")
    pset = PauliSet(PauliSet.full(b).labels[1:]) if m > 1 else None
    chunk = max(1, min(chunk, max(1, 2**22 // (m * m * m))))
    best_v, best_q = None, np.inf
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        V = rng.standard_normal((t, m)) + 1j * rng.standard_normal((t, m))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        q = spread_quality(pset, V)
        j = int(np.argmin(q))
        if q[j] < best_q:
            best_q, best_v = float(q[j]), V[j].copy()
        done += t
    return best_v, best_q


def complete_frame(v: np.ndarray) -> np.ndarray:
    """Unitary whose first column is the unit vector v."""
    m = len(v)
    M = np.eye(m, dtype=complex)
    M[:, 0] = v
    Q, R = np.linalg.qr(M)
    # undo the sign/phase freedom so that Q[:, 0] == v
    Q[:, 0] *= R[0, 0] / abs(R[0, 0])
    return Q


@dataclass
class PackingInstance:
    states: list
    kappa: float
    separation_p: float
    min_pairwise_distance: float
    achieved_constant: float
    c_prime: float
    frame: np.ndarray
    v_quality: float
    m: int
    r: int
    n: int
    K: int
    seed: int
    target_count: int
    budget_exhausted: bool = False
    projectors: list = field(default_factory=list, repr=False)

    def coefficient_bound(self) -> float:
        """Upper bound on |<S', E_k>| implied by the frame quality, for k >= 2."""
        return ((1 - self.kappa) * self.v_quality + self.kappa) / np.sqrt(self.m)

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "r": self.r,
            "n": self.n,
            "K": self.K,
            "seed": self.seed,
            "p": _encode_p(self.separation_p),
            "target_count": self.target_count,
            "kappa": self.kappa,
            "c_prime": self.c_prime,
            "min_pairwise_distance": self.min_pairwise_distance,
            "achieved_constant": self.achieved_constant,
            "v_quality": self.v_quality,
            "budget_exhausted": self.budget_exhausted,
            "frame": {"re": self.frame.real.tolist(), "im": self.frame.imag.tolist()},
            "states": [s.to_json_dict() for s in self.states],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "PackingInstance":
        frame = np.array(obj["frame"]["re"]) + 1j * np.array(obj["frame"]["im"])
        return cls(
            states=[DensityMatrix.from_json_dict(s) for s in obj["states"]],
            kappa=obj["kappa"],
            separation_p=_decode_p(obj["p"]),
            min_pairwise_distance=obj["min_pairwise_distance"],
            achieved_constant=obj["achieved_constant"],
            c_prime=obj["c_prime"],
            frame=frame,
            v_quality=obj["v_quality"],
            m=obj["m"],
            r=obj["r"],
            n=obj["n"],
            K=obj["K"],
            seed=obj["seed"],
            target_count=obj["target_count"],
            budget_exhausted=obj["budget_exhausted"],
        )


def _encode_p(p):
    return "inf" if np.isinf(p) else p


def _decode_p(p):
    return np.inf if p in ("inf", "Infinity") else float(p)


def random_projector(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    U, _ = np.linalg.qr(G)
    return U @ U.conj().T


def build_packing(
    m: int,
    r: int,
    n: int,
    K: int,
    p: float = 2,
    target_count: int = 8,
    c1: float = 0.25,
    seed: int = 0,
    c_sep: float = 1.0,
    budget: int = 10_000,
    spread_trials: int = 100_000,
) -> PackingInstance:
    """Well-separated rank-r states with flat Pauli profiles (minimax hard family).

    Rank-(r-1) projectors Q on C^(m-1) are drawn at random and accepted greedily
    when ||Q - Q'||_p > c_sep (r-1)**(1/p) for every accepted Q'.  Each is embedded
    as diag(1 - kappa, kappa Q/(r-1)) and rotated into a frame whose first vector
    has small overlaps with every non-identity Pauli.
    """
    qubits_for_dim(m)
    if not 2 <= r <= m // 2:
        raise ValueError(f"rank must lie in [2, m/2] = [2, {m // 2}], got {r}")
    if p < 1:
        raise ValueError(f"Schatten index must be >= 1, got {p}")
    kappa = c1 * m * (r - 1) / np.sqrt(n * K)
    if kappa > 0.5:
        raise DomainError(
            f"kappa = {kappa:.3f} > 1/2; reduce r (use the largest r' with "
            f"c1 m (r'-1)/sqrt(nK) <= 1/2) or increase nK"
        )
    rng = as_generator(seed, "packing")
    v, quality = find_spread_vector(m, spread_trials, seed=as_generator(seed, "spread"))
    frame = complete_frame(v)

    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    threshold = c_sep * (r - 1) ** inv_p
    accepted: list[np.ndarray] = []
    draws = 0
    while len(accepted) < target_count and draws < budget:
        Q = random_projector(m - 1, r - 1, rng)
        draws += 1
        if all(schatten_norm(Q - Qa, p) > threshold for Qa in accepted):
            accepted.append(Q)
    exhausted = len(accepted) < target_count
    if exhausted:
        warnings.warn(
            f"packing budget of {budget} draws exhausted with {len(accepted)} of {target_count} states",
            RuntimeWarning,
            stacklevel=2,
        )

    states = []
    for Q in accepted:
        SQ = np.zeros((m, m), dtype=complex)
        SQ[0, 0] = 1 - kappa
        SQ[1:, 1:] = kappa * Q / (r - 1)
        states.append(DensityMatrix(frame @ SQ @ frame.conj().T))

    dmin = np.inf
    for a in range(len(states)):
        for b_ in range(a + 1, len(states)):
            dmin = min(dmin, schatten_norm(states[a].data - states[b_].data, p))
    if not np.isfinite(dmin):
        dmin = float("nan")
    scale = m * r**inv_p / np.sqrt(n * K)
    return PackingInstance(
        states=states,
        kappa=float(kappa),
        separation_p=float(p),
        min_pairwise_distance=float(dmin),
        achieved_constant=float(dmin / scale),
        c_prime=float(c_sep),
        frame=frame,
        v_quality=float(quality),
        m=m,
        r=r,
        n=n,
        K=K,
        seed=int(seed),
        target_count=int(target_count),
        budget_exhausted=exhausted,
        projectors=accepted,
    )
