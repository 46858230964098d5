"""Normalized tensor-product Pauli basis of the Hermitian m x m matrices, m = 2**b.

Every basis element ``E_k = W_{a_1} (x) ... (x) W_{a_b}`` with ``W_a = sigma_a / sqrt(2)``
is a generalized permutation matrix: row ``i`` holds a single nonzero entry in column
``perm[i]`` equal to ``i**phase[i] / sqrt(m)``.  That sparse form gives O(m) inner
products and O(m) accumulation per label, which is what the estimators rely on.

Conventions
-----------
* Single-qubit matrices follow

      sigma_x = [[0, 1], [1, 0]],  sigma_y = [[0, i], [-i, 0]],  sigma_z = [[1, 0], [0, -1]].

  Note the sign of ``sigma_y``: it is the negative of the usual physics convention.
  Basis elements with an odd number of ``Y`` factors flip sign; nothing else changes.
* Labels are words over ``IXYZ``.  Index ``k`` (1-based) is ``1 + sum_j d_j 4**(b-1-j)``
  with digits ``I=0, X=1, Y=2, Z=3`` and the first qubit as most significant digit,
  so ``k = 1`` is the all-``I`` word and ``E_1 = I_m / sqrt(m)``.
* The first qubit is the most significant bit of the row index (Kronecker order).
* Column indices in :class:`SparsePauli` are 0-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

SYMBOLS = "IXYZ"
MAX_QUBITS = 12
MAX_DIM = 4096
HERMITIAN_TOL = 1e-10
IMAG_TOL = 1e-10

# i**k for k = 0..3
I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class ResourceLimitError(ValueError):
    """Requested size exceeds the desk-scale resource guard."""


class InvalidStateError(ValueError):
    """Input is not a valid (or Hermitian) state for the requested operation."""


def check_qubits(b: int) -> int:
    if not isinstance(b, (int, np.integer)) or isinstance(b, bool):
        raise TypeError(f"qubit count must be an integer, got {b!r}")
    if not 1 <= b <= MAX_QUBITS:
        raise ResourceLimitError(f"qubit count must lie in [1, {MAX_QUBITS}], got {b}")
    return int(b)


def qubits_for_dim(m: int) -> int:
    b = int(m).bit_length() - 1
    if m < 2 or 2**b != m:
        raise ValueError(f"dimension must be a power of two >= 2, got {m}")
    return check_qubits(b)


@dataclass(frozen=True)
class PauliLabel:
    """A word over ``IXYZ`` naming one normalized basis element."""

    word: str

    def __post_init__(self):
        if not isinstance(self.word, str) or not self.word:
            raise ValueError(f"Pauli word must be a non-empty string, got {self.word!r}")
        bad = set(self.word) - set(SYMBOLS)
        if bad:
            raise ValueError(f"invalid Pauli symbols {sorted(bad)} in {self.word!r}")
        check_qubits(len(self.word))

    @property
    def b(self) -> int:
        return len(self.word)

    @property
    def m(self) -> int:
        return 2**self.b

    @property
    def index(self) -> int:
        k = 0
        for ch in self.word:
            k = 4 * k + SYMBOLS.index(ch)
        return k + 1

    @property
    def is_identity(self) -> bool:
        return set(self.word) == {"I"}

    @classmethod
    def from_index(cls, k: int, b: int) -> "PauliLabel":
        b = check_qubits(b)
        if not 1 <= k <= 4**b:
            raise ValueError(f"index must lie in [1, {4**b}], got {k}")
        digits = []
        k -= 1
        for _ in range(b):
            k, d = divmod(k, 4)
            digits.append(SYMBOLS[d])
        return cls("".join(reversed(digits)))

    @classmethod
    def identity(cls, b: int) -> "PauliLabel":
        return cls("I" * check_qubits(b))

    def __str__(self) -> str:
        return self.word


LabelLike = Union[PauliLabel, str]


def as_label(label: LabelLike) -> PauliLabel:
    return label if isinstance(label, PauliLabel) else PauliLabel(label)


class PauliBasis(Sequence[PauliLabel]):
    """Lazily enumerated ordered basis of 4**b labels (position 0 is the all-I word)."""

    def __init__(self, b: int):
        self.b = check_qubits(b)
        self.m = 2**self.b

    def __len__(self) -> int:
        return 4**self.b

    def __getitem__(self, pos):
        if isinstance(pos, slice):
            return [self[i] for i in range(*pos.indices(len(self)))]
        if pos < 0:
            pos += len(self)
        if not 0 <= pos < len(self):
            raise IndexError(pos)
        return PauliLabel.from_index(pos + 1, self.b)

    def __iter__(self) -> Iterator[PauliLabel]:
        for word in itertools.product(SYMBOLS, repeat=self.b):
            yield PauliLabel("".join(word))

    def words(self) -> list[str]:
        return ["".join(w) for w in itertools.product(SYMBOLS, repeat=self.b)]


def build_basis(b: int) -> PauliBasis:
    """All 4**b labels of the b-qubit basis, in index order."""
    return PauliBasis(b)


@dataclass(frozen=True, eq=False)
class SparsePauli:
    """Generalized-permutation form: ``E[i, perm[i]] = i**phase[i] * scale``."""

    perm: np.ndarray
    phase: np.ndarray  # exponents of i, values in {0, 1, 2, 3}
    scale: float

    @property
    def m(self) -> int:
        return len(self.perm)

    @property
    def phases(self) -> np.ndarray:
        return I_POWERS[self.phase]

    def dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.m), dtype=complex)
        out[np.arange(self.m), self.perm] = self.phases * self.scale
        return out


def _sparse_arrays(word: str) -> tuple[np.ndarray, np.ndarray]:
    b = len(word)
    m = 2**b
    rows = np.arange(m)
    xmask = 0
    phase = np.zeros(m, dtype=np.int64)
    for q, ch in enumerate(word):
        shift = b - 1 - q
        bit = (rows >> shift) & 1
        if ch in "XY":
            xmask |= 1 << shift
        if ch == "Z":
            phase += 2 * bit
        elif ch == "Y":
            # row bit 0 -> +i, row bit 1 -> -i
            phase += 1 + 2 * bit
    return rows ^ xmask, (phase % 4).astype(np.int8)


def to_sparse(label: LabelLike) -> SparsePauli:
    label = as_label(label)
    perm, phase = _sparse_arrays(label.word)
    perm.setflags(write=False)
    phase.setflags(write=False)
    return SparsePauli(perm=perm, phase=phase, scale=1.0 / np.sqrt(label.m))


def densify(label: LabelLike) -> np.ndarray:
    return to_sparse(label).dense()


def densify_kron(label: LabelLike) -> np.ndarray:
    """Dense E_k built from explicit Kronecker products (reference path)."""
    label = as_label(label)
    out = np.ones((1, 1), dtype=complex)
    for ch in label.word:
        out = np.kron(out, SIGMA[ch] / np.sqrt(2))
    return out


def check_hermitian(S: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidStateError(f"expected a square matrix, got shape {S.shape}")
    if S.shape[0] > MAX_DIM:
        raise ResourceLimitError(f"dimension {S.shape[0]} exceeds cap {MAX_DIM}")
    dev = np.max(np.abs(S - S.conj().T)) if S.size else 0.0
    if dev > tol:
        raise InvalidStateError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return S


def _real(z: complex) -> float:
    if abs(z.imag) >= IMAG_TOL:
        raise InvalidStateError(f"inner product has imaginary part {z.imag:.3e}")
    return float(z.real)


def inner(S: np.ndarray, label: LabelLike) -> float:
    """tr(S E_k) for Hermitian S, in O(m)."""
    S = check_hermitian(S)
    sp = to_sparse(label)
    if S.shape[0] != sp.m:
        raise ValueError(f"dimension mismatch: matrix {S.shape[0]}, label {sp.m}")
    cols = np.arange(sp.m)
    return _real(np.sum(S[sp.perm, cols] * sp.phases) * sp.scale)


def projector_weights(S, label: LabelLike) -> tuple[float, float]:
    """Outcome probabilities (p+, p-) of measuring E_k on state S."""
    data = getattr(S, "data", S)
    label = as_label(label)
    coef = np.sqrt(label.m) * inner(data, label)
    if abs(coef) > 1 + 1e-6:
        raise InvalidStateError(f"|sqrt(m) <S, E_k>| = {abs(coef):.6f} exceeds 1")
    p_plus = min(max((1.0 + coef) / 2.0, 0.0), 1.0)
    return p_plus, 1.0 - p_plus


def accumulate(coeffs: Mapping[LabelLike, float], m: int | None = None) -> np.ndarray:
    """Dense sum_k c_k E_k.  ``m`` is required when ``coeffs`` is empty."""
    items = [(as_label(k), float(v)) for k, v in coeffs.items()]
    if not items:
        if m is None:
            raise ValueError("dimension m is required for an empty coefficient map")
        return np.zeros((m, m), dtype=complex)
    dims = {lab.m for lab, _ in items}
    if len(dims) != 1 or (m is not None and dims != {m}):
        raise ValueError(f"inconsistent label dimensions {sorted(dims)}")
    pset = PauliSet([lab for lab, _ in items])
    return pset.accumulate(np.array([v for _, v in items]))


class PauliSet:
    """A stack of d sparse labels with vectorized inner products and accumulation.

    ``inner(S)`` returns ``tr(S E_k)`` for every label; ``accumulate(c)`` returns
    ``sum_k c_k E_k``.  Both cost O(d m).
    """

    def __init__(self, labels: Iterable[LabelLike]):
        self.labels = [as_label(x) for x in labels]
        if not self.labels:
            raise ValueError("PauliSet needs at least one label")
        bs = {lab.b for lab in self.labels}
        if len(bs) != 1:
            raise ValueError(f"labels of mixed qubit counts {sorted(bs)}")
        self.b = bs.pop()
        self.m = 2**self.b
        d, m = len(self.labels), self.m
        if d * m > 2**27:
            raise ResourceLimitError(f"{d} labels at m={m} exceed the memory guard")
        perm = np.empty((d, m), dtype=np.int64)
        phase = np.empty((d, m), dtype=np.int8)
        for t, lab in enumerate(self.labels):
            perm[t], phase[t] = _sparse_arrays(lab.word)
        self.perm = perm
        self.phase = phase
        self._cols = np.broadcast_to(np.arange(m), perm.shape)
        self._flat = (np.arange(m)[None, :] * m + perm).ravel()
        self._vals = I_POWERS[phase] / np.sqrt(m)

    @classmethod
    def full(cls, b: int) -> "PauliSet":
        return cls(build_basis(b).words())

    def __len__(self) -> int:
        return len(self.labels)

    @cached_property
    def indices(self) -> np.ndarray:
        return np.array([lab.index for lab in self.labels])

    def inner(self, S: np.ndarray) -> np.ndarray:
        """tr(S E_k) for each label; S must be Hermitian (not re-checked here)."""
        return np.einsum("dm,dm->d", S[self.perm, self._cols], self._vals).real

    def inner_complex(self, S: np.ndarray) -> np.ndarray:
        return np.einsum("dm,dm->d", S[self.perm, self._cols], self._vals)

    def quadratic(self, V: np.ndarray) -> np.ndarray:
        """<E_k v, v> for each row v of V, shape (T, d)."""
        V = np.atleast_2d(V)
        # v^H E v = sum_i conj(v_i) E[i, perm_i] v_{perm_i}
        return np.einsum("ti,tdi,di->td", V.conj(), V[:, self.perm], self._vals).real

    def accumulate(self, c: np.ndarray) -> np.ndarray:
        m = self.m
        v = (np.asarray(c, dtype=float)[:, None] * self._vals).ravel()
        A = np.bincount(self._flat, v.real, m * m) + 1j * np.bincount(self._flat, v.imag, m * m)
        A = A.reshape(m, m)
        return (A + A.conj().T) / 2

    def dense(self) -> np.ndarray:
        """All labels as a dense (d, m, m) stack."""
        d, m = len(self), self.m
        out = np.zeros((d, m, m), dtype=complex)
        out[np.arange(d)[:, None], np.arange(m)[None, :], self.perm] = self._vals
        return out


def pauli_coefficients(A: np.ndarray) -> np.ndarray:
    """All m**2 coefficients <A, E_k> in index order."""
    A = check_hermitian(A)
    return PauliSet.full(qubits_for_dim(A.shape[0])).inner(A)
