"""Uniform Pauli design, K-shot Binomial outcomes and averaged responses.

Record ``i`` observes label ``X_i`` drawn uniformly (with replacement) from all m**2
basis elements and a count ``k_plus ~ Bin(K, (1 + sqrt(m) <rho, X_i>)/2)``.  The
response is ``Y_i = (2 k_plus - K) / (K sqrt(m))``.

Streams: the design uses ``stream(seed, "design")`` and record ``i`` draws its
shots from ``stream(seed, "shots", i)``, so records can be simulated in any order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .pauli import SYMBOLS, PauliLabel, PauliSet, as_label, build_basis, projector_weights, qubits_for_dim
from .rng import stream
from .states import DensityMatrix, as_matrix

INVERSION_MAX_K = 64


class DatasetFormatError(ValueError):
    """A dataset file is malformed; ``line`` is 1-based when known."""

    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class MeasurementRecord:
    label: PauliLabel
    shots: int
    k_plus: int

    def __post_init__(self):
        object.__setattr__(self, "label", as_label(self.label))
        if int(self.shots) != self.shots or self.shots < 1:
            raise ValueError(f"shots must be a positive integer, got {self.shots}")
        if not 0 <= self.k_plus <= self.shots:
            raise ValueError(f"k_plus={self.k_plus} outside [0, {self.shots}]")

    @property
    def k_minus(self) -> int:
        return self.shots - self.k_plus

    @property
    def y(self) -> float:
        return (self.k_plus - self.k_minus) / (self.shots * np.sqrt(self.label.m))


@dataclass(frozen=True)
class DesignStats:
    """Per-distinct-label aggregates: w_k = count/n and b_k = (1/n) sum of Y over label k."""

    pset: PauliSet
    counts: np.ndarray
    w: np.ndarray
    bsum: np.ndarray


class MeasurementDataset:
    """n observations (label, Y) with optional raw Binomial records.

    Noisy datasets keep their records and recompute ``y`` from them.  Noiseless
    datasets store ``y = <rho, X_i>`` directly and carry ``K = None``.
    """

    def __init__(
        self,
        m: int,
        labels: Sequence,
        y=None,
        records: Sequence[MeasurementRecord] | None = None,
        K: int | None = None,
        seed: int | None = None,
        rho_hash: str | None = None,
    ):
        self.b = qubits_for_dim(m)
        self.m = m
        self.labels = tuple(as_label(x) for x in labels)
        if any(lab.m != m for lab in self.labels):
            raise ValueError(f"all labels must act on dimension {m}")
        self.records = tuple(records) if records is not None else None
        self.noiseless = self.records is None
        if self.noiseless:
            if y is None:
                raise ValueError("noiseless datasets need explicit responses")
            y = np.asarray(y, dtype=float)
            if K is not None:
                raise ValueError("noiseless datasets carry K=None")
        else:
            if len(self.records) != len(self.labels):
                raise ValueError("records and labels differ in length")
            y = np.array([rec.y for rec in self.records], dtype=float)
        if y.shape != (len(self.labels),):
            raise ValueError(f"expected {len(self.labels)} responses, got shape {y.shape}")
        if np.any(np.abs(y) > 1 / np.sqrt(m) + 1e-12):
            raise ValueError("responses exceed 1/sqrt(m) in magnitude")
        y.setflags(write=False)
        self.y = y
        self.K = K
        self.seed = seed
        self.rho_hash = rho_hash

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeasurementDataset):
            return NotImplemented
        return (
            self.header() == other.header()
            and self.labels == other.labels
            and self.records == other.records
            and np.array_equal(self.y, other.y)
        )

    @cached_property
    def stats(self) -> DesignStats:
        idx = np.array([lab.index for lab in self.labels])
        uniq, inv, counts = np.unique(idx, return_inverse=True, return_counts=True)
        pset = PauliSet([PauliLabel.from_index(int(k), self.b) for k in uniq])
        n = self.n
        return DesignStats(pset, counts, counts / n, np.bincount(inv, self.y, len(uniq)) / n)

    def header(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "K": self.K,
            "seed": self.seed,
            "rho_hash": self.rho_hash,
            "noiseless": self.noiseless,
        }

    def digest(self) -> str:
        return hashlib.sha256(dumps_jsonl(self).encode()).hexdigest()[:16]


def _labels_from_indices(idx: np.ndarray, b: int) -> list[PauliLabel]:
    digits = np.empty((len(idx), b), dtype=np.int64)
    rest = np.asarray(idx, dtype=np.int64).copy()
    for q in range(b - 1, -1, -1):
        digits[:, q] = rest % 4
        rest //= 4
    chars = np.array(list(SYMBOLS))[digits]
    return [PauliLabel("".join(row)) for row in chars]


def sample_design(m: int, n: int, seed: int) -> list[PauliLabel]:
    """n i.i.d. uniform labels over all m**2 basis elements."""
    b = qubits_for_dim(m)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    idx = stream(seed, "design").integers(0, m * m, size=n)
    return _labels_from_indices(idx, b)


def _binomial_inversion(K: int, p: float, u: float) -> int:
    """Smallest j with F(j) > u, walking the pmf recurrence; requires p <= 1/2."""
    q = 1.0 - p
    ratio = p / q
    pmf = q**K  # >= 2**-64 since p <= 1/2
    cdf = pmf
    j = 0
    while u >= cdf and j < K:
        pmf *= ratio * (K - j) / (j + 1)
        j += 1
        cdf += pmf
    return j


def binomial_draw(K: int, p: float, rng: np.random.Generator) -> int:
    """Bin(K, p) by CDF inversion for K <= 64, numpy's sampler above."""
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return K
    if K <= INVERSION_MAX_K:
        u = rng.random()
        if p > 0.5:
            return K - _binomial_inversion(K, 1.0 - p, u)
        return _binomial_inversion(K, p, u)
    return int(rng.binomial(K, p))


def _shots(seed: int, i: int, K: int, p: float) -> int:
    return binomial_draw(K, p, stream(seed, "shots", i))


def measure(rho, label, K: int, seed: int, index: int = 0) -> MeasurementRecord:
    """One K-shot record of ``label`` on ``rho`` (substream ``index`` of ``seed``)."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    p_plus, _ = projector_weights(rho, label)
    return MeasurementRecord(as_label(label), int(K), _shots(seed, index, int(K), p_plus))


def simulate_dataset(rho, n: int, K: int, seed: int) -> MeasurementDataset:
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    if n < 1 or K < 1:
        raise ValueError(f"n and K must be >= 1, got n={n}, K={K}")
    labels = sample_design(rho.m, n, seed)
    # success probability per distinct label, computed once
    probs: dict[str, float] = {}
    records = []
    for i, lab in enumerate(labels):
        p = probs.get(lab.word)
        if p is None:
            p = probs[lab.word] = projector_weights(rho, lab)[0]
        records.append(MeasurementRecord(lab, int(K), _shots(seed, i, int(K), p)))
    return MeasurementDataset(rho.m, labels, records=records, K=int(K), seed=int(seed), rho_hash=rho.digest())


def noiseless_dataset(rho, n: int | None = None, seed: int = 0, labels=None) -> MeasurementDataset:
    """Responses Y_i = <rho, X_i> exactly; labels sampled uniformly unless given."""
    rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    if labels is None:
        if n is None:
            raise ValueError("give either n or an explicit label list")
        labels = sample_design(rho.m, n, seed)
    labels = [as_label(x) for x in labels]
    y = PauliSet(labels).inner(as_matrix(rho)) if labels else np.zeros(0)
    return MeasurementDataset(rho.m, labels, y=y, seed=int(seed), rho_hash=rho.digest())


def full_basis_dataset(rho) -> MeasurementDataset:
    """Every one of the m**2 labels observed once, without noise."""
    m = as_matrix(rho).shape[0]
    return noiseless_dataset(rho, labels=build_basis(qubits_for_dim(m)).words())


# ---------------------------------------------------------------- file formats


def dumps_jsonl(ds: MeasurementDataset) -> str:
    lines = [json.dumps(ds.header())]
    if ds.noiseless:
        lines += [json.dumps({"label": lab.word, "y": float(y)}) for lab, y in zip(ds.labels, ds.y)]
    else:
        lines += [json.dumps({"label": r.label.word, "K": r.shots, "k_plus": r.k_plus}) for r in ds.records]
    return "\n".join(lines) + "\n"


def loads_jsonl(text: str) -> MeasurementDataset:
    rows = text.splitlines()
    if not rows:
        raise DatasetFormatError("empty dataset file", 1)
    try:
        head = json.loads(rows[0])
        m, n = int(head["m"]), int(head["n"])
        K, seed, rho_hash = head.get("K"), head.get("seed"), head.get("rho_hash")
        noiseless = bool(head.get("noiseless", K is None))
    except (ValueError, KeyError, TypeError) as exc:
        raise DatasetFormatError(f"bad header: {exc}", 1) from exc
    labels, ys, records = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row.strip():
            continue
        try:
            obj = json.loads(row)
            lab = PauliLabel(obj["label"])
            if lab.m != m:
                raise ValueError(f"label {lab.word} does not act on dimension {m}")
            if noiseless:
                ys.append(float(obj["y"]))
            else:
                if int(obj["K"]) != K:
                    raise ValueError(f"record K={obj['K']} differs from header K={K}")
                records.append(MeasurementRecord(lab, int(obj["K"]), int(obj["k_plus"])))
            labels.append(lab)
        except (ValueError, KeyError, TypeError) as exc:
            raise DatasetFormatError(str(exc), lineno) from exc
    if len(labels) != n:
        raise DatasetFormatError(f"header declares n={n} but file holds {len(labels)} records")
    try:
        if noiseless:
            return MeasurementDataset(m, labels, y=ys, seed=seed, rho_hash=rho_hash)
        return MeasurementDataset(m, labels, records=records, K=K, seed=seed, rho_hash=rho_hash)
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from exc


def write_jsonl(ds: MeasurementDataset, path) -> None:
    Path(path).write_text(dumps_jsonl(ds))


def read_jsonl(path) -> MeasurementDataset:
    return loads_jsonl(Path(path).read_text())


def to_csv(ds: MeasurementDataset) -> str:
    """(label, Y_i) table for external tools."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "y"])
    for lab, y in zip(ds.labels, ds.y):
        w.writerow([lab.word, repr(float(y))])
    return buf.getvalue()
