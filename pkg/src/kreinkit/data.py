"""Matrix and label IO, dissimilarity handling, cross-validation plumbing,
and synthetic problem generators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    FoldError,
    InvalidClass,
    InvalidInput,
    ParseError,
    ShapeError,
)
from .kernels import Dataset
from .linalg import SymMatrix

__all__ = [
    "DissimilarityMatrix",
    "CVPlan",
    "EvalResult",
    "load_table",
    "load_matrix",
    "write_matrix",
    "load_labels",
    "double_center_neg",
    "stratified_kfold",
    "one_vs_all",
    "misclassification",
    "make_synthetic",
]


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric dissimilarities with a zero diagonal.

    ``squared`` records whether the entries are already squared distances;
    small negative entries and diagonal noise (within 1e-8) are clipped.
    """

    values: np.ndarray
    squared: bool = False

    def __post_init__(self):
        a = SymMatrix(self.values).values  # validates shape/finiteness/symmetry
        scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
        if float(np.abs(np.diag(a)).max(initial=0.0)) > 1e-8 * scale:
            raise InvalidInput("dissimilarity diagonal must be zero")
        if a.size and float(a.min()) < -1e-8 * scale:
            raise InvalidInput("dissimilarities must be non-negative")
        a = np.maximum(a, 0.0)
        np.fill_diagonal(a, 0.0)
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @property
    def order(self) -> int:
        return self.values.shape[0]


def _split_line(line: str, fmt: str) -> list[str]:
    if fmt == "csv":
        return [token.strip() for token in line.split(",")]
    return line.split()


def _parse_grid(path, fmt: str) -> np.ndarray:
    if fmt not in ("csv", "whitespace"):
        raise InvalidInput(f"unknown format {fmt!r}; use 'csv' or 'whitespace'")
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            tokens = _split_line(line.strip(), fmt)
            parsed = []
            for col, token in enumerate(tokens, start=1):
                try:
                    parsed.append(float(token))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}, column {col}: {token!r} is not a number",
                        line=lineno, col=col,
                    ) from None
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise ParseError(
                    f"{path}: line {lineno} has {len(parsed)} fields, expected {width}",
                    line=lineno,
                )
            rows.append(parsed)
    if not rows:
        raise ParseError(f"{path}: no data rows found", line=1)
    return np.asarray(rows, dtype=float)


def load_table(path, fmt: str = "csv") -> np.ndarray:
    """Rectangular numeric table (feature rows); errors carry line/column."""
    return _parse_grid(path, fmt)


def load_matrix(path, fmt: str = "csv", kind: str = "similarity",
                squared: bool = False):
    """Square matrix from a dense text file.

    ``kind`` selects the return type: 'similarity' gives a SymMatrix,
    'dissimilarity' a DissimilarityMatrix tagged with ``squared``.  Asymmetry
    is tolerated up to 1e-6 relative and symmetrized away; anything worse is
    a parse error pointing at the worst entry.
    """
    a = _parse_grid(path, fmt)
    if a.shape[0] != a.shape[1]:
        raise ParseError(
            f"{path}: expected a square matrix, got {a.shape[0]} x {a.shape[1]}",
            line=min(a.shape[0], a.shape[1]) + 1,
        )
    scale = max(1.0, float(np.abs(a).max()))
    gap = np.abs(a - a.T)
    worst = float(gap.max())
    if worst > 1e-6 * scale:
        i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
        raise ParseError(
            f"{path}: entries ({i + 1}, {j + 1}) and ({j + 1}, {i + 1}) differ by {worst:.3e}",
            line=int(i) + 1, col=int(j) + 1,
        )
    sym = (a + a.T) / 2.0
    if kind == "similarity":
        return SymMatrix(sym)
    if kind == "dissimilarity":
        return DissimilarityMatrix(sym, squared=squared)
    raise InvalidInput(f"unknown matrix kind {kind!r}")


def write_matrix(path, values, fmt: str = "csv") -> None:
    """Write a dense matrix; %.17g round-trips every float bit-exactly."""
    a = np.asarray(values, dtype=float)
    sep = "," if fmt == "csv" else " "
    if fmt not in ("csv", "whitespace"):
        raise InvalidInput(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8") as handle:
        for row in a:
            handle.write(sep.join(f"{v:.17g}" for v in row))
            handle.write("\n")


def load_labels(path) -> np.ndarray:
    """One label per line, UTF-8; returned as strings."""
    labels = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            token = line.strip()
            if token:
                labels.append(token)
    if not labels:
        raise ParseError(f"{path}: no labels found", line=1)
    return np.asarray(labels)


def double_center_neg(D: DissimilarityMatrix) -> SymMatrix:
    """Similarities from dissimilarities: -1/2 J D2 J with the centering
    projector J = I - (1/n) 1 1'.  Entries are squared first unless the
    matrix is tagged as already squared."""
    d2 = D.values if D.squared else D.values**2
    row_mean = d2.mean(axis=0)
    total = row_mean.mean()
    centered = d2 - row_mean[None, :] - row_mean[:, None] + total
    return SymMatrix(-0.5 * centered)


@dataclass(frozen=True)
class CVPlan:
    """Stratified fold assignment over [0, n)."""

    k: int
    folds: tuple
    seed_note: str = ""

    def __post_init__(self):
        if self.k != len(self.folds):
            raise InvalidInput("fold count disagrees with k")
        all_idx = np.concatenate(self.folds)
        n = all_idx.size
        if not np.array_equal(np.sort(all_idx), np.arange(n)):
            raise InvalidInput("folds must partition the index range")

    @property
    def n(self) -> int:
        return sum(fold.size for fold in self.folds)

    def splits(self):
        """Yield (train_indices, test_indices) per fold, in fold order."""
        for i, fold in enumerate(self.folds):
            train = np.concatenate([f for j, f in enumerate(self.folds) if j != i])
            yield np.sort(train), fold


def stratified_kfold(y, k: int, rng: np.random.Generator) -> CVPlan:
    """k folds with per-class proportions within one instance of global.

    Each class is shuffled and dealt round-robin; classes start at staggered
    folds so overall fold sizes stay balanced too.  Classes smaller than k
    raise FoldError with the offending counts.
    """
    labels = np.asarray(y)
    n = labels.shape[0]
    if k < 2 or k > n:
        raise FoldError(f"need 2 <= k <= n, got k={k} with n={n}")
    classes, counts = np.unique(labels, return_counts=True)
    short = {str(c): int(cnt) for c, cnt in zip(classes, counts) if cnt < k}
    if short:
        raise FoldError(
            f"every class needs at least k={k} members; too small: {short}",
            counts=short,
        )
    buckets = [[] for _ in range(k)]
    for ci, cls in enumerate(classes):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(members.size)]
        for pos, idx in enumerate(members):
            buckets[(pos + ci) % k].append(int(idx))
    folds = tuple(np.sort(np.asarray(bucket, dtype=int)) for bucket in buckets)
    return CVPlan(k=k, folds=folds)


def one_vs_all(labels, target) -> np.ndarray:
    """+1 for the target class, -1 for the rest."""
    y = np.asarray(labels)
    mask = y == np.asarray(target, dtype=y.dtype)
    if not mask.any():
        raise InvalidClass(f"class {target!r} does not occur in the labels")
    return np.where(mask, 1.0, -1.0)


def misclassification(predictions, y) -> float:
    """Error rate of sign(prediction) against -1/+1 labels.

    A prediction of exactly zero never matches either class, so it counts as
    a misclassification.
    """
    pred = np.asarray(predictions, dtype=float)
    labels = np.asarray(y, dtype=float)
    if pred.shape != labels.shape or pred.ndim != 1:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {labels.shape}")
    if not set(np.unique(labels).tolist()) <= {-1.0, 1.0}:
        raise InvalidInput("labels must be -1/+1")
    return float(np.mean(labels * pred <= 0.0))


@dataclass(frozen=True)
class EvalResult:
    """Per-fold error rates with aggregate statistics and phase timings."""

    rates: np.ndarray
    mean: float
    std: float
    median: float
    timings: dict

    @classmethod
    def from_rates(cls, rates, timings=None) -> "EvalResult":
        r = np.asarray(rates, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise InvalidInput("rates must form a non-empty vector")
        if np.any(r < 0.0) or np.any(r > 1.0):
            raise InvalidInput("error rates must lie in [0, 1]")
        r.setflags(write=False)
        return cls(
            rates=r,
            mean=float(r.mean()),
            std=float(r.std()),
            median=float(np.median(r)),
            timings=dict(timings or {}),
        )


def make_synthetic(kind: str, n: int, p: int, rng: np.random.Generator,
                   separation: float = 6.0) -> Dataset:
    """Balanced two-class toy problems.

    two_gaussians: unit-variance blobs with means +/- separation/2 along the
    first axis.  concentric: two noisy spheres of radius 1 and 3.
    """
    if n < 4 or n % 2:
        raise InvalidInput("n must be an even number >= 4")
    if p < 1:
        raise InvalidInput("p must be positive")
    half = n // 2
    y = np.concatenate([np.ones(half), -np.ones(half)])
    if kind == "two_gaussians":
        if not (math.isfinite(separation) and separation > 0):
            raise InvalidInput("separation must be positive")
        x = rng.normal(size=(n, p))
        x[:half, 0] += separation / 2.0
        x[half:, 0] -= separation / 2.0
        return Dataset(X=x, y=y)
    if kind == "concentric":
        directions = rng.normal(size=(n, p))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = np.where(y > 0, 1.0, 3.0)
        x = directions * radii[:, None] + 0.1 * rng.normal(size=(n, p))
        return Dataset(X=x, y=y)
    raise InvalidInput(f"unknown synthetic kind {kind!r}")
