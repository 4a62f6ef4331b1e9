"""Kernel families (definite and indefinite), Gram construction, feature
standardization, and kernel centering.

Squared distances between identical rows are computed by direct differencing
so that diagonals of distance-based kernels come out exactly right.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    ConstantFeatureWarning,
    InvalidInput,
    ShapeError,
    UseLoadMatrixInstead,
)
from .linalg import SymMatrix

__all__ = [
    "KERNEL_KINDS",
    "KernelSpec",
    "Dataset",
    "Standardizer",
    "gaussian",
    "gaussian_diff",
    "tanh_sigmoid",
    "epanechnikov",
    "linear",
    "precomputed",
    "rl_sigmoid_preset",
    "parse_kernel_spec",
    "format_kernel_spec",
    "standardize",
    "gram",
    "gram_cross",
    "center_kernel",
    "GramSource",
]

KERNEL_KINDS = ("gaussdiff", "gauss", "tanh", "epan", "linear", "precomputed")

# which numeric parameters each kind accepts
_KIND_PARAMS = {
    "gaussdiff": ("sigma1", "sigma2"),
    "gauss": ("sigma",),
    "tanh": ("a", "b"),
    "epan": ("sigma",),
    "linear": (),
    "precomputed": (),
}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters.

    kinds:
      gaussdiff   exp(-|x-y|^2 / (2 sigma1^2)) - exp(-|x-y|^2 / (2 sigma2^2));
                  indefinite, diagonal exactly zero
      gauss       exp(-|x-y|^2 / (2 sigma^2)); diagonal exactly one
      tanh        tanh(a <x,y> + b); indefinite for generic parameters
      epan        max(0, 1 - |x-y|^2 / sigma^2)
      linear      <x, y>
      precomputed evaluations come from a loaded matrix, never a formula
    """

    kind: str
    sigma: float | None = None
    sigma1: float | None = None
    sigma2: float | None = None
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InvalidInput(f"unknown kernel kind {self.kind!r}")
        allowed = _KIND_PARAMS[self.kind]
        for name in ("sigma", "sigma1", "sigma2", "a", "b"):
            value = getattr(self, name)
            if name in allowed:
                if value is None:
                    raise InvalidInput(f"kernel {self.kind!r} requires parameter {name!r}")
                if not math.isfinite(float(value)):
                    raise InvalidInput(f"kernel parameter {name!r} must be finite")
                object.__setattr__(self, name, float(value))
            elif value is not None:
                raise InvalidInput(f"kernel {self.kind!r} does not take parameter {name!r}")
        if self.kind in ("gauss", "epan") and self.sigma <= 0:
            raise InvalidInput("sigma must be positive")
        if self.kind == "gaussdiff":
            if self.sigma1 <= 0 or self.sigma2 <= 0:
                raise InvalidInput("sigma1 and sigma2 must be positive")
            if self.sigma1 == self.sigma2:
                raise InvalidInput("sigma1 and sigma2 must differ, otherwise the kernel is zero")


def gaussian(sigma: float) -> KernelSpec:
    return KernelSpec("gauss", sigma=sigma)


def gaussian_diff(sigma1: float, sigma2: float) -> KernelSpec:
    return KernelSpec("gaussdiff", sigma1=sigma1, sigma2=sigma2)


def tanh_sigmoid(a: float = 1.0, b: float = 0.0) -> KernelSpec:
    return KernelSpec("tanh", a=a, b=b)


def epanechnikov(sigma: float) -> KernelSpec:
    return KernelSpec("epan", sigma=sigma)


def linear() -> KernelSpec:
    return KernelSpec("linear")


def precomputed() -> KernelSpec:
    return KernelSpec("precomputed")


def rl_sigmoid_preset() -> KernelSpec:
    """Experimental: a named tanh preset with a negative offset.

    The variant this mimics has no settled parameterization, so the preset
    simply pins tanh(<x,y> - 1); treat results as exploratory and prefer an
    explicit tanh spec in configs.
    """
    return tanh_sigmoid(a=1.0, b=-1.0)


def parse_kernel_spec(text: str) -> KernelSpec:
    """Parse the flat key=value kernel grammar.

    Grammar: whitespace-separated ``key=value`` tokens in any order; the
    mandatory ``kernel`` key picks the family and the remaining keys are its
    numeric parameters, e.g. ``kernel=gaussdiff sigma1=1.0 sigma2=3.0``.
    The preset name ``kernel=rlsigmoid`` expands to :func:`rl_sigmoid_preset`.
    """
    tokens = text.split()
    if not tokens:
        raise ConfigError("empty kernel spec")
    pairs = {}
    for token in tokens:
        key, eq, value = token.partition("=")
        if not eq or not key or not value:
            raise ConfigError(f"kernel spec token {token!r} is not key=value")
        if key in pairs:
            raise ConfigError(f"duplicate kernel spec key {key!r}")
        pairs[key] = value
    kind = pairs.pop("kernel", None)
    if kind is None:
        raise ConfigError("kernel spec must contain a kernel=<kind> token")
    if kind == "rlsigmoid":
        if pairs:
            raise ConfigError("the rlsigmoid preset takes no parameters")
        return rl_sigmoid_preset()
    if kind not in KERNEL_KINDS:
        raise ConfigError(f"unknown kernel kind {kind!r}")
    params = {}
    for key, value in pairs.items():
        if key not in _KIND_PARAMS[kind]:
            raise ConfigError(f"kernel {kind!r} does not take parameter {key!r}")
        try:
            params[key] = float(value)
        except ValueError:
            raise ConfigError(f"kernel parameter {key}={value!r} is not a number") from None
    try:
        return KernelSpec(kind, **params)
    except InvalidInput as exc:
        raise ConfigError(str(exc)) from None


def format_kernel_spec(spec: KernelSpec) -> str:
    """Inverse of parse_kernel_spec; floats are written with full precision."""
    parts = [f"kernel={spec.kind}"]
    for name in _KIND_PARAMS[spec.kind]:
        parts.append(f"{name}={getattr(spec, name)!r}")
    return " ".join(parts)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with optional labels."""

    X: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.X, dtype=float)
        if x.ndim != 2:
            raise ShapeError(f"X must be 2-d, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("X entries must be finite")
        object.__setattr__(self, "X", x)
        if self.y is not None:
            y = np.asarray(self.y)
            if y.shape != (x.shape[0],):
                raise ShapeError("y must have one entry per row of X")
            values = set(np.unique(y).tolist())
            if values <= {-1, 1} and len(values) < 2:
                raise InvalidInput("classification labels must contain both classes")
            object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine transform fitted by standardize().

    The variance convention is population (divide by n).  Constant features
    are recorded in ``constant`` and mapped to exactly zero.
    """

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray
    convention: str = "population"

    def apply(self, X) -> np.ndarray:
        x = np.asarray(X, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.mean.shape[0]:
            raise ShapeError("feature count does not match the fitted statistics")
        inv = np.where(self.constant, 0.0, 1.0 / np.where(self.constant, 1.0, self.std))
        return (x - self.mean) * inv


def standardize(X) -> tuple[np.ndarray, Standardizer]:
    """Center each feature and scale to unit population variance.

    Constant columns are set to zero and reported through a
    ConstantFeatureWarning rather than treated as an error.
    """
    x = np.asarray(X, dtype=float)
    if x.ndim != 2:
        raise ShapeError(f"X must be 2-d, got shape {x.shape}")
    if x.shape[0] < 2:
        raise InvalidInput("standardize needs at least two rows")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("X entries must be finite")
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # ddof=0: population convention
    constant = std == 0.0
    if constant.any():
        cols = np.flatnonzero(constant).tolist()
        warnings.warn(
            f"constant feature column(s) {cols} mapped to zero", ConstantFeatureWarning
        )
    scaler = Standardizer(mean=mean, std=std, constant=constant)
    return scaler.apply(x), scaler


def _sqdist(X: np.ndarray, Z: np.ndarray, chunk: int = 256) -> np.ndarray:
    # direct differencing keeps d(x, x) exactly zero, which the diagonal
    # guarantees of the distance kernels rely on
    n = X.shape[0]
    out = np.empty((n, Z.shape[0]))
    for start in range(0, n, chunk):
        diff = X[start : start + chunk, None, :] - Z[None, :, :]
        out[start : start + chunk] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _evaluate(spec: KernelSpec, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    if spec.kind == "gauss":
        return np.exp(_sqdist(X, Z) / (-2.0 * spec.sigma**2))
    if spec.kind == "gaussdiff":
        d2 = _sqdist(X, Z)
        return np.exp(d2 / (-2.0 * spec.sigma1**2)) - np.exp(d2 / (-2.0 * spec.sigma2**2))
    if spec.kind == "epan":
        return np.maximum(0.0, 1.0 - _sqdist(X, Z) / spec.sigma**2)
    if spec.kind == "tanh":
        return np.tanh(spec.a * (X @ Z.T) + spec.b)
    if spec.kind == "linear":
        return X @ Z.T
    raise UseLoadMatrixInstead("precomputed kernels cannot be evaluated from data")


def _as_points(X) -> np.ndarray:
    x = np.asarray(X, dtype=float)
    if x.ndim != 2:
        raise ShapeError(f"expected a 2-d point array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("point entries must be finite")
    return x


def gram(spec: KernelSpec, X) -> SymMatrix:
    """Full kernel matrix of a point set."""
    x = _as_points(X)
    k = _evaluate(spec, x, x)
    if spec.kind == "gaussdiff":
        np.fill_diagonal(k, 0.0)
    elif spec.kind == "gauss":
        np.fill_diagonal(k, 1.0)
    return SymMatrix(k)


def gram_cross(spec: KernelSpec, X, Z) -> np.ndarray:
    """Rectangular kernel block between two point sets (rows x columns)."""
    x = _as_points(X)
    z = _as_points(Z)
    if x.shape[1] != z.shape[1]:
        raise ShapeError(
            f"point sets disagree on dimension: {x.shape[1]} vs {z.shape[1]}"
        )
    return _evaluate(spec, x, z)


def center_kernel(K: SymMatrix) -> SymMatrix:
    """Double-center a kernel matrix: J K J with J = I - (1/n) 1 1'."""
    a = K.values
    row_mean = a.mean(axis=0)
    total = row_mean.mean()
    return SymMatrix(a - row_mean[None, :] - row_mean[:, None] + total)


class GramSource:
    """Uniform access to kernel evaluations against a fixed dataset.

    Backed either by a precomputed symmetric matrix or by (spec, points);
    downstream code asks for landmark blocks and cross blocks without caring
    which.  ``full()`` materializes the complete matrix and caches it, so it
    should only be called at desk scale.
    """

    def __init__(self, *, matrix: SymMatrix | None = None,
                 spec: KernelSpec | None = None, points: np.ndarray | None = None):
        if (matrix is None) == (spec is None):
            raise InvalidInput("provide either a matrix or a kernel spec with points")
        if spec is not None:
            if spec.kind == "precomputed":
                raise UseLoadMatrixInstead(
                    "a precomputed spec carries no formula; construct from its matrix"
                )
            if points is None:
                raise InvalidInput("a kernel spec needs a point array")
            points = _as_points(points)
        self.matrix = matrix
        self.spec = spec
        self.points = points
        self._full: SymMatrix | None = matrix

    @classmethod
    def from_matrix(cls, K: SymMatrix) -> "GramSource":
        return cls(matrix=K)

    @classmethod
    def from_data(cls, spec: KernelSpec, X) -> "GramSource":
        return cls(spec=spec, points=X)

    @property
    def n(self) -> int:
        return self.matrix.order if self.matrix is not None else self.points.shape[0]

    def block(self, indices) -> SymMatrix:
        idx = np.asarray(indices, dtype=int)
        if self.matrix is not None:
            return SymMatrix(self.matrix.values[np.ix_(idx, idx)])
        return gram(self.spec, self.points[idx])

    def cross_all(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=int)
        if self.matrix is not None:
            return np.array(self.matrix.values[:, idx])
        return gram_cross(self.spec, self.points, self.points[idx])

    def full(self) -> SymMatrix:
        if self._full is None:
            self._full = gram(self.spec, self.points)
        return self._full
