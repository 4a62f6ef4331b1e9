"""Landmark selection: uniform subsets, sketch-based leverage scores, and
kernel k-means++ seeding in the sketch feature space.

All samplers are pure functions of their inputs and the generator state, so a
fixed seed reproduces the exact landmark sets on any platform.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateScores,
    DuplicateCollapseWarning,
    InvalidBudget,
    InvalidInput,
)
from .kernels import GramSource
from .nystroem import LandmarkSet, NystroemFactor, OneShotEigen, fit, one_shot_eigen

__all__ = [
    "make_rng",
    "spawn_rng",
    "Sketch",
    "default_sketch_size",
    "uniform_landmarks",
    "build_sketch",
    "leverage_scores",
    "sample_leverage",
    "kmeanspp_landmarks",
]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator with platform-independent output."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent child generator for a (seed, task) pair.

    Children with different keys are statistically independent and
    reproducible, which is what per-repetition and per-fold seeding needs.
    """
    seq = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class Sketch:
    """Rough eigenstructure of the full matrix from a cheap uniform pass.

    ``features`` holds rows of U |lam|^{1/2}, so the Gram of the sketch
    features is the flipped-spectrum version of the sketched approximation.
    """

    eig: OneShotEigen
    features: np.ndarray
    sketch_size: int
    landmarks: LandmarkSet
    factor: NystroemFactor

    @property
    def n(self) -> int:
        return self.features.shape[0]


def default_sketch_size(m: int, n: int) -> int:
    """Default sketch budget: ceil(m ln n), capped at the dataset size."""
    if not 1 <= m <= n:
        raise InvalidBudget(f"need 1 <= m <= n, got m={m}, n={n}")
    return min(n, math.ceil(m * math.log(n)) if n > 1 else 1)


def uniform_landmarks(n: int, m: int, rng: np.random.Generator) -> LandmarkSet:
    """Uniform subset of m distinct indices; each subset is equiprobable."""
    if not 1 <= m <= n:
        raise InvalidBudget(f"landmark budget must satisfy 1 <= m <= n, got m={m}, n={n}")
    indices = rng.choice(n, size=m, replace=False)
    return LandmarkSet(indices=indices, requested=m)


def build_sketch(source: GramSource, m0: int, rng: np.random.Generator,
                 pinv_tol: float | None = None) -> Sketch:
    """One-shot eigendecomposition from m0 uniform landmarks."""
    landmarks = uniform_landmarks(source.n, m0, rng)
    factor = fit(source.block(landmarks.indices), pinv_tol, landmarks=landmarks)
    eig = one_shot_eigen(factor, source.cross_all(landmarks.indices))
    features = eig.U * np.sqrt(np.abs(eig.lam))
    return Sketch(eig=eig, features=features, sketch_size=m0,
                  landmarks=landmarks, factor=factor)


def leverage_scores(eig: OneShotEigen) -> np.ndarray:
    """Row leverage of the approximate eigenvectors: squared row norms of U.

    The scores sum to the sketch rank and are invariant to the signs of the
    approximate eigenvalues.
    """
    return np.einsum("ij,ij->i", eig.U, eig.U)


def sample_leverage(scores, m: int, rng: np.random.Generator) -> LandmarkSet:
    """Sample m indices with replacement proportionally to the scores.

    Duplicates are collapsed; the returned set records each landmark's draw
    count and the requested budget, so the effective size may be below m.
    """
    p = np.asarray(scores, dtype=float)
    if p.ndim != 1:
        raise InvalidInput("scores must form a vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidInput("scores must be finite and non-negative")
    if m < 1:
        raise InvalidBudget(f"landmark budget must be positive, got m={m}")
    total = p.sum()
    if total <= 0.0:
        raise DegenerateScores("scores sum to zero; no distribution to sample")
    draws = rng.choice(p.size, size=m, replace=True, p=p / total)
    uniq, first, counts = np.unique(draws, return_index=True, return_counts=True)
    order = np.argsort(first)  # stable: keep first-draw order
    return LandmarkSet(indices=uniq[order], multiplicity=counts[order], requested=m)


def kmeanspp_landmarks(features, m: int, rng: np.random.Generator) -> LandmarkSet:
    """k-means++ seeding over feature rows, used directly as landmarks.

    One sequential pass with squared-distance weighting and no Lloyd
    refinement.  Already-chosen rows have zero weight, so the result is
    distinct by construction; if fewer than m distinct rows exist, the
    representatives found so far are returned under a
    DuplicateCollapseWarning.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2:
        raise InvalidInput("features must form a 2-d array")
    n = x.shape[0]
    if not 1 <= m <= n:
        raise InvalidBudget(f"landmark budget must satisfy 1 <= m <= n, got m={m}, n={n}")
    chosen = [int(rng.integers(n))]
    diff = x - x[chosen[0]]
    weight = np.einsum("ij,ij->i", diff, diff)
    while len(chosen) < m:
        total = weight.sum()
        if total <= 0.0:
            warnings.warn(
                f"only {len(chosen)} distinct rows available for {m} landmarks",
                DuplicateCollapseWarning,
            )
            break
        nxt = int(rng.choice(n, p=weight / total))
        chosen.append(nxt)
        diff = x - x[nxt]
        weight = np.minimum(weight, np.einsum("ij,ij->i", diff, diff))
    return LandmarkSet(indices=np.array(chosen, dtype=int), requested=m)
