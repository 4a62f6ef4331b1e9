"""Dense symmetric-matrix numerics shared across the package.

Eigendecompositions carry an explicit sign vector so that indefinite matrices
can be inverted, spectrum-flipped, and projected without losing track of the
negative directions.  The module also houses the thin-SVD wrapper and the
globally optimal sphere-constrained quadratic solver used by the
variance-constrained least squares learner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum, InvalidInput, ShapeError, SolverError

__all__ = [
    "ASYM_TOL",
    "SymMatrix",
    "SignedEigenSystem",
    "SVDFactors",
    "SphereQP",
    "sym_eigen",
    "thin_svd",
    "flip_spectrum",
    "flip_projector",
    "indefiniteness",
    "sphere_constrained_qp",
    "sphere_qp_objective",
]

# asymmetry tolerated at construction, relative to max(1, |M|_max)
ASYM_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=float)
    out.setflags(write=False)
    return out


def _fix_column_signs(u: np.ndarray, *also: np.ndarray) -> None:
    """Flip columns of ``u`` (and matching columns of ``also``) in place so the
    entry of largest magnitude in each column is positive.  argmax resolves
    magnitude ties at the lowest row index, which makes the convention total.
    """
    if u.shape[1] == 0:
        return
    lead = np.argmax(np.abs(u), axis=0)
    flip = u[lead, np.arange(u.shape[1])] < 0
    u[:, flip] = -u[:, flip]
    for other in also:
        other[:, flip] = -other[:, flip]


class SymMatrix:
    """Dense real symmetric matrix.

    Input is symmetrized to ``(M + M.T) / 2`` at construction so downstream
    code can rely on exact symmetry.  Asymmetry beyond ``ASYM_TOL`` relative
    to ``max(1, |M|_max)`` is rejected rather than silently averaged away.
    The stored array is read-only.
    """

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        a = np.asarray(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("matrix entries must be finite")
        if a.size:
            scale = max(1.0, float(np.abs(a).max()))
            asym = float(np.abs(a - a.T).max())
            if asym > ASYM_TOL * scale:
                raise InvalidInput(
                    "matrix is asymmetric beyond tolerance: "
                    f"max |M - M.T| = {asym:.3e} with scale {scale:.3e}"
                )
        self.values = _frozen((a + a.T) / 2.0)

    @property
    def order(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)

    def __repr__(self) -> str:
        return f"SymMatrix(order={self.order})"


@dataclass(frozen=True)
class SignedEigenSystem:
    """Eigendecomposition M = U diag(d) U.T with a zero-thresholded sign vector.

    Columns of ``U`` are orthonormal; ``d`` is sorted by decreasing |d| with
    ties broken by decreasing signed value; ``s[i]`` is sign(d[i]) with exact
    zeros for |d[i]| <= tau_zero.  Eigenvector signs follow the deterministic
    largest-entry-positive convention.
    """

    U: np.ndarray
    d: np.ndarray
    s: np.ndarray
    tau_zero: float

    @property
    def n(self) -> int:
        return self.U.shape[0]


def sym_eigen(M, tau_zero: float | None = None) -> SignedEigenSystem:
    """Signed eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    M : SymMatrix or array_like
        Matrix to decompose; arrays are validated/symmetrized first.
    tau_zero : float, optional
        Magnitude below which an eigenvalue is treated as exactly zero.
        Defaults to ``1e-12 * max|d|``.
    """
    if not isinstance(M, SymMatrix):
        M = SymMatrix(M)
    w, v = np.linalg.eigh(M.values)
    order = np.lexsort((-w, -np.abs(w)))
    d = w[order]
    u = np.array(v[:, order])
    _fix_column_signs(u)
    if tau_zero is None:
        tau_zero = 1e-12 * (float(np.abs(d).max()) if d.size else 0.0)
    elif not (tau_zero >= 0.0 and math.isfinite(tau_zero)):
        raise InvalidInput("tau_zero must be a finite non-negative number")
    s = np.sign(d)
    s[np.abs(d) <= tau_zero] = 0.0
    return SignedEigenSystem(U=_frozen(u), d=_frozen(d), s=_frozen(s), tau_zero=float(tau_zero))


def flip_spectrum(eig: SignedEigenSystem) -> SymMatrix:
    """Positive semidefinite matrix U diag(d * s) U.T obtained by flipping the
    sign of every negative eigenvalue."""
    return SymMatrix((eig.U * (eig.d * eig.s)) @ eig.U.T)


def flip_projector(eig: SignedEigenSystem) -> SymMatrix:
    """Sign operator U diag(s) U.T; multiplying the original matrix by it
    yields the flipped-spectrum matrix."""
    return SymMatrix((eig.U * eig.s) @ eig.U.T)


def indefiniteness(eig: SignedEigenSystem) -> float:
    """Share of total spectral mass carried by negative eigenvalues.

    Returns sum(|d| over s < 0) / sum(|d| over s != 0), a value in [0, 1].
    Raises DegenerateSpectrum when every eigenvalue is zero.
    """
    mass = np.abs(eig.d)
    total = float(mass[eig.s != 0].sum())
    if total <= 0.0:
        raise DegenerateSpectrum("all eigenvalues are zero")
    return float(mass[eig.s < 0].sum() / total)


@dataclass(frozen=True)
class SVDFactors:
    """Thin SVD L = A diag(sigma) B.T with sigma descending and the same
    deterministic column-sign convention as the eigendecompositions."""

    A: np.ndarray
    sigma: np.ndarray
    B: np.ndarray


def thin_svd(L) -> SVDFactors:
    """Thin SVD of an n x m matrix with n >= m."""
    a = np.asarray(L, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-d array, got shape {a.shape}")
    n, m = a.shape
    if n < m:
        raise ShapeError(f"thin SVD needs n >= m, got {n} x {m}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix entries must be finite")
    u, sig, vt = np.linalg.svd(a, full_matrices=False)
    u = np.array(u)
    b = np.array(vt.T)
    _fix_column_signs(u, b)
    return SVDFactors(A=_frozen(u), sigma=_frozen(sig), B=_frozen(b))


@dataclass(frozen=True)
class SphereQP:
    """Quadratic program min gamma' W gamma - 2 b' gamma over ||gamma|| = r."""

    W: np.ndarray
    b: np.ndarray
    r: float

    def __post_init__(self):
        w = SymMatrix(self.W).values
        b = np.asarray(self.b, dtype=float)
        if b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ShapeError(
                f"b must be a vector of length {w.shape[0]}, got shape {b.shape}"
            )
        if not np.all(np.isfinite(b)):
            raise InvalidInput("b entries must be finite")
        if not (math.isfinite(self.r) and self.r > 0.0):
            raise InvalidInput("radius r must be positive and finite")
        object.__setattr__(self, "W", w)
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "r", float(self.r))

    @property
    def m(self) -> int:
        return self.b.shape[0]


def sphere_qp_objective(q: SphereQP, gamma) -> float:
    g = np.asarray(gamma, dtype=float)
    return float(g @ q.W @ g - 2.0 * (q.b @ g))


def sphere_constrained_qp(q: SphereQP, tol: float = 1e-12) -> np.ndarray:
    """Global minimizer of a quadratic over the sphere ||gamma|| = r.

    Stationary points satisfy (W + nu I) gamma = b; the global minimum is the
    one with nu >= -lambda_min(W), where phi(nu) = ||(W + nu I)^+ b|| is
    monotone decreasing.  The secular root phi(nu) = r is bracketed by
    bisection and polished with safeguarded Newton steps on 1/phi.  When b is
    orthogonal to the bottom eigenspace and the limit norm falls short of r
    (the hard case), the solution sits at nu = -lambda_min with a bottom
    eigenvector component added to reach the sphere.

    Raises SolverError if the root finder fails within 200 iterations.
    """
    lam, Q = np.linalg.eigh(q.W)
    Q = np.array(Q)
    _fix_column_signs(Q)
    beta = Q.T @ q.b
    r = q.r
    bnorm = float(np.linalg.norm(q.b))
    lam_min = float(lam[0])
    nu0 = -lam_min

    # pure Rayleigh minimization: any +/- bottom eigenvector is optimal;
    # the sign convention above pins the + direction
    if bnorm == 0.0:
        return _frozen(r * Q[:, 0])

    span = float(np.abs(lam).max()) if lam.size else 0.0
    min_mask = lam <= lam_min + 1e-10 * max(1.0, span)
    bottom_small = bool(np.all(np.abs(beta[min_mask]) <= 1e-12 * max(1.0, bnorm)))

    if bottom_small:
        gap = np.where(min_mask, 1.0, lam - lam_min)
        coef = np.where(min_mask, 0.0, beta / gap)
        phi0_sq = float(coef @ coef)
        if phi0_sq <= r * r:
            # hard case (or exact boundary root at nu0)
            t = math.sqrt(max(r * r - phi0_sq, 0.0))
            return _frozen(Q @ coef + t * Q[:, 0])

    # secular root in (nu0, nu0 + ||b|| / r]: phi decreases from >= r to <= r
    lo = nu0
    hi = nu0 + bnorm / r
    nu = 0.5 * (lo + hi)
    for iteration in range(200):
        dn = lam + nu
        coef = beta / dn
        phi = float(np.linalg.norm(coef))
        if abs(phi - r) <= tol * r:
            return _frozen(Q @ coef)
        if phi > r:
            lo = nu
        else:
            hi = nu
        # Newton on g(nu) = 1/phi - 1/r, monotone increasing and nearly linear
        slope = float(np.sum(beta * beta / dn**3)) / phi**3
        step = nu - (1.0 / phi - 1.0 / r) / slope if slope > 0 else lo - 1.0
        nu = step if lo < step < hi else 0.5 * (lo + hi)
    dn = lam + nu
    phi = float(np.linalg.norm(beta / dn))
    raise SolverError(
        "sphere-constrained QP root finder did not converge",
        residual=abs(phi - r),
        iterations=200,
    )
