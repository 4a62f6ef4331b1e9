"""Learning in an indefinite kernel space, full rank and low rank.

The low-rank learners all operate on the signed Nystroem feature map
Phi = K_XZ U |d|^{-1/2} diag(s): ridge regression in closed form, a
variance-constrained least squares variant solved through the sphere QP, and
a squared-hinge SVM solved by damped Newton steps.  Sign-flip baselines and
the similarities-as-features least squares model round out the comparisons.

Regularization follows the n-scaled matrix convention throughout: the data
term is an unnormalized sum over training points and the penalty enters as
n * lambda.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, RankDeficient, ShapeError, SolverError
from .kernels import KernelSpec, format_kernel_spec, parse_kernel_spec
from .linalg import (
    SignedEigenSystem,
    SphereQP,
    SymMatrix,
    sphere_constrained_qp,
    sym_eigen,
    thin_svd,
)
from .nystroem import LandmarkSet, NystroemFactor

__all__ = [
    "RegPair",
    "FeatureMap",
    "FullRankModel",
    "FlipKRRModel",
    "LowRankModel",
    "SimilarityLSModel",
    "build_feature_map",
    "feature_rows",
    "krein_krr_full",
    "krein_krr_lowrank",
    "vc_lsm_lowrank",
    "sh_svm_lowrank",
    "predict",
    "flip_krr_baseline",
    "flip_shsvm_baseline",
    "sf_lsm_baseline",
    "squared_hinge_objective",
    "squared_hinge_gradient",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class RegPair:
    """Regularization strengths for the positive and negative directions.

    Both entries must be non-negative; production use wants both strictly
    positive, zeros are tolerated for controlled experiments.
    """

    lam_pos: float
    lam_neg: float

    def __post_init__(self):
        for name in ("lam_pos", "lam_neg"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v >= 0.0):
                raise InvalidInput(f"{name} must be finite and non-negative")
            object.__setattr__(self, name, v)


def _lambda_diag(reg: RegPair, signs: np.ndarray) -> np.ndarray:
    # lam_pos on +1 directions, lam_neg on -1; a zero sign averages the two
    return reg.lam_pos * (signs + 1.0) / 2.0 + reg.lam_neg * np.abs(signs - 1.0) / 2.0


@dataclass(frozen=True)
class FeatureMap:
    """Signed Nystroem features of the training set.

    ``phi`` has one row per training point and one column per retained
    landmark eigendirection; ``signs`` are the matching eigenvalue signs, so
    phi diag(signs) phi' reproduces the low-rank kernel approximation.
    """

    phi: np.ndarray
    signs: np.ndarray
    factor: NystroemFactor

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def rank(self) -> int:
        return self.phi.shape[1]


def feature_rows(factor: NystroemFactor, K_rows) -> np.ndarray:
    """Signed feature rows for arbitrary points given their kernel values
    against the landmarks.  Training and prediction share this path so that
    in-sample predictions agree with the training-time features exactly."""
    k = np.asarray(K_rows, dtype=float)
    single = k.ndim == 1
    if single:
        k = k[None, :]
    if k.shape[1] != factor.m:
        raise ShapeError(f"expected kernel rows of length {factor.m}, got {k.shape}")
    rows = k @ (factor.U_r / np.sqrt(np.abs(factor.d_r))) * factor.s_r
    return rows[0] if single else rows


def build_feature_map(factor: NystroemFactor, K_XZ) -> FeatureMap:
    phi = feature_rows(factor, K_XZ)
    return FeatureMap(phi=phi, signs=np.array(factor.s_r), factor=factor)


@dataclass(frozen=True)
class FullRankModel:
    """Kernel ridge model over the full training matrix."""

    alpha: np.ndarray
    eig: SignedEigenSystem
    reg: RegPair

    def predict(self, k_rows) -> np.ndarray | float:
        k = np.asarray(k_rows, dtype=float)
        return k @ self.alpha


def krein_krr_full(eig: SignedEigenSystem, y, reg: RegPair) -> FullRankModel:
    """Closed-form ridge regression with split regularization.

    Solved in the eigenbasis: alpha = U diag(s / (|d| + n lam_i)) U' y with
    lam_i chosen per eigenvalue sign.  The system matrix is positive definite
    whenever both strengths are positive, so no solve can fail there.
    """
    y = _as_labels(y, eig.n)
    n = eig.n
    lam = _lambda_diag(reg, eig.s)
    w = eig.U.T @ y
    denom = eig.d * eig.s + n * lam
    coef = np.zeros_like(w)
    ok = denom > 0
    coef[ok] = eig.s[ok] * w[ok] / denom[ok]
    if np.any(~ok & (eig.s != 0)):
        raise SolverError("ridge system is singular on a nonzero eigendirection")
    return FullRankModel(alpha=eig.U @ coef, eig=eig, reg=reg)


@dataclass(frozen=True)
class FlipKRRModel:
    """Ridge regression on the flipped-spectrum matrix.

    Out-of-sample evaluation routes the kernel column through the sign
    operator, which ``coeffs`` folds in already: predictions are k' coeffs.
    """

    alpha: np.ndarray
    coeffs: np.ndarray
    eig: SignedEigenSystem
    lam: float

    def predict_training(self) -> np.ndarray:
        h = (self.eig.U * (self.eig.d * self.eig.s)) @ self.eig.U.T
        return h @ self.alpha

    def predict(self, k_rows) -> np.ndarray | float:
        return np.asarray(k_rows, dtype=float) @ self.coeffs


def flip_krr_baseline(eig: SignedEigenSystem, y, lam: float) -> FlipKRRModel:
    """Ordinary KRR on the flipped-spectrum matrix H = U |d| U'."""
    y = _as_labels(y, eig.n)
    if not (math.isfinite(lam) and lam > 0.0):
        raise InvalidInput("lam must be positive")
    n = eig.n
    w = eig.U.T @ y
    alpha = eig.U @ (w / (eig.d * eig.s + n * lam))
    coeffs = eig.U @ (eig.s * (eig.U.T @ alpha))
    return FlipKRRModel(alpha=alpha, coeffs=coeffs, eig=eig, lam=float(lam))


@dataclass(frozen=True)
class LowRankModel:
    """Weights in the signed feature space plus everything needed to predict."""

    z: np.ndarray
    map: FeatureMap
    learner: str
    reg: RegPair
    r_constraint: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def predict(self, k_rows) -> np.ndarray | float:
        return feature_rows(self.map.factor, k_rows) @ self.z


def predict(model, k_x):
    """Evaluate a trained model on kernel rows against its landmarks (or, for
    full-rank and similarity models, against the training set)."""
    return model.predict(k_x)


def _as_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise ShapeError(f"expected {n} targets, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidInput("targets must be finite")
    return y


def _as_binary(y, n: int) -> np.ndarray:
    y = _as_labels(y, n)
    classes = set(np.unique(y).tolist())
    if not classes <= {-1.0, 1.0}:
        raise InvalidInput("labels must be -1/+1")
    if len(classes) < 2:
        raise InvalidInput("both classes must be present")
    return y


def krein_krr_lowrank(fmap: FeatureMap, y, reg: RegPair) -> LowRankModel:
    """Ridge regression in the signed feature space (closed form)."""
    y = _as_labels(y, fmap.n)
    n = fmap.n
    lam = _lambda_diag(reg, fmap.signs)
    system = fmap.phi.T @ fmap.phi + n * np.diag(lam)
    rhs = fmap.phi.T @ y
    z = np.linalg.solve(system, rhs)
    residual = float(np.linalg.norm(system @ z - rhs))
    return LowRankModel(z=z, map=fmap, learner="lsm", reg=reg,
                        diagnostics={"residual": residual})


def vc_lsm_lowrank(fmap: FeatureMap, y, reg: RegPair, r: float) -> LowRankModel:
    """Least squares with the training-variance equality constraint.

    Minimizes n lam_pos ||z_+||^2 + n lam_neg ||z_-||^2 - 2 z' Phi' y subject
    to ||Phi z|| = r.  The kernel is expected to be centered by the caller.
    Through the SVD Phi = A diag(delta) B' the problem becomes a sphere QP in
    gamma = diag(delta) B' z, which is solved globally; rank-deficient Phi is
    rejected because the back-substitution needs delta > 0.
    """
    y = _as_labels(y, fmap.n)
    if not (math.isfinite(r) and r > 0.0):
        raise InvalidInput("the variance target r must be positive")
    svd = thin_svd(fmap.phi)
    if svd.sigma.size == 0 or svd.sigma.min() <= 1e-10 * svd.sigma.max():
        raise RankDeficient("feature matrix is rank deficient; reduce the landmark set")
    n = fmap.n
    lam = _lambda_diag(reg, fmap.signs)
    scaled = svd.B / svd.sigma[None, :]  # columns map gamma -> z
    W = n * (scaled.T * lam[None, :]) @ scaled
    b = svd.A.T @ y
    gamma = sphere_constrained_qp(SphereQP(W=W, b=b, r=r), tol=1e-12)
    z = scaled @ gamma
    fitted_norm = float(np.linalg.norm(fmap.phi @ z))
    objective = float(n * lam @ (z * z) - 2.0 * (z @ (fmap.phi.T @ y)))
    return LowRankModel(
        z=z, map=fmap, learner="vclsm", reg=reg, r_constraint=float(r),
        diagnostics={"constraint_residual": abs(fitted_norm - r), "objective": objective},
    )


def squared_hinge_objective(features, y, lam_diag, n_scale, z) -> float:
    margin = 1.0 - y * (features @ z)
    active = np.maximum(margin, 0.0)
    return float(active @ active + n_scale * lam_diag @ (z * z))


def squared_hinge_gradient(features, y, lam_diag, n_scale, z) -> np.ndarray:
    margin = 1.0 - y * (features @ z)
    active = margin > 0.0
    grad = -2.0 * features.T @ (y * np.where(active, margin, 0.0))
    return grad + 2.0 * n_scale * lam_diag * z


def _newton_squared_hinge(features, y, lam_diag, n_scale, *, max_iter=100,
                          armijo_c=1e-4, backtrack=0.5):
    """Damped Newton for the squared-hinge objective.

    The active-set Hessian 2 F_A' F_A + 2 n diag(lam) is positive definite
    whenever the penalties are positive, so the Newton direction always
    descends; an Armijo backtracking line search makes the damping explicit.
    Converges when the gradient norm drops below 1e-8 * max(1, n).
    """
    n, m = features.shape
    z = np.zeros(m)
    gtol = 1e-8 * max(1.0, float(n))
    obj = squared_hinge_objective(features, y, lam_diag, n_scale, z)
    for iteration in range(max_iter):
        grad = squared_hinge_gradient(features, y, lam_diag, n_scale, z)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= gtol:
            return z, {"iterations": iteration, "objective": obj, "grad_norm": gnorm}
        margin = 1.0 - y * (features @ z)
        rows = features[margin > 0.0]
        hess = 2.0 * rows.T @ rows + 2.0 * n_scale * np.diag(lam_diag)
        direction = np.linalg.solve(hess, -grad)
        slope = float(grad @ direction)
        step = 1.0
        for _ in range(60):
            candidate = z + step * direction
            value = squared_hinge_objective(features, y, lam_diag, n_scale, candidate)
            if value <= obj + armijo_c * step * slope:
                break
            step *= backtrack
        else:
            raise SolverError(
                "line search stalled in the squared-hinge Newton solver",
                iterations=iteration,
                diagnostics={"grad_norm": gnorm, "objective": obj},
            )
        z = candidate
        obj = value
    grad = squared_hinge_gradient(features, y, lam_diag, n_scale, z)
    gnorm = float(np.linalg.norm(grad))
    if gnorm <= gtol:
        return z, {"iterations": max_iter, "objective": obj, "grad_norm": gnorm}
    raise SolverError(
        "squared-hinge Newton solver did not converge",
        residual=gnorm,
        iterations=max_iter,
        diagnostics={"objective": obj},
    )


def sh_svm_lowrank(fmap: FeatureMap, y, reg: RegPair) -> LowRankModel:
    """Squared-hinge SVM in the signed feature space, no bias term.

    Minimizes sum_i max(1 - y_i (Phi z)_i, 0)^2 + n lam_pos ||z_+||^2
    + n lam_neg ||z_-||^2 by damped Newton steps.
    """
    y = _as_binary(y, fmap.n)
    if reg.lam_pos <= 0.0 or reg.lam_neg <= 0.0:
        raise InvalidInput("the squared-hinge solver needs strictly positive penalties")
    lam = _lambda_diag(reg, fmap.signs)
    z, info = _newton_squared_hinge(fmap.phi, y, lam, float(fmap.n))
    return LowRankModel(z=z, map=fmap, learner="shsvm", reg=reg, diagnostics=info)


def flip_shsvm_baseline(fmap: FeatureMap, y, lam: float) -> LowRankModel:
    """Standard squared-hinge SVM on the unsigned features.

    Trains on L = Phi diag(signs) with a plain n lam ||w||^2 penalty and maps
    the weights back through the signs.  With lam_pos = lam_neg = lam this
    coincides with sh_svm_lowrank; with split penalties it intentionally does
    not.
    """
    y = _as_binary(y, fmap.n)
    if not (math.isfinite(lam) and lam > 0.0):
        raise InvalidInput("lam must be positive")
    unsigned = fmap.phi * fmap.signs[None, :]
    lam_diag = np.full(fmap.rank, float(lam))
    w, info = _newton_squared_hinge(unsigned, y, lam_diag, float(fmap.n))
    return LowRankModel(z=fmap.signs * w, map=fmap, learner="flip-shsvm",
                        reg=RegPair(lam, lam), diagnostics=info)


@dataclass(frozen=True)
class SimilarityLSModel:
    """Ridge regression that treats similarity rows as ordinary features."""

    w: np.ndarray
    lam: float

    def predict(self, feature_rows_) -> np.ndarray | float:
        return np.asarray(feature_rows_, dtype=float) @ self.w


def sf_lsm_baseline(K: SymMatrix, y, lam: float) -> SimilarityLSModel:
    """Similarities-as-features least squares with a plain ridge penalty.

    Note the penalty here is lam, not n lam: this baseline is standard ridge
    on feature vectors k(x, .), so the common textbook scaling applies.
    """
    y = _as_labels(y, K.order)
    if not (math.isfinite(lam) and lam > 0.0):
        raise InvalidInput("lam must be positive")
    f = K.values
    w = np.linalg.solve(f.T @ f + lam * np.eye(K.order), f.T @ y)
    return SimilarityLSModel(w=w, lam=float(lam))


# ---------------------------------------------------------------------------
# serialization: full float precision via repr round-trip


def _array(a) -> list:
    return np.asarray(a).tolist()


def model_to_dict(model: LowRankModel, kernel: KernelSpec | None = None) -> dict:
    """JSON-ready dictionary capturing a low-rank model exactly."""
    factor = model.map.factor
    landmarks = factor.landmarks
    payload = {
        "schema_version": 1,
        "learner": model.learner,
        "z": _array(model.z),
        "reg": {"lam_pos": model.reg.lam_pos, "lam_neg": model.reg.lam_neg},
        "r_constraint": model.r_constraint,
        "diagnostics": model.diagnostics,
        "kernel": format_kernel_spec(kernel) if kernel is not None else None,
        "factor": {
            "U": _array(factor.eig.U),
            "d": _array(factor.eig.d),
            "s": _array(factor.eig.s),
            "tau_zero": factor.eig.tau_zero,
            "pinv_tol": factor.pinv_tol,
            "effective_rank": factor.effective_rank,
            "warning": factor.warning,
            "landmarks": None if landmarks is None else {
                "indices": None if landmarks.indices is None else _array(landmarks.indices),
                "points": None if landmarks.points is None else _array(landmarks.points),
                "multiplicity": (None if landmarks.multiplicity is None
                                 else _array(landmarks.multiplicity)),
                "requested": landmarks.requested,
            },
        },
    }
    return payload


def model_from_dict(payload: dict) -> tuple[LowRankModel, KernelSpec | None]:
    if payload.get("schema_version") != 1:
        raise InvalidInput(f"unsupported model schema {payload.get('schema_version')!r}")
    raw = payload["factor"]
    eig = SignedEigenSystem(
        U=np.asarray(raw["U"], dtype=float),
        d=np.asarray(raw["d"], dtype=float),
        s=np.asarray(raw["s"], dtype=float),
        tau_zero=float(raw["tau_zero"]),
    )
    lm = raw.get("landmarks")
    landmarks = None
    if lm is not None:
        landmarks = LandmarkSet(
            indices=None if lm["indices"] is None else np.asarray(lm["indices"], dtype=int),
            points=None if lm["points"] is None else np.asarray(lm["points"], dtype=float),
            multiplicity=(None if lm["multiplicity"] is None
                          else np.asarray(lm["multiplicity"], dtype=int)),
            requested=lm["requested"],
        )
    factor = NystroemFactor(
        eig=eig,
        pinv_tol=float(raw["pinv_tol"]),
        effective_rank=int(raw["effective_rank"]),
        landmarks=landmarks,
        warning=raw.get("warning"),
    )
    # training features are not stored; predictions only need the factor
    fmap = FeatureMap(
        phi=np.zeros((0, factor.effective_rank)),
        signs=np.array(factor.s_r),
        factor=factor,
    )
    reg = RegPair(payload["reg"]["lam_pos"], payload["reg"]["lam_neg"])
    model = LowRankModel(
        z=np.asarray(payload["z"], dtype=float),
        map=fmap,
        learner=payload["learner"],
        reg=reg,
        r_constraint=payload.get("r_constraint"),
        diagnostics=payload.get("diagnostics") or {},
    )
    kernel = payload.get("kernel")
    return model, (parse_kernel_spec(kernel) if kernel else None)


def save_model(path, model: LowRankModel, kernel: KernelSpec | None = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_to_dict(model, kernel), handle, indent=1)


def load_model(path) -> tuple[LowRankModel, KernelSpec | None]:
    with open(path, "r", encoding="utf-8") as handle:
        return model_from_dict(json.load(handle))
