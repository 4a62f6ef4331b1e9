"""Command-line interface.

One executable with subcommands:

  approx   sweep samplers and ranks, write approximation error/time tables
  eigen    approximate eigendecomposition of one configuration
  sample   write a landmark set for a sampler and seed
  train    fit one learner on the whole dataset and write a model file
  cv       stratified k-fold evaluation of the learners plus baselines
  bench    wall-clock scaling of the two eigendecomposition routes
  flops    closed-form multiplication counts for both routes

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver failure.

Outputs are CSV tables plus a ``result.json`` that embeds the schema version,
the package version, and the fully resolved configuration, so every file can
be traced back to the exact run that produced it.  With a fixed ``--seed``
the numeric outputs are reproducible; wall-clock columns of course vary.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .data import (
    EvalResult,
    load_labels,
    load_matrix,
    load_table,
    double_center_neg,
    make_synthetic,
    misclassification,
    one_vs_all,
    stratified_kfold,
)
from .errors import (
    ConfigError,
    DegenerateScores,
    DegenerateSpectrum,
    FoldError,
    InvalidBudget,
    InvalidClass,
    InvalidInput,
    KreinKitError,
    ParseError,
    RankDeficient,
    ShapeError,
    SingularLandmarkBlock,
    SolverError,
    UseLoadMatrixInstead,
)
from .kernels import (
    GramSource,
    center_kernel,
    gram,
    gram_cross,
    parse_kernel_spec,
    standardize,
)
from .landmarks import (
    build_sketch,
    default_sketch_size,
    kmeanspp_landmarks,
    leverage_scores,
    sample_leverage,
    spawn_rng,
    uniform_landmarks,
)
from .learners import (
    RegPair,
    build_feature_map,
    flip_shsvm_baseline,
    krein_krr_lowrank,
    save_model,
    sf_lsm_baseline,
    sh_svm_lowrank,
    vc_lsm_lowrank,
)
from .linalg import SymMatrix, sym_eigen, indefiniteness
from .nystroem import (
    approximate,
    fit,
    flop_count,
    frobenius_error,
    one_shot_eigen,
    reconstruct,
    sgt_one_shot,
    truncate_eigen,
    truncate_factor,
)

SCHEMA_VERSION = 1
SAMPLERS = ("uniform", "leverage", "kmeanspp")
LEARNERS = ("lsm", "vclsm", "shsvm")

# spawn-key domains for derived generators, so every task seed is distinct
_DOMAIN_DATA = 0
_DOMAIN_SWEEP = 1
_DOMAIN_CV = 2
_DOMAIN_BENCH = 3
_DOMAIN_SINGLE = 4


@dataclass
class RunConfig:
    """Fully resolved run configuration; embedded in every result file."""

    command: str
    data: str | None = None
    data_format: str = "csv"
    matrix: str | None = None
    matrix_format: str = "csv"
    matrix_kind: str = "similarity"
    square: bool = True
    labels: str | None = None
    target_class: str | None = None
    synthetic: str | None = None
    n: int = 500
    p: int = 4
    separation: float = 6.0
    kernel: str | None = None
    standardize: bool = True
    pinv_tol: float | None = None
    samplers: list = field(default_factory=lambda: ["uniform"])
    ranks: list = field(default_factory=list)
    landmark_factor: str = "1"
    m: int | None = None
    method: str = "one_shot"
    learners: list = field(default_factory=lambda: ["lsm", "vclsm", "shsvm"])
    lambdas: list = field(default_factory=lambda: [10.0**e for e in range(-4, 3)])
    radius_factors: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    inner_folds: int = 3
    lam_pos: float = 1e-2
    lam_neg: float = 1e-2
    radius: float | None = None
    folds: int = 10
    reps: int = 10
    seed: int = 0
    workers: int = 1
    out: str | None = None
    n_schedule: list = field(default_factory=list)
    centered: bool = False


# ---------------------------------------------------------------------------
# argument parsing


def _parse_ranks(text: str) -> list:
    """Rank schedules: explicit '10,20,40' or geometric 'a:b:xS'."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3 or not parts[2].startswith("x"):
            raise ConfigError(f"rank schedule {text!r} is not 'start:stop:xSTEP'")
        try:
            start, stop, step = int(parts[0]), int(parts[1]), float(parts[2][1:])
        except ValueError:
            raise ConfigError(f"rank schedule {text!r} has non-numeric fields") from None
        if start < 1 or stop < start or step <= 1.0:
            raise ConfigError(f"rank schedule {text!r} must grow from >= 1 with factor > 1")
        ranks = []
        value = float(start)
        while round(value) <= stop:
            if not ranks or round(value) != ranks[-1]:
                ranks.append(int(round(value)))
            value *= step
        return ranks
    try:
        ranks = [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise ConfigError(f"rank list {text!r} has non-integer entries") from None
    if not ranks or any(r < 1 for r in ranks):
        raise ConfigError("ranks must be positive integers")
    return ranks


def _parse_float_list(text: str, flag: str) -> list:
    try:
        values = [float(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not values:
        raise ConfigError(f"{flag} must not be empty")
    return values


def _parse_name_list(text: str, allowed, flag: str) -> list:
    names = [tok for tok in text.split(",") if tok]
    for name in names:
        if name not in allowed:
            raise ConfigError(f"{flag}: unknown name {name!r}; allowed: {', '.join(allowed)}")
    if not names:
        raise ConfigError(f"{flag} must not be empty")
    return names


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("input")
    group.add_argument("--data", help="feature table (rows = points)")
    group.add_argument("--data-format", default="csv", choices=["csv", "whitespace"])
    group.add_argument("--matrix", help="precomputed square matrix file")
    group.add_argument("--matrix-format", default="csv", choices=["csv", "whitespace"])
    group.add_argument("--matrix-kind", default="similarity",
                       choices=["similarity", "dissimilarity"])
    group.add_argument("--no-square", action="store_true",
                       help="dissimilarities are already squared")
    group.add_argument("--labels", help="label file, one label per line")
    group.add_argument("--target-class", help="map labels to +1 (target) / -1 (rest)")
    group.add_argument("--synthetic", choices=["two_gaussians", "concentric"])
    group.add_argument("--n", type=int, default=500, help="synthetic sample count")
    group.add_argument("--p", type=int, default=4, help="synthetic feature count")
    group.add_argument("--separation", type=float, default=6.0)
    group.add_argument("--kernel", help='e.g. "kernel=gaussdiff sigma1=1.0 sigma2=3.0"')
    group.add_argument("--no-standardize", action="store_true",
                       help="skip feature standardization for vector data")
    group.add_argument("--pinv-tol", type=float, default=None)


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", help="output directory (default: print summary only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kreinkit", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx", help="approximation error/time sweep")
    _add_input_flags(p)
    _add_run_flags(p)
    p.add_argument("--samplers", default="uniform")
    p.add_argument("--ranks", default="10:160:x2")
    p.add_argument("--landmark-factor", default="1", choices=["1", "logn"])
    p.add_argument("--reps", type=int, default=10)

    p = sub.add_parser("eigen", help="one approximate eigendecomposition")
    _add_input_flags(p)
    _add_run_flags(p)
    p.add_argument("--m", type=int, required=True, help="landmark budget")
    p.add_argument("--sampler", default="uniform", choices=SAMPLERS)
    p.add_argument("--method", default="one_shot", choices=["one_shot", "sgt"])

    p = sub.add_parser("sample", help="write a landmark set")
    _add_input_flags(p)
    _add_run_flags(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sampler", default="uniform", choices=SAMPLERS)

    p = sub.add_parser("train", help="fit one learner on the full dataset")
    _add_input_flags(p)
    _add_run_flags(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sampler", default="uniform", choices=SAMPLERS)
    p.add_argument("--learner", default="lsm", choices=LEARNERS)
    p.add_argument("--lambda-pos", type=float, default=1e-2)
    p.add_argument("--lambda-neg", type=float, default=1e-2)
    p.add_argument("--radius", type=float, default=None,
                   help="variance target for vclsm (default sqrt(n) * std(y))")

    p = sub.add_parser("cv", help="stratified k-fold evaluation")
    _add_input_flags(p)
    _add_run_flags(p)
    p.add_argument("--learners", default="lsm,vclsm,shsvm")
    p.add_argument("--sampler", default="uniform", choices=SAMPLERS)
    p.add_argument("--ranks", default="50")
    p.add_argument("--landmark-factor", default="1", choices=["1", "logn"])
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--lambdas", default=None,
                   help="comma-separated grid (default 1e-4..1e2 log-spaced)")
    p.add_argument("--radius-factors", default="0.5,1,2")
    p.add_argument("--inner-folds", type=int, default=3)

    p = sub.add_parser("bench", help="wall-clock scaling of both routes")
    _add_input_flags(p)
    _add_run_flags(p)
    p.add_argument("--n-schedule", default="2000,4000,8000")
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--methods", default="one_shot,sgt")

    p = sub.add_parser("flops", help="closed-form multiplication counts")
    p.add_argument("--n", dest="n_list", default="1000000")
    p.add_argument("--m", dest="m_list", default="1000")
    p.add_argument("--out")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in ("data", "data_format", "matrix", "matrix_format", "matrix_kind",
                 "labels", "target_class", "synthetic", "n", "p", "separation",
                 "kernel", "pinv_tol", "seed", "workers", "out", "m", "method",
                 "folds", "reps", "inner_folds"):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "no_square", False):
        cfg.square = False
    if getattr(args, "no_standardize", False):
        cfg.standardize = False
    if hasattr(args, "samplers"):
        cfg.samplers = _parse_name_list(args.samplers, SAMPLERS, "--samplers")
    if hasattr(args, "sampler"):
        cfg.samplers = [args.sampler]
    if hasattr(args, "ranks"):
        cfg.ranks = _parse_ranks(args.ranks)
    if hasattr(args, "landmark_factor"):
        cfg.landmark_factor = args.landmark_factor
    if hasattr(args, "learners"):
        cfg.learners = _parse_name_list(args.learners, LEARNERS, "--learners")
    if hasattr(args, "learner"):
        cfg.learners = [args.learner]
    if getattr(args, "lambdas", None):
        cfg.lambdas = _parse_float_list(args.lambdas, "--lambdas")
    if getattr(args, "radius_factors", None):
        cfg.radius_factors = _parse_float_list(args.radius_factors, "--radius-factors")
    if hasattr(args, "lambda_pos"):
        cfg.lam_pos = args.lambda_pos
        cfg.lam_neg = args.lambda_neg
        cfg.radius = args.radius
    if hasattr(args, "methods"):
        cfg.method = args.methods
    if hasattr(args, "n_schedule"):
        cfg.n_schedule = [int(v) for v in _parse_float_list(args.n_schedule, "--n-schedule")]
    if args.command == "flops":
        cfg.n_schedule = [int(v) for v in _parse_float_list(args.n_list, "--n")]
        cfg.ranks = [int(v) for v in _parse_float_list(args.m_list, "--m")]
    return cfg


def validate_config(cfg: RunConfig) -> None:
    """Structural validation that needs no data; runs before any IO."""
    if cfg.reps < 1:
        raise ConfigError("--reps must be at least 1")
    if cfg.workers < 1:
        raise ConfigError("--workers must be at least 1")
    if cfg.command == "cv":
        if cfg.folds < 2:
            raise ConfigError("--folds must be at least 2")
        if cfg.inner_folds < 2:
            raise ConfigError("--inner-folds must be at least 2")
        if any(lam <= 0 for lam in cfg.lambdas):
            raise ConfigError("--lambdas must be positive")
    inputs = sum(1 for v in (cfg.data, cfg.matrix, cfg.synthetic) if v)
    if cfg.command == "bench":
        # bench draws its own standard-normal points per schedule entry
        if inputs:
            raise ConfigError("bench generates its own data; drop the input flags")
        return
    if cfg.command != "flops":
        if inputs == 0:
            raise ConfigError("provide exactly one of --data, --matrix, --synthetic")
        if inputs > 1:
            raise ConfigError("--data, --matrix, and --synthetic are mutually exclusive")
        if (cfg.data or cfg.synthetic) and not cfg.kernel and cfg.command != "sample":
            if cfg.synthetic and cfg.command in ("approx", "eigen", "train", "cv", "bench"):
                cfg.kernel = "kernel=gaussdiff sigma1=1.0 sigma2=3.0"
            elif cfg.data:
                raise ConfigError("vector data needs --kernel")


def resolve_schedule(cfg: RunConfig, n: int) -> list:
    """Expand ranks into (rank, landmark budget) pairs and validate them."""
    schedule = []
    for k in cfg.ranks:
        if cfg.landmark_factor == "logn":
            l = min(n, default_sketch_size(min(k, n), n))
        else:
            l = k
        if not 1 <= k <= l <= n:
            raise ConfigError(
                f"schedule entry needs 1 <= k <= l <= n, got k={k}, l={l}, n={n}"
            )
        schedule.append((k, l))
    return schedule


# ---------------------------------------------------------------------------
# input loading


def load_inputs(cfg: RunConfig, need_labels: bool = False):
    """Build the Gram source (and labels) described by the configuration."""
    y = None
    if cfg.synthetic:
        ds = make_synthetic(cfg.synthetic, cfg.n, cfg.p,
                            spawn_rng(cfg.seed, _DOMAIN_DATA), cfg.separation)
        x = ds.X
        y = ds.y
        if cfg.standardize:
            x, _ = standardize(x)
        source = GramSource.from_data(parse_kernel_spec(cfg.kernel), x)
    elif cfg.data:
        x = load_table(cfg.data, cfg.data_format)
        if cfg.standardize:
            x, _ = standardize(x)
        if not cfg.kernel:
            raise ConfigError("vector data needs --kernel")
        source = GramSource.from_data(parse_kernel_spec(cfg.kernel), x)
    elif cfg.matrix:
        loaded = load_matrix(cfg.matrix, cfg.matrix_format, kind=cfg.matrix_kind,
                             squared=not cfg.square)
        if cfg.matrix_kind == "dissimilarity":
            loaded = double_center_neg(loaded)
        source = GramSource.from_matrix(loaded)
    else:
        raise ConfigError("no input given")

    if cfg.labels:
        raw = load_labels(cfg.labels)
        if raw.shape[0] != source.n:
            raise ShapeError(
                f"{cfg.labels}: {raw.shape[0]} labels for {source.n} data points"
            )
        if cfg.target_class is not None:
            y = one_vs_all(raw, cfg.target_class)
        else:
            try:
                y = raw.astype(float)
            except ValueError:
                raise ConfigError(
                    "labels are not numeric; use --target-class to binarize"
                ) from None
    if need_labels and y is None:
        raise ConfigError("this command needs labels (--labels or --synthetic)")
    return source, y


def select_landmarks(sampler: str, source: GramSource, budget: int,
                     rng: np.random.Generator, pinv_tol: float | None):
    """Dispatch one landmark selection; sketch-based samplers build their
    sketch from the same generator so a task seed fixes everything."""
    if sampler == "uniform":
        return uniform_landmarks(source.n, budget, rng)
    sketch = build_sketch(source, default_sketch_size(budget, source.n), rng, pinv_tol)
    if sampler == "leverage":
        return sample_leverage(leverage_scores(sketch.eig), budget, rng)
    if sampler == "kmeanspp":
        return kmeanspp_landmarks(sketch.features, budget, rng)
    raise ConfigError(f"unknown sampler {sampler!r}")


# ---------------------------------------------------------------------------
# output helpers


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _write_result(cfg: RunConfig, payload: dict) -> None:
    if not cfg.out:
        return
    body = {
        "schema_version": SCHEMA_VERSION,
        "artifact": {"name": "kreinkit", "version": __version__},
        "command": cfg.command,
        "config": asdict(cfg),
    }
    body.update(payload)
    with open(f"{cfg.out}/result.json", "w", encoding="utf-8") as handle:
        json.dump(body, handle, indent=1, default=str)


def _ensure_outdir(cfg: RunConfig) -> None:
    if cfg.out:
        import os

        os.makedirs(cfg.out, exist_ok=True)


def _map_tasks(fn, tasks, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(task) for task in tasks]


# ---------------------------------------------------------------------------
# approx


def run_approx_sweep(source: GramSource, samplers, schedule, reps: int, seed: int,
                     pinv_tol: float | None, workers: int = 1):
    """Error/time sweep; returns raw rows and per-configuration medians.

    Every repetition draws its own generator from (seed, sampler, schedule
    slot, repetition), so rows are reproducible regardless of worker count.
    Each configuration runs one discarded warm-up repetition before the timed
    ones.
    """
    full = source.full()
    tasks = []
    for si, sampler in enumerate(samplers):
        for ki, (k, l) in enumerate(schedule):
            for rep in range(-1, reps):  # rep -1 is the warm-up
                tasks.append((si, sampler, ki, k, l, rep))

    def one(task):
        si, sampler, ki, k, l, rep = task
        rng = spawn_rng(seed, _DOMAIN_SWEEP, si, ki, max(rep, 0), int(rep < 0))
        start = time.perf_counter()
        marks = select_landmarks(sampler, source, l, rng, pinv_tol)
        factor = fit(source.block(marks.indices), pinv_tol, marks)
        eig = truncate_eigen(one_shot_eigen(factor, source.cross_all(marks.indices)), k)
        seconds = time.perf_counter() - start
        error = frobenius_error(full, reconstruct(eig))
        return (sampler, k, l, rep, error, seconds)

    results = _map_tasks(one, tasks, workers)
    raw = [row for row in results if row[3] >= 0]
    medians = []
    for si, sampler in enumerate(samplers):
        for k, l in schedule:
            errs = [r[4] for r in raw if r[0] == sampler and r[1] == k and r[2] == l]
            secs = [r[5] for r in raw if r[0] == sampler and r[1] == k and r[2] == l]
            medians.append((sampler, k, l, float(np.median(errs)), float(np.median(secs))))
    return raw, medians


def cmd_approx(cfg: RunConfig) -> int:
    source, _ = load_inputs(cfg)
    schedule = resolve_schedule(cfg, source.n)
    raw, medians = run_approx_sweep(source, cfg.samplers, schedule, cfg.reps,
                                    cfg.seed, cfg.pinv_tol, cfg.workers)
    _ensure_outdir(cfg)
    if cfg.out:
        _write_csv(f"{cfg.out}/approx_raw.csv",
                   ["sampler", "k", "l", "repetition", "frobenius_error", "seconds"], raw)
        _write_csv(f"{cfg.out}/approx_median.csv",
                   ["sampler", "k", "l", "median_error", "median_seconds"], medians)
        _write_result(cfg, {"medians": [list(row) for row in medians]})
    for row in medians:
        print(f"{row[0]:>9}  k={row[1]:<5d} l={row[2]:<5d} "
              f"median_error={row[3]:.6e}  median_seconds={row[4]:.4f}")
    return 0


# ---------------------------------------------------------------------------
# eigen / sample / train


def cmd_eigen(cfg: RunConfig) -> int:
    source, _ = load_inputs(cfg)
    if not 1 <= cfg.m <= source.n:
        raise ConfigError(f"--m must lie in [1, {source.n}]")
    rng = spawn_rng(cfg.seed, _DOMAIN_SINGLE)
    marks = select_landmarks(cfg.samplers[0], source, cfg.m, rng, cfg.pinv_tol)
    factor = fit(source.block(marks.indices), cfg.pinv_tol, marks)
    cross = source.cross_all(marks.indices)
    eig = one_shot_eigen(factor, cross) if cfg.method == "one_shot" else \
        sgt_one_shot(factor, cross)
    gram_residual = float(np.abs(eig.U.T @ eig.U - np.eye(eig.rank)).max())
    approx = approximate(factor, cross)
    recon_err = frobenius_error(approx, reconstruct(eig))
    rel = recon_err / (1.0 + float(np.linalg.norm(approx.values, "fro")))
    negative_mass = float(np.abs(eig.lam[eig.lam < 0]).sum())
    total_mass = float(np.abs(eig.lam).sum())
    _ensure_outdir(cfg)
    if cfg.out:
        _write_csv(f"{cfg.out}/eigenvalues.csv", ["index", "eigenvalue"],
                   list(enumerate(eig.lam.tolist())))
        _write_result(cfg, {
            "method": cfg.method,
            "effective_rank": factor.effective_rank,
            "orthonormality_residual": gram_residual,
            "reconstruction_relative_error": rel,
            "negative_mass_share": negative_mass / total_mass if total_mass else 0.0,
            "warning": eig.warning,
        })
    print(f"rank={eig.rank} orthonormality_residual={gram_residual:.3e} "
          f"reconstruction_relative_error={rel:.3e}")
    return 0


def cmd_sample(cfg: RunConfig) -> int:
    source, _ = load_inputs(cfg)
    if not 1 <= cfg.m <= source.n:
        raise ConfigError(f"--m must lie in [1, {source.n}]")
    rng = spawn_rng(cfg.seed, _DOMAIN_SINGLE)
    marks = select_landmarks(cfg.samplers[0], source, cfg.m, rng, cfg.pinv_tol)
    mult = marks.multiplicity if marks.multiplicity is not None else \
        np.ones(marks.m, dtype=int)
    rows = [(i, int(idx), int(c)) for i, (idx, c) in enumerate(zip(marks.indices, mult))]
    _ensure_outdir(cfg)
    if cfg.out:
        _write_csv(f"{cfg.out}/landmarks.csv", ["position", "index", "multiplicity"], rows)
        _write_result(cfg, {"requested": marks.requested, "effective": marks.m})
    print(f"sampler={cfg.samplers[0]} requested={marks.requested} effective={marks.m}")
    return 0


def _train_one(learner: str, fmap, y, reg: RegPair, radius: float | None):
    if learner == "lsm":
        return krein_krr_lowrank(fmap, y, reg)
    if learner == "vclsm":
        if radius is None:
            radius = float(np.sqrt(fmap.n) * np.std(y))
        return vc_lsm_lowrank(fmap, y, reg, radius)
    if learner == "shsvm":
        return sh_svm_lowrank(fmap, y, reg)
    raise ConfigError(f"unknown learner {learner!r}")


def cmd_train(cfg: RunConfig) -> int:
    source, y = load_inputs(cfg, need_labels=True)
    if not 1 <= cfg.m <= source.n:
        raise ConfigError(f"--m must lie in [1, {source.n}]")
    learner = cfg.learners[0]
    if learner == "vclsm":
        # the variance constraint is stated against a centered kernel
        source = GramSource.from_matrix(center_kernel(source.full()))
        cfg.centered = True
    rng = spawn_rng(cfg.seed, _DOMAIN_SINGLE)
    marks = select_landmarks(cfg.samplers[0], source, cfg.m, rng, cfg.pinv_tol)
    factor = fit(source.block(marks.indices), cfg.pinv_tol, marks)
    fmap = build_feature_map(factor, source.cross_all(marks.indices))
    model = _train_one(learner, fmap, y, RegPair(cfg.lam_pos, cfg.lam_neg), cfg.radius)
    training_error = misclassification(np.sign(fmap.phi @ model.z), y) \
        if set(np.unique(y).tolist()) <= {-1.0, 1.0} else None
    _ensure_outdir(cfg)
    if cfg.out:
        spec = parse_kernel_spec(cfg.kernel) if cfg.kernel else None
        save_model(f"{cfg.out}/model.json", model, spec)
        _write_result(cfg, {
            "learner": learner,
            "effective_rank": factor.effective_rank,
            "training_error": training_error,
            "diagnostics": model.diagnostics,
        })
    print(f"learner={learner} m={cfg.m} effective_rank={factor.effective_rank} "
          f"training_error={training_error}")
    return 0


# ---------------------------------------------------------------------------
# cross-validation


def _hyper_grid(cfg: RunConfig, learner: str):
    """Enumerate hyperparameter combinations for one learner."""
    pairs = [RegPair(lp, ln) for lp, ln in itertools.product(cfg.lambdas, cfg.lambdas)]
    if learner == "vclsm":
        return [(reg, factor) for reg in pairs for factor in cfg.radius_factors]
    if learner == "sf-lsm":
        return [(lam, None) for lam in cfg.lambdas]
    return [(reg, None) for reg in pairs]


def _cv_fit_predict(learner: str, K: SymMatrix, y, train, test, marks, rank: int,
                    pinv_tol, hyper):
    """Train one learner on a training fold and predict the held-out fold."""
    if learner == "sf-lsm":
        lam, _ = hyper
        block = SymMatrix(K.values[np.ix_(train, train)])
        model = sf_lsm_baseline(block, y[train], lam)
        return model.predict(K.values[np.ix_(test, train)])
    if learner == "constant":
        positive = float(np.sum(y[train] > 0))
        value = 1.0 if positive * 2 >= train.size else -1.0
        return np.full(test.size, value)
    reg, radius_factor = hyper
    factor = fit(SymMatrix(K.values[np.ix_(marks.indices, marks.indices)]),
                 pinv_tol, marks)
    factor = truncate_factor(factor, rank)
    fmap = build_feature_map(factor, K.values[np.ix_(train, marks.indices)])
    radius = None
    if learner == "vclsm":
        radius = float(radius_factor * np.sqrt(train.size) * np.std(y[train]))
    model = _train_one(learner, fmap, y[train], reg, radius)
    return model.predict(K.values[np.ix_(test, marks.indices)])


def _pick_hyper(learner, K, y, train, rank, budget, sampler, pinv_tol, cfg, key):
    """Inner cross-validation over the hyperparameter grid; deterministic
    tie-break toward the earliest grid entry."""
    grid = _hyper_grid(cfg, learner)
    if len(grid) == 1:
        return grid[0]
    inner = stratified_kfold(y[train], cfg.inner_folds, spawn_rng(cfg.seed, _DOMAIN_CV, *key))
    scores = np.zeros(len(grid))
    for fi, (itr, ite) in enumerate(inner.splits()):
        sub_train = train[itr]
        sub_test = train[ite]
        marks = None
        if learner in LEARNERS:
            rng = spawn_rng(cfg.seed, _DOMAIN_CV, *key, fi)
            marks = _fold_landmarks(sampler, K, sub_train,
                                    min(budget, sub_train.size), rng, pinv_tol)
        for gi, hyper in enumerate(grid):
            try:
                preds = _cv_fit_predict(learner, K, y, sub_train, sub_test, marks,
                                        rank, pinv_tol, hyper)
                scores[gi] += misclassification(np.sign(preds), y[sub_test])
            except (SolverError, RankDeficient):
                scores[gi] += 1.0  # a failing combination never wins
    return grid[int(np.argmin(scores))]


def _fold_landmarks(sampler: str, K: SymMatrix, train, budget: int,
                    rng: np.random.Generator, pinv_tol):
    """Landmarks restricted to a training fold, reported as global indices."""
    sub = GramSource.from_matrix(SymMatrix(K.values[np.ix_(train, train)]))
    local = select_landmarks(sampler, sub, budget, rng, pinv_tol)
    return type(local)(indices=train[local.indices], multiplicity=local.multiplicity,
                       requested=local.requested)


def run_cv(source: GramSource, y, cfg: RunConfig):
    """Full cross-validation sweep; returns per-fold rows and summaries."""
    schedule = resolve_schedule(cfg, source.n)
    plan = stratified_kfold(y, cfg.folds, spawn_rng(cfg.seed, _DOMAIN_CV))
    raw_K = source.full()
    needs_center = any(l == "vclsm" for l in cfg.learners)
    centered_K = center_kernel(raw_K) if needs_center else None
    if needs_center:
        cfg.centered = True
    fold_rows = []
    summaries = []
    splits = list(plan.splits())

    for li, learner in enumerate(cfg.learners):
        K = centered_K if learner == "vclsm" else raw_K
        for ki, (k, l) in enumerate(schedule):
            rates = []
            train_s = 0.0
            predict_s = 0.0
            for fi, (train, test) in enumerate(splits):
                budget = min(l, train.size)
                rng = spawn_rng(cfg.seed, _DOMAIN_CV, li, ki, fi)
                marks = _fold_landmarks(cfg.samplers[0], K, train, budget, rng,
                                        cfg.pinv_tol)
                hyper = _pick_hyper(learner, K, y, train, k, budget, cfg.samplers[0],
                                    cfg.pinv_tol, cfg, (li, ki, fi))
                t0 = time.perf_counter()
                preds_fn = _cv_fit_predict(learner, K, y, train, test, marks, k,
                                           cfg.pinv_tol, hyper)
                t1 = time.perf_counter()
                rate = misclassification(np.sign(preds_fn), y[test])
                t2 = time.perf_counter()
                train_s += t1 - t0
                predict_s += t2 - t1
                rates.append(rate)
                fold_rows.append((learner, k, l, fi, rate))
            result = EvalResult.from_rates(
                rates, {"train_seconds": train_s, "predict_seconds": predict_s})
            summaries.append((learner, k, l, result))

    # baselines: similarities-as-features ridge and the constant predictor
    for baseline in ("sf-lsm", "constant"):
        rates = []
        for fi, (train, test) in enumerate(splits):
            if baseline == "sf-lsm":
                hyper = _pick_hyper(baseline, raw_K, y, train, 0, 0, cfg.samplers[0],
                                    cfg.pinv_tol, cfg, (97, fi))
            else:
                hyper = (None, None)
            preds = _cv_fit_predict(baseline, raw_K, y, train, test, None, 0,
                                    cfg.pinv_tol, hyper)
            rate = misclassification(np.sign(preds), y[test])
            rates.append(rate)
            fold_rows.append((baseline, "full", "full", fi, rate))
        summaries.append((baseline, "full", "full", EvalResult.from_rates(rates, {})))
    return fold_rows, summaries


def cmd_cv(cfg: RunConfig) -> int:
    source, y = load_inputs(cfg, need_labels=True)
    fold_rows, summaries = run_cv(source, y, cfg)
    _ensure_outdir(cfg)
    summary_rows = [
        (learner, k, l, res.mean, res.std, res.median) for learner, k, l, res in summaries
    ]
    if cfg.out:
        _write_csv(f"{cfg.out}/cv_folds.csv",
                   ["learner", "k", "l", "fold", "error"], fold_rows)
        _write_csv(f"{cfg.out}/cv_summary.csv",
                   ["learner", "k", "l", "mean_error", "std_error", "median_error"],
                   summary_rows)
        _write_result(cfg, {
            "summaries": [
                {"learner": learner, "k": k, "l": l, "mean": res.mean, "std": res.std,
                 "median": res.median, "timings": res.timings}
                for learner, k, l, res in summaries
            ],
        })
    for learner, k, l, res in summaries:
        print(f"{learner:>9}  k={k!s:<5} l={l!s:<5} mean={res.mean:.4f} "
              f"(std {res.std:.4f})  median={res.median:.4f}")
    return 0


# ---------------------------------------------------------------------------
# bench / flops


def run_bench(cfg: RunConfig):
    """Time both eigendecomposition routes on synthetic problems.

    The kernel blocks are built outside the timed region; each timed run
    covers the landmark-block eigendecomposition plus the route itself, which
    is exactly what the closed-form counts cover.  One warm-up run per
    configuration is discarded.
    """
    methods = _parse_name_list(cfg.method, ("one_shot", "sgt"), "--methods")
    spec = parse_kernel_spec(cfg.kernel)
    rows = []
    for ni, n in enumerate(cfg.n_schedule):
        if n < cfg.m:
            raise ConfigError(f"--n-schedule entry {n} is below the landmark budget {cfg.m}")
        rng = spawn_rng(cfg.seed, _DOMAIN_BENCH, ni)
        x = rng.normal(size=(n, cfg.p))
        marks = uniform_landmarks(n, cfg.m, rng)
        K_ZZ = gram(spec, x[marks.indices])
        K_XZ = gram_cross(spec, x, x[marks.indices])
        for method in methods:
            route = one_shot_eigen if method == "one_shot" else sgt_one_shot
            for rep in range(-1, cfg.reps):
                start = time.perf_counter()
                factor = fit(K_ZZ, cfg.pinv_tol, marks)
                route(factor, K_XZ)
                seconds = time.perf_counter() - start
                if rep >= 0:
                    rows.append((n, cfg.m, method, rep, seconds,
                                 flop_count(method, n, cfg.m)))
    summary = []
    for n in cfg.n_schedule:
        for method in methods:
            secs = [r[4] for r in rows if r[0] == n and r[2] == method]
            summary.append((n, cfg.m, method, float(np.mean(secs)), float(np.std(secs)),
                            float(np.median(secs)), flop_count(method, n, cfg.m)))
    slopes = {}
    if len(cfg.n_schedule) >= 2:
        for method in methods:
            ns = np.array(cfg.n_schedule, dtype=float)
            means = np.array([s[3] for s in summary if s[2] == method])
            slope, intercept = np.polyfit(ns, means, 1)
            slopes[method] = {"seconds_per_point": float(slope),
                              "intercept_seconds": float(intercept)}
    return rows, summary, slopes


def cmd_bench(cfg: RunConfig) -> int:
    if not cfg.kernel:
        cfg.kernel = "kernel=gaussdiff sigma1=1.0 sigma2=3.0"
    rows, summary, slopes = run_bench(cfg)
    _ensure_outdir(cfg)
    if cfg.out:
        _write_csv(f"{cfg.out}/bench_raw.csv",
                   ["n", "m", "method", "repetition", "seconds", "flops"], rows)
        _write_csv(f"{cfg.out}/bench_summary.csv",
                   ["n", "m", "method", "mean_seconds", "std_seconds",
                    "median_seconds", "flops"], summary)
        _write_result(cfg, {"summary": [list(s) for s in summary], "slopes": slopes})
    for n, m, method, mean_s, std_s, median_s, flops in summary:
        print(f"n={n:<8d} m={m:<5d} {method:>9}  mean={mean_s:.4f}s "
              f"(std {std_s:.4f})  median={median_s:.4f}s  flops={flops:.3e}")
    return 0


def cmd_flops(cfg: RunConfig) -> int:
    rows = []
    for n in cfg.n_schedule:
        for m in cfg.ranks:
            one = flop_count("one_shot", n, m)
            sgt = flop_count("sgt", n, m)
            rows.append((n, m, one, sgt, sgt - one))
    if cfg.out:
        _ensure_outdir(cfg)
        _write_csv(f"{cfg.out}/flops.csv",
                   ["n", "m", "one_shot", "sgt", "savings"], rows)
        _write_result(cfg, {"rows": [list(r) for r in rows]})
    print(f"{'n':>10} {'m':>8} {'one_shot':>16} {'sgt':>16} {'savings':>16}")
    for n, m, one, sgt, savings in rows:
        print(f"{n:>10d} {m:>8d} {one:>16d} {sgt:>16d} {savings:>16d}")
    return 0


# ---------------------------------------------------------------------------
# entry point

_COMMANDS = {
    "approx": cmd_approx,
    "eigen": cmd_eigen,
    "sample": cmd_sample,
    "train": cmd_train,
    "cv": cmd_cv,
    "bench": cmd_bench,
    "flops": cmd_flops,
}

_DATA_ERRORS = (ParseError, FoldError, InvalidClass, ShapeError, InvalidInput,
                UseLoadMatrixInstead, DegenerateSpectrum, DegenerateScores)
_SOLVER_ERRORS = (SolverError, SingularLandmarkBlock, RankDeficient)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        validate_config(cfg)
        return _COMMANDS[cfg.command](cfg)
    except (ConfigError, InvalidBudget) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
