import numpy as np
import pytest
from numpy.testing import assert_allclose

from kreinkit import (
    ConfigError,
    ConstantFeatureWarning,
    GramSource,
    InvalidInput,
    ShapeError,
    SymMatrix,
    UseLoadMatrixInstead,
    center_kernel,
    epanechnikov,
    format_kernel_spec,
    gaussian,
    gaussian_diff,
    gram,
    gram_cross,
    indefiniteness,
    linear,
    parse_kernel_spec,
    precomputed,
    rl_sigmoid_preset,
    standardize,
    sym_eigen,
    tanh_sigmoid,
)


# ---------------------------------------------------------------------------
# spec parsing


def test_parse_round_trip():
    for text in (
        "kernel=gauss sigma=1.5",
        "kernel=gaussdiff sigma1=1.0 sigma2=3.0",
        "kernel=tanh a=2.0 b=-1.0",
        "kernel=epan sigma=2.0",
        "kernel=linear",
        "kernel=precomputed",
    ):
        spec = parse_kernel_spec(text)
        assert parse_kernel_spec(format_kernel_spec(spec)) == spec


def test_parse_is_whitespace_tolerant():
    assert parse_kernel_spec("  kernel=gauss   sigma=2 ") == gaussian(2.0)


def test_rlsigmoid_preset():
    assert parse_kernel_spec("kernel=rlsigmoid") == tanh_sigmoid(a=1.0, b=-1.0)
    assert rl_sigmoid_preset() == tanh_sigmoid(a=1.0, b=-1.0)


@pytest.mark.parametrize(
    "text",
    [
        "sigma=1.0",  # no kernel
        "kernel=fourier",  # unknown kind
        "kernel=gauss",  # missing parameter
        "kernel=gauss sigma=1.0 a=2.0",  # foreign parameter
        "kernel=gauss sigma=abc",  # bad float
        "kernel=gauss sigma=-1.0",  # non-positive width
        "kernel=gaussdiff sigma1=2.0 sigma2=2.0",  # equal widths
        "kernel=gauss sigma",  # not key=value
        "kernel=gauss kernel=linear",  # duplicate key
    ],
)
def test_parse_rejects(text):
    with pytest.raises(ConfigError):
        parse_kernel_spec(text)


# ---------------------------------------------------------------------------
# frozen kernel values (unit distance / unit inner product)


def test_gaussian_value():
    k = gram_cross(gaussian(1.0), [[0.0, 0.0]], [[1.0, 0.0]])
    assert_allclose(k, [[0.6065306597126334]], rtol=1e-15)


def test_gaussian_diff_value():
    k = gram_cross(gaussian_diff(1.0, 3.0), [[0.0]], [[1.0]])
    assert_allclose(k, [[-0.339428809194132]], rtol=1e-13)


def test_tanh_value():
    k = gram_cross(tanh_sigmoid(a=2.0, b=-1.0), [[1.0, 2.0]], [[3.0, -1.0]])
    assert_allclose(k, [[np.tanh(1.0)]], rtol=1e-15)


def test_epanechnikov_values():
    spec = epanechnikov(2.0)
    k = gram_cross(spec, [[0.0], [0.0]], [[1.0], [5.0]])
    assert_allclose(k[0], [0.75, 0.0])  # 1 - 1/4, clamped at distance 5


def test_linear_value():
    k = gram_cross(linear(), [[1.0, 2.0]], [[3.0, -1.0]])
    assert_allclose(k, [[1.0]])


# ---------------------------------------------------------------------------
# gram construction


def test_gauss_diagonal_exactly_one():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    x[7] = x[3]  # duplicate rows must still give exact diagonal values
    k = gram(gaussian(0.7), x).values
    assert np.all(np.diag(k) == 1.0)


def test_gaussdiff_diagonal_exactly_zero():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 4))
    x[11] = x[2]
    k = gram(gaussian_diff(1.0, 3.0), x).values
    assert np.all(np.diag(k) == 0.0)
    # duplicate off-diagonal entries hit the same exact value
    assert k[11, 2] == 0.0 and k[2, 11] == 0.0


def test_gram_matches_gram_cross():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(30, 3))
    for spec in (gaussian(1.2), gaussian_diff(0.8, 2.5), tanh_sigmoid(0.5, -0.2),
                 epanechnikov(3.0), linear()):
        full = gram(spec, x).values
        cross = gram_cross(spec, x, x)
        assert_allclose(cross, full, atol=1e-13)


def test_gram_cross_block_consistency():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(25, 3))
    idx = np.array([2, 5, 11, 17])
    full = gram(gaussian_diff(1.0, 3.0), x).values
    assert_allclose(gram_cross(gaussian_diff(1.0, 3.0), x, x[idx]),
                    full[:, idx], atol=1e-13)


def test_gaussdiff_is_indefinite():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(60, 2)) * 2.0
    eig = sym_eigen(gram(gaussian_diff(1.0, 3.0), x))
    assert indefiniteness(eig) > 0.1


def test_chunked_distances_match_direct():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(600, 3))  # forces several 256-row chunks
    z = x[:10]
    k = gram_cross(gaussian(1.0), x, z)
    direct = np.exp(-((x[:, None, :] - z[None, :, :]) ** 2).sum(-1) / 2.0)
    assert_allclose(k, direct, rtol=1e-14)


def test_gram_validation():
    with pytest.raises(ShapeError):
        gram(gaussian(1.0), np.zeros(3))
    with pytest.raises(ShapeError):
        gram_cross(linear(), np.zeros((3, 2)), np.zeros((3, 4)))
    with pytest.raises(InvalidInput):
        gram(gaussian(1.0), [[np.nan, 0.0]])
    with pytest.raises(UseLoadMatrixInstead):
        gram(precomputed(), np.zeros((3, 2)))


# ---------------------------------------------------------------------------
# standardization / centering


def test_standardize_population_convention():
    rng = np.random.default_rng(6)
    x = rng.normal(loc=3.0, scale=2.0, size=(50, 4))
    z, scaler = standardize(x)
    assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
    assert_allclose(z.std(axis=0), 1.0, atol=1e-12)  # ddof=0
    assert scaler.convention == "population"
    assert_allclose(scaler.apply(x), z, atol=1e-12)


def test_standardize_constant_column():
    x = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    with pytest.warns(ConstantFeatureWarning):
        z, scaler = standardize(x)
    assert_allclose(z[:, 1], 0.0)
    assert scaler.constant[1]


def test_standardize_needs_two_rows():
    with pytest.raises(InvalidInput):
        standardize(np.ones((1, 3)))


def test_center_kernel_frozen():
    # J K J with K = I and the idempotent centering projector J
    c = center_kernel(SymMatrix(np.eye(2)))
    assert_allclose(c.values, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)


def test_center_kernel_annihilates_means():
    rng = np.random.default_rng(7)
    k = gram(gaussian_diff(1.0, 3.0), rng.normal(size=(20, 2)))
    c = center_kernel(k).values
    assert_allclose(c.sum(axis=0), 0.0, atol=1e-12)
    assert_allclose(c.sum(axis=1), 0.0, atol=1e-12)


def test_center_kernel_matches_projector_form():
    rng = np.random.default_rng(8)
    k = gram(linear(), rng.normal(size=(15, 3)))
    n = 15
    j = np.eye(n) - np.ones((n, n)) / n
    assert_allclose(center_kernel(k).values, j @ k.values @ j, atol=1e-12)


# ---------------------------------------------------------------------------
# gram sources


def test_gram_source_from_data():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(18, 2))
    src = GramSource.from_data(gaussian_diff(1.0, 3.0), x)
    idx = np.array([0, 5, 9])
    full = gram(gaussian_diff(1.0, 3.0), x).values
    assert src.n == 18
    assert_allclose(src.block(idx).values, full[np.ix_(idx, idx)], atol=1e-13)
    assert_allclose(src.cross_all(idx), full[:, idx], atol=1e-13)
    assert_allclose(src.full().values, full, atol=0)


def test_gram_source_from_matrix():
    k = SymMatrix(np.diag([2.0, -3.0, 1.0]))
    src = GramSource.from_matrix(k)
    assert src.n == 3
    assert_allclose(src.block(np.array([1])).values, [[-3.0]])
    assert_allclose(src.cross_all(np.array([2, 0])), [[0.0, 2.0], [0.0, 0.0], [1.0, 0.0]])


def test_gram_source_precomputed_spec_rejected():
    with pytest.raises(UseLoadMatrixInstead):
        GramSource.from_data(precomputed(), np.zeros((3, 2)))
