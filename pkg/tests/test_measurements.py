import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amplitude_pr import (
    MeasurementSet,
    chi_square_epsilon,
    empirical_moments,
    make_ensemble,
    make_noise,
    observe,
    operator_norm_estimate,
    sample_matrix,
)
from amplitude_pr.measurements import SensingMatrix

from conftest import crandn

SHIPPED = [("complex-gaussian", ()), ("ternary", (0.25,)), ("ternary", (0.1,)),
           ("complex-rademacher", ())]


def test_gaussian_moments():
    d = make_ensemble("complex-gaussian")
    assert (d.mean, d.pseudo_second, d.abs_second, d.gamma) == (0, 0, 1, 2)


@pytest.mark.parametrize("p", [0.1, 0.25, 0.4, 0.5])
def test_ternary_gamma_closed_form(p):
    assert make_ensemble("ternary", [p]).gamma == pytest.approx(1 / (4 * p) + 0.5)


def test_ternary_quarter_is_one_and_a_half():
    assert make_ensemble("ternary", [0.25]).gamma == 1.5


def test_rademacher_gamma_is_one():
    assert make_ensemble("complex-rademacher").gamma == 1.0


@pytest.mark.parametrize("kind,params", [("ternary", [0.0]), ("ternary", [0.6]),
                                         ("nope", []), ("ternary", [])])
def test_bad_ensembles(kind, params):
    with pytest.raises(ValueError):
        make_ensemble(kind, params)


def test_custom_discrete_needs_unit_power_and_hints():
    with pytest.raises(ValueError, match="divide the atoms by 2"):
        make_ensemble("custom-discrete", [[2, -2, 2j, -2j], [0.25] * 4])
    d = make_ensemble("custom-discrete", [[1, -1, 1j, -1j], [0.25] * 4])
    assert d.gamma == pytest.approx(1.0) and abs(d.mean) < 1e-15 and abs(d.pseudo_second) < 1e-15


def test_sample_matrix_is_deterministic(gaussian):
    A1 = sample_matrix(gaussian, 40, 7, 99)
    A2 = sample_matrix(gaussian, 40, 7, 99)
    assert np.array_equal(A1.entries, A2.entries)
    assert not np.array_equal(A1.entries, sample_matrix(gaussian, 40, 7, 100).entries)
    assert A1.entries.shape == (40, 7) and A1.seed == 99


def test_sample_matrix_entries_are_readonly(gaussian):
    A = sample_matrix(gaussian, 4, 3, 0)
    with pytest.raises(ValueError):
        A.entries[0, 0] = 1.0


def test_sample_matrix_rejects_bad_sizes(gaussian):
    with pytest.raises(ValueError):
        sample_matrix(gaussian, 0, 3, 0)
    with pytest.raises(ValueError, match="addressable"):
        sample_matrix(gaussian, 2**20, 2**12, 0)


@pytest.mark.parametrize("kind,params", SHIPPED)
def test_entry_mean_small(kind, params):
    A = sample_matrix(make_ensemble(kind, params), 1000, 1000, 5)
    assert abs(A.entries.mean()) <= 0.005


def test_rademacher_entries_unit_modulus():
    A = sample_matrix(make_ensemble("complex-rademacher"), 300, 20, 1)
    assert np.all(np.abs(A.entries) ** 2 == 1.0)


@pytest.mark.parametrize("kind,params", SHIPPED)
def test_empirical_moments_within_five_standard_errors(kind, params):
    dist = make_ensemble(kind, params)
    n = 10**6
    mean, pseudo, a2, a4 = empirical_moments(dist, n, seed=11)
    xi = dist.sample(np.random.default_rng(11), (n,))
    # standard errors from the same draws
    se_mean = np.sqrt(np.var(xi.real) + np.var(xi.imag) + 1e-300) / math.sqrt(n)
    se_pseudo = np.std(xi * xi) / math.sqrt(n) + 1e-300
    se_a2 = np.std(np.abs(xi) ** 2) / math.sqrt(n) + 1e-15
    se_a4 = np.std(np.abs(xi) ** 4) / math.sqrt(n) + 1e-15
    assert abs(mean - dist.mean) <= 5 * se_mean
    assert abs(pseudo - dist.pseudo_second) <= 5 * se_pseudo
    assert abs(a2 - dist.abs_second) <= 5 * se_a2
    assert abs(a4 - dist.abs_fourth) <= 5 * se_a4


@pytest.mark.slow
@pytest.mark.parametrize("kind,params,lo,hi", [("complex-gaussian", (), 1.99, 2.01),
                                               ("ternary", (0.25,), 1.49, 1.51)])
def test_empirical_fourth_moment_ten_million(kind, params, lo, hi):
    assert lo <= empirical_moments(make_ensemble(kind, params), 10**7, seed=3)[3] <= hi


def test_empirical_rademacher_fourth_is_exact():
    assert empirical_moments(make_ensemble("complex-rademacher"), 5000, seed=2)[3] == 1.0


def test_empirical_moments_needs_enough_draws(gaussian):
    with pytest.raises(ValueError):
        empirical_moments(gaussian, 999)


def test_constant_noise_identities():
    eta = make_noise("constant", [0.1], 100)
    assert eta.l2_norm == pytest.approx(1.0, rel=1e-12)
    assert eta.sum == pytest.approx(10.0, rel=1e-12)
    assert eta.bias_ratio == 1.0


def test_gaussian_noise_sum_is_small():
    eta = make_noise("zero-mean-gaussian", [1.0], 10**4, seed=8)
    assert abs(eta.sum) / 100 <= 4


def test_explicit_noise_cancelling():
    assert make_noise("explicit", [1, -1]).bias_ratio == 0.0


def test_noise_errors():
    with pytest.raises(ValueError):
        make_noise("zero-mean-gaussian", [-1.0], 10)
    with pytest.raises(ValueError):
        make_noise("constant", [1.0], 0)
    with pytest.raises(ValueError):
        make_noise("explicit", [1.0, 2.0], 3)


@settings(max_examples=60, deadline=None)
@given(vals=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40))
def test_noise_summary_recomputes(vals):
    eta = make_noise("explicit", vals)
    v = np.array(vals)
    norm = np.linalg.norm(v)
    assert 0.0 <= eta.bias_ratio <= 1.0
    assert eta.l2_norm == pytest.approx(norm, rel=1e-12, abs=1e-300)
    assert eta.sum == pytest.approx(v.sum(), rel=1e-12, abs=1e-9)
    if norm > 0 and not np.all(v == v[0]):
        assert eta.bias_ratio == pytest.approx(min(1.0, abs(v.sum()) / (math.sqrt(v.size) * norm)),
                                               rel=1e-12, abs=1e-15)


def test_observe_zero():
    A = sample_matrix(make_ensemble("complex-gaussian"), 10, 3, 0)
    ms = observe(A, np.zeros(3), make_noise("constant", [0.0], 10))
    assert isinstance(ms, MeasurementSet)
    assert np.all(ms.b == 0)


def test_observe_rademacher_witness():
    A = sample_matrix(make_ensemble("complex-rademacher"), 50, 4, 7)
    eta = make_noise("constant", [0.0], 50)
    e1, e2 = np.eye(4, dtype=complex)[:2]
    b1, b2 = observe(A, e1, eta).b, observe(A, e2, eta).b
    assert np.array_equal(b1, b2)
    np.testing.assert_allclose(b1, 1.0, rtol=0, atol=1e-15)


def test_observe_additive_and_no_clipping(rng, gaussian):
    A = sample_matrix(gaussian, 30, 5, 1)
    x0 = crandn(rng, 5)
    ms = observe(A, x0, make_noise("constant", [1.0], 30))
    np.testing.assert_allclose(ms.b, np.abs(A.entries.conj() @ x0) + 1, rtol=1e-12)
    neg = observe(A, x0, make_noise("constant", [-100.0], 30))
    assert np.all(neg.b < 0)


def test_observe_inner_product_convention():
    # <a, x> = sum conj(a_i) x_i
    A = SensingMatrix.from_array([[1j, 1.0]])
    x = np.array([1j, 1.0])
    assert A.forward(x)[0] == pytest.approx(2.0)


def test_observe_dimension_errors(gaussian):
    A = sample_matrix(gaussian, 5, 3, 0)
    with pytest.raises(ValueError):
        observe(A, np.zeros(4), make_noise("constant", [0.0], 5))
    with pytest.raises(ValueError):
        observe(A, np.zeros(3), make_noise("constant", [0.0], 6))


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 50), d=st.integers(1, 8), seed=st.integers(0, 2**32 - 1),
       scale=st.floats(0.0, 10.0))
def test_reconstruction_identity(m, d, seed, scale):
    r = np.random.default_rng(seed)
    A = sample_matrix(make_ensemble("complex-gaussian"), m, d, seed)
    x0 = crandn(r, d)
    eta = make_noise("zero-mean-gaussian", [scale], m, seed)
    ms = observe(A, x0, eta)
    err = np.max(np.abs(ms.b - np.abs(A.forward(x0)) - eta.values))
    assert err <= 1e-12 * (1 + np.max(np.abs(ms.b)))


@pytest.mark.parametrize("kind,params", SHIPPED[1:])
@settings(max_examples=15, deadline=None)
@given(m=st.integers(20, 60), d=st.integers(2, 8), seed=st.integers(0, 2**32 - 1))
def test_unit_modulus_witness_only_for_rademacher(kind, params, m, d, seed):
    A = sample_matrix(make_ensemble(kind, params), m, d, seed)
    eta = make_noise("constant", [0.0], m)
    e1, e2 = np.eye(d, dtype=complex)[:2]
    same = np.array_equal(observe(A, e1, eta).b, observe(A, e2, eta).b)
    assert same == (kind == "complex-rademacher")


def test_chi_square_epsilon_values():
    oracle = math.sqrt(100 + 2 * math.sqrt(100 * 4.605170185988092) + 2 * 4.605170185988092)
    assert chi_square_epsilon(100, 1.0) == pytest.approx(12.3341, abs=5e-5)
    assert chi_square_epsilon(100, 1.0) == pytest.approx(oracle, rel=1e-14)
    assert chi_square_epsilon(100, 0.0) == 0.0
    l8 = math.log(8)
    assert chi_square_epsilon(8, 1.0) == pytest.approx(math.sqrt(8 + 2 * math.sqrt(8 * l8) + 2 * l8))
    assert chi_square_epsilon(50, 3.0) == pytest.approx(3 * chi_square_epsilon(50, 1.0))


def test_chi_square_epsilon_errors():
    with pytest.raises(ValueError):
        chi_square_epsilon(1, 1.0)
    with pytest.raises(ValueError):
        chi_square_epsilon(10, -1.0)


def test_operator_norm_embedded_identity():
    M = np.zeros((10, 4), dtype=complex)
    M[:4] = np.eye(4)
    assert operator_norm_estimate(SensingMatrix.from_array(M)) == pytest.approx(1.0, rel=1e-6)


def test_operator_norm_rank_one(rng):
    u, v = crandn(rng, 12), crandn(rng, 5)
    M = np.outer(u / np.linalg.norm(u), (v / np.linalg.norm(v)).conj())
    assert operator_norm_estimate(M) == pytest.approx(1.0, rel=1e-6)


def test_operator_norm_zero_and_iters():
    assert operator_norm_estimate(np.zeros((3, 2))) == 0.0
    with pytest.raises(ValueError):
        operator_norm_estimate(np.eye(2), iters=5)


@pytest.mark.parametrize("seed", range(5))
def test_operator_norm_matches_svd(gaussian, seed):
    A = sample_matrix(gaussian, 200, 64, seed)
    s = np.linalg.svd(A.entries, compute_uv=False)[0]
    assert operator_norm_estimate(A, iters=2000) == pytest.approx(s, rel=1e-6)


def test_operator_norm_band(gaussian):
    for seed in range(50):
        m, d = 64 + 8 * seed, 8 + seed % 9
        A = sample_matrix(gaussian, m, d, seed)
        assert operator_norm_estimate(A) <= 2 * (math.sqrt(m) + math.sqrt(d))
    A = sample_matrix(gaussian, 2048, 64, 1)
    assert operator_norm_estimate(A) / (math.sqrt(2048) + 8) <= 2
