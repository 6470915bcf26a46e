import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from pqvrf import ring
from pqvrf.errors import DegenerateBasisError, InvalidInputError, ParameterError
from pqvrf.ring import RingParams

SMALL = RingParams(n=8, q=17, sigma=1.0, s=1.0)
MID = RingParams(n=64, q=7681, sigma=2.0, s=2.0)


def polys(params):
    return st.lists(st.integers(0, params.q - 1), min_size=params.n, max_size=params.n).map(
        lambda xs: np.array(xs, dtype=np.int64))


@pytest.mark.parametrize("n,q", [(3, 17), (8, 15), (8, 19), (8, 1 << 31 + 0)])
def test_bad_params_rejected(n, q):
    with pytest.raises(ParameterError):
        RingParams(n=n, q=q, sigma=1.0, s=1.0)


def test_nonpositive_sigma_rejected():
    with pytest.raises(ParameterError):
        RingParams(n=8, q=17, sigma=0.0, s=1.0)


@settings(max_examples=100, deadline=None)
@given(polys(SMALL), polys(SMALL))
def test_mul_matches_schoolbook_small(a, b):
    assert np.array_equal(ring.ring_mul(a, b, SMALL), oracles.schoolbook_negacyclic(a, b, SMALL.q))


@pytest.mark.parametrize("params", [SMALL, ring.signature_params(512)], ids=["n8", "n512"])
def test_ring_axioms(params):
    rng = np.random.default_rng(params.n)
    mul = lambda x, y: ring.ring_mul(x, y, params)
    for _ in range(20):
        a, b, c = (rng.integers(0, params.q, params.n) for _ in range(3))
        assert np.array_equal(mul(a, b), mul(b, a))
        assert np.array_equal(mul(mul(a, b), c), mul(a, mul(b, c)))
        lhs = mul(a, ring.ring_add(b, c, params))
        assert np.array_equal(lhs, ring.ring_add(mul(a, b), mul(a, c), params))
        assert np.array_equal(mul(a, ring.one(params)), a % params.q)


@settings(max_examples=50, deadline=None)
@given(polys(MID))
def test_ntt_round_trip(a):
    assert np.array_equal(ring.ntt_inverse(ring.ntt_forward(a, MID), MID), a)


def test_monomial_wraps_negacyclically():
    x = ring.monomial(1, SMALL)
    xn = ring.one(SMALL)
    for _ in range(SMALL.n):
        xn = ring.ring_mul(xn, x, SMALL)
    assert np.array_equal(xn, (-ring.one(SMALL)) % SMALL.q)


def test_large_modulus_products_exact():
    params = ring.signature_params(64)
    rng = np.random.default_rng(3)
    a = rng.integers(0, params.q, 64)
    b = rng.integers(0, params.q, 64)
    assert np.array_equal(ring.ring_mul(a, b, params), [v % params.q for v in oracles.int_negacyclic(a, b)])


def test_inverse():
    rng = np.random.default_rng(4)
    a = rng.integers(0, MID.q, MID.n)
    inv = ring.ring_inverse(a, MID)
    assert np.array_equal(ring.ring_mul(a, inv, MID), ring.one(MID))
    with pytest.raises(InvalidInputError):
        ring.ring_inverse(ring.zero(MID), MID)


def test_gram_schmidt_worked_example():
    gso = ring.gram_schmidt([[3, 1], [2, 2]])
    assert np.allclose(gso.rows, [[3, 1], [-0.4, 1.2]], atol=1e-12)
    assert np.allclose(gso.norms, [10.0, 1.6])


def test_gram_schmidt_orthogonal_on_random_basis():
    b = np.random.default_rng(8).normal(size=(40, 40)) * 100
    gso = ring.gram_schmidt(b)
    gram = gso.rows @ gso.rows.T
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) / np.max(np.diag(gram)) < 1e-10


def test_gram_schmidt_detects_dependence():
    with pytest.raises(DegenerateBasisError):
        ring.gram_schmidt([[1, 2, 3], [2, 4, 6], [0, 0, 1]])


@pytest.mark.parametrize("sigma", [1.5, 3.0, 40.0])
def test_gaussian_moments(sigma):
    x = ring.sample_gaussian_vector(200_000, sigma, ring.make_rng(int(sigma * 10)))
    assert abs(x.mean()) < 5 * sigma / math.sqrt(x.size)
    assert abs(x.std() / sigma - 1) < 0.02
    assert np.max(np.abs(x)) <= ring.TAIL_CUT * sigma


@pytest.mark.parametrize("sigma,center", [(2.0, 0.0), (5.5, 0.25)])
def test_gaussian_variance_matches_pmf(sigma, center):
    xs, pmf = ring.gaussian_pmf(sigma, center)
    mean = float(np.sum(xs * pmf))
    var = float(np.sum((xs - mean) ** 2 * pmf))
    x = ring.sample_gaussian_vector(50_000, sigma, ring.make_rng(91), center=center)
    assert abs(x.var() / var - 1) < 0.1


def test_gaussian_chi_square_against_pmf():
    from scipy import stats
    sigma, center = 2.0, 0.3
    x = ring.sample_gaussian_vector(100_000, sigma, ring.make_rng(77), center=center)
    xs, pmf = ring.gaussian_pmf(sigma, center)
    keep = pmf * x.size >= 5
    obs = np.array([np.sum(x == v) for v in xs[keep]])
    exp = pmf[keep] * x.size
    exp *= obs.sum() / exp.sum()
    assert stats.chisquare(obs, exp).pvalue > 1e-4


def test_wide_gaussian_uses_rejection_and_is_centered():
    sigma = 6000.0
    x = ring.sample_gaussian_vector(50_000, sigma, ring.make_rng(5), center=100.5)
    assert abs(x.mean() - 100.5) < 5 * sigma / math.sqrt(x.size)
    assert abs(x.std() / sigma - 1) < 0.03


def test_hash_to_ring_deterministic_and_in_range():
    for params in (MID, ring.signature_params(64)):
        a = ring.hash_to_ring(b"abc", params)
        assert np.array_equal(a, ring.hash_to_ring(b"abc", params))
        assert a.min() >= 0 and a.max() < params.q
        assert not np.array_equal(a, ring.hash_to_ring(b"abd", params))


def test_hash_to_ring_uniform_chi_square():
    from scipy import stats
    params = RingParams(n=8, q=17, sigma=1.0, s=1.0)
    vals = np.concatenate([ring.hash_to_ring(i.to_bytes(4, "big"), params) for i in range(10_000)])
    assert stats.chisquare(np.bincount(vals, minlength=17)).pvalue > 0.01
    wide = ring.signature_params(64)
    vals = np.concatenate([ring.hash_to_ring(i.to_bytes(4, "big"), wide) for i in range(2_000)])
    assert stats.chisquare(np.bincount(vals * 16 // wide.q, minlength=16)).pvalue > 0.01


def test_hash_to_bits_balanced():
    bits = np.concatenate([ring.hash_to_bits(i.to_bytes(4, "big"), 64) for i in range(10_000)])
    assert 0.48 <= bits.mean() <= 0.52


def test_poly_encoding_round_trip():
    for params in (MID, ring.signature_params(64)):
        a = ring.sample_uniform_poly(params, ring.make_rng(1))
        buf = ring.poly_to_bytes(a, params)
        assert len(buf) == params.n * params.coeff_bytes
        assert np.array_equal(ring.poly_from_bytes(buf, params), a)
    with pytest.raises(InvalidInputError):
        ring.poly_from_bytes(b"\xff" * (2 * MID.n), MID)
    with pytest.raises(InvalidInputError):
        ring.poly_from_bytes(b"\x00" * 3, MID)


def test_signed_encoding():
    a = np.array([-5, 0, 7, -(1 << 30)])
    assert np.array_equal(ring.signed_from_bytes(ring.signed_to_bytes(a), 4), a)
    with pytest.raises(InvalidInputError):
        ring.signed_to_bytes([1 << 31])


def test_presets():
    for sec, n in ring.SECURITY_PRESETS.items():
        p = ring.preset_for_security(sec)
        assert p.n == n and p.q == ring.SIG_MODULUS
    with pytest.raises(ParameterError):
        ring.preset_for_security(100)
