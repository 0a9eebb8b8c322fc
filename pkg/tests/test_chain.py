"""Chain operators: placement, shift, averaging, embedding, norms, matvec,
and product-state evaluation."""

from math import comb

import numpy as np
import pytest

from gammaq import (DenseOperator, ImplicitOperator, PlacedTerm,
                    ProductStateSpec, SiteState, embed_average, evaluate_state,
                    gamma_average, gamma_embed, gamma_shift, kron_place, matvec,
                    spectral_norm)

from conftest import random_hermitian


def dense_random(rng, sites, kappa=2):
    dim = kappa ** sites
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return DenseOperator(kappa, sites, m)


# -- kron_place -------------------------------------------------------------

def test_kron_place_examples(sigma):
    np.testing.assert_allclose(kron_place([(1, sigma[3])], 2, 2).matrix,
                               np.kron(sigma[3], np.eye(2)), atol=1e-15)
    np.testing.assert_allclose(kron_place([(2, sigma[3])], 2, 2).matrix,
                               np.kron(np.eye(2), sigma[3]), atol=1e-15)
    # frozen oracle: sigma_1 (x) sigma_1 is the anti-diagonal 4x4 matrix
    want = np.zeros((4, 4))
    want[0, 3] = want[1, 2] = want[2, 1] = want[3, 0] = 1.0
    np.testing.assert_allclose(kron_place([(1, sigma[1]), (2, sigma[1])], 2, 2).matrix,
                               want, atol=1e-15)


def test_kron_place_errors(sigma):
    with pytest.raises(ValueError):
        kron_place([(1, sigma[1]), (1, sigma[2])], 3, 2)
    with pytest.raises(ValueError):
        kron_place([(4, sigma[1])], 3, 2)


# -- gamma shift and average -------------------------------------------------

def test_gamma_shift_moves_left(sigma):
    a = kron_place([(1, sigma[3])], 2, 2)
    np.testing.assert_allclose(gamma_shift(a).matrix, np.kron(np.eye(2), sigma[3]), atol=1e-15)


def test_gamma_shift_period_is_exact(sigma):
    rng = np.random.default_rng(3)
    for sites in (2, 3, 4):
        a = dense_random(rng, sites)
        b = gamma_shift(a, steps=sites)
        assert np.abs(b.matrix - a.matrix).max() == 0.0  # index permutation, bit exact


def test_gamma_shift_is_automorphism():
    rng = np.random.default_rng(4)
    a, b = dense_random(rng, 3), dense_random(rng, 3)
    lhs = gamma_shift(DenseOperator(2, 3, a.matrix @ b.matrix))
    rhs = gamma_shift(a).matrix @ gamma_shift(b).matrix
    assert np.abs(lhs.matrix - rhs).max() < 1e-12


def test_gamma_average_projector(sigma):
    ident = DenseOperator.identity(2, 3)
    np.testing.assert_allclose(gamma_average(ident).matrix, ident.matrix, atol=1e-15)
    a = kron_place([(1, sigma[3])], 2, 2)
    want = (np.kron(sigma[3], np.eye(2)) + np.kron(np.eye(2), sigma[3])) / 2
    np.testing.assert_allclose(gamma_average(a).matrix, want, atol=1e-15)
    rng = np.random.default_rng(5)
    r = dense_random(rng, 3)
    once = gamma_average(r)
    assert np.abs(gamma_average(once).matrix - once.matrix).max() < 1e-12
    assert np.abs(gamma_average(gamma_shift(r)).matrix - once.matrix).max() < 1e-12


# -- gamma_embed and embed_average -------------------------------------------

def test_gamma_embed_unfolds_average(sigma):
    got = gamma_embed(sigma[3], 3, 2).matrix
    want = sum(kron_place([(i, sigma[3])], 3, 2).matrix for i in (1, 2, 3)) / 3
    np.testing.assert_allclose(got, want, atol=1e-15)


def test_gamma_embed_zero_below_block_size(sigma):
    a2 = np.kron(sigma[3], sigma[3])
    out = gamma_embed(a2, 1, 2)
    assert np.abs(out.matrix).max() == 0.0


def test_gamma_embed_contraction():
    rng = np.random.default_rng(6)
    for deg in (1, 2, 3):
        block = random_hermitian(rng, 2 ** deg)
        bn = np.linalg.norm(block, 2)
        for sites in range(deg, 8):
            em = gamma_embed(block, sites, 2)
            assert spectral_norm(em) <= bn + 1e-12


def test_gamma_embed_field_spectrum(sigma):
    # eigenvalues of the averaged single-site field are (N - 2k)/N
    for sites in range(2, 7):
        em = gamma_embed(sigma[3], sites, 2)
        got = np.sort(np.linalg.eigvalsh(em.matrix))
        want = np.sort([(sites - 2 * k) / sites for k in range(sites + 1)
                        for _ in range(comb(sites, k))])
        np.testing.assert_allclose(got, want, atol=1e-12)
        assert spectral_norm(em) == pytest.approx(1.0, abs=1e-12)


def test_embed_average_identity_cases(sigma):
    a = gamma_average(kron_place([(1, sigma[3])], 2, 2))
    same = embed_average(a, 2)
    assert np.abs(same.matrix - a.matrix).max() < 1e-15
    # single-site blocks re-embed exactly
    em4 = gamma_embed(sigma[2], 4, 2)
    lhs = embed_average(em4, 7)
    rhs = gamma_embed(sigma[2], 7, 2)
    assert np.abs(lhs.matrix - rhs.matrix).max() < 1e-13
    with pytest.raises(ValueError):
        embed_average(em4, 3)


def test_embed_average_two_site_bound(sigma):
    # re-embedding an averaged two-site block differs by at most 2(M-1)/N
    a2 = np.kron(sigma[3], sigma[3])
    base = gamma_embed(a2, 4, 2)
    for nprime in (5, 6, 8):
        resid = embed_average(base, nprime) - gamma_embed(a2, nprime, 2)
        assert spectral_norm(resid) <= 2 * (2 - 1) / 4 + 1e-12


# -- matvec and implicit operators -------------------------------------------

def _implicit_field(sites, mat, kappa=2):
    terms = tuple(PlacedTerm(1.0 / sites, ((i, mat),)) for i in range(1, sites + 1))
    return ImplicitOperator(kappa, sites, terms, hermitian=True)


def test_matvec_identity_and_linearity(sigma):
    op = ImplicitOperator.identity(2, 3)
    rng = np.random.default_rng(8)
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    np.testing.assert_allclose(matvec(op, v), v, atol=1e-15)
    field = _implicit_field(3, sigma[3])
    u = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    np.testing.assert_allclose(matvec(field, u + v),
                               matvec(field, u) + matvec(field, v), atol=1e-12)


def test_matvec_matches_dense(sigma):
    sites = 6
    field = _implicit_field(sites, sigma[3])
    dense = gamma_embed(sigma[3], sites, 2)
    rng = np.random.default_rng(9)
    v = rng.standard_normal(2 ** sites) + 1j * rng.standard_normal(2 ** sites)
    np.testing.assert_allclose(matvec(field, v), dense.matrix @ v, atol=1e-12)
    np.testing.assert_allclose(field.to_dense().matrix, dense.matrix, atol=1e-13)


def test_implicit_composition(sigma):
    a = _implicit_field(4, sigma[1])
    b = _implicit_field(4, sigma[2])
    lhs = (a @ b).to_dense().matrix
    rhs = a.to_dense().matrix @ b.to_dense().matrix
    assert np.abs(lhs - rhs).max() < 1e-13


# -- spectral norms -----------------------------------------------------------

def test_spectral_norm_examples(sigma):
    assert spectral_norm(DenseOperator.identity(2, 3)) == pytest.approx(1.0)
    s11 = kron_place([(1, sigma[1]), (2, sigma[1])], 2, 2)
    assert spectral_norm(s11) == pytest.approx(1.0, abs=1e-12)


def test_iterative_matches_dense_hermitian(sigma):
    for sites in (4, 6):
        op = gamma_embed(np.kron(sigma[3], sigma[3]), sites, 2)
        d = spectral_norm(op, method="dense")
        it = spectral_norm(op, method="iterative")
        assert it == pytest.approx(d, rel=1e-8)


def test_iterative_matches_dense_nonhermitian():
    rng = np.random.default_rng(11)
    for sites in (3, 5):
        m = rng.standard_normal((2 ** sites,) * 2) + 1j * rng.standard_normal((2 ** sites,) * 2)
        op = DenseOperator(2, sites, m)
        assert spectral_norm(op, method="iterative") == pytest.approx(
            spectral_norm(op, method="dense"), rel=1e-8)


def test_iterative_implicit_path(sigma):
    sites = 8
    field = _implicit_field(sites, sigma[3])
    assert spectral_norm(field, method="iterative") == pytest.approx(1.0, rel=1e-8)
    shifted = field + (-0.25) * ImplicitOperator.identity(2, sites)
    assert spectral_norm(shifted, method="iterative") == pytest.approx(1.25, rel=1e-8)


# -- product states -----------------------------------------------------------

def test_evaluate_state_trace_state_kills_traceless(sigma):
    tau = SiteState.trace_state(2)
    spec = ProductStateSpec((), (tau,))
    field = _implicit_field(5, sigma[3])
    assert abs(evaluate_state(spec, field)) < 1e-15


def test_evaluate_state_aligned_state(sigma):
    up = SiteState.pure([1.0, 0.0])
    spec = ProductStateSpec((), (up,))
    for sites in (3, 4, 6):
        field = _implicit_field(sites, sigma[3])
        assert evaluate_state(spec, field) == pytest.approx(1.0, abs=1e-12)


def test_evaluate_state_matches_dense():
    rng = np.random.default_rng(12)
    sites = 4
    states = []
    for _ in range(sites):
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        states.append(SiteState.pure(v))
    spec = ProductStateSpec(tuple(states), ())
    terms = []
    for _ in range(5):
        pos = sorted(rng.choice(range(1, sites + 1), size=2, replace=False))
        terms.append(PlacedTerm(complex(rng.standard_normal()),
                                tuple((int(p), random_hermitian(rng, 2)) for p in pos)))
    op = ImplicitOperator(2, sites, tuple(terms))
    rho = states[0].density
    for s in states[1:]:
        rho = np.kron(rho, s.density)
    want = np.trace(rho @ op.to_dense().matrix)
    assert evaluate_state(spec, op) == pytest.approx(want, abs=1e-10)


def test_evaluate_state_bounded_by_norm(sigma):
    rng = np.random.default_rng(13)
    sites = 5
    field = _implicit_field(sites, sigma[1])
    for _ in range(5):
        pat = tuple(SiteState.pure(rng.standard_normal(2) + 1j * rng.standard_normal(2))
                    for _ in range(sites))
        spec = ProductStateSpec(pat, ())
        assert abs(evaluate_state(spec, field)) <= spectral_norm(field) + 1e-10


def test_product_state_spec_length_validation():
    tau = SiteState.trace_state(2)
    up = SiteState.pure([1.0, 0.0])
    spec = ProductStateSpec((tau,), (tau, up))
    assert len(spec.expand(5)) == 5
    with pytest.raises(ValueError):
        spec.expand(4)
    with pytest.raises(ValueError):
        ProductStateSpec((tau, up), (tau,)).expand(4)  # prefix not shorter than period
