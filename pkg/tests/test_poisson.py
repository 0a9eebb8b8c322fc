"""Poisson bracket: closed form against the scaled-commutator oracle,
antisymmetry, Leibniz, Jacobi, adjoint compatibility."""

import numpy as np
import pytest

from gammaq import gamma_embed, spectral_norm
from gammaq.poisson import bracket, bracket_generators
from gammaq.symbolic import (GammaPolynomial, LocalTensor, decompose,
                             poly_adjoint, poly_is_zero, quantize)

from conftest import random_irreducible


def generator_factor(poly):
    (w, _), = poly.terms.items()
    return w.factors[0]


def test_su2_bracket_value(sigma, pauli_polys):
    f1 = generator_factor(pauli_polys[1])
    f2 = generator_factor(pauli_polys[2])
    got = bracket_generators(f1, f2)
    want = (-2.0) * pauli_polys[3]
    assert poly_is_zero(got - want)
    # oracle: direct scaled commutator of the embeddings
    for sites in (4, 6, 8):
        a = gamma_embed(sigma[1], sites, 2).matrix
        b = gamma_embed(sigma[2], sites, 2).matrix
        lhs = 1j * sites * (a @ b - b @ a)
        rhs = quantize(got, sites).matrix
        assert np.abs(lhs - rhs).max() < 1e-10


def test_bracket_commuting_and_diagonal(sigma, pauli_polys):
    f3 = generator_factor(pauli_polys[3])
    assert poly_is_zero(bracket_generators(f3, f3))
    t33 = LocalTensor.make(2, 2, {(3, 3): 4.0})
    f33 = generator_factor(GammaPolynomial.generator(t33))
    assert poly_is_zero(bracket_generators(f33, f33))
    assert poly_is_zero(bracket_generators(f3, f33))  # commuting at every placement


def test_bracket_rejects_bad_inputs(pauli_polys):
    f = generator_factor(pauli_polys[1])
    from gammaq.symbolic import IrreducibleTensor
    with pytest.raises(ValueError):
        bracket_generators(f, IrreducibleTensor.make(2, 0, {(): 1.0}))


@pytest.mark.parametrize("degrees", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_closed_form_matches_commutator(degrees):
    m, mp = degrees
    rng = np.random.default_rng(100 + 10 * m + mp)
    for trial in range(3):
        a = random_irreducible(rng, m, hermitian=True)
        b = random_irreducible(rng, mp, hermitian=True)
        core = bracket_generators(
            __import__("gammaq").symbolic.IrreducibleTensor.make(2, m, a.coeffs),
            __import__("gammaq").symbolic.IrreducibleTensor.make(2, mp, b.coeffs))
        scale = max(a.opnorm() * b.opnorm(), 1e-12)
        for sites in range(2 * (m + mp), 2 * (m + mp) + 3):
            am = gamma_embed(a.to_matrix(), sites, 2).matrix
            bm = gamma_embed(b.to_matrix(), sites, 2).matrix
            lhs = 1j * sites * (am @ bm - bm @ am)
            rhs = quantize(core, sites).matrix
            assert np.abs(lhs - rhs).max() < 1e-10 * scale


def test_bracket_antisymmetry_structural():
    rng = np.random.default_rng(55)
    for _ in range(5):
        a = random_irreducible(rng, int(rng.integers(1, 3)))
        b = random_irreducible(rng, int(rng.integers(1, 3)))
        pa = GammaPolynomial.generator(a)
        pb = GammaPolynomial.generator(b)
        assert poly_is_zero(bracket(pa, pb) + bracket(pb, pa))


def test_bracket_star_compatibility():
    rng = np.random.default_rng(56)
    pa = GammaPolynomial.generator(random_irreducible(rng, 2))
    pb = GammaPolynomial.generator(random_irreducible(rng, 1))
    p = pa * pb
    q = GammaPolynomial.generator(random_irreducible(rng, 2))
    lhs = poly_adjoint(bracket(p, q))
    rhs = bracket(poly_adjoint(p), poly_adjoint(q))
    assert poly_is_zero(lhs - rhs)


def test_bracket_kills_unit(pauli_polys):
    unit = GammaPolynomial.unit(2)
    p = pauli_polys[1] * pauli_polys[3] + 2.0 * pauli_polys[2]
    assert poly_is_zero(bracket(p, unit))
    assert poly_is_zero(bracket(unit, p))


def test_leibniz_example(pauli_polys):
    # {p^2, q} = 2 p {p, q} for the square of a field generator
    got = bracket(pauli_polys[1] * pauli_polys[1], pauli_polys[2])
    want = (-4.0) * (pauli_polys[1] * pauli_polys[3])
    assert poly_is_zero(got - want)


def test_leibniz_structural():
    rng = np.random.default_rng(57)
    p = GammaPolynomial.generator(random_irreducible(rng, 2, hermitian=True))
    q = GammaPolynomial.generator(random_irreducible(rng, 1, hermitian=True))
    r = GammaPolynomial.generator(random_irreducible(rng, 2, hermitian=True))
    lhs = bracket(p, q * r)
    rhs = bracket(p, q) * r + q * bracket(p, r)
    assert poly_is_zero(lhs - rhs)


def test_jacobi_structural_generators(pauli_polys):
    p, q, r = (pauli_polys[i] for i in (1, 2, 3))
    combo = bracket(p, bracket(q, r)) - bracket(bracket(p, q), r) - bracket(q, bracket(p, r))
    assert poly_is_zero(combo)


def test_jacobi_structural_composites(pauli_polys):
    t33 = LocalTensor.make(2, 2, {(3, 3): 4.0})
    p = pauli_polys[1] * pauli_polys[1]
    q = GammaPolynomial.generator(t33)
    r = pauli_polys[2]
    combo = bracket(p, bracket(q, r)) - bracket(bracket(p, q), r) - bracket(q, bracket(p, r))
    assert poly_is_zero(combo)


def test_leibniz_matrix_residual_with_canonical_product(pauli_polys):
    # replacing the matrix product Q_N(q) Q_N(r) by Q_N(q r) leaves an O(1/N)
    # residual: the product remainder commutes into a higher-order term
    p, q, r = pauli_polys[1], pauli_polys[2], pauli_polys[3]
    qr = q * r
    vals = []
    for sites in (6, 8, 10):
        qp = quantize(p, sites).matrix
        w = quantize(qr, sites).matrix
        qq = quantize(q, sites).matrix
        qrm = quantize(r, sites).matrix
        lhs = 1j * sites * (qp @ w - w @ qp)
        comm_pq = 1j * sites * (qp @ qq - qq @ qp)
        comm_pr = 1j * sites * (qp @ qrm - qrm @ qp)
        resid = lhs - comm_pq @ qrm - qq @ comm_pr
        vals.append(sites * np.linalg.norm(resid, 2))
    assert max(vals) < 10.0  # bounded N * residual


def test_bracket_scaled_commutator_oracle_on_composite(pauli_polys):
    # semiclassical check for a composite pair: residual decays like 1/N
    t33 = LocalTensor.make(2, 2, {(3, 3): 4.0})
    t12 = LocalTensor.make(2, 2, {(1, 2): 4.0})
    p = GammaPolynomial.generator(t33) * GammaPolynomial.generator(t12)
    q = pauli_polys[1]
    b = bracket(p, q)
    vals = []
    for sites in (6, 8, 10):
        qp = quantize(p, sites).matrix
        qq = quantize(q, sites).matrix
        resid = quantize(b, sites).matrix - 1j * sites * (qp @ qq - qq @ qp)
        vals.append((sites, np.linalg.norm(resid, 2)))
    for (n1, v1), (n2, v2) in zip(vals, vals[1:]):
        assert v2 <= v1 + 1e-12
