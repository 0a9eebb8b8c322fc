"""Single-site basis algebra: commutation tensor, orthogonality, expansion."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gammaq import (SiteState, build_basis, expand, normalized_trace, pauli,
                    reconstruct, state_grid, traceless_project)

from conftest import random_hermitian


def test_rejects_small_kappa():
    for bad in (0, 1, -3):
        with pytest.raises(ValueError):
            build_basis(bad)


def test_pauli_basis_is_half_sigma(basis2, sigma):
    for j in (1, 2, 3):
        np.testing.assert_allclose(basis2.elements[j], sigma[j] / 2, atol=1e-15)


def test_structure_constants_kappa2_levi_civita(basis2):
    eps = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    np.testing.assert_allclose(basis2.structure_constants, eps, atol=1e-14)


@pytest.mark.parametrize("kappa", [2, 3, 4])
def test_commutation_relations(kappa):
    basis = build_basis(kappa)
    b = basis.elements[1:]
    c = basis.structure_constants
    for j in range(len(b)):
        for l in range(len(b)):
            lhs = b[j] @ b[l] - b[l] @ b[j]
            rhs = 1j * np.einsum("m,mab->ab", c[j, l], b)
            assert np.abs(lhs - rhs).max() < 1e-12


@pytest.mark.parametrize("kappa", [2, 3])
def test_basis_invariants(kappa):
    basis = build_basis(kappa)
    assert np.array_equal(basis.elements[0], np.eye(kappa))
    for j in range(1, kappa * kappa):
        e = basis.elements[j]
        assert abs(np.trace(e)) < 1e-14
        assert np.abs(e - e.conj().T).max() < 1e-14
        # trace(b_j b_l) = delta / 2
        for l in range(1, kappa * kappa):
            want = 0.5 if j == l else 0.0
            assert abs(np.trace(e @ basis.elements[l]) - want) < 1e-13
    # normalized trace picks out exactly the identity component
    for j in range(kappa * kappa):
        want = 1.0 if j == 0 else 0.0
        assert normalized_trace(basis.elements[j], basis) == pytest.approx(want, abs=1e-14)


def test_normalized_trace_values(basis2, sigma):
    assert normalized_trace(np.eye(2), basis2) == pytest.approx(1.0)
    assert normalized_trace(sigma[3], basis2) == pytest.approx(0.0)
    assert normalized_trace(np.diag([2.0, 0.0]), basis2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        normalized_trace(np.eye(3), basis2)


def test_expand_examples(basis2, sigma):
    np.testing.assert_allclose(expand(np.eye(2), basis2), [1, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(expand(sigma[3], basis2), [0, 0, 0, 2], atol=1e-15)


@pytest.mark.parametrize("kappa", [2, 3])
def test_expand_reconstruct_round_trip(kappa):
    basis = build_basis(kappa)
    rng = np.random.default_rng(7)
    for _ in range(100):
        a = rng.standard_normal((kappa, kappa)) + 1j * rng.standard_normal((kappa, kappa))
        back = reconstruct(expand(a, basis), basis)
        assert np.abs(back - a).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_hermitian_matrices_have_real_coefficients(seed):
    basis = build_basis(2)
    a = random_hermitian(np.random.default_rng(seed), 2)
    coeffs = expand(a, basis)
    assert np.abs(coeffs.imag).max() < 1e-12


def test_traceless_project(basis2, sigma):
    np.testing.assert_allclose(traceless_project(np.eye(2), basis2), np.zeros((2, 2)), atol=1e-15)
    np.testing.assert_allclose(traceless_project(sigma[1], basis2), sigma[1], atol=1e-15)
    np.testing.assert_allclose(traceless_project(np.eye(2) + sigma[3], basis2), sigma[3], atol=1e-15)
    out = traceless_project(np.diag([3.0, 1.0]), basis2)
    assert normalized_trace(out, basis2) == pytest.approx(0.0, abs=1e-14)


def test_site_state_validation():
    SiteState.trace_state(2).validate()
    SiteState.pure([1.0, 1.0]).validate()
    with pytest.raises(ValueError):
        SiteState(np.array([[0.5, 0.3], [0.2, 0.5]])).validate()  # not Hermitian
    with pytest.raises(ValueError):
        SiteState(np.eye(2)).validate()  # trace 2
    with pytest.raises(ValueError):
        SiteState(np.diag([1.5, -0.5])).validate()  # negative eigenvalue


def test_state_grid_kappa2(sigma):
    grid = state_grid(2)
    assert len(grid) == 6
    for st_ in grid:
        st_.validate()
    # every Pauli direction reaches expectation +-1 somewhere on the grid
    for p in (1, 2, 3):
        vals = sorted(round(np.real(s(sigma[p])), 10) for s in grid)
        assert vals[0] == -1.0 and vals[-1] == 1.0
