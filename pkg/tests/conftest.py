import numpy as np
import pytest

from gammaq import build_basis, pauli
from gammaq.symbolic import GammaPolynomial, LocalTensor


@pytest.fixture(scope="session")
def basis2():
    return build_basis(2)


@pytest.fixture(scope="session")
def sigma():
    return {p: pauli(p) for p in range(4)}


@pytest.fixture(scope="session")
def pauli_polys(sigma):
    """Generator polynomials for the three single-site spin directions."""
    return {p: GammaPolynomial.generator(LocalTensor.from_site_matrix(sigma[p]))
            for p in (1, 2, 3)}


def random_hermitian(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (m + m.conj().T) / 2


def random_tensor(rng, degree, kappa=2, hermitian=False):
    """Random local tensor with O(1) coefficients."""
    n = kappa * kappa
    coeffs = {}
    for idx in np.ndindex(*(n,) * degree):
        val = rng.standard_normal() + (0 if hermitian else 1j * rng.standard_normal())
        coeffs[tuple(int(k) for k in idx)] = val
    return LocalTensor.make(kappa, degree, coeffs)


def random_irreducible(rng, degree, kappa=2, hermitian=False, entries=3):
    """Random irreducible tensor supported on a few end-traceless indices."""
    n = kappa * kappa
    coeffs = {}
    for _ in range(entries):
        idx = tuple(int(rng.integers(1, n)) if i in (0, degree - 1)
                    else int(rng.integers(0, n)) for i in range(degree))
        val = rng.standard_normal() + (0 if hermitian else 1j * rng.standard_normal())
        coeffs[idx] = coeffs.get(idx, 0) + val
    from gammaq.symbolic import IrreducibleTensor
    return IrreducibleTensor.make(kappa, degree, coeffs)
