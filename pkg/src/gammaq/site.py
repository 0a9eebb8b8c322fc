"""Single-site matrix algebra M_kappa(C).

Provides the Hermitian traceless basis (scaled generalized Gell-Mann
matrices) together with its su(kappa) structure constants, the normalized
trace, Hilbert-Schmidt expansion, and single-site density matrices.

Basis convention: ``elements[0]`` is the identity and ``elements[1:]`` are
Hermitian, traceless, and pairwise orthogonal with
``trace(b_j @ b_l) = delta_jl / 2``.  For kappa = 2 this gives exactly
``b_j = sigma_j / 2`` and the structure constants reduce to the
Levi-Civita symbol.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .tolerances import EXACT_TOL

__all__ = [
    "SiteBasis",
    "SiteState",
    "build_basis",
    "normalized_trace",
    "expand",
    "reconstruct",
    "traceless_project",
    "pauli",
    "state_grid",
]


@dataclass(frozen=True)
class SiteBasis:
    """Basis of M_kappa(C): identity first, then kappa^2 - 1 traceless elements."""

    kappa: int
    elements: np.ndarray            # shape (kappa^2, kappa, kappa)
    structure_constants: np.ndarray  # shape (kappa^2-1,)*3, real
    eta: np.ndarray                 # Hilbert-Schmidt norms: trace(e_j e_j)

    def __post_init__(self):
        self.elements.setflags(write=False)
        self.structure_constants.setflags(write=False)
        self.eta.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.kappa * self.kappa

    def element(self, k: int) -> np.ndarray:
        return self.elements[k]

    @property
    def dual(self) -> np.ndarray:
        """dual[k, i, j] such that expand(a)[k] = sum_ij dual[k,i,j] a[i,j]."""
        return _dual_tensor(self.kappa)


def _gell_mann_elements(kappa: int) -> list[np.ndarray]:
    """Traceless part of the basis in the standard generator ordering.

    For each k = 2..kappa: the symmetric and antisymmetric off-diagonal
    pairs (j, k) for j < k, followed by the diagonal generator of rank
    k - 1.  For kappa = 2 the ordering is (sigma_1, sigma_2, sigma_3)/2.
    """
    out = []
    for k in range(2, kappa + 1):
        for j in range(1, k):
            sym = np.zeros((kappa, kappa), dtype=complex)
            sym[j - 1, k - 1] = 1.0
            sym[k - 1, j - 1] = 1.0
            out.append(sym / 2.0)
            asym = np.zeros((kappa, kappa), dtype=complex)
            asym[j - 1, k - 1] = -1.0j
            asym[k - 1, j - 1] = 1.0j
            out.append(asym / 2.0)
        diag = np.zeros(kappa, dtype=complex)
        l = k - 1
        diag[:l] = 1.0
        diag[l] = -l
        out.append(np.diag(diag) * np.sqrt(2.0 / (l * (l + 1))) / 2.0)
    return out


@lru_cache(maxsize=None)
def _build_basis_cached(kappa: int) -> SiteBasis:
    elements = np.stack([np.eye(kappa, dtype=complex)] + _gell_mann_elements(kappa))
    n = kappa * kappa
    eta = np.einsum("kij,kji->k", elements, elements).real
    # [b_j, b_l] = i c_{jl}^m b_m  =>  c_{jl}^m = -2i tr([b_j, b_l] b_m)
    b = elements[1:]
    comm = np.einsum("jab,lbc->jlac", b, b) - np.einsum("lab,jbc->jlac", b, b)
    c = -2.0j * np.einsum("jlab,mba->jlm", comm, b)
    if np.abs(c.imag).max() > EXACT_TOL:
        raise AssertionError("structure constants are not real")
    basis = SiteBasis(kappa=kappa, elements=elements,
                      structure_constants=np.ascontiguousarray(c.real), eta=eta)
    _check_basis(basis)
    return basis


def _check_basis(basis: SiteBasis) -> None:
    k = basis.kappa
    e = basis.elements
    if not np.array_equal(e[0], np.eye(k)):
        raise AssertionError("element 0 must be the identity")
    gram = np.einsum("aij,bji->ab", e, e)
    expected = np.diag(basis.eta)
    if np.abs(gram - expected).max() > EXACT_TOL:
        raise AssertionError("basis is not Hilbert-Schmidt orthogonal")
    if np.abs(basis.eta[0] - k) > EXACT_TOL or np.abs(basis.eta[1:] - 0.5).max() > EXACT_TOL:
        raise AssertionError("basis normalization is off")
    for j in range(1, k * k):
        if abs(np.trace(e[j])) > EXACT_TOL or np.abs(e[j] - e[j].conj().T).max() > EXACT_TOL:
            raise AssertionError("traceless elements must be Hermitian and traceless")


def build_basis(kappa: int) -> SiteBasis:
    """Basis of M_kappa(C) with verified commutation and orthogonality."""
    if not isinstance(kappa, (int, np.integer)) or kappa < 2:
        raise ValueError(f"kappa must be an integer >= 2, got {kappa!r}")
    return _build_basis_cached(int(kappa))


@lru_cache(maxsize=None)
def _dual_tensor(kappa: int) -> np.ndarray:
    basis = _build_basis_cached(kappa)
    # expand(a)[k] = trace(e_k a)/eta_k = sum_ij e_k[j, i] a[i, j] / eta_k
    d = np.transpose(basis.elements, (0, 2, 1)) / basis.eta[:, None, None]
    d = np.ascontiguousarray(d)
    d.setflags(write=False)
    return d


def normalized_trace(a: np.ndarray, basis: SiteBasis) -> complex:
    """trace(a) / kappa."""
    a = np.asarray(a)
    if a.shape != (basis.kappa, basis.kappa):
        raise ValueError(f"expected a {basis.kappa}x{basis.kappa} matrix, got shape {a.shape}")
    return complex(np.trace(a)) / basis.kappa


def expand(a: np.ndarray, basis: SiteBasis) -> np.ndarray:
    """Coefficients c with a = sum_k c[k] * elements[k] (Hilbert-Schmidt projection)."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (basis.kappa, basis.kappa):
        raise ValueError(f"expected a {basis.kappa}x{basis.kappa} matrix, got shape {a.shape}")
    return np.einsum("kij,ij->k", basis.dual, a)


def reconstruct(coeffs: np.ndarray, basis: SiteBasis) -> np.ndarray:
    """Inverse of :func:`expand`."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (basis.dim,):
        raise ValueError(f"expected {basis.dim} coefficients, got shape {coeffs.shape}")
    return np.einsum("k,kij->ij", coeffs, basis.elements)


def traceless_project(a: np.ndarray, basis: SiteBasis) -> np.ndarray:
    """a minus its normalized trace times the identity."""
    a = np.asarray(a, dtype=complex)
    return a - normalized_trace(a, basis) * np.eye(basis.kappa)


def pauli(p: int) -> np.ndarray:
    """Pauli matrix sigma_p, p in 0..3 (0 = identity)."""
    basis = build_basis(2)
    if p == 0:
        return np.eye(2, dtype=complex)
    return 2.0 * basis.elements[p]


@dataclass(frozen=True)
class SiteState:
    """Single-site density matrix."""

    density: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "density", np.asarray(self.density, dtype=complex))
        self.density.setflags(write=False)

    @property
    def kappa(self) -> int:
        return self.density.shape[0]

    def validate(self, tol: float = EXACT_TOL) -> None:
        rho = self.density
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density must be a square matrix")
        if np.abs(rho - rho.conj().T).max() > tol:
            raise ValueError("density is not Hermitian")
        if abs(np.trace(rho) - 1.0) > tol:
            raise ValueError("density does not have unit trace")
        if np.linalg.eigvalsh(rho).min() < -tol:
            raise ValueError("density is not positive semidefinite")

    def __call__(self, a: np.ndarray) -> complex:
        """Expectation value trace(rho a)."""
        return complex(np.einsum("ij,ji->", self.density, a))

    @staticmethod
    def trace_state(kappa: int) -> "SiteState":
        """Maximally mixed state I/kappa."""
        return SiteState(np.eye(kappa, dtype=complex) / kappa)

    @staticmethod
    def pure(vector: np.ndarray) -> "SiteState":
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return SiteState(np.outer(v, v.conj()))


@lru_cache(maxsize=None)
def _state_grid_cached(kappa: int) -> tuple[SiteState, ...]:
    basis = _build_basis_cached(kappa)
    states = []
    for j in range(1, basis.dim):
        _, vecs = np.linalg.eigh(basis.elements[j])
        for col in range(kappa):
            states.append(SiteState.pure(vecs[:, col]))
    return tuple(states)


def state_grid(kappa: int) -> tuple[SiteState, ...]:
    """Fixed grid of pure states: the eigenstates of each traceless basis
    element.  For kappa = 2 these are the 6 Pauli eigenstates."""
    return _state_grid_cached(kappa)
