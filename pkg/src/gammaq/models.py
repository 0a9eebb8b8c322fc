"""Concrete Hamiltonian builders: nearest-neighbour exchange chain with a
transverse field, its general finite-range version, and one mean-field
comparison model.

All builders use cyclic (periodic) boundaries, matching the shift average:
each interaction distance contributes one placed pair per site, which is
exactly what makes H/N a polynomial of averaged local blocks with zero
remainder.  Spin operators are normalized like Pauli matrices,
s_p = 2 b_p, so kappa = 2 reproduces the sigma-matrix formulas verbatim.
The exchange chain is written with the conventional overall minus sign; the
finite-range builder keeps the same sign so that range 1 reduces to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import DenseOperator, kron_place
from .site import build_basis
from .symbolic import GammaPolynomial, LocalTensor
from .tolerances import DENSE_DIM_LIMIT

__all__ = [
    "LocalInteractionSpec",
    "heisenberg_matrix",
    "heisenberg_symbol",
    "local_interaction_matrix",
    "local_interaction_symbol",
    "curie_weiss_matrix",
]


@dataclass(frozen=True)
class LocalInteractionSpec:
    """Couplings for a translation-invariant interaction of finite range.

    ``coupling`` is a real symmetric (kappa^2-1) x (kappa^2-1) matrix and
    ``range_ell`` the largest interaction distance; ``h`` is the field vector.
    """

    range_ell: int
    coupling: np.ndarray
    h: np.ndarray
    kappa: int = 2

    def __post_init__(self):
        n = self.kappa ** 2 - 1
        j = np.asarray(self.coupling, dtype=float)
        hv = np.asarray(self.h, dtype=float)
        if self.range_ell < 1:
            raise ValueError("interaction range must be at least 1")
        if j.shape != (n, n):
            raise ValueError(f"coupling must be {n}x{n} for kappa={self.kappa}")
        if np.abs(j - j.T).max() > 1e-12 * max(1.0, np.abs(j).max()):
            raise ValueError("coupling matrix must be symmetric")
        if hv.shape != (n,):
            raise ValueError(f"field must have length {n}")
        object.__setattr__(self, "coupling", j)
        object.__setattr__(self, "h", hv)
        j.setflags(write=False)
        hv.setflags(write=False)


def _spin_ops(kappa: int) -> np.ndarray:
    """Pauli-normalized generators: s_p = 2 b_p, trace(s_p s_q) = 2 delta_pq."""
    return 2.0 * build_basis(kappa).elements[1:]


def _pair_tensor(spec: LocalInteractionSpec, gap: int, sign: float) -> LocalTensor:
    """sign * sum_pq J^pq s_p (x) I^gap (x) s_q as a coefficient map."""
    n = spec.kappa ** 2 - 1
    coeffs = {}
    for p in range(n):
        for q in range(n):
            if spec.coupling[p, q] != 0.0:
                idx = (p + 1,) + (0,) * gap + (q + 1,)
                coeffs[idx] = coeffs.get(idx, 0.0) + sign * 4.0 * spec.coupling[p, q]
    return LocalTensor.make(spec.kappa, gap + 2, coeffs)


def _field_tensor(spec: LocalInteractionSpec, sign: float) -> LocalTensor:
    n = spec.kappa ** 2 - 1
    coeffs = {(p + 1,): sign * 2.0 * spec.h[p] for p in range(n) if spec.h[p] != 0.0}
    return LocalTensor.make(spec.kappa, 1, coeffs)


def _interaction_matrix(spec: LocalInteractionSpec, sites: int, sign: float,
                        dense_limit: int) -> DenseOperator:
    kappa = spec.kappa
    dim = kappa ** sites
    if dim > dense_limit:
        raise ValueError(f"kappa^N = {dim} exceeds the dense limit {dense_limit}")
    spins = _spin_ops(kappa)
    n = kappa ** 2 - 1
    acc = np.zeros((dim, dim), dtype=complex)
    for dist in range(1, spec.range_ell + 1):
        for i in range(1, sites + 1):
            j = (i - 1 + dist) % sites + 1
            if j == i:
                raise ValueError("interaction distance wraps onto the same site")
            for p in range(n):
                for q in range(n):
                    if spec.coupling[p, q] == 0.0:
                        continue
                    mats = sorted([(i, spins[p]), (j, spins[q])], key=lambda t: t[0])
                    acc += sign * spec.coupling[p, q] * kron_place(mats, sites, kappa).matrix
    field = np.zeros((kappa, kappa), dtype=complex)
    for p in range(n):
        field += spec.h[p] * spins[p]
    if np.any(field):
        for i in range(1, sites + 1):
            acc += sign * kron_place([(i, field)], sites, kappa).matrix
    return DenseOperator(kappa, sites, acc)


def heisenberg_matrix(spec: LocalInteractionSpec, sites: int,
                      dense_limit: int = DENSE_DIM_LIMIT) -> DenseOperator:
    """Nearest-neighbour exchange chain with cyclic wraparound:
    -sum_i sum_pq J^pq s_p(i) s_q(i+1) - sum_i sum_p h^p s_p(i)."""
    if spec.range_ell != 1:
        raise ValueError("the nearest-neighbour builder requires range 1")
    if sites < 2:
        raise ValueError("need at least two sites")
    return _interaction_matrix(spec, sites, sign=-1.0, dense_limit=dense_limit)


def heisenberg_symbol(spec: LocalInteractionSpec) -> GammaPolynomial:
    """Polynomial h with H_N / N = Q_N(h) exactly: one degree-2 generator for
    the exchange part plus one degree-1 generator for the field."""
    if spec.range_ell != 1:
        raise ValueError("the nearest-neighbour builder requires range 1")
    return local_interaction_symbol(spec)


def local_interaction_matrix(spec: LocalInteractionSpec, sites: int,
                             dense_limit: int = DENSE_DIM_LIMIT) -> DenseOperator:
    """Finite-range chain: every distance d <= range couples each site i to
    site i + d (cyclically), each ordered placement counted once."""
    if sites < 2 * spec.range_ell + 2:
        raise ValueError(
            f"need at least {2 * spec.range_ell + 2} sites for range {spec.range_ell}")
    return _interaction_matrix(spec, sites, sign=-1.0, dense_limit=dense_limit)


def local_interaction_symbol(spec: LocalInteractionSpec) -> GammaPolynomial:
    poly = GammaPolynomial.make(spec.kappa)
    if np.any(spec.coupling):
        for gap in range(spec.range_ell):
            poly = poly + GammaPolynomial.generator(_pair_tensor(spec, gap, sign=-1.0))
    if np.any(spec.h):
        poly = poly + GammaPolynomial.generator(_field_tensor(spec, sign=-1.0))
    return poly


def curie_weiss_matrix(j: float, h: float, sites: int, kappa: int = 2,
                       dense_limit: int = DENSE_DIM_LIMIT) -> DenseOperator:
    """Mean-field comparison model:
    -(J/2N) sum_{j1+j2=N-2} I^j1 (x) s_3 (x) I^j2 (x) s_3
    - h sum_{j=1..N-1} I^{N-1-j} (x) s_1 (x) I^j."""
    if sites < 2:
        raise ValueError("need at least two sites")
    dim = kappa ** sites
    if dim > dense_limit:
        raise ValueError(f"kappa^N = {dim} exceeds the dense limit {dense_limit}")
    spins = _spin_ops(kappa)
    s1, s3 = spins[0], spins[2]
    acc = np.zeros((dim, dim), dtype=complex)
    for j1 in range(sites - 1):
        acc += (-j / (2.0 * sites)) * kron_place(
            [(j1 + 1, s3), (sites, s3)], sites, kappa).matrix
    for jj in range(1, sites):
        acc += -h * kron_place([(sites - jj, s1)], sites, kappa).matrix
    return DenseOperator(kappa, sites, acc)
