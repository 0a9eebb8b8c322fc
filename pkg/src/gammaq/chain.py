"""Operators on the N-site chain.

Dense and matrix-free operator representations, the cyclic left shift and
its projector average, embedding of local blocks with cyclic averaging,
spectral norms (dense eigensolver or power iteration), and product-state
expectation values that never materialize kappa^N objects.

Site convention: site 1 is the leftmost tensor factor and the most
significant base-kappa digit of the row/column index.  The shift is a pure
index permutation, so repeated shifts are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .site import SiteState
from .tolerances import DENSE_DIM_LIMIT, EXACT_TOL, NORM_RTOL, POWER_ITER_CAP

__all__ = [
    "DenseOperator",
    "ImplicitOperator",
    "PlacedTerm",
    "ProductStateSpec",
    "ConvergenceError",
    "kron_place",
    "gamma_shift",
    "gamma_average",
    "gamma_embed",
    "embed_average",
    "spectral_norm",
    "matvec",
    "evaluate_state",
]


class ConvergenceError(RuntimeError):
    """The iterative norm solver did not reach the target tolerance."""


@dataclass(frozen=True)
class DenseOperator:
    """A materialized operator on kappa^sites dimensions."""

    kappa: int
    sites: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = self.kappa ** self.sites
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix for {self.sites} sites, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        m.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.kappa ** self.sites

    def _like(self, m: np.ndarray) -> "DenseOperator":
        return DenseOperator(self.kappa, self.sites, m)

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        return self._like(self.matrix + other.matrix)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        return self._like(self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "DenseOperator":
        return self._like(self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        return self._like(self.matrix @ other.matrix)

    def adjoint(self) -> "DenseOperator":
        return self._like(self.matrix.conj().T)

    def is_hermitian(self, tol: float = EXACT_TOL) -> bool:
        scale = max(1.0, float(np.abs(self.matrix).max()))
        return float(np.abs(self.matrix - self.matrix.conj().T).max()) <= tol * scale

    @staticmethod
    def identity(kappa: int, sites: int) -> "DenseOperator":
        return DenseOperator(kappa, sites, np.eye(kappa ** sites, dtype=complex))


@dataclass(frozen=True)
class PlacedTerm:
    """coefficient * (local matrices placed at strictly increasing sites)."""

    coeff: complex
    placements: tuple[tuple[int, np.ndarray], ...]

    def __post_init__(self):
        pos = [p for p, _ in self.placements]
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("placements must have strictly increasing positions")


@dataclass(frozen=True)
class ImplicitOperator:
    """Sum of placed local terms; supports matvec without materialization."""

    kappa: int
    sites: int
    terms: tuple[PlacedTerm, ...]
    hermitian: bool | None = None

    def __post_init__(self):
        for t in self.terms:
            for pos, m in t.placements:
                if not (1 <= pos <= self.sites):
                    raise ValueError(f"position {pos} outside 1..{self.sites}")
                if np.asarray(m).shape != (self.kappa, self.kappa):
                    raise ValueError("local matrices must be kappa x kappa")

    @property
    def dim(self) -> int:
        return self.kappa ** self.sites

    def __add__(self, other: "ImplicitOperator") -> "ImplicitOperator":
        if (self.kappa, self.sites) != (other.kappa, other.sites):
            raise ValueError("size mismatch")
        return ImplicitOperator(self.kappa, self.sites, self.terms + other.terms)

    def __sub__(self, other: "ImplicitOperator") -> "ImplicitOperator":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "ImplicitOperator":
        return ImplicitOperator(
            self.kappa, self.sites,
            tuple(PlacedTerm(t.coeff * scalar, t.placements) for t in self.terms),
            hermitian=self.hermitian if (np.imag(scalar) == 0) else None)

    __rmul__ = __mul__

    def __matmul__(self, other: "ImplicitOperator") -> "ImplicitOperator":
        """Composition: placements at a shared site multiply left @ right."""
        if (self.kappa, self.sites) != (other.kappa, other.sites):
            raise ValueError("size mismatch")
        out = []
        for a in self.terms:
            pa = dict(a.placements)
            for b in other.terms:
                merged = dict(pa)
                for pos, m in b.placements:
                    merged[pos] = merged[pos] @ m if pos in merged else m
                out.append(PlacedTerm(a.coeff * b.coeff, tuple(sorted(merged.items()))))
        return ImplicitOperator(self.kappa, self.sites, tuple(out))

    def adjoint(self) -> "ImplicitOperator":
        out = tuple(
            PlacedTerm(np.conj(t.coeff),
                       tuple((pos, m.conj().T) for pos, m in t.placements))
            for t in self.terms)
        return ImplicitOperator(self.kappa, self.sites, out, hermitian=self.hermitian)

    def to_dense(self, dense_limit: int = DENSE_DIM_LIMIT) -> DenseOperator:
        if self.dim > dense_limit:
            raise ValueError(f"dimension {self.dim} exceeds dense limit {dense_limit}")
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self.terms:
            acc += t.coeff * kron_place(list(t.placements), self.sites, self.kappa).matrix
        return DenseOperator(self.kappa, self.sites, acc)

    def norm_bound(self) -> float:
        """Triangle-inequality upper bound on the operator norm."""
        total = 0.0
        for t in self.terms:
            prod = abs(t.coeff)
            for _, m in t.placements:
                prod *= float(np.linalg.norm(m, 2))
            total += prod
        return total

    @staticmethod
    def identity(kappa: int, sites: int) -> "ImplicitOperator":
        return ImplicitOperator(kappa, sites, (PlacedTerm(1.0 + 0j, ()),), hermitian=True)


@dataclass(frozen=True)
class ProductStateSpec:
    """Product state written as a prefix block followed by a repeated period."""

    prefix: tuple[SiteState, ...]
    period: tuple[SiteState, ...]

    def expand(self, sites: int) -> list[SiteState]:
        r, p = len(self.prefix), len(self.period)
        if p == 0:
            if r != sites:
                raise ValueError(f"prefix of length {r} cannot fill {sites} sites without a period")
            return list(self.prefix)
        if r >= p:
            raise ValueError("prefix must be shorter than the period")
        if (sites - r) % p != 0 or sites < r:
            raise ValueError(f"{sites} sites cannot be written as {r} + q*{p}")
        q = (sites - r) // p
        return list(self.prefix) + list(self.period) * q


# ---------------------------------------------------------------------------
# shift and embedding


@lru_cache(maxsize=None)
def _rotate_right_index(kappa: int, sites: int) -> np.ndarray:
    """perm[x] = index whose base-kappa digits are those of x rotated right."""
    x = np.arange(kappa ** sites)
    perm = (x % kappa) * kappa ** (sites - 1) + x // kappa
    perm.setflags(write=False)
    return perm


def gamma_shift(a: DenseOperator, steps: int = 1) -> DenseOperator:
    """Cyclic left shift: the content of site j+1 moves to site j."""
    steps = steps % a.sites
    m = a.matrix
    perm = _rotate_right_index(a.kappa, a.sites)
    for _ in range(steps):
        m = m[np.ix_(perm, perm)]
    return DenseOperator(a.kappa, a.sites, m)


def _gamma_average_matrix(m: np.ndarray, kappa: int, sites: int) -> np.ndarray:
    perm = _rotate_right_index(kappa, sites)
    acc = m.copy()
    cur = m
    for _ in range(sites - 1):
        cur = cur[np.ix_(perm, perm)]
        acc += cur
    return acc / sites


def gamma_average(a: DenseOperator) -> DenseOperator:
    """Average over all cyclic shifts; a projector onto shift-invariant operators."""
    return DenseOperator(a.kappa, a.sites, _gamma_average_matrix(a.matrix, a.kappa, a.sites))


def kron_place(locals_: Sequence[tuple[int, np.ndarray]], sites: int, kappa: int) -> DenseOperator:
    """Tensor product with the given matrices at the given 1-based sites and
    identity elsewhere."""
    positions = [p for p, _ in locals_]
    if len(set(positions)) != len(positions):
        raise ValueError("overlapping positions")
    if positions and not all(1 <= p <= sites for p in positions):
        raise ValueError(f"positions must lie in 1..{sites}")
    placed = dict(locals_)
    out = np.eye(1, dtype=complex)
    run = 0  # length of the pending identity block
    for s in range(1, sites + 1):
        if s in placed:
            if run:
                out = np.kron(out, np.eye(kappa ** run, dtype=complex))
                run = 0
            m = np.asarray(placed[s], dtype=complex)
            if m.shape != (kappa, kappa):
                raise ValueError("local matrices must be kappa x kappa")
            out = np.kron(out, m)
        else:
            run += 1
    if run:
        out = np.kron(out, np.eye(kappa ** run, dtype=complex))
    return DenseOperator(kappa, sites, out)


def _local_matrix(a) -> np.ndarray:
    if isinstance(a, DenseOperator):
        return a.matrix
    if hasattr(a, "to_matrix"):
        return a.to_matrix()
    return np.asarray(a, dtype=complex)


def gamma_embed(a_local, sites: int, kappa: int) -> DenseOperator:
    """Cyclic average of the local block placed at the end of the chain;
    the zero operator when the chain is shorter than the block."""
    m = _local_matrix(a_local)
    dim = m.shape[0]
    deg = 0 if dim == 1 else int(round(np.log(dim) / np.log(kappa)))
    if kappa ** deg != dim:
        raise ValueError(f"local block of dimension {dim} is not a kappa={kappa} tensor power")
    full = kappa ** sites
    if sites < deg:
        return DenseOperator(kappa, sites, np.zeros((full, full), dtype=complex))
    scalar = complex(m[0, 0]) if dim == 1 else None
    if scalar is not None:
        return DenseOperator(kappa, sites, scalar * np.eye(full, dtype=complex))
    padded = np.kron(np.eye(kappa ** (sites - deg), dtype=complex), m)
    return DenseOperator(kappa, sites, _gamma_average_matrix(padded, kappa, sites))


def embed_average(a: DenseOperator, nprime: int) -> DenseOperator:
    """Re-embed an N-site operator at the end of a longer chain and re-average."""
    if nprime < a.sites:
        raise ValueError(f"target chain ({nprime}) shorter than operator ({a.sites})")
    return gamma_embed(a.matrix, nprime, a.kappa)


# ---------------------------------------------------------------------------
# matvec and product-state evaluation


def _apply_placements(vec: np.ndarray, placements, kappa: int, sites: int) -> np.ndarray:
    t = vec.reshape((kappa,) * sites)
    for pos, m in placements:
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [pos - 1])), 0, pos - 1)
    return t.reshape(-1)


def matvec(a: ImplicitOperator | DenseOperator, v: np.ndarray) -> np.ndarray:
    """a @ v computed term by term for implicit operators."""
    v = np.asarray(v, dtype=complex)
    if isinstance(a, DenseOperator):
        if v.shape != (a.dim,):
            raise ValueError(f"vector length {v.shape} does not match dimension {a.dim}")
        return a.matrix @ v
    if v.shape != (a.dim,):
        raise ValueError(f"vector length {v.shape} does not match dimension {a.dim}")
    out = np.zeros_like(v)
    for t in a.terms:
        if t.placements:
            out += t.coeff * _apply_placements(v, t.placements, a.kappa, a.sites)
        else:
            out += t.coeff * v
    return out


def evaluate_state(spec: ProductStateSpec, a: ImplicitOperator) -> complex:
    """Expectation value of an implicit operator in a product state,
    in O(terms * sites) single-site traces."""
    states = spec.expand(a.sites)
    total = 0.0 + 0.0j
    for t in a.terms:
        val = t.coeff
        for pos, m in t.placements:
            val *= states[pos - 1](m)
            if val == 0:
                break
        total += val
    return total


# ---------------------------------------------------------------------------
# spectral norms


def _dense_spectral_norm(m: np.ndarray) -> float:
    n = m.shape[0]
    if n <= 1024:
        return float(np.linalg.svd(m, compute_uv=False)[0])
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.conj().T).max()) <= EXACT_TOL * scale:
        w = np.linalg.eigvalsh(m)
        return float(max(abs(w[0]), abs(w[-1])))
    w = np.linalg.eigvalsh(m.conj().T @ m)
    return float(np.sqrt(max(w[-1], 0.0)))


def _power_iteration(step: Callable[[np.ndarray], np.ndarray], dim: int, rtol: float,
                     cap: int, seed: int) -> float:
    """Largest eigenvalue of a positive semidefinite map via power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    window: list[float] = []
    lam = 0.0
    for it in range(cap):
        w = step(v)
        lam = float(np.real(np.vdot(v, w)))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        window.append(lam)
        if len(window) > 8:
            window.pop(0)
            if abs(window[-1] - window[0]) <= 0.01 * rtol * max(abs(lam), 1e-300):
                return max(lam, 0.0)
    raise ConvergenceError(
        f"power iteration did not converge within {cap} iterations (last estimate {lam})")


def _iterative_norm(apply_a: Callable[[np.ndarray], np.ndarray],
                    apply_adj: Callable[[np.ndarray], np.ndarray],
                    dim: int, hermitian: bool, bound: float,
                    rtol: float, cap: int, seed: int) -> float:
    if bound == 0.0:
        return 0.0
    if hermitian:
        # Spectral shift keeps the iterated operator positive semidefinite.
        top = _power_iteration(lambda v: bound * v + apply_a(v), dim, rtol, cap, seed)
        bot = _power_iteration(lambda v: bound * v - apply_a(v), dim, rtol, cap, seed + 1)
        return max(top - bound, bot - bound, 0.0)
    lam = _power_iteration(lambda v: apply_adj(apply_a(v)), dim, rtol, cap, seed)
    return float(np.sqrt(max(lam, 0.0)))


def spectral_norm(a: ImplicitOperator | DenseOperator, method: str = "auto",
                  rtol: float = NORM_RTOL, cap: int = POWER_ITER_CAP, seed: int = 0,
                  dense_limit: int = DENSE_DIM_LIMIT) -> float:
    """Operator norm (largest singular value).

    ``method``: "dense" forces the eigensolver, "iterative" forces power
    iteration, "auto" picks dense for dimensions within ``dense_limit``.
    Non-convergence of the iterative path raises :class:`ConvergenceError`.
    """
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(a, DenseOperator):
        if method == "iterative":
            herm = a.is_hermitian()
            bound = float(np.linalg.norm(a.matrix, "fro"))
            return _iterative_norm(lambda v: a.matrix @ v,
                                   lambda v: a.matrix.conj().T @ v,
                                   a.dim, herm, bound, rtol, cap, seed)
        if a.dim > dense_limit and method == "auto":
            herm = a.is_hermitian()
            bound = float(np.linalg.norm(a.matrix, "fro"))
            return _iterative_norm(lambda v: a.matrix @ v,
                                   lambda v: a.matrix.conj().T @ v,
                                   a.dim, herm, bound, rtol, cap, seed)
        return _dense_spectral_norm(a.matrix)
    # implicit operator
    if method == "dense" or (method == "auto" and a.dim <= dense_limit):
        return _dense_spectral_norm(a.to_dense(dense_limit=max(dense_limit, a.dim)).matrix)
    adj = a.adjoint()
    herm = bool(a.hermitian)
    return _iterative_norm(lambda v: matvec(a, v), lambda v: matvec(adj, v),
                           a.dim, herm, a.norm_bound(), rtol, cap, seed)
