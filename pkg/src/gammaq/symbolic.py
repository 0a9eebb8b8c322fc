"""Symbolic layer: local tensors, canonical decomposition, words, polynomials,
and the quantization maps.

A :class:`LocalTensor` is a finite coefficient map over basis multi-indices
(index 0 = identity).  Every tensor splits uniquely into end-traceless
("irreducible") components indexed by the span between the first and last
non-identity slot; leading and trailing identities carry no information
once cyclic averaging is applied, so the components are the canonical data.

Words are commutative multisets of irreducible factors; each factor is
stored normalized to unit operator norm with a positive-real leading
coefficient so that symbolically equal expressions share one written form.
Quantization materializes a polynomial on N sites: single factors embed by
cyclic averaging, multi-factor words through the composition sum over
identity paddings with the total weighted symmetrization of the factors.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .chain import (DenseOperator, ImplicitOperator, PlacedTerm, gamma_embed,
                    _gamma_average_matrix, kron_place, spectral_norm)
from .site import SiteBasis, build_basis
from .tolerances import DENSE_DIM_LIMIT, PRUNE_TOL, WORD_FACTOR_CAP

__all__ = [
    "LocalTensor",
    "IrreducibleTensor",
    "CanonicalDecomposition",
    "GammaWord",
    "GammaPolynomial",
    "decompose",
    "recompose",
    "is_irreducible",
    "word_make",
    "poly_mul",
    "poly_adjoint",
    "poly_is_zero",
    "poly_max_coeff",
    "quantize",
    "naive_product",
]

MultiIndex = tuple[int, ...]


def _prune(coeffs: Mapping[MultiIndex, complex]) -> dict[MultiIndex, complex]:
    if not coeffs:
        return {}
    cmax = max(abs(c) for c in coeffs.values())
    cut = PRUNE_TOL * max(1.0, cmax)
    return {k: complex(v) for k, v in coeffs.items() if abs(v) > cut}


@dataclass(frozen=True)
class LocalTensor:
    """Element of the M-site algebra as a coefficient map over multi-indices."""

    kappa: int
    degree: int
    coeffs: dict[MultiIndex, complex]

    @staticmethod
    def make(kappa: int, degree: int, coeffs: Mapping[MultiIndex, complex]) -> "LocalTensor":
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        nidx = kappa * kappa
        for idx in coeffs:
            if len(idx) != degree:
                raise ValueError(f"multi-index {idx} does not have length {degree}")
            if any(not (0 <= k < nidx) for k in idx):
                raise ValueError(f"multi-index {idx} outside 0..{nidx - 1}")
        return LocalTensor(kappa, degree, _prune(coeffs))

    @staticmethod
    def scalar(kappa: int, value: complex) -> "LocalTensor":
        return LocalTensor.make(kappa, 0, {(): complex(value)})

    @staticmethod
    def from_site_matrix(m: np.ndarray, kappa: int = 2) -> "LocalTensor":
        """Degree-1 tensor from a single-site matrix."""
        from .site import expand
        basis = build_basis(kappa)
        c = expand(np.asarray(m, dtype=complex), basis)
        return LocalTensor.make(kappa, 1, {(k,): c[k] for k in range(len(c))})

    @staticmethod
    def from_matrix(m: np.ndarray, degree: int, kappa: int = 2) -> "LocalTensor":
        """Expand a dense kappa^degree matrix in the product basis."""
        m = np.asarray(m, dtype=complex)
        dim = kappa ** degree
        if m.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix")
        if degree == 0:
            return LocalTensor.scalar(kappa, complex(m[0, 0]))
        basis = build_basis(kappa)
        dual = basis.dual  # dual[k, r, c]
        # interleave row/column digits per site, then contract one site at a time
        t = m.reshape((kappa,) * (2 * degree))
        order = [ax for s in range(degree) for ax in (s, degree + s)]
        t = np.transpose(t, order)
        for _ in range(degree):
            # consume the leading (row, col) pair; its basis axis lands last,
            # so after all sites the axes sit in chain order
            t = np.tensordot(t, dual, axes=([0, 1], [1, 2]))
        coeffs: dict[MultiIndex, complex] = {}
        flat = t.reshape(-1)
        nz = np.nonzero(np.abs(flat) > PRUNE_TOL * max(1.0, float(np.abs(flat).max())))[0]
        n = kappa * kappa
        for lin in nz:
            idx = []
            rem = int(lin)
            for _ in range(degree):
                idx.append(rem % n)
                rem //= n
            coeffs[tuple(reversed(idx))] = complex(flat[lin])
        return LocalTensor.make(kappa, degree, coeffs)

    def to_matrix(self, basis: SiteBasis | None = None) -> np.ndarray:
        basis = basis or build_basis(self.kappa)
        dim = self.kappa ** self.degree
        if self.degree == 0:
            return np.array([[self.coeffs.get((), 0.0 + 0j)]], dtype=complex)
        out = np.zeros((dim, dim), dtype=complex)
        for idx, c in self.coeffs.items():
            block = basis.elements[idx[0]]
            for k in idx[1:]:
                block = np.kron(block, basis.elements[k])
            out += c * block
        return out

    def adjoint(self) -> "LocalTensor":
        """Entrywise conjugation; valid because the basis is Hermitian."""
        return LocalTensor(self.kappa, self.degree,
                           {k: np.conj(v) for k, v in self.coeffs.items()})

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(v.imag) <= tol * max(1.0, abs(v)) for v in self.coeffs.values())

    def opnorm(self, basis: SiteBasis | None = None) -> float:
        if self.degree == 0:
            return abs(self.coeffs.get((), 0.0))
        return float(np.linalg.svd(self.to_matrix(basis), compute_uv=False)[0])

    def key(self) -> tuple:
        entries = tuple(sorted((idx, (v.real, v.imag)) for idx, v in self.coeffs.items()))
        return (self.degree, entries)

    def allclose(self, other: "LocalTensor", rtol: float = 1e-9, atol: float = 1e-12) -> bool:
        if (self.kappa, self.degree) != (other.kappa, other.degree):
            return False
        keys = set(self.coeffs) | set(other.coeffs)
        return all(np.isclose(self.coeffs.get(k, 0.0), other.coeffs.get(k, 0.0),
                              rtol=rtol, atol=atol) for k in keys)

    def __hash__(self):
        return hash((self.kappa, self.key()))

    def __eq__(self, other):
        return (isinstance(other, LocalTensor) and self.kappa == other.kappa
                and self.key() == other.key())


class IrreducibleTensor(LocalTensor):
    """Local tensor whose first and last slot are traceless on every index."""

    @staticmethod
    def make(kappa: int, degree: int, coeffs: Mapping[MultiIndex, complex]) -> "IrreducibleTensor":
        t = LocalTensor.make(kappa, degree, coeffs)
        if not _ends_traceless(t):
            raise ValueError("tensor is not irreducible: an end slot carries the identity")
        return IrreducibleTensor(t.kappa, t.degree, t.coeffs)

    def __hash__(self):
        return super().__hash__()


def _ends_traceless(t: LocalTensor) -> bool:
    if t.degree == 0:
        return True
    return all(idx[0] != 0 and idx[-1] != 0 for idx in t.coeffs)


def is_irreducible(a: LocalTensor) -> bool:
    """True iff no supported multi-index starts or ends with the identity."""
    return _ends_traceless(a)


@dataclass(frozen=True)
class CanonicalDecomposition:
    """End-traceless components of a local tensor, indexed by span 0..max_degree."""

    kappa: int
    max_degree: int
    components: tuple[IrreducibleTensor, ...]

    def component(self, j: int) -> IrreducibleTensor:
        return self.components[j]

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def first_nonzero_degree(self) -> int | None:
        for j, c in enumerate(self.components):
            if not c.is_zero():
                return j
        return None

    def __eq__(self, other):
        return (isinstance(other, CanonicalDecomposition)
                and self.kappa == other.kappa and self.max_degree == other.max_degree
                and all(a == b for a, b in zip(self.components, other.components)))

    def __hash__(self):
        return hash((self.kappa, self.max_degree, self.components))


def decompose(a: LocalTensor) -> CanonicalDecomposition:
    """Split a tensor into its end-traceless components.

    Each supported multi-index contributes its restriction between the first
    and last non-identity slot to the component of that span; the
    all-identity index feeds the scalar component.
    """
    buckets: list[dict[MultiIndex, complex]] = [dict() for _ in range(a.degree + 1)]
    for idx, c in a.coeffs.items():
        support = [i for i, k in enumerate(idx) if k != 0]
        if not support:
            key: MultiIndex = ()
            span = 0
        else:
            p, q = support[0], support[-1]
            key = idx[p:q + 1]
            span = q - p + 1
        buckets[span][key] = buckets[span].get(key, 0.0 + 0j) + c
    comps = tuple(IrreducibleTensor.make(a.kappa, j, buckets[j]) for j in range(a.degree + 1))
    return CanonicalDecomposition(a.kappa, a.degree, comps)


def recompose(d: CanonicalDecomposition, degree: int) -> LocalTensor:
    """Left-padded sum of the components on `degree` sites."""
    if degree < d.max_degree:
        raise ValueError(f"degree {degree} is smaller than max component span {d.max_degree}")
    coeffs: dict[MultiIndex, complex] = {}
    for j, comp in enumerate(d.components):
        pad = (0,) * (degree - j)
        for idx, c in comp.coeffs.items():
            key = pad + idx
            coeffs[key] = coeffs.get(key, 0.0 + 0j) + c
    return LocalTensor.make(d.kappa, degree, coeffs)


# ---------------------------------------------------------------------------
# words and polynomials


def _unit_factor(t: LocalTensor, basis: SiteBasis) -> tuple[IrreducibleTensor, complex]:
    """Scale a nonzero irreducible tensor to unit operator norm with a
    positive-real leading coefficient; return (factor, extracted scale)."""
    norm = t.opnorm(basis)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero tensor")
    lead = t.coeffs[min(t.coeffs)]
    phase = lead / abs(lead)
    scale = norm * phase
    coeffs = {k: v / scale for k, v in t.coeffs.items()}
    return IrreducibleTensor.make(t.kappa, t.degree, coeffs), scale


@dataclass(frozen=True)
class GammaWord:
    """Commutative product of irreducible factors, kept in canonical order."""

    factors: tuple[IrreducibleTensor, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.factors, key=lambda f: f.key()))
        object.__setattr__(self, "factors", ordered)

    @property
    def total_degree(self) -> int:
        return sum(f.degree for f in self.factors)

    def key(self) -> tuple:
        return tuple(f.key() for f in self.factors)

    def isclose(self, other: "GammaWord", rtol: float = 1e-9, atol: float = 1e-12) -> bool:
        if len(self.factors) != len(other.factors):
            return False
        return all(a.allclose(b, rtol=rtol, atol=atol)
                   for a, b in zip(self.factors, other.factors))

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        return isinstance(other, GammaWord) and self.key() == other.key()


def word_make(factors: Sequence[LocalTensor], kappa: int | None = None) -> tuple[GammaWord, complex]:
    """Normalize a list of local tensors into a word and folded coefficient.

    Scalar factors fold into the coefficient.  Each remaining factor must
    decompose to a single irreducible component (callers expand anything
    else into a polynomial first); unit-norm scaling moves its magnitude
    and phase into the coefficient, and the commutative class product makes
    the canonical sorting sound.
    """
    if kappa is None:
        if not factors:
            raise ValueError("empty factor list needs an explicit kappa")
        kappa = factors[0].kappa
    basis = build_basis(kappa)
    coeff = 1.0 + 0j
    irr: list[IrreducibleTensor] = []
    for f in factors:
        if f.kappa != kappa:
            raise ValueError("mixed kappa in word factors")
        d = decompose(f)
        nonzero = [j for j in range(d.max_degree + 1) if not d.components[j].is_zero()]
        if len(nonzero) > 1:
            raise ValueError(
                "factor decomposes into several components; expand it into a polynomial first")
        if not nonzero:
            return GammaWord(()), 0.0 + 0j
        j = nonzero[0]
        if j == 0:
            coeff *= d.components[0].coeffs[()]
            continue
        unit, scale = _unit_factor(d.components[j], basis)
        coeff *= scale
        irr.append(unit)
    return GammaWord(tuple(irr)), coeff


def _words_mergeable(a: GammaWord, b: GammaWord) -> bool:
    return a.isclose(b)


@dataclass(frozen=True)
class GammaPolynomial:
    """Finite combination of words plus a multiple of the unit class."""

    kappa: int
    scalar: complex
    terms: dict[GammaWord, complex]

    @staticmethod
    def make(kappa: int, scalar: complex = 0.0,
             terms: Mapping[GammaWord, complex] | Iterable[tuple[GammaWord, complex]] = ()) \
            -> "GammaPolynomial":
        items = terms.items() if isinstance(terms, Mapping) else terms
        scalar = complex(scalar)
        merged: dict[GammaWord, complex] = {}
        for w, c in items:
            if not w.factors:
                scalar += c
                continue
            merged[w] = merged.get(w, 0.0 + 0j) + c
        # tolerance pass: identical words reached through different float
        # paths must cancel, so close words share one representative
        words = sorted(merged, key=lambda w: w.key())
        out: dict[GammaWord, complex] = {}
        for w in words:
            for rep in out:
                if _words_mergeable(rep, w):
                    out[rep] += merged[w]
                    break
            else:
                out[w] = merged[w]
        cmax = max([abs(scalar)] + [abs(c) for c in out.values()], default=0.0)
        cut = PRUNE_TOL * max(1.0, cmax)
        out = {w: c for w, c in out.items() if abs(c) > cut}
        if abs(scalar) <= cut:
            scalar = 0.0 + 0j
        return GammaPolynomial(kappa, scalar, out)

    @staticmethod
    def unit(kappa: int) -> "GammaPolynomial":
        return GammaPolynomial.make(kappa, 1.0)

    @staticmethod
    def generator(tensor: LocalTensor) -> "GammaPolynomial":
        """Polynomial consisting of the single-factor word of one tensor."""
        w, c = word_make([tensor])
        return GammaPolynomial.make(tensor.kappa, 0.0, [(w, c)])

    @staticmethod
    def from_decomposition(d: CanonicalDecomposition) -> "GammaPolynomial":
        terms = []
        scalar = d.components[0].coeffs.get((), 0.0 + 0j)
        for comp in d.components[1:]:
            if comp.is_zero():
                continue
            w, c = word_make([comp])
            terms.append((w, c))
        return GammaPolynomial.make(d.kappa, scalar, terms)

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "GammaPolynomial") -> "GammaPolynomial":
        if self.kappa != other.kappa:
            raise ValueError("mixed kappa")
        items = list(self.terms.items()) + list(other.terms.items())
        return GammaPolynomial.make(self.kappa, self.scalar + other.scalar, items)

    def __sub__(self, other: "GammaPolynomial") -> "GammaPolynomial":
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, GammaPolynomial):
            return poly_mul(self, other)
        c = complex(other)
        return GammaPolynomial.make(self.kappa, self.scalar * c,
                                    [(w, v * c) for w, v in self.terms.items()])

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def adjoint(self) -> "GammaPolynomial":
        return poly_adjoint(self)

    def total_degree(self) -> int:
        return max([w.total_degree for w in self.terms], default=0)

    def coeff_bound(self) -> float:
        """Triangle bound on every quantization norm (factors have unit norm)."""
        return abs(self.scalar) + sum(abs(c) for c in self.terms.values())

    def __eq__(self, other):
        return (isinstance(other, GammaPolynomial) and self.kappa == other.kappa
                and self.scalar == other.scalar and self.terms == other.terms)

    def __hash__(self):
        return hash((self.kappa, self.scalar, tuple(sorted(
            (w.key(), (c.real, c.imag)) for w, c in self.terms.items()))))


def poly_mul(p: GammaPolynomial, q: GammaPolynomial) -> GammaPolynomial:
    """Commutative product: factor multisets concatenate, words renormalize."""
    if p.kappa != q.kappa:
        raise ValueError("mixed kappa")
    items: list[tuple[GammaWord, complex]] = []
    scalar = p.scalar * q.scalar
    for w, c in p.terms.items():
        items.append((w, c * q.scalar))
    for w, c in q.terms.items():
        items.append((w, c * p.scalar))
    for w1, c1 in p.terms.items():
        for w2, c2 in q.terms.items():
            items.append((GammaWord(w1.factors + w2.factors), c1 * c2))
    return GammaPolynomial.make(p.kappa, scalar, items)


def poly_adjoint(p: GammaPolynomial) -> GammaPolynomial:
    items = []
    for w, c in p.terms.items():
        factors = tuple(IrreducibleTensor(f.kappa, f.degree,
                                          {k: np.conj(v) for k, v in f.coeffs.items()})
                        for f in w.factors)
        items.append((GammaWord(factors), np.conj(c)))
    return GammaPolynomial.make(p.kappa, np.conj(p.scalar), items)


def poly_max_coeff(p: GammaPolynomial) -> float:
    """Largest coefficient magnitude (0 for the zero polynomial)."""
    return max([abs(p.scalar)] + [abs(c) for c in p.terms.values()], default=0.0)


def poly_is_zero(p: GammaPolynomial, numerical_fallback: bool = False,
                 n_window: Sequence[int] | None = None) -> bool:
    """Symbolic zero test; the optional numerical fallback cross-checks by
    quantizing over a window of chain lengths and warns on disagreement."""
    symbolic = p.scalar == 0 and not p.terms
    if not numerical_fallback:
        return symbolic
    if n_window is None:
        base = max(p.total_degree(), 1)
        n_window = [n for n in (2 * base, 2 * base + 1, 2 * base + 2)
                    if p.kappa ** n <= DENSE_DIM_LIMIT] or [base]
    scale = max(p.coeff_bound(), 1e-30)
    numeric = all(
        spectral_norm(quantize(p, n)) < 1e-9 * scale for n in n_window)
    if numeric != symbolic:
        warnings.warn(
            f"symbolic zero test ({symbolic}) disagrees with quantization norms "
            f"({numeric}) on window {list(n_window)}; distinct normalized words may "
            f"be linearly dependent here", RuntimeWarning, stacklevel=2)
    return symbolic


# ---------------------------------------------------------------------------
# quantization


def _compositions(total: int, parts: int):
    """All tuples of `parts` nonnegative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _tensor_entries(f: LocalTensor, basis: SiteBasis):
    """Entries as (coeff, ((relative_pos, site_matrix), ...)), identity slots dropped."""
    out = []
    for idx, c in f.coeffs.items():
        placement = tuple((i + 1, basis.elements[k]) for i, k in enumerate(idx) if k != 0)
        out.append((c, placement))
    return out


def _embed_terms(f: LocalTensor, n: int, basis: SiteBasis) -> list[PlacedTerm]:
    """Implicit terms for the cyclic average of one local block."""
    m = f.degree
    if n < m:
        return []
    terms = []
    for c, placement in _tensor_entries(f, basis):
        if not placement:
            terms.append(PlacedTerm(c, ()))
            continue
        for shift in range(n):
            placed = tuple(sorted(
                ((n - m + rel - 1 - shift) % n + 1, mat) for rel, mat in placement))
            terms.append(PlacedTerm(c / n, placed))
    return terms


def _word_dense(word: GammaWord, coeff: complex, n: int, kappa: int,
                basis: SiteBasis) -> np.ndarray | None:
    factors = word.factors
    ell = len(factors)
    total = word.total_degree
    if n < total:
        return None
    if ell == 1:
        return coeff * gamma_embed(factors[0].to_matrix(basis), n, kappa).matrix
    if ell > WORD_FACTOR_CAP:
        raise ValueError(f"dense materialization capped at {WORD_FACTOR_CAP} factors per word")
    mats = [f.to_matrix(basis) for f in factors]
    dim = kappa ** n
    inner = np.zeros((dim, dim), dtype=complex)
    for comp in _compositions(n - total, ell):
        for perm in itertools.permutations(range(ell)):
            placed = np.eye(1, dtype=complex)
            for slot in range(ell):
                if comp[slot]:
                    placed = np.kron(placed, np.eye(kappa ** comp[slot], dtype=complex))
                placed = np.kron(placed, mats[perm[slot]])
            inner += placed
    inner /= ell
    return coeff / n ** (ell - 1) * _gamma_average_matrix(inner, kappa, n)


def _word_implicit(word: GammaWord, coeff: complex, n: int, kappa: int,
                   basis: SiteBasis) -> list[PlacedTerm]:
    factors = word.factors
    ell = len(factors)
    total = word.total_degree
    if n < total:
        return []
    if ell == 1:
        return [PlacedTerm(coeff * t.coeff, t.placements)
                for t in _embed_terms(factors[0], n, basis)]
    degs = [f.degree for f in factors]
    entries = [_tensor_entries(f, basis) for f in factors]
    weight = coeff / (n ** (ell - 1) * ell * n)
    terms: list[PlacedTerm] = []
    for comp in _compositions(n - total, ell):
        for perm in itertools.permutations(range(ell)):
            starts = []
            pos = 0
            for slot in range(ell):
                pos += comp[slot]
                starts.append(pos)
                pos += degs[perm[slot]]
            for combo in itertools.product(*(entries[i] for i in perm)):
                c = weight
                base: list[tuple[int, np.ndarray]] = []
                for slot, (ec, placement) in enumerate(combo):
                    c *= ec
                    for rel, mat in placement:
                        base.append((starts[slot] + rel - 1, mat))
                if c == 0:
                    continue
                for shift in range(n):
                    placed = tuple(sorted(
                        ((p - shift) % n + 1, mat) for p, mat in base))
                    terms.append(PlacedTerm(c, placed))
    return terms


def quantize(p: GammaPolynomial, n: int, engine: str = "dense",
             dense_limit: int = DENSE_DIM_LIMIT) -> DenseOperator | ImplicitOperator:
    """Materialize the canonical representative of a polynomial on n sites.

    Words longer than the chain contribute zero.  The dense engine refuses
    dimensions beyond ``dense_limit``; request the implicit engine there.
    """
    basis = build_basis(p.kappa)
    dim = p.kappa ** n
    if engine == "dense":
        if dim > dense_limit:
            raise ValueError(
                f"kappa^N = {dim} exceeds the dense limit {dense_limit}; use engine='implicit'")
        acc = p.scalar * np.eye(dim, dtype=complex)
        for w, c in p.terms.items():
            block = _word_dense(w, c, n, p.kappa, basis)
            if block is not None:
                acc += block
        return DenseOperator(p.kappa, n, acc)
    if engine == "implicit":
        terms: list[PlacedTerm] = []
        if p.scalar != 0:
            terms.append(PlacedTerm(p.scalar, ()))
        for w, c in p.terms.items():
            terms.extend(_word_implicit(w, c, n, p.kappa, basis))
        herm = True if poly_is_zero(p - poly_adjoint(p)) else None
        return ImplicitOperator(p.kappa, n, tuple(terms), hermitian=herm)
    raise ValueError(f"unknown engine {engine!r}")


def naive_product(p: GammaPolynomial, n: int, engine: str = "dense",
                  dense_limit: int = DENSE_DIM_LIMIT) -> DenseOperator | ImplicitOperator:
    """Materialize each word as the plain product of its factor embeddings."""
    basis = build_basis(p.kappa)
    dim = p.kappa ** n
    if engine == "dense":
        if dim > dense_limit:
            raise ValueError(
                f"kappa^N = {dim} exceeds the dense limit {dense_limit}; use engine='implicit'")
        acc = p.scalar * np.eye(dim, dtype=complex)
        for w, c in p.terms.items():
            prod = np.eye(dim, dtype=complex)
            for f in w.factors:
                prod = prod @ gamma_embed(f.to_matrix(basis), n, p.kappa).matrix
            acc += c * prod
        return DenseOperator(p.kappa, n, acc)
    if engine == "implicit":
        out = ImplicitOperator(p.kappa, n, (PlacedTerm(p.scalar, ()),)) if p.scalar != 0 \
            else ImplicitOperator(p.kappa, n, ())
        for w, c in p.terms.items():
            prod = ImplicitOperator.identity(p.kappa, n)
            for f in w.factors:
                prod = prod @ ImplicitOperator(p.kappa, n, tuple(_embed_terms(f, n, basis)))
            out = out + c * prod
        return out
    raise ValueError(f"unknown engine {engine!r}")
