"""Poisson bracket on polynomials of irreducible generators.

The bracket of two generators has a closed form: place the first block in
the middle of a window of M + 2M' sites, sum the commutators against every
cyclic placement of the second block, and multiply by i.  The result is a
local tensor whose canonical components give the bracket as a polynomial.
Bilinearity and the Leibniz rule extend the bracket to arbitrary words;
scalars bracket to zero.
"""

from __future__ import annotations

import numpy as np

from .chain import DenseOperator, gamma_shift
from .site import build_basis
from .symbolic import (GammaPolynomial, GammaWord, IrreducibleTensor,
                       LocalTensor, is_irreducible)
from .tolerances import DENSE_DIM_LIMIT

__all__ = ["bracket_generators", "bracket"]

_cache: dict[tuple, GammaPolynomial] = {}


def _bracket_window(a: LocalTensor, b: LocalTensor) -> LocalTensor:
    """i * sum_j [I^{M'} (x) a (x) I^{M'}, shift^j(I^{M+M'} (x) b)] on M+2M' sites."""
    kappa = a.kappa
    m, mp = a.degree, b.degree
    window = m + 2 * mp
    dim = kappa ** window
    if dim > DENSE_DIM_LIMIT:
        raise ValueError(
            f"bracket window needs kappa^{window} = {dim} dense sites, beyond the configured cap")
    basis = build_basis(kappa)
    eye_side = np.eye(kappa ** mp, dtype=complex)
    mid = np.kron(np.kron(eye_side, a.to_matrix(basis)), eye_side)
    moving = DenseOperator(kappa, window,
                           np.kron(np.eye(kappa ** (m + mp), dtype=complex), b.to_matrix(basis)))
    acc = np.zeros((dim, dim), dtype=complex)
    for j in range(m + mp + 1):
        shifted = gamma_shift(moving, steps=j).matrix
        acc += mid @ shifted - shifted @ mid
    return LocalTensor.from_matrix(1.0j * acc, window, kappa)


def bracket_generators(a: IrreducibleTensor, b: IrreducibleTensor) -> GammaPolynomial:
    """Bracket of two irreducible generators, canonically decomposed."""
    if not (is_irreducible(a) and is_irreducible(b)):
        raise ValueError("bracket_generators requires irreducible inputs")
    if a.degree < 1 or b.degree < 1:
        raise ValueError("generator degrees must be at least 1")
    if a.kappa != b.kappa:
        raise ValueError("mixed kappa")
    ka, kb = a.key(), b.key()
    if ka == kb:
        return GammaPolynomial.make(a.kappa)
    if ka > kb:
        return -bracket_generators(b, a)
    cache_key = (a.kappa, ka, kb)
    hit = _cache.get(cache_key)
    if hit is not None:
        return hit
    from .symbolic import decompose
    result = GammaPolynomial.from_decomposition(decompose(_bracket_window(a, b)))
    _cache[cache_key] = result
    return result


def bracket(p: GammaPolynomial, q: GammaPolynomial) -> GammaPolynomial:
    """Bilinear, Leibniz extension of the generator bracket; derivations kill
    the unit, so scalar parts contribute nothing."""
    if p.kappa != q.kappa:
        raise ValueError("mixed kappa")
    out = GammaPolynomial.make(p.kappa)
    for w1, c1 in p.terms.items():
        for w2, c2 in q.terms.items():
            for i in range(len(w1.factors)):
                rest1 = w1.factors[:i] + w1.factors[i + 1:]
                for j in range(len(w2.factors)):
                    rest2 = w2.factors[:j] + w2.factors[j + 1:]
                    core = bracket_generators(w1.factors[i], w2.factors[j])
                    if core.scalar == 0 and not core.terms:
                        continue
                    leftover = GammaPolynomial.make(
                        p.kappa, 0.0, [(GammaWord(rest1 + rest2), c1 * c2)])
                    out = out + leftover * core
    return out
