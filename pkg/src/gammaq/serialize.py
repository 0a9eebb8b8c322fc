"""JSON wire formats.

Local tensors: {"degree": M, "terms": [{"coeff": [re, im], "indices": [k_1..k_M]}]}
with index 0 the identity and 1..kappa^2-1 the traceless basis.
Polynomials: {"scalar": [re, im], "words": [{"coeff": [re, im], "factors": [tensor..]}]}.
Hamiltonian specs: {"type": "heisenberg"|"local"|"curie_weiss", "range": l,
"J": [[..]], "h": [..]} (curie_weiss uses scalar "J" and "h").
"""

from __future__ import annotations

from typing import Any

import numpy as np

from .models import LocalInteractionSpec
from .symbolic import (CanonicalDecomposition, GammaPolynomial, GammaWord,
                       LocalTensor, word_make)

__all__ = [
    "tensor_to_json",
    "tensor_from_json",
    "poly_to_json",
    "poly_from_json",
    "decomposition_to_json",
    "decomposition_from_json",
    "hamiltonian_from_json",
]


def _c2j(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _j2c(pair: Any) -> complex:
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise ValueError(f"expected [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def tensor_to_json(t: LocalTensor) -> dict:
    terms = [{"coeff": _c2j(c), "indices": list(idx)}
             for idx, c in sorted(t.coeffs.items())]
    return {"degree": t.degree, "terms": terms}


def tensor_from_json(obj: dict, kappa: int) -> LocalTensor:
    if not isinstance(obj, dict) or "degree" not in obj:
        raise ValueError("local tensor JSON needs a 'degree' field")
    degree = int(obj["degree"])
    coeffs: dict[tuple[int, ...], complex] = {}
    for term in obj.get("terms", []):
        idx = tuple(int(k) for k in term["indices"])
        coeffs[idx] = coeffs.get(idx, 0.0 + 0j) + _j2c(term["coeff"])
    return LocalTensor.make(kappa, degree, coeffs)


def poly_to_json(p: GammaPolynomial) -> dict:
    words = []
    for w, c in sorted(p.terms.items(), key=lambda item: item[0].key()):
        words.append({"coeff": _c2j(c),
                      "factors": [tensor_to_json(f) for f in w.factors]})
    return {"scalar": _c2j(p.scalar), "words": words}


def poly_from_json(obj: dict, kappa: int) -> GammaPolynomial:
    if not isinstance(obj, dict):
        raise ValueError("polynomial JSON must be an object")
    scalar = _j2c(obj.get("scalar", [0.0, 0.0]))
    items = []
    for wobj in obj.get("words", []):
        factors = [tensor_from_json(f, kappa) for f in wobj["factors"]]
        word, folded = word_make(factors, kappa=kappa)
        items.append((word, folded * _j2c(wobj["coeff"])))
    return GammaPolynomial.make(kappa, scalar, items)


def decomposition_to_json(d: CanonicalDecomposition) -> dict:
    return {"max_degree": d.max_degree,
            "components": [tensor_to_json(c) for c in d.components]}


def decomposition_from_json(obj: dict, kappa: int) -> CanonicalDecomposition:
    from .symbolic import IrreducibleTensor
    comps = []
    raw = obj["components"]
    for j, cobj in enumerate(raw):
        t = tensor_from_json(cobj, kappa)
        if t.degree != j:
            raise ValueError(f"component {j} has degree {t.degree}")
        comps.append(IrreducibleTensor.make(kappa, j, t.coeffs))
    return CanonicalDecomposition(kappa, len(raw) - 1, tuple(comps))


def hamiltonian_from_json(obj: dict, kappa: int = 2):
    """Builders from a spec object; returns (kind, callable(N) -> DenseOperator,
    symbol polynomial or None)."""
    from . import models
    kind = obj.get("type")
    if kind in ("heisenberg", "local"):
        spec = LocalInteractionSpec(
            range_ell=int(obj.get("range", 1)),
            coupling=np.asarray(obj["J"], dtype=float),
            h=np.asarray(obj["h"], dtype=float),
            kappa=kappa)
        if kind == "heisenberg":
            return kind, lambda n: models.heisenberg_matrix(spec, n), models.heisenberg_symbol(spec)
        return kind, lambda n: models.local_interaction_matrix(spec, n), \
            models.local_interaction_symbol(spec)
    if kind == "curie_weiss":
        j, h = float(obj["J"]), float(obj["h"])
        return kind, lambda n: models.curie_weiss_matrix(j, h, n, kappa=kappa), None
    raise ValueError(f"unknown Hamiltonian type {kind!r}")
