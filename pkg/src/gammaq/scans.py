"""Experiment engine: norm-convergence, semiclassical-residual, remainder,
consistency, bracket-axiom, and state-lower-bound scans over chain lengths.

Every scan returns a :class:`ScanResult`: rows (N, value) sorted by N, a
log-log slope fitted on the tail half of the range, and a two-parameter
limit extrapolation value ~ alpha + c/N.  Failed points (iterative solver
non-convergence) are recorded as NaN rows and skipped by the fits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field

import numpy as np

from .chain import (ConvergenceError, DenseOperator, ImplicitOperator,
                    PlacedTerm, ProductStateSpec, embed_average, evaluate_state,
                    gamma_embed, spectral_norm)
from .poisson import bracket
from .site import SiteState, build_basis, state_grid
from .symbolic import (CanonicalDecomposition, GammaPolynomial, LocalTensor,
                       naive_product, quantize)
from .tolerances import DENSE_DIM_LIMIT

__all__ = [
    "ScanResult",
    "norm_scan",
    "dgr_scan",
    "remainder_scan",
    "consistency_scan",
    "axiom_scan",
    "lowerbound_scan",
]


@dataclass(frozen=True)
class ScanResult:
    """Rows (N, value) plus tail fits.

    ``fit`` is (slope, intercept) of log|value| against log N over the tail
    half; ``fit_window`` records the N-range actually used.
    ``extrapolated_limit`` least-squares fits value ~ alpha + c/N on the tail.
    """

    kind: str
    rows: tuple[tuple[int, float], ...]
    fit: tuple[float, float] | None
    fit_window: tuple[int, int] | None
    extrapolated_limit: float | None
    extras: dict = dc_field(default_factory=dict)

    def values(self) -> list[float]:
        return [v for _, v in self.rows]

    def tail(self) -> list[tuple[int, float]]:
        return _tail(list(self.rows))


def _tail(rows: list[tuple[int, float]]) -> list[tuple[int, float]]:
    rows = sorted(rows)
    return rows[len(rows) // 2:]


def _fit_loglog(rows: list[tuple[int, float]]):
    tail = [(n, v) for n, v in _tail(rows) if np.isfinite(v)]
    if not tail:
        return None, None
    floor = 1e-14 * max(1.0, max(v for _, v in tail))
    pts = [(n, v) for n, v in tail if v > floor]
    window = (tail[0][0], tail[-1][0])
    if len(pts) < 3:
        return None, window
    logn = np.log([n for n, _ in pts])
    logv = np.log([v for _, v in pts])
    slope, intercept = np.polyfit(logn, logv, 1)
    return (float(slope), float(intercept)), window


def _extrapolate(rows: list[tuple[int, float]]):
    tail = [(n, v) for n, v in _tail(rows) if np.isfinite(v)]
    if len(tail) < 2:
        return None
    a = np.array([[1.0, 1.0 / n] for n, _ in tail])
    b = np.array([v for _, v in tail])
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    return float(sol[0])


def _result(kind: str, rows: list[tuple[int, float]], extras: dict | None = None) -> ScanResult:
    rows = sorted(rows)
    fit, window = _fit_loglog(rows)
    return ScanResult(kind=kind, rows=tuple(rows), fit=fit, fit_window=window,
                      extrapolated_limit=_extrapolate(rows), extras=extras or {})


def _norm(op, engine: str, seed: int, dense_limit: int) -> float:
    method = "dense" if engine == "dense" else "iterative"
    return spectral_norm(op, method=method, seed=seed, dense_limit=dense_limit)


def _range_list(n_range) -> list[int]:
    ns = sorted(set(int(n) for n in n_range))
    if not ns:
        raise ValueError("empty N range")
    return ns


def _scan_points(kind, ns, point, extras=None):
    rows: list[tuple[int, float]] = []
    failures: dict[int, str] = {}
    for n in ns:
        try:
            rows.append((n, float(point(n))))
        except ConvergenceError as exc:  # propagate per point, keep scanning
            rows.append((n, float("nan")))
            failures[n] = str(exc)
    extras = dict(extras or {})
    if failures:
        extras["failures"] = failures
    return _result(kind, rows, extras)


# ---------------------------------------------------------------------------


def norm_scan(p: GammaPolynomial, n_range, engine: str = "dense", seed: int = 0,
              dense_limit: int = DENSE_DIM_LIMIT) -> ScanResult:
    """Norms of the materialized representative along the chain lengths."""
    ns = _range_list(n_range)

    def point(n):
        return _norm(quantize(p, n, engine=engine, dense_limit=dense_limit),
                     engine, seed + n, dense_limit)

    res = _scan_points("norm_scan", ns, point,
                       extras={"triangle_bound": p.coeff_bound()})
    tail = [v for _, v in res.tail() if np.isfinite(v)]
    diffs = [abs(b - a) for a, b in zip(tail, tail[1:])]
    extras = dict(res.extras)
    extras["max_tail_successive_diff"] = max(diffs) if diffs else 0.0
    return ScanResult(res.kind, res.rows, res.fit, res.fit_window,
                      res.extrapolated_limit, extras)


def _commutator(a, b, engine: str):
    if engine == "dense":
        m = a.matrix @ b.matrix - b.matrix @ a.matrix
        return DenseOperator(a.kappa, a.sites, m)
    return a @ b - b @ a


def dgr_scan(p: GammaPolynomial, q: GammaPolynomial, n_range, engine: str = "dense",
             seed: int = 0, dense_limit: int = DENSE_DIM_LIMIT) -> ScanResult:
    """Residual between the quantized bracket and iN times the commutator."""
    ns = _range_list(n_range)
    b = bracket(p, q)

    def point(n):
        qp = quantize(p, n, engine=engine, dense_limit=dense_limit)
        qq = quantize(q, n, engine=engine, dense_limit=dense_limit)
        qb = quantize(b, n, engine=engine, dense_limit=dense_limit)
        resid = qb - (1j * n) * _commutator(qp, qq, engine)
        return _norm(resid, engine, seed + n, dense_limit)

    return _scan_points("dgr_scan", ns, point)


def remainder_scan(p: GammaPolynomial, q: GammaPolynomial, n_range, engine: str = "dense",
                   seed: int = 0, dense_limit: int = DENSE_DIM_LIMIT) -> ScanResult:
    """Norm of (plain product of embeddings) minus (canonical representative)."""
    ns = _range_list(n_range)
    pq = p * q

    def point(n):
        resid = naive_product(pq, n, engine=engine, dense_limit=dense_limit) \
            - quantize(pq, n, engine=engine, dense_limit=dense_limit)
        return _norm(resid, engine, seed + n, dense_limit)

    return _scan_points("remainder_scan", ns, point)


def _embed_average_implicit(op: ImplicitOperator, nprime: int) -> ImplicitOperator:
    """Cyclic average of I^{N'-N} (x) op on a longer chain, term by term."""
    offset = nprime - op.sites
    terms = []
    for t in op.terms:
        if not t.placements:
            terms.append(PlacedTerm(t.coeff, ()))
            continue
        for shift in range(nprime):
            placed = tuple(sorted(
                ((pos + offset - 1 - shift) % nprime + 1, m) for pos, m in t.placements))
            terms.append(PlacedTerm(t.coeff / nprime, placed))
    return ImplicitOperator(op.kappa, nprime, tuple(terms))


def consistency_scan(a: LocalTensor, n_embed: int, nprime_range, engine: str = "dense",
                     seed: int = 0, dense_limit: int = DENSE_DIM_LIMIT) -> ScanResult:
    """How far re-embedding an averaged block differs from direct embedding."""
    ns = [n for n in _range_list(nprime_range)]
    if any(n < n_embed for n in ns):
        raise ValueError("every target length must be at least the source length")
    basis = build_basis(a.kappa)
    from .symbolic import _embed_terms  # implicit embedding of a coefficient map

    if engine == "dense":
        base = gamma_embed(a.to_matrix(basis), n_embed, a.kappa)
    else:
        base = ImplicitOperator(a.kappa, n_embed, tuple(_embed_terms(a, n_embed, basis)))

    def point(nprime):
        if engine == "dense":
            resid = embed_average(base, nprime) - gamma_embed(a.to_matrix(basis), nprime, a.kappa)
        else:
            direct = ImplicitOperator(a.kappa, nprime, tuple(_embed_terms(a, nprime, basis)))
            resid = _embed_average_implicit(base, nprime) - direct
        return _norm(resid, engine, seed + nprime, dense_limit)

    bound_c = 2.0 * max(a.degree - 1, 0) * a.opnorm(basis)
    return _scan_points("consistency_scan", ns, point,
                        extras={"n_embed": n_embed, "bound": bound_c / max(n_embed, 1)})


def axiom_scan(p: GammaPolynomial, q: GammaPolynomial, r: GammaPolynomial, n_range,
               engine: str = "dense", seed: int = 0,
               dense_limit: int = DENSE_DIM_LIMIT) -> tuple[ScanResult, ScanResult]:
    """Leibniz and Jacobi residual scans.

    Leibniz rows evaluate iN[P, QR] - iN[P,Q]R - Q iN[P,R] on the quantized
    matrices, a commutator identity that must vanish identically.  Jacobi
    rows evaluate the semiclassical combination
    iN[P, Q_N({q,r})] - iN[Q_N({p,q}), R] - iN[Q, Q_N({p,r})], which the
    closed-form bracket makes exactly zero for plain generators and which
    decays like 1/N for composite words.
    """
    ns = _range_list(n_range)
    bqr, bpq, bpr = bracket(q, r), bracket(p, q), bracket(p, r)
    rows_l: list[tuple[int, float]] = []
    rows_j: list[tuple[int, float]] = []
    failures: dict[int, str] = {}
    for n in ns:
        try:
            qp = quantize(p, n, engine=engine, dense_limit=dense_limit)
            qq = quantize(q, n, engine=engine, dense_limit=dense_limit)
            qr = quantize(r, n, engine=engine, dense_limit=dense_limit)
            if engine == "dense":
                prod = DenseOperator(qp.kappa, n, qq.matrix @ qr.matrix)
            else:
                prod = qq @ qr
            comm_pq = (1j * n) * _commutator(qp, qq, engine)
            comm_pr = (1j * n) * _commutator(qp, qr, engine)
            lhs = (1j * n) * _commutator(qp, prod, engine)
            if engine == "dense":
                rhs = DenseOperator(qp.kappa, n,
                                    comm_pq.matrix @ qr.matrix + qq.matrix @ comm_pr.matrix)
            else:
                rhs = comm_pq @ qr + qq @ comm_pr
            rows_l.append((n, _norm(lhs - rhs, engine, seed + n, dense_limit)))
            qbqr = quantize(bqr, n, engine=engine, dense_limit=dense_limit)
            qbpq = quantize(bpq, n, engine=engine, dense_limit=dense_limit)
            qbpr = quantize(bpr, n, engine=engine, dense_limit=dense_limit)
            resid = (1j * n) * _commutator(qp, qbqr, engine) \
                - (1j * n) * _commutator(qbpq, qr, engine) \
                - (1j * n) * _commutator(qq, qbpr, engine)
            rows_j.append((n, _norm(resid, engine, seed + n, dense_limit)))
        except ConvergenceError as exc:
            rows_l.append((n, float("nan")))
            rows_j.append((n, float("nan")))
            failures[n] = str(exc)
    extras = {"failures": failures} if failures else {}
    return (_result("axiom_scan_leibniz", rows_l, dict(extras)),
            _result("axiom_scan_jacobi", rows_j, dict(extras)))


def _grid_value(component, combo, basis) -> complex:
    val = 0.0 + 0j
    for idx, c in component.coeffs.items():
        prod = c
        for st, k in zip(combo, idx):
            prod *= st(basis.elements[k])
            if prod == 0:
                break
        val += prod
    return val


def lowerbound_scan(d: CanonicalDecomposition, n_range, engine: str = "implicit",
                    seed: int = 0, dense_limit: int = DENSE_DIM_LIMIT,
                    grid=None) -> ScanResult:
    """Best product-state witness value for the quantized decomposition.

    Periodic patterns interleave trace-state deserts with windows of grid
    pure states sized to the first nonzero component; every row is a valid
    lower bound on the quantization norm at that length.
    """
    ns = _range_list(n_range)
    kappa = d.kappa
    basis = build_basis(kappa)
    grid = tuple(grid) if grid is not None else state_grid(kappa)
    poly = GammaPolynomial.from_decomposition(d)
    tau = SiteState.trace_state(kappa)
    ell = d.first_nonzero_degree()
    first_deg = 0 if ell is None else ell
    periods: list[int] = []
    if first_deg >= 1:
        periods.append(first_deg + 1)
        two_m = 2 * d.max_degree
        if two_m > 0 and two_m != first_deg + 1:
            periods.append(two_m)
    grid_max = 0.0
    if first_deg >= 1:
        comp = d.components[first_deg]
        for combo in itertools.product(grid, repeat=first_deg):
            grid_max = max(grid_max, abs(_grid_value(comp, combo, basis)))

    norms: dict[int, float] = {}

    def point(n):
        op = quantize(poly, n, engine="implicit")
        best = abs(evaluate_state(ProductStateSpec((), (tau,)), op))
        for period in periods:
            if period > n or first_deg < 1:
                continue
            rest = period - first_deg
            prefix = (tau,) * (n % period)
            for combo in itertools.product(grid, repeat=first_deg):
                spec = ProductStateSpec(prefix, (tau,) * rest + combo)
                best = max(best, abs(evaluate_state(spec, op)))
        norms[n] = _norm(quantize(poly, n, engine=engine, dense_limit=dense_limit)
                         if engine == "dense" else op, engine, seed + n, dense_limit)
        return best

    extras = {"first_degree": first_deg, "max_degree": d.max_degree,
              "grid_max": grid_max,
              "witness_factor": 1.0 / (first_deg + 1) if first_deg >= 1 else 1.0}
    res = _scan_points("lowerbound_scan", ns, point, extras)
    out = dict(res.extras)
    out["norms"] = [(n, norms[n]) for n in sorted(norms)]
    return ScanResult(res.kind, res.rows, res.fit, res.fit_window,
                      res.extrapolated_limit, out)
