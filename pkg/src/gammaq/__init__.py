"""Cyclically averaged spin-chain observables.

Single-site basis algebra, chain operators with cyclic-shift averaging,
canonical (end-traceless) decompositions, the commutative word algebra with
its Poisson bracket, quantization maps, Hamiltonian builders, and the scan
harness behind the `gammaq` command line tool.
"""

from .chain import (ConvergenceError, DenseOperator, ImplicitOperator,
                    PlacedTerm, ProductStateSpec, embed_average, evaluate_state,
                    gamma_average, gamma_embed, gamma_shift, kron_place, matvec,
                    spectral_norm)
from .models import (LocalInteractionSpec, curie_weiss_matrix, heisenberg_matrix,
                     heisenberg_symbol, local_interaction_matrix,
                     local_interaction_symbol)
from .poisson import bracket, bracket_generators
from .scans import (ScanResult, axiom_scan, consistency_scan, dgr_scan,
                    lowerbound_scan, norm_scan, remainder_scan)
from .site import (SiteBasis, SiteState, build_basis, expand, normalized_trace,
                   pauli, reconstruct, state_grid, traceless_project)
from .symbolic import (CanonicalDecomposition, GammaPolynomial, GammaWord,
                       IrreducibleTensor, LocalTensor, decompose, is_irreducible,
                       naive_product, poly_adjoint, poly_is_zero, poly_max_coeff,
                       poly_mul, quantize, recompose, word_make)

__version__ = "0.1.0"
