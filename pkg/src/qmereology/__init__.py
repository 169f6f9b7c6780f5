"""Quasi-classical factorizations of finite-dimensional Hilbert spaces.

Given a Hamiltonian on ``C^D`` and a bipartite shape ``d_A x d_B``, the
package scores candidate tensor factorizations by how slowly they build up
entanglement (robustness) and how slowly a pointer observable spreads
(predictability), and searches factorization space for the minimum.
"""

__version__ = "0.1.0"

from .cpo import CandidatePointerObservable, PeakedStateSet, find_cpo, peaked_states
from .dynamics import (DecoherenceModel, PointerDistribution, ProductState,
                       decoherence_rates, pointer_distribution, reduced_evolution_terms,
                       s_lin_ddot, s_lin_oracle, s_pointer_ddot, s_pointer_ddot_qml,
                       variance_rate)
from .factorization import (HamiltonianSplit, factorization_unitary, gell_mann_basis,
                            split_hamiltonian, transform_hamiltonian)
from .gpo import (GpoSystem, SchwingerExpansion, ShiftProfile, build_gpo, collimation,
                  eom_residual, nested_commutator, schwinger_expand, shift_profile)
from .hilbert import (BipartiteShape, commutator, evolve, expectation, frobenius_norm,
                      linear_entropy, partial_trace, tensor_product)
from .mereology import (OscillatorModel, SweepConfig, SweepRecord, build_coupled_oscillators,
                        evaluate_factorization, sweep)

__all__ = [
    "BipartiteShape", "CandidatePointerObservable", "DecoherenceModel", "GpoSystem",
    "HamiltonianSplit", "OscillatorModel", "PeakedStateSet", "PointerDistribution",
    "ProductState", "SchwingerExpansion", "ShiftProfile", "SweepConfig", "SweepRecord",
    "build_coupled_oscillators", "build_gpo", "collimation", "commutator",
    "decoherence_rates", "eom_residual", "evaluate_factorization", "evolve", "expectation",
    "factorization_unitary", "find_cpo", "frobenius_norm", "gell_mann_basis",
    "linear_entropy", "nested_commutator", "partial_trace", "peaked_states",
    "pointer_distribution", "reduced_evolution_terms", "s_lin_ddot", "s_lin_oracle",
    "s_pointer_ddot", "s_pointer_ddot_qml", "schwinger_expand", "shift_profile",
    "split_hamiltonian", "sweep", "tensor_product", "transform_hamiltonian", "variance_rate",
]
