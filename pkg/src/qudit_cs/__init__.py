"""Compressed-sensing state tomography for qudits of any dimension.

Operator bases and coherence diagnostics, nuclear-norm recovery from sampled
expectation values, the ancilla swap embedding into a power-of-two register,
and a Monte Carlo harness comparing direct SU(d) sensing with Pauli sensing
on the ancilla.
"""
from .bases import (
    BasisKind, CoherenceReport, OperatorBasis, coherence, coherence_nu1, coherence_nu2,
    make_basis, pauli_basis, sud_basis, sud_pure_bound,
)
from .errors import BlockLeakageError, InvalidInputError, ResourceLimitError
from .matcore import (
    clamp_to_density, fidelity, frobenius_norm, hermitian_eig, nuclear_norm, operator_norm,
    psd_sqrt,
)
from .recovery import RecoveryResult, SolverOptions, SuccessCriterion, recover, recover_reference, success
from .sensing import MeasurementRecord, measure, sample_omega, sensing_adjoint
from .states import (
    EmbeddingPlan, build_swap_W, dilation_check, embed, extract, reference_state, plan_embedding,
    random_rank_r_density,
)

__version__ = "0.1.0"
