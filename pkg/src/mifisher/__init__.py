"""Measurement-induced Fisher information hierarchies for bipartite quantum states."""
from .channels import (
    FlowTrace,
    QuantumChannel,
    adjoint_apply,
    apply,
    cnot,
    conditional_unitary,
    depolarizing,
    flow_trace,
    local_channel,
    push_family,
)
from .errors import FisherError, SingularOutcome
from .fisher import adaptive_fi_explicit, classical_fi, cq_state, fi_marginal, qfi, qfi_pure, sld
from .hierarchy import HierarchyReport, OptimizerConfig, hierarchy_report, optimize_class
from .matcore import BipartiteDims, herm_eig, partial_trace
from .povm import AdaptivePovm, Povm, PovmClass
from .states import DensityMatrix, ParameterizedFamily, eval_derivative, generator_family, make_builtin

__version__ = "0.1.0"
