"""Toolkit for dispersion-free ensembles and Hermitian-operator identities.

Reconstructs density matrices from black-box expectation functionals,
produces dispersion witnesses, verifies the symmetrized-product identity
chain for jointly measurable quantities, and runs an explicit qubit
hidden-variable model whose subensembles break expectation additivity
while their recombination restores it.
"""

from .operator_core import (
    COMM_TOL,
    EIG_TOL,
    FUNCALC_TOL,
    HERM_TOL,
    MAX_SWEEPS,
    FunctionDomainError,
    HermitianOperator,
    NumericalError,
    RealFunction,
    Spectrum,
    ValidationError,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    apply_function,
    commutator_norm,
    commutes,
    eigendecompose,
    identity,
    matrix_from_json,
    matrix_to_json,
    random_hermitian,
    spectrum_contains,
)
from .expectation_functionals import (
    DM_GAP,
    DM_TOL,
    LIN_TOL,
    AdditivityViolation,
    DensityMatrix,
    ExpectationFunctional,
    FunctionalViolation,
    LinearityReport,
    NormalizationViolation,
    PositivityViolation,
    PureState,
    canonical_noncommuting_probes,
    check_linearity,
    dispersion,
    dispersion_witness,
    hermitian_basis,
    max_eigenvalue_functional,
    pure_state_expectation,
    pure_state_functional,
    reconstruct_density,
    trace_functional,
)
from .ncpoly import NcPolynomial, evaluate_nc
from .symmetrized_algebra import (
    ChainReport,
    ChainStep,
    CommonGenerator,
    JointMeasurabilityVerdict,
    SymmetrizedProductExpr,
    common_generator,
    joint_measurability_witness,
    symmetrized_product,
    verify_appendix1_chain,
)
from .hidden_variables import (
    HiddenParameter,
    SubensembleReport,
    UnsupportedDimensionError,
    ValueAssignment,
    additivity_violation_report,
    assign_value,
    average_over_lambda,
    lambda_grid,
    subensemble_functional,
)
from .expressions import parse_expr, parse_hermitian, pretty
from .cli import run_command

__version__ = "0.1.0"
