"""An explicit dispersion-free subensemble model for a single qubit.

Each hidden parameter value selects, for every measurement axis, one of the
two eigenprojectors; the assigned outcome is the operator's eigenvalue on
the selected projector.  Every assignment is spectrum-valued and
dispersion-free, the uniform average over the parameter reproduces the
quantum expectation exactly, and additivity of outcomes fails pointwise
for non-commuting pairs while holding after averaging: recombination, not
the individual subensembles, carries the quantum statistics.

The model is qubit-only by construction; higher dimensions are refused at
the boundary rather than silently mishandled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expectation_functionals import ExpectationFunctional, PureState, pure_state_expectation
from .operator_core import (
    HermitianOperator,
    PAULIS,
    ValidationError,
    as_hermitian,
)

LAMBDA_MIN = -0.5
LAMBDA_MAX = 0.5
# per-sample deltas above this count as additivity violations in reports
DELTA_TOL = 1e-9


class UnsupportedDimensionError(ValidationError):
    """The subensemble model is defined for dimension 2 only."""


@dataclass(frozen=True)
class HiddenParameter:
    """Uniformly distributed hidden parameter on [-1/2, 1/2]."""

    value: float

    def __post_init__(self):
        if not (LAMBDA_MIN <= self.value <= LAMBDA_MAX):
            raise ValidationError(
                f"hidden parameter {self.value!r} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]"
            )


def _lambda_value(lam) -> float:
    if isinstance(lam, HiddenParameter):
        return lam.value
    return HiddenParameter(float(lam)).value


def _require_qubit(dim: int):
    if dim != 2:
        raise UnsupportedDimensionError(
            f"the subensemble model is qubit-only; got dimension {dim}"
        )


def _axis_decomposition(op: HermitianOperator):
    """Split a 2x2 Hermitian operator into trace part, signed weight, and axis.

    The axis is the canonical representative of the Pauli direction: its
    first nonzero component is positive, and the weight carries the sign.
    All operators sharing one measurement axis therefore share one axis
    vector, so the selector below treats them with a single sign variable.
    """
    m = op.matrix
    base = float(np.trace(m).real) / 2.0
    v = np.array([float(np.trace(m @ s).real) / 2.0 for s in PAULIS])
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return base, 0.0, np.zeros(3)
    axis = v / norm
    weight = norm
    for component in axis:
        if component > 0.0:
            break
        if component < 0.0:
            axis = -axis
            weight = -norm
            break
    return base, weight, axis


def _selector(phi: PureState, lam: float, axis: np.ndarray) -> float:
    # sign(0) is +1 by convention; the tie set has measure zero and never
    # moves an average
    threshold = lam + 0.5 * float(phi.bloch() @ axis)
    return 1.0 if threshold >= 0.0 else -1.0


def assign_value(phi: PureState, lam, r) -> float:
    """Deterministic outcome of measuring r in the subensemble (phi, lam).

    The operator splits as base + weight * (axis . sigma); the returned
    value is base + weight * s with s the selector sign for that axis, i.e.
    always one of the two eigenvalues.  Multiples of the identity just
    return their scale.
    """
    r = as_hermitian(r)
    _require_qubit(r.dim)
    _require_qubit(phi.dim)
    lam = _lambda_value(lam)
    base, weight, axis = _axis_decomposition(r)
    if weight == 0.0:
        return base
    return base + weight * _selector(phi, lam, axis)


def average_over_lambda(phi: PureState, r) -> float:
    """Closed-form uniform average of assign_value over the parameter range.

    The selector integrates to (Bloch . axis), so the average collapses to
    the quantum expectation of r in phi; no sampling is involved.
    """
    r = as_hermitian(r)
    _require_qubit(r.dim)
    _require_qubit(phi.dim)
    base, weight, axis = _axis_decomposition(r)
    return base + weight * float(phi.bloch() @ axis)


@dataclass(frozen=True)
class ValueAssignment:
    """The outcome map of one (phi, lambda) subensemble.

    Spectrum-valued and dispersion-free: squares (and any readout function)
    of an operator share its axis, hence its selector sign, so outcomes
    compose through functions instead of merely averaging correctly.
    """

    phi: PureState
    lam: HiddenParameter

    def __call__(self, r) -> float:
        return assign_value(self.phi, self.lam, r)


def subensemble_functional(phi: PureState, lam) -> ExpectationFunctional:
    """Wrap one subensemble's outcome map as a black-box functional.

    The wrapped map is normalized (identity maps to 1) but nowhere a trace
    form: reconstruction from it must end in an additivity verdict, never
    a normalization one.
    """
    _require_qubit(phi.dim)
    lam = HiddenParameter(_lambda_value(lam))
    assignment = ValueAssignment(phi, lam)
    return ExpectationFunctional(
        2, assignment, label=f"subensemble(lambda={lam.value})"
    )


def lambda_grid(size: int) -> list[HiddenParameter]:
    """Uniform deterministic grid over the parameter range, endpoints included."""
    if size < 2:
        raise ValidationError("lambda grid needs at least 2 points")
    return [
        HiddenParameter(float(x)) for x in np.linspace(LAMBDA_MIN, LAMBDA_MAX, size)
    ]


@dataclass(frozen=True)
class LambdaSample:
    lam: float
    value_r: float
    value_s: float
    value_sum: float

    @property
    def delta(self) -> float:
        return self.value_sum - self.value_r - self.value_s


@dataclass(frozen=True)
class SubensembleReport:
    """Per-parameter outcomes for a pair of quantities and their sum.

    ``avg_delta`` comes from the closed-form averages, which are linear,
    so it vanishes up to roundoff no matter how badly the per-parameter
    deltas behave; ``violation_fraction`` is the share of grid points with
    a nonzero delta.
    """

    phi: PureState
    description_r: str
    description_s: str
    samples: tuple[LambdaSample, ...]
    average_r: float
    average_s: float
    average_sum: float
    quantum_r: float
    quantum_s: float
    quantum_sum: float

    @property
    def avg_delta(self) -> float:
        return self.average_sum - self.average_r - self.average_s

    @property
    def violation_fraction(self) -> float:
        if not self.samples:
            return 0.0
        bad = sum(1 for sample in self.samples if abs(sample.delta) > DELTA_TOL)
        return bad / len(self.samples)

    def to_json(self) -> dict:
        return {
            "phi": [[float(z.real), float(z.imag)] for z in self.phi.vector],
            "pairs": [
                {
                    "lambda": sample.lam,
                    "vR": sample.value_r,
                    "vS": sample.value_s,
                    "vRplusS": sample.value_sum,
                    "delta": sample.delta,
                }
                for sample in self.samples
            ],
            "avg_delta": self.avg_delta,
            "violation_fraction": self.violation_fraction,
        }


def additivity_violation_report(
    phi: PureState,
    r,
    s,
    lambdas,
    description_r: str = "R",
    description_s: str = "S",
) -> SubensembleReport:
    """Tabulate outcome additivity of r, s, and r + s across subensembles.

    The sum is formed at the operator level, the only meaning available
    when r and s cannot be measured together; each row reports the three
    assigned outcomes and their mismatch.
    """
    r = as_hermitian(r)
    s = as_hermitian(s)
    _require_qubit(r.dim)
    _require_qubit(s.dim)
    _require_qubit(phi.dim)
    combined = r + s
    samples = []
    for lam in lambdas:
        lam = _lambda_value(lam)
        samples.append(
            LambdaSample(
                lam=lam,
                value_r=assign_value(phi, lam, r),
                value_s=assign_value(phi, lam, s),
                value_sum=assign_value(phi, lam, combined),
            )
        )
    return SubensembleReport(
        phi=phi,
        description_r=description_r,
        description_s=description_s,
        samples=tuple(samples),
        average_r=average_over_lambda(phi, r),
        average_s=average_over_lambda(phi, s),
        average_sum=average_over_lambda(phi, combined),
        quantum_r=pure_state_expectation(phi, r),
        quantum_s=pure_state_expectation(phi, s),
        quantum_sum=pure_state_expectation(phi, combined),
    )
