"""Symmetrized products of jointly measurable quantities and their identity chain.

The physical product of two jointly measurable quantities maps to the
symmetrized operator product (RS + SR)/2.  Iterating that map over nested
products of two generic symbols and equating the images of equal
quantities forces (RS - SR)^2 = 0, i.e. the operators commute.  This
module replays that derivation in exact rational arithmetic, checks each
expansion against hard-coded fixture polynomials, and complements it with
the constructive converse: two commuting Hermitian operators are both
functions of one common generator, built here by simultaneous
diagonalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ncpoly import NcPolynomial, evaluate_nc
from .operator_core import (
    COMM_TOL,
    DEGENERACY_GAP,
    HermitianOperator,
    RealFunction,
    ValidationError,
    apply_function,
    as_hermitian,
    commutator_norm,
    eigendecompose,
    frobenius,
)


def symmetrized_product(a: NcPolynomial, b: NcPolynomial) -> NcPolynomial:
    """(ab + ba)/2 in the free algebra; commutative and bilinear by construction."""
    return (a * b + b * a) / 2


@dataclass(frozen=True)
class SymmetrizedProductExpr:
    """Binary tree of physical products; leaves are symbols.

    Each node's image under the symmetrized-product map is
    (image(left) * image(right) + image(right) * image(left)) / 2,
    computed exactly.
    """

    name: str | None = None
    left: "SymmetrizedProductExpr | None" = None
    right: "SymmetrizedProductExpr | None" = None

    @classmethod
    def leaf(cls, name: str) -> "SymmetrizedProductExpr":
        return cls(name=name)

    @classmethod
    def product(cls, left: "SymmetrizedProductExpr",
                right: "SymmetrizedProductExpr") -> "SymmetrizedProductExpr":
        return cls(left=left, right=right)

    @property
    def is_leaf(self) -> bool:
        return self.name is not None

    def image(self) -> NcPolynomial:
        if self.is_leaf:
            return NcPolynomial.symbol(self.name)
        return symmetrized_product(self.left.image(), self.right.image())

    def __str__(self):
        if self.is_leaf:
            return self.name
        sides = []
        for side in (self.left, self.right):
            sides.append(str(side) if side.is_leaf else f"({side})")
        return "".join(sides)


def _poly(spec: dict[str, tuple[int, int]]) -> NcPolynomial:
    return NcPolynomial(
        {tuple(word): Fraction(num, den) for word, (num, den) in spec.items()}
    )


# Fixture polynomials: the printed right-hand sides of each expansion,
# entered term by term (never recomputed through the product map) so the
# chain check catches both engine bugs and transcription drift.
FIXTURE_RS = _poly({"RS": (1, 2), "SR": (1, 2)})
FIXTURE_RRS = _poly({"RRS": (1, 4), "RSR": (1, 2), "SRR": (1, 4)})
FIXTURE_SRRS = _poly({
    "SRRS": (1, 4), "SRSR": (1, 4), "RSRS": (1, 4), "SSRR": (1, 8), "RRSS": (1, 8),
})
FIXTURE_RSSR = _poly({
    "RSSR": (1, 4), "RSRS": (1, 4), "SRSR": (1, 4), "RRSS": (1, 8), "SSRR": (1, 8),
})
FIXTURE_RSRS = _poly({
    "RSRS": (1, 4), "SRSR": (1, 4), "RSSR": (1, 4), "SRRS": (1, 4),
})
FIXTURE_SSRR = _poly({"RRSS": (1, 2), "SSRR": (1, 2)})
FIXTURE_SSRR_REDUCED = _poly({"RSSR": (1, 2), "SRRS": (1, 2)})

# R^2S^2 + S^2R^2 - (RS)(SR) - (SR)(RS): zero exactly when squared products
# of a jointly measurable pair are consistent.
SQUARE_PRODUCT_DEFICIT = _poly({
    "RRSS": (1, 1), "SSRR": (1, 1), "RSSR": (-1, 1), "SRRS": (-1, 1),
})
# (RS)^2 + (SR)^2 - (RS)(SR) - (SR)(RS): equals (RS - SR)^2 identically in
# the free algebra, so its matrix value certifies non-commutation.
CROSS_SQUARE_DEFICIT = _poly({
    "RSRS": (1, 1), "SRSR": (1, 1), "RSSR": (-1, 1), "SRRS": (-1, 1),
})


@dataclass(frozen=True)
class ChainStep:
    name: str
    description: str
    computed: str
    expected: str
    passed: bool


@dataclass(frozen=True)
class ChainReport:
    steps: tuple[ChainStep, ...]

    @property
    def passed(self) -> bool:
        return all(step.passed for step in self.steps)

    def failures(self) -> list[str]:
        return [step.name for step in self.steps if not step.passed]


def verify_appendix1_chain() -> ChainReport:
    """Replay the identity chain that forces jointly measurable pairs to commute.

    Every step is an exact free-algebra computation compared against its
    fixture; the two bridging identities record that equating different
    routes to the same physical quantity leaves no room for a nonzero
    (RS - SR)^2.
    """
    r = SymmetrizedProductExpr.leaf("R")
    s = SymmetrizedProductExpr.leaf("S")
    prod = SymmetrizedProductExpr.product

    rs = prod(r, s)
    r_rs = prod(r, rs)
    s_r_rs = prod(s, r_rs)
    r_s_sr = prod(r, prod(s, prod(s, r)))
    rs_sq = prod(rs, rs)
    sq_prod = prod(prod(r, r), prod(s, s))

    steps = []

    def check(name, description, computed, expected):
        steps.append(ChainStep(
            name=name,
            description=description,
            computed=str(computed),
            expected=str(expected),
            passed=computed == expected,
        ))

    check("RS", "image of the product of R and S",
          rs.image(), FIXTURE_RS)
    check("R(RS)", "image of the nested product R(RS)",
          r_rs.image(), FIXTURE_RRS)
    check("S(R(RS))", "image of the nested product S(R(RS))",
          s_r_rs.image(), FIXTURE_SRRS)
    check("R(S(SR))", "image of the nested product R(S(SR))",
          r_s_sr.image(), FIXTURE_RSSR)
    check("(RS)(RS)", "image of the squared product (RS)^2",
          rs_sq.image(), FIXTURE_RSRS)

    # S(R(RS)), R(S(SR)) and (RS)^2 are one and the same quantity, so the
    # residual of their images must be a multiple of the square-product
    # deficit; equate them and R^2S^2 + S^2R^2 = (RS)(SR) + (SR)(RS) follows.
    residual = s_r_rs.image() + r_s_sr.image() - 2 * rs_sq.image()
    check("square-product identity",
          "S(R(RS)) + R(S(SR)) - 2(RS)^2 reduces to the square-product deficit / 4",
          residual, SQUARE_PRODUCT_DEFICIT / 4)

    check("R^2S^2", "image of the product of R^2 and S^2",
          sq_prod.image(), FIXTURE_SSRR)

    # Rewriting R^2S^2 + S^2R^2 through the square-product identity gives
    # the reduced form [(RS)(SR) + (SR)(RS)]/2 for the same quantity.
    check("R^2S^2 reduced",
          "R^2S^2 image minus the imposed deficit / 2 equals [(RS)(SR)+(SR)(RS)]/2",
          sq_prod.image() - SQUARE_PRODUCT_DEFICIT / 2, FIXTURE_SSRR_REDUCED)

    # (RS)^2 and R^2S^2 are also the same quantity, so the reduced form must
    # match the (RS)^2 image: the gap is exactly -1/4 of the cross-square
    # deficit, forcing (RS)(SR) + (SR)(RS) = (RS)^2 + (SR)^2.
    check("cross-square identity",
          "reduced R^2S^2 minus the (RS)^2 image is -(cross-square deficit)/4",
          FIXTURE_SSRR_REDUCED - rs_sq.image(), -(CROSS_SQUARE_DEFICIT / 4))

    # Free-algebra expansion, no imposed relations: (RS - SR)^2 equals the
    # cross-square deficit, hence vanishes once the chain is imposed.
    sym_r = NcPolynomial.symbol("R")
    sym_s = NcPolynomial.symbol("S")
    comm = sym_r * sym_s - sym_s * sym_r
    check("commutator square vanishes",
          "(RS - SR)^2 expands to the cross-square deficit, which the chain forces to 0",
          comm * comm, CROSS_SQUARE_DEFICIT)

    return ChainReport(steps=tuple(steps))


@dataclass(frozen=True)
class CommonGenerator:
    """Operator T with readout tables turning T-outcomes into R- and S-values.

    Joint eigenspaces carry distinct integer labels; T is the label-weighted
    sum of joint projectors, f_table maps labels to R's eigenvalue on that
    space and g_table to S's.
    """

    t: HermitianOperator
    f_table: dict[int, float]
    g_table: dict[int, float]

    def f_function(self) -> RealFunction:
        return RealFunction.tabulated(self.f_table, label="readout-f")

    def g_function(self) -> RealFunction:
        return RealFunction.tabulated(self.g_table, label="readout-g")

    def reconstruct(self) -> tuple[HermitianOperator, HermitianOperator]:
        return (
            apply_function(self.f_function(), self.t),
            apply_function(self.g_function(), self.t),
        )


def _clusters(values: np.ndarray) -> list[tuple[int, int]]:
    # ascending input; split where the gap exceeds the degeneracy threshold
    bounds = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > DEGENERACY_GAP:
            bounds.append((start, k))
            start = k
    return bounds


def common_generator(r, s, tol: float = COMM_TOL) -> CommonGenerator:
    """Simultaneously diagonalize a commuting pair and label joint eigenspaces.

    Diagonalizes r, then the restriction of s inside each eigenvalue
    cluster of r.  Raises ValidationError (carrying the commutator norm)
    when the pair does not commute within tol.
    """
    r = as_hermitian(r)
    s = as_hermitian(s)
    if r.dim != s.dim:
        raise ValidationError(f"dimension mismatch: {r.dim} vs {s.dim}")
    cnorm = commutator_norm(r, s)
    if cnorm > tol * max(1.0, r.norm() * s.norm()):
        raise ValidationError(
            f"operators do not commute: commutator norm {cnorm:.6e}"
        )
    spec_r = eigendecompose(r)
    t = np.zeros((r.dim, r.dim), dtype=np.complex128)
    f_table: dict[int, float] = {}
    g_table: dict[int, float] = {}
    label = 0
    for i0, i1 in _clusters(spec_r.eigenvalues):
        basis = spec_r.eigenvectors[:, i0:i1]
        r_val = float(np.mean(spec_r.eigenvalues[i0:i1]))
        block = basis.conj().T @ s.matrix @ basis
        sub = eigendecompose(HermitianOperator((block + block.conj().T) / 2))
        for j0, j1 in _clusters(sub.eigenvalues):
            joint = basis @ sub.eigenvectors[:, j0:j1]
            t += label * (joint @ joint.conj().T)
            f_table[label] = r_val
            g_table[label] = float(np.mean(sub.eigenvalues[j0:j1]))
            label += 1
    return CommonGenerator(HermitianOperator(t), f_table, g_table)


@dataclass(frozen=True)
class JointMeasurabilityVerdict:
    """Commutativity verdict with either a common generator or numeric certificates."""

    jointly_measurable: bool
    commutator_norm: float
    commutator_square_norm: float
    square_product_deficit_norm: float
    generator: CommonGenerator | None

    @property
    def verdict(self) -> str:
        return "jointly measurable" if self.jointly_measurable else "not jointly measurable"


def joint_measurability_witness(r, s, tol: float = COMM_TOL) -> JointMeasurabilityVerdict:
    """Decide joint measurability of two Hermitian operators.

    Commuting pairs come back with a CommonGenerator.  Non-commuting pairs
    carry two certificates: the commutator norm, and the Frobenius norm of
    the cross-square deficit (RS)^2 + (SR)^2 - (RS)(SR) - (SR)(RS), which
    equals ||(RS - SR)^2|| identically and is strictly positive exactly
    when the pair fails to commute.  The square-product deficit
    R^2S^2 + S^2R^2 - (RS)(SR) - (SR)(RS) is reported alongside.
    """
    r = as_hermitian(r)
    s = as_hermitian(s)
    if r.dim != s.dim:
        raise ValidationError(f"dimension mismatch: {r.dim} vs {s.dim}")
    bindings = {"R": r, "S": s}
    cnorm = commutator_norm(r, s)
    cross = frobenius(evaluate_nc(CROSS_SQUARE_DEFICIT, bindings))
    square = frobenius(evaluate_nc(SQUARE_PRODUCT_DEFICIT, bindings))
    if cnorm <= tol * max(1.0, r.norm() * s.norm()):
        return JointMeasurabilityVerdict(
            jointly_measurable=True,
            commutator_norm=cnorm,
            commutator_square_norm=cross,
            square_product_deficit_norm=square,
            generator=common_generator(r, s, tol=tol),
        )
    return JointMeasurabilityVerdict(
        jointly_measurable=False,
        commutator_norm=cnorm,
        commutator_square_norm=cross,
        square_product_deficit_norm=square,
        generator=None,
    )
