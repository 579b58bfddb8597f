"""Complex Hermitian matrix core: eigendecomposition, spectra, functional calculus.

All matrices are dense numpy complex128 arrays.  Dimensions are small by
design (a handful, not thousands), so the eigensolver is a self-contained
cyclic Jacobi iteration rather than a LAPACK call.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

HERM_TOL = 1e-10
EIG_TOL = 1e-10
FUNCALC_TOL = 1e-9
COMM_TOL = 1e-9
MAX_SWEEPS = 100

# eigenvalues closer than this are treated as one degenerate cluster
DEGENERACY_GAP = 1e-8
# lookup slack for table-backed functions evaluated at computed eigenvalues
TABLE_MATCH_TOL = 1e-6


class ValidationError(ValueError):
    """An input failed a structural precondition (shape, hermiticity, ...)."""


class NumericalError(RuntimeError):
    """An iterative routine failed to converge."""


class FunctionDomainError(ValueError):
    """A table-backed real function has no value at the requested point."""


def as_square_matrix(entries) -> np.ndarray:
    """Coerce nested lists / arrays to a square complex128 matrix.

    Rejects ragged, non-square, or zero-dimensional input.
    """
    try:
        m = np.array(entries, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"not a complex matrix: {exc}") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValidationError("matrix dimension must be at least 1")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix entries must be finite")
    return m


def frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def identity(dim: int) -> np.ndarray:
    if dim < 1:
        raise ValidationError("identity dimension must be at least 1")
    return np.eye(dim, dtype=np.complex128)


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
for _p in PAULIS:
    _p.flags.writeable = False


class HermitianOperator:
    """An n-by-n complex Hermitian matrix standing for a measurable quantity.

    Immutable after construction; hermiticity is enforced within HERM_TOL
    (relative Frobenius deviation).  Real linear combinations stay inside
    the class; anything that can leave it (matrix products, say) goes
    through the raw ``.matrix`` array.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        if isinstance(matrix, HermitianOperator):
            self._matrix = matrix._matrix
            return
        m = as_square_matrix(matrix)
        deviation = frobenius(m - m.conj().T)
        if deviation > HERM_TOL * max(1.0, frobenius(m)):
            raise ValidationError(
                f"matrix is not Hermitian (deviation {deviation:.3e})"
            )
        m.flags.writeable = False
        self._matrix = m

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self._matrix).real)

    def norm(self) -> float:
        return frobenius(self._matrix)

    def _require_same_dim(self, other: "HermitianOperator"):
        if self.dim != other.dim:
            raise ValidationError(
                f"dimension mismatch: {self.dim} vs {other.dim}"
            )

    def __add__(self, other):
        if not isinstance(other, HermitianOperator):
            return NotImplemented
        self._require_same_dim(other)
        return HermitianOperator(self._matrix + other._matrix)

    def __sub__(self, other):
        if not isinstance(other, HermitianOperator):
            return NotImplemented
        self._require_same_dim(other)
        return HermitianOperator(self._matrix - other._matrix)

    def __neg__(self):
        return HermitianOperator(-self._matrix)

    def __mul__(self, scalar):
        if not isinstance(scalar, numbers.Real):
            raise ValidationError("only real scalars preserve hermiticity")
        return HermitianOperator(self._matrix * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"

    def to_json(self) -> dict:
        return matrix_to_json(self._matrix)

    @classmethod
    def from_json(cls, obj: dict) -> "HermitianOperator":
        return cls(matrix_from_json(obj))


def as_hermitian(op) -> HermitianOperator:
    return op if isinstance(op, HermitianOperator) else HermitianOperator(op)


@dataclass(frozen=True)
class Spectrum:
    """Full eigensystem of a Hermitian operator.

    ``eigenvalues`` is ascending with multiplicity; column k of
    ``eigenvectors`` belongs to ``eigenvalues[k]`` and the columns are
    orthonormal.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        self.eigenvalues.flags.writeable = False
        self.eigenvectors.flags.writeable = False

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def projector(self, k: int) -> np.ndarray:
        v = self.eigenvectors[:, k]
        return np.outer(v, v.conj())

    def reconstruct(self) -> np.ndarray:
        """Sum of eigenvalue-weighted eigenprojectors."""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def _orthonormalize_block(block: np.ndarray) -> np.ndarray:
    # modified Gram-Schmidt; input columns are already near-orthonormal
    out = block.copy()
    for j in range(out.shape[1]):
        for k in range(j):
            out[:, j] -= (out[:, k].conj() @ out[:, j]) * out[:, k]
        out[:, j] /= np.linalg.norm(out[:, j])
    return out


def _regroup_degenerate(vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    start = 0
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[k] - vals[k - 1] > DEGENERACY_GAP:
            if k - start > 1:
                vecs[:, start:k] = _orthonormalize_block(vecs[:, start:k])
            start = k
    return vecs


def eigendecompose(op) -> Spectrum:
    """Diagonalize a Hermitian operator by cyclic Jacobi rotations.

    Returns all eigenpairs, eigenvalues ascending.  Raises NumericalError
    if the off-diagonal mass has not collapsed after MAX_SWEEPS sweeps
    (does not happen for finite Hermitian input; the guard names the
    offending matrix).
    """
    op = as_hermitian(op)
    a = np.array(op.matrix, dtype=np.complex128)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = frobenius(a)
    if scale > 0.0 and n > 1:
        stop = 1e-14 * scale
        skip = stop / (2 * n)
        for _sweep in range(MAX_SWEEPS):
            off = frobenius(a - np.diag(np.diag(a)))
            if off <= stop:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    r = abs(apq)
                    if r <= skip:
                        continue
                    phase = apq / r
                    theta = 0.5 * math.atan2(2.0 * r, (a[p, p] - a[q, q]).real)
                    c, s = math.cos(theta), math.sin(theta)
                    g = np.array(
                        [[c, -s * phase], [s * phase.conjugate(), c]],
                        dtype=np.complex128,
                    )
                    a[:, [p, q]] = a[:, [p, q]] @ g
                    a[[p, q], :] = g.conj().T @ a[[p, q], :]
                    v[:, [p, q]] = v[:, [p, q]] @ g
                    # zero by construction; clear rounding residue
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    a[p, p] = a[p, p].real
                    a[q, q] = a[q, q].real
        else:
            raise NumericalError(
                f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps "
                f"for matrix\n{np.array2string(op.matrix, precision=6)}"
            )
    vals = np.diag(a).real.copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = _regroup_degenerate(vals, v[:, order])
    return Spectrum(vals, vecs)


class RealFunction:
    """Total real-to-real map, applied to operators through the spectrum.

    Two representations: a polynomial (coefficient list, ascending powers)
    or a finite (point, value) table optionally backed by an evaluable
    rule.  A bare table must cover every point it is asked for; lookups
    tolerate TABLE_MATCH_TOL slack so computed eigenvalues match their
    intended table keys.
    """

    __slots__ = ("_coeffs", "_rule", "_table", "label")

    def __init__(self, *, coeffs=None, rule=None, table=None, label=""):
        if coeffs is None and rule is None and table is None:
            raise ValidationError("real function needs coefficients, a rule, or a table")
        self._coeffs = None if coeffs is None else [float(c) for c in coeffs]
        self._rule = rule
        self._table = None if table is None else {float(k): float(v) for k, v in table.items()}
        self.label = label

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], label: str = "") -> "RealFunction":
        coeffs = list(coeffs)
        if not coeffs:
            coeffs = [0.0]
        return cls(coeffs=coeffs, label=label or f"poly{tuple(coeffs)}")

    @classmethod
    def from_rule(cls, rule: Callable[[float], float], table: Mapping[float, float] | None = None,
                  label: str = "") -> "RealFunction":
        return cls(rule=rule, table=table, label=label or "rule")

    @classmethod
    def tabulated(cls, table: Mapping[float, float], label: str = "") -> "RealFunction":
        return cls(table=table, label=label or "table")

    @classmethod
    def indicator_outside(cls, values: Sequence[float], tol: float) -> "RealFunction":
        """1 away from the given points, 0 within tol of any of them."""
        pts = [float(x) for x in values]
        if tol < 0:
            raise ValidationError("tolerance must be non-negative")

        def rule(x: float) -> float:
            return 0.0 if any(abs(x - p) <= tol for p in pts) else 1.0

        return cls(rule=rule, label="indicator-outside-spectrum")

    @property
    def is_polynomial(self) -> bool:
        return self._coeffs is not None

    @property
    def coefficients(self) -> list[float] | None:
        return None if self._coeffs is None else list(self._coeffs)

    def evaluate(self, x: float) -> float:
        x = float(x)
        if self._coeffs is not None:
            acc = 0.0
            for c in reversed(self._coeffs):
                acc = acc * x + c
            return acc
        if self._table:
            key = min(self._table, key=lambda k: abs(k - x))
            if abs(key - x) <= TABLE_MATCH_TOL:
                return self._table[key]
        if self._rule is not None:
            return float(self._rule(x))
        raise FunctionDomainError(
            f"function {self.label or '<table>'} is undefined at {x!r}"
        )

    __call__ = evaluate

    def __repr__(self):
        return f"RealFunction({self.label})"


def apply_function(f: RealFunction, op) -> HermitianOperator:
    """Evaluate f on the spectrum: sum of f(eigenvalue) * eigenprojector.

    For polynomial f this agrees with the matrix polynomial within
    FUNCALC_TOL; for table-backed f every eigenvalue must be covered.
    """
    op = as_hermitian(op)
    spec = eigendecompose(op)
    vals = np.array([f.evaluate(x) for x in spec.eigenvalues], dtype=np.float64)
    m = (spec.eigenvectors * vals) @ spec.eigenvectors.conj().T
    return HermitianOperator(m)


def spectrum_contains(op, value: float, tol: float) -> bool:
    """Whether some eigenvalue of op lies within tol of value."""
    if tol < 0:
        raise ValidationError("tolerance must be non-negative")
    spec = eigendecompose(as_hermitian(op))
    return bool(np.min(np.abs(spec.eigenvalues - float(value))) <= tol)


def commutator_norm(a, b) -> float:
    """Frobenius norm of AB - BA; zero (within COMM_TOL) iff the pair commutes."""
    a = as_hermitian(a)
    b = as_hermitian(b)
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return frobenius(a.matrix @ b.matrix - b.matrix @ a.matrix)


def commutes(a, b, tol: float = COMM_TOL) -> bool:
    a = as_hermitian(a)
    b = as_hermitian(b)
    return commutator_norm(a, b) <= tol * max(1.0, a.norm() * b.norm())


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianOperator:
    """Standard complex Gaussian entries, symmetrized to (G + G*)/2."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    g *= scale / math.sqrt(2.0)
    return HermitianOperator((g + g.conj().T) / 2.0)


def matrix_to_json(m: np.ndarray) -> dict:
    """Serialize to the shared wire format {"dim": n, "entries": [[[re, im], ...], ...]}."""
    m = as_square_matrix(m)
    return {
        "dim": int(m.shape[0]),
        "entries": [
            [[float(z.real), float(z.imag)] for z in row] for row in m
        ],
    }


def matrix_from_json(obj) -> np.ndarray:
    """Parse the shared matrix wire format, rejecting non-square or ragged data."""
    if not isinstance(obj, Mapping):
        raise ValidationError("matrix JSON must be an object with 'dim' and 'entries'")
    try:
        dim = int(obj["dim"])
        entries = obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    if dim < 1:
        raise ValidationError("matrix JSON 'dim' must be at least 1")
    if not isinstance(entries, Sequence) or len(entries) != dim:
        raise ValidationError("matrix JSON 'entries' must have exactly 'dim' rows")
    rows = []
    for row in entries:
        if not isinstance(row, Sequence) or len(row) != dim:
            raise ValidationError("matrix JSON rows must each have exactly 'dim' cells")
        cells = []
        for cell in row:
            if (not isinstance(cell, Sequence)) or isinstance(cell, str) or len(cell) != 2:
                raise ValidationError("matrix JSON cells must be [re, im] pairs")
            re, im = cell
            if not isinstance(re, numbers.Real) or not isinstance(im, numbers.Real):
                raise ValidationError("matrix JSON cell parts must be real numbers")
            cells.append(complex(float(re), float(im)))
        rows.append(cells)
    return as_square_matrix(rows)
