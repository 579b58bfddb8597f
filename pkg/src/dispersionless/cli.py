"""Command-line front end: parse operator expressions, run suites, emit reports.

Exit codes: 0 when every check a command runs passes, 1 when a
verification fails (a chain step breaks, a functional violates one of the
state axioms, no dispersion witness exists), 2 on usage, parse, or input
errors.  With ``--format json`` every report, including failures, is a
single JSON document with a top-level ``"schema": 1`` marker.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .expectation_functionals import (
    DensityMatrix,
    ExpectationFunctional,
    FunctionalViolation,
    LIN_TOL,
    PureState,
    hermitian_basis,
    max_eigenvalue_functional,
    pure_state_functional,
    reconstruct_density,
    trace_functional,
    dispersion_witness,
)
from .expressions import ExprError, parse_hermitian
from .hidden_variables import (
    additivity_violation_report,
    lambda_grid,
    subensemble_functional,
)
from .operator_core import (
    COMM_TOL,
    HermitianOperator,
    ValidationError,
    eigendecompose,
    matrix_from_json,
    matrix_to_json,
)
from .symmetrized_algebra import joint_measurability_witness, verify_appendix1_chain

SCHEMA_VERSION = 1
DEFAULT_SEED = 1234
SEED_ENV_VAR = "DISPERSIONLESS_SEED"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class CliInputError(Exception):
    """Bad command-line input outside the expression language."""


@dataclass(frozen=True)
class RunConfig:
    seed: int
    trials: int
    lambda_grid_size: int
    output_format: str
    lin_tol: float
    comm_tol: float

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        seed = args.seed
        if seed is None:
            raw = os.environ.get(SEED_ENV_VAR)
            if raw is None:
                seed = DEFAULT_SEED
            else:
                try:
                    seed = int(raw)
                except ValueError:
                    raise CliInputError(
                        f"{SEED_ENV_VAR} must be an integer, got {raw!r}"
                    ) from None
        if args.trials < 1:
            raise CliInputError("--trials must be at least 1")
        if args.lambda_grid_size < 2:
            raise CliInputError("--lambda-grid-size must be at least 2")
        return cls(
            seed=seed,
            trials=args.trials,
            lambda_grid_size=args.lambda_grid_size,
            output_format=args.output_format,
            lin_tol=args.lin_tol,
            comm_tol=args.comm_tol,
        )


def _payload(command: str, **fields) -> dict:
    out = {"schema": SCHEMA_VERSION, "command": command}
    out.update(fields)
    return out


def _print_json(payload: dict):
    print(json.dumps(payload, indent=2, sort_keys=True))


def _emit(config: RunConfig, payload: dict, lines: list[str]):
    if config.output_format == "json":
        _print_json(payload)
    else:
        for line in lines:
            print(line)


def _emit_error(config: RunConfig, command: str, exc: Exception, code: int) -> int:
    if config.output_format == "json":
        _print_json(_payload(
            command,
            passed=False,
            error={"type": type(exc).__name__, "message": str(exc)},
        ))
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def _fmt(value: float) -> str:
    return f"{value:.8f}"


def _matrix_lines(matrix, indent: str = "  ") -> list[str]:
    lines = []
    for row in matrix:
        cells = ", ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in row)
        lines.append(f"{indent}[{cells}]")
    return lines


def _strip_at(path: str) -> str:
    return path[1:] if path.startswith("@") else path


def _load_json_file(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliInputError(f"cannot read {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliInputError(f"{path!r} is not valid JSON: {exc}") from exc


def state_from_spec(spec: str) -> PureState:
    """A cardinal label (z+, x-, ...) or @file with a complex vector."""
    if spec.startswith("@"):
        obj = _load_json_file(spec[1:])
        if not isinstance(obj, list):
            raise CliInputError(
                f"state file {spec[1:]!r} must hold a JSON list of [re, im] pairs"
            )
        try:
            vec = [complex(float(re), float(im)) for re, im in obj]
            return PureState.normalized(vec)
        except (TypeError, ValueError, ValidationError) as exc:
            raise CliInputError(f"bad state vector in {spec[1:]!r}: {exc}") from exc
    try:
        return PureState.from_label(spec)
    except ValidationError as exc:
        raise CliInputError(str(exc)) from exc


def functional_from_spec(spec: str, dim: int) -> tuple[ExpectationFunctional, str]:
    """Mini-format: trace:@file | pure:<state> | maxeig | hv:<state>:<lambda>."""
    if spec == "maxeig":
        return max_eigenvalue_functional(dim), f"maxeig(dim={dim})"
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise CliInputError(
            f"unknown functional spec {spec!r}; expected trace:@file, "
            "pure:<state>, maxeig, or hv:<state>:<lambda>"
        )
    if kind == "trace":
        matrix = matrix_from_json(_load_json_file(_strip_at(rest)))
        return trace_functional(HermitianOperator(matrix)), f"trace:{rest}"
    if kind == "pure":
        return pure_state_functional(state_from_spec(rest)), f"pure:{rest}"
    if kind == "hv":
        state_spec, sep2, lam_text = rest.rpartition(":")
        if not sep2:
            raise CliInputError("hv functional needs a state and a lambda, e.g. hv:z+:0.3")
        try:
            lam = float(lam_text)
        except ValueError:
            raise CliInputError(f"bad lambda value {lam_text!r}") from None
        return subensemble_functional(state_from_spec(state_spec), lam), f"hv:{state_spec}:{lam}"
    raise CliInputError(f"unknown functional kind {kind!r}")


def cmd_verify_appendix1(args, config: RunConfig) -> int:
    report = verify_appendix1_chain()
    lines = ["symmetrized-product identity chain (exact rational arithmetic):"]
    for step in report.steps:
        status = "PASS" if step.passed else "FAIL"
        lines.append(f"  {status}  {step.name}: {step.description}")
        if not step.passed:
            lines.append(f"        computed: {step.computed}")
            lines.append(f"        expected: {step.expected}")
    verdict = (
        "all steps hold: jointly measurable quantities must commute"
        if report.passed else "chain broken"
    )
    lines.append(verdict)
    _emit(config, _payload(
        "verify-appendix1",
        passed=report.passed,
        steps=[{
            "name": s.name,
            "description": s.description,
            "computed": s.computed,
            "expected": s.expected,
            "passed": s.passed,
        } for s in report.steps],
    ), lines)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_reconstruct(args, config: RunConfig) -> int:
    functional, label = functional_from_spec(args.functional, args.dim)
    transcript = [
        {"probe": matrix_to_json(op.matrix), "value": functional(op)}
        for op in hermitian_basis(functional.dim)
    ]
    try:
        density = reconstruct_density(
            functional,
            probe_count=config.trials,
            seed=config.seed,
            lin_tol=config.lin_tol,
        )
    except FunctionalViolation as exc:
        lines = [
            f"functional {label}: {exc}",
            "no density matrix reproduces this functional",
        ]
        _emit(config, _payload(
            "reconstruct",
            passed=False,
            functional=label,
            verdict=exc.to_json(),
            transcript=transcript,
        ), lines)
        return EXIT_FAIL
    lines = [
        f"functional {label} is normalized, positive, and additive;",
        "recovered the density matrix of its trace form:",
    ]
    lines += _matrix_lines(density.matrix)
    _emit(config, _payload(
        "reconstruct",
        passed=True,
        functional=label,
        density=density.to_json(),
        transcript=transcript,
    ), lines)
    return EXIT_OK


def cmd_dispersion_witness(args, config: RunConfig) -> int:
    matrix = matrix_from_json(_load_json_file(_strip_at(args.density)))
    density = DensityMatrix(matrix)
    try:
        witness, value = dispersion_witness(density)
    except ValidationError as exc:
        _emit(config, _payload(
            "dispersion-witness",
            passed=False,
            error={"type": type(exc).__name__, "message": str(exc)},
        ), [f"no witness: {exc}"])
        return EXIT_FAIL
    lines = [
        f"dispersion {_fmt(value)} > 0 for the witness operator:",
    ]
    lines += _matrix_lines(witness.matrix)
    _emit(config, _payload(
        "dispersion-witness",
        passed=True,
        witness=matrix_to_json(witness.matrix),
        dispersion=value,
    ), lines)
    return EXIT_OK


def cmd_jointmeas(args, config: RunConfig) -> int:
    a = parse_hermitian(args.a)
    b = parse_hermitian(args.b)
    verdict = joint_measurability_witness(a, b, tol=config.comm_tol)
    generator_json = None
    lines = [
        f"A = {args.a}",
        f"B = {args.b}",
        f"verdict: {verdict.verdict}",
        f"commutator norm: {_fmt(verdict.commutator_norm)}",
    ]
    if verdict.jointly_measurable:
        gen = verdict.generator
        generator_json = {
            "t": matrix_to_json(gen.t.matrix),
            "f_table": {str(k): v for k, v in gen.f_table.items()},
            "g_table": {str(k): v for k, v in gen.g_table.items()},
        }
        lines.append("common generator T with readout tables:")
        lines += _matrix_lines(gen.t.matrix)
        lines.append(f"  f: {gen.f_table}")
        lines.append(f"  g: {gen.g_table}")
    else:
        lines.append(
            "certificate |(AB-BA)^2|: " + _fmt(verdict.commutator_square_norm)
        )
        lines.append(
            "square-product deficit |A^2B^2 + B^2A^2 - (AB)(BA) - (BA)(AB)|: "
            + _fmt(verdict.square_product_deficit_norm)
        )
    _emit(config, _payload(
        "jointmeas",
        passed=True,
        jointly_measurable=verdict.jointly_measurable,
        commutator_norm=verdict.commutator_norm,
        commutator_square_norm=verdict.commutator_square_norm,
        square_product_deficit_norm=verdict.square_product_deficit_norm,
        generator=generator_json,
    ), lines)
    return EXIT_OK


def cmd_hv_demo(args, config: RunConfig) -> int:
    phi = state_from_spec(args.phi)
    a = parse_hermitian(args.a)
    b = parse_hermitian(args.b)
    report = additivity_violation_report(
        phi, a, b, lambda_grid(config.lambda_grid_size),
        description_r=args.a, description_s=args.b,
    )
    lines = [
        f"subensemble outcomes for phi={args.phi}, R={args.a}, S={args.b} "
        f"over {config.lambda_grid_size} lambda points:",
        f"  per-point additivity violations: {report.violation_fraction:.4f} of grid",
        f"  averaged delta (must vanish):    {report.avg_delta:.3e}",
        "  lambda-averaged vs quantum expectations:",
        f"    R:     {_fmt(report.average_r)} vs {_fmt(report.quantum_r)}",
        f"    S:     {_fmt(report.average_s)} vs {_fmt(report.quantum_s)}",
        f"    R + S: {_fmt(report.average_sum)} vs {_fmt(report.quantum_sum)}",
    ]
    payload = _payload("hv-demo", passed=True, **report.to_json())
    _emit(config, payload, lines)
    return EXIT_OK


def cmd_spectrum(args, config: RunConfig) -> int:
    op = parse_hermitian(args.expr)
    eigenvalues = [float(v) for v in eigendecompose(op).eigenvalues]
    text = "[" + ", ".join(_fmt(v) for v in eigenvalues) + "]"
    _emit(config, _payload(
        "spectrum", passed=True, expr=args.expr, eigenvalues=eigenvalues,
    ), [text])
    return EXIT_OK


HANDLERS = {
    "verify-appendix1": cmd_verify_appendix1,
    "reconstruct": cmd_reconstruct,
    "dispersion-witness": cmd_dispersion_witness,
    "jointmeas": cmd_jointmeas,
    "hv-demo": cmd_hv_demo,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text",
                        dest="output_format", help="report format")
    common.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default: ${SEED_ENV_VAR} or {DEFAULT_SEED})")
    common.add_argument("--trials", type=int, default=32,
                        help="random probe count for functional checks")
    common.add_argument("--lambda-grid-size", type=int, default=1000,
                        help="grid points for subensemble reports")
    common.add_argument("--lin-tol", type=float, default=LIN_TOL,
                        help="tolerance for additivity and normalization checks")
    common.add_argument("--comm-tol", type=float, default=COMM_TOL,
                        help="tolerance for commutativity checks")

    parser = argparse.ArgumentParser(
        prog="dispersionless",
        description="Hermitian-operator toolkit: density-matrix reconstruction, "
                    "dispersion witnesses, the symmetrized-product identity chain, "
                    "and a qubit subensemble model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "verify-appendix1", parents=[common],
        help="verify the symmetrized-product identity chain in exact arithmetic",
    )

    p = sub.add_parser(
        "reconstruct", parents=[common],
        help="reconstruct a density matrix from an expectation functional",
    )
    p.add_argument("--functional", required=True,
                   help="trace:@file | pure:<state> | maxeig | hv:<state>:<lambda>")
    p.add_argument("--dim", type=int, default=2,
                   help="dimension for functionals that need one (maxeig)")

    p = sub.add_parser(
        "dispersion-witness", parents=[common],
        help="produce an operator with positive dispersion for a density matrix",
    )
    p.add_argument("--density", required=True, help="@file with a matrix in JSON form")

    p = sub.add_parser(
        "jointmeas", parents=[common],
        help="decide joint measurability of two operator expressions",
    )
    p.add_argument("--a", required=True, help="first operator expression")
    p.add_argument("--b", required=True, help="second operator expression")

    p = sub.add_parser(
        "hv-demo", parents=[common],
        help="per-lambda outcome additivity report for the qubit model",
    )
    p.add_argument("--phi", required=True, help="state spec: z+ z- x+ x- y+ y- or @file")
    p.add_argument("--a", required=True, help="first operator expression (dim 2)")
    p.add_argument("--b", required=True, help="second operator expression (dim 2)")

    p = sub.add_parser(
        "spectrum", parents=[common],
        help="eigenvalues of an operator expression",
    )
    p.add_argument("--expr", required=True, help="operator expression")

    return parser


def run_command(argv: list[str]) -> int:
    """Dispatch one command line; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        config = RunConfig.from_args(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return HANDLERS[args.command](args, config)
    except (ExprError, CliInputError, ValidationError) as exc:
        return _emit_error(config, args.command, exc, EXIT_USAGE)


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
