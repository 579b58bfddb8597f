"""Expression language and command-line behavior tests."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dispersionless.cli import run_command
from dispersionless.expressions import (
    BinOp,
    Call,
    Const,
    ExprEvalError,
    ExprSyntaxError,
    FileRef,
    Num,
    evaluate_matrix,
    parse_expr,
    parse_hermitian,
    pretty,
)
from dispersionless.operator_core import (
    SIGMA_X,
    frobenius,
    identity,
    matrix_to_json,
)

CORPUS = [
    "SX",
    "SY",
    "SZ",
    "I",
    "2*I",
    "0.5*SX",
    "SX + SY",
    "SX - SY",
    "SX + SY + SZ",
    "SX - SY - SZ",
    "SX * SY",
    "SX * SY * SZ",
    "0.5*SX + 0.5*SZ",
    "2*SX - 3*SZ",
    "(SX + SY)",
    "(SX + SY) * SZ",
    "SZ * (SX + SY)",
    "SX * (SY + SZ) * SX",
    "sq(SX)",
    "cube(SZ)",
    "abs(SZ)",
    "offspec(SX)",
    "sq(SX + SY)",
    "cube(SX - SY)",
    "sq(2*SX + 1*I)",
    "abs(SX + SZ)",
    "sq(sq(SZ))",
    "1.5",
    "1e-09",
    "2.5e3",
    "0.25",
    "1 + 2",
    "2 * 3 + 4",
    "2 * (3 + 4)",
    "SX + 2*I",
    "2*I - SX",
    "I + I",
    "3*I * SZ",
    "@u.json",
    "@dir/u2.json",
    "@u.json + SX",
    "2*@u.json",
    "sq(@u.json)",
    "SX - (SY - SZ)",
    "(SX - SY) - SZ",
    "SX * SX - I",
    "0.70710678*SX + 0.70710678*SY",
    "abs(3*SZ - 1*I)",
    "offspec(SX + SY)",
    "sq(SX) + sq(SY) - 2*I",
]


class TestParser:
    def test_simple_sum(self):
        tree = parse_expr("SX + SY")
        assert tree == BinOp("+", Const("SX"), Const("SY"))

    def test_weighted_sum(self):
        tree = parse_expr("0.5*SX + 0.5*SZ")
        assert tree == BinOp(
            "+",
            BinOp("*", Num(0.5), Const("SX")),
            BinOp("*", Num(0.5), Const("SZ")),
        )

    def test_call_node(self):
        tree = parse_expr("sq(SX + SY)")
        assert tree == Call("sq", BinOp("+", Const("SX"), Const("SY")))

    def test_file_ref(self):
        assert parse_expr("@m.json") == FileRef("m.json")

    def test_left_associativity(self):
        tree = parse_expr("SX - SY - SZ")
        assert tree == BinOp("-", BinOp("-", Const("SX"), Const("SY")), Const("SZ"))

    def test_syntax_error_has_position(self):
        with pytest.raises(ExprSyntaxError) as exc:
            parse_expr("SX + ")
        assert exc.value.line == 1
        assert exc.value.col == 6

    def test_unexpected_character(self):
        with pytest.raises(ExprSyntaxError) as exc:
            parse_expr("SX $ SY")
        assert exc.value.col == 4

    def test_trailing_input(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("SX SY")

    def test_unbalanced_paren(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("(SX + SY")

    @pytest.mark.parametrize("src", CORPUS)
    def test_round_trip(self, src):
        tree = parse_expr(src)
        assert parse_expr(pretty(tree)) == tree

    def test_corpus_size(self):
        assert len(CORPUS) >= 50


class TestEvaluation:
    def test_square_of_pauli_sum(self):
        # oracle: (sx + sy)^2 = 2I by the Pauli algebra
        m = evaluate_matrix(parse_expr("sq(SX + SY)"))
        assert frobenius(m - 2 * identity(2)) <= 1e-12

    def test_identity_adapts_to_context(self):
        m = evaluate_matrix(parse_expr("SX + 2*I"))
        assert frobenius(m - (SIGMA_X + 2 * identity(2))) <= 1e-15

    def test_bare_identity_defaults_to_dim2(self):
        m = evaluate_matrix(parse_expr("3*I"))
        assert m.shape == (2, 2)

    def test_bare_identity_with_other_dim(self):
        m = evaluate_matrix(parse_expr("3*I"), default_dim=4)
        assert frobenius(m - 3 * identity(4)) == 0.0

    def test_unknown_identifier(self):
        with pytest.raises(ExprEvalError, match="unknown identifier"):
            evaluate_matrix(parse_expr("SW"))

    def test_unknown_function(self):
        with pytest.raises(ExprEvalError, match="unknown function"):
            evaluate_matrix(parse_expr("log(SX)"))

    def test_scalar_plus_operator_rejected(self):
        with pytest.raises(ExprEvalError, match="bare scalar"):
            evaluate_matrix(parse_expr("1 + SX"))

    def test_bare_scalar_rejected(self):
        with pytest.raises(ExprEvalError, match="bare scalar"):
            evaluate_matrix(parse_expr("2 * 3"))

    def test_dimension_mismatch_at_evaluation(self, tmp_path):
        path = tmp_path / "m3.json"
        path.write_text(json.dumps(matrix_to_json(identity(3))))
        with pytest.raises(ExprEvalError, match="dimension mismatch"):
            evaluate_matrix(parse_expr(f"SX + @{path}"))

    def test_non_hermitian_rejected_where_required(self):
        with pytest.raises(ExprEvalError, match="not Hermitian"):
            parse_hermitian("SX * SY")

    def test_hermitian_product_allowed_as_matrix(self):
        m = evaluate_matrix(parse_expr("SX * SX"))
        assert frobenius(m - identity(2)) == 0.0

    def test_offspec_annihilates(self):
        m = evaluate_matrix(parse_expr("offspec(SX + SY)"))
        assert frobenius(m) <= 1e-12

    def test_abs_of_sigma_z(self):
        m = evaluate_matrix(parse_expr("abs(SZ)"))
        assert frobenius(m - identity(2)) <= 1e-12

    def test_missing_file(self):
        with pytest.raises(ExprEvalError, match="cannot read"):
            evaluate_matrix(parse_expr("@no/such/file.json"))


def run(capsys, *argv):
    code = run_command(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_density(tmp_path, matrix, name="u.json"):
    path = tmp_path / name
    path.write_text(json.dumps(matrix_to_json(matrix)))
    return str(path)


class TestCliCommands:
    def test_verify_appendix1_passes(self, capsys):
        code, out, _ = run(capsys, "verify-appendix1")
        assert code == 0
        assert out.count("PASS") == 10
        assert "FAIL" not in out

    def test_verify_appendix1_json(self, capsys):
        code, out, _ = run(capsys, "verify-appendix1", "--format", "json")
        assert code == 0
        data = json.loads(out)
        assert data["schema"] == 1
        assert data["passed"] is True
        assert len(data["steps"]) == 10

    def test_spectrum_text(self, capsys):
        code, out, _ = run(capsys, "spectrum", "--expr", "SX + SY")
        assert code == 0
        assert out.strip() == "[-1.41421356, 1.41421356]"

    def test_spectrum_json(self, capsys):
        code, out, _ = run(capsys, "spectrum", "--expr", "SZ", "--format", "json")
        data = json.loads(out)
        assert data["eigenvalues"] == [-1.0, 1.0]

    def test_hv_demo(self, capsys):
        code, out, _ = run(
            capsys, "hv-demo", "--phi", "z+", "--a", "SX", "--b", "SY",
            "--format", "json",
        )
        assert code == 0
        data = json.loads(out)
        assert data["violation_fraction"] == 1.0
        assert abs(data["avg_delta"]) <= 1e-12
        assert len(data["pairs"]) == 1000

    def test_hv_demo_grid_size(self, capsys):
        code, out, _ = run(
            capsys, "hv-demo", "--phi", "x+", "--a", "SZ", "--b", "SX",
            "--lambda-grid-size", "11", "--format", "json",
        )
        assert code == 0
        assert len(json.loads(out)["pairs"]) == 11

    def test_hv_demo_rejects_dim3(self, capsys, tmp_path):
        path = write_density(tmp_path, identity(3) / 3, "m3.json")
        code, _, err = run(capsys, "hv-demo", "--phi", "z+", "--a", f"@{path}", "--b", "SY")
        assert code == 2

    def test_reconstruct_trace_round_trip(self, capsys, tmp_path):
        rng = np.random.default_rng(8)
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        u = g @ g.conj().T
        u /= np.trace(u).real
        path = write_density(tmp_path, u)
        code, out, _ = run(
            capsys, "reconstruct", "--functional", f"trace:@{path}",
            "--format", "json",
        )
        assert code == 0
        data = json.loads(out)
        assert data["passed"] is True
        entries = data["density"]["entries"]
        got = np.array([[complex(c[0], c[1]) for c in row] for row in entries])
        assert frobenius(got - u) <= 1e-10
        assert len(data["transcript"]) == 9

    def test_reconstruct_maxeig_fails_additivity(self, capsys):
        code, out, _ = run(
            capsys, "reconstruct", "--functional", "maxeig", "--format", "json",
        )
        assert code == 1
        data = json.loads(out)
        assert data["passed"] is False
        assert data["verdict"]["kind"] == "b-prime-violation"

    def test_reconstruct_hv_fails_additivity_only(self, capsys):
        code, out, _ = run(
            capsys, "reconstruct", "--functional", "hv:z+:0.3", "--format", "json",
        )
        assert code == 1
        data = json.loads(out)
        assert data["verdict"]["kind"] == "b-prime-violation"

    def test_reconstruct_pure_state(self, capsys):
        code, out, _ = run(
            capsys, "reconstruct", "--functional", "pure:z+", "--format", "json",
        )
        assert code == 0
        data = json.loads(out)
        assert data["density"]["entries"][0][0] == [1.0, 0.0]

    def test_dispersion_witness_pure(self, capsys, tmp_path):
        path = write_density(tmp_path, np.diag([1.0, 0.0]))
        code, out, _ = run(
            capsys, "dispersion-witness", "--density", f"@{path}", "--format", "json",
        )
        assert code == 0
        data = json.loads(out)
        assert abs(data["dispersion"] - 0.25) <= 1e-12

    def test_dispersion_witness_dim1_fails(self, capsys, tmp_path):
        path = write_density(tmp_path, np.array([[1.0]]))
        code, out, _ = run(
            capsys, "dispersion-witness", "--density", f"@{path}", "--format", "json",
        )
        assert code == 1
        assert json.loads(out)["passed"] is False

    def test_jointmeas_commuting(self, capsys):
        code, out, _ = run(
            capsys, "jointmeas", "--a", "SZ", "--b", "2*SZ + 3*I", "--format", "json",
        )
        assert code == 0
        data = json.loads(out)
        assert data["jointly_measurable"] is True
        assert data["generator"] is not None
        assert set(data["generator"]) == {"t", "f_table", "g_table"}

    def test_jointmeas_noncommuting(self, capsys):
        code, out, _ = run(
            capsys, "jointmeas", "--a", "SX", "--b", "SY", "--format", "json",
        )
        assert code == 0
        data = json.loads(out)
        assert data["jointly_measurable"] is False
        assert data["generator"] is None
        assert abs(data["commutator_square_norm"] - 4 * math.sqrt(2)) <= 1e-12

    def test_jointmeas_non_hermitian_expr(self, capsys):
        code, _, err = run(capsys, "jointmeas", "--a", "SX * SY", "--b", "SZ")
        assert code == 2
        assert "Hermitian" in err

    def test_syntax_error_exit_code(self, capsys):
        code, _, err = run(capsys, "spectrum", "--expr", "SX +")
        assert code == 2
        assert "line 1" in err

    def test_error_as_json(self, capsys):
        code, out, _ = run(
            capsys, "spectrum", "--expr", "SX +", "--format", "json",
        )
        assert code == 2
        data = json.loads(out)
        assert data["passed"] is False
        assert data["error"]["type"] == "ExprSyntaxError"

    def test_unknown_subcommand(self, capsys):
        assert run_command(["no-such-command"]) == 2

    def test_missing_required_flag(self, capsys):
        assert run_command(["spectrum"]) == 2

    def test_bad_state_label(self, capsys):
        code, _, err = run(capsys, "hv-demo", "--phi", "q+", "--a", "SX", "--b", "SY")
        assert code == 2

    def test_bad_density_file(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"dim": 2, "entries": [[[1,0]],[[0,0],[1,0]]]}')
        code, _, _ = run(capsys, "dispersion-witness", "--density", f"@{path}")
        assert code == 2

    def test_state_from_file(self, capsys, tmp_path):
        path = tmp_path / "state.json"
        path.write_text(json.dumps([[1.0, 0.0], [1.0, 0.0]]))
        code, out, _ = run(
            capsys, "hv-demo", "--phi", f"@{path}", "--a", "SX", "--b", "2*SX",
            "--lambda-grid-size", "50", "--format", "json",
        )
        assert code == 0
        data = json.loads(out)
        assert data["violation_fraction"] == 0.0
        root_half = 1 / math.sqrt(2)
        assert data["phi"] == [[root_half, 0.0], [root_half, 0.0]]

    def test_grid_size_validated(self, capsys):
        code, _, _ = run(
            capsys, "hv-demo", "--phi", "z+", "--a", "SX", "--b", "SY",
            "--lambda-grid-size", "1",
        )
        assert code == 2

    def test_seed_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv("DISPERSIONLESS_SEED", "99")
        code, _, _ = run(capsys, "reconstruct", "--functional", "pure:z+")
        assert code == 0

    def test_bad_seed_env(self, capsys, monkeypatch):
        monkeypatch.setenv("DISPERSIONLESS_SEED", "not-a-number")
        code, _, _ = run(capsys, "reconstruct", "--functional", "pure:z+")
        assert code == 2


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ("hv-demo", "--phi", "z+", "--a", "SX", "--b", "SY", "--format", "json"),
        ("reconstruct", "--functional", "maxeig", "--format", "json"),
        ("verify-appendix1", "--format", "json"),
        ("jointmeas", "--a", "SX", "--b", "SY", "--format", "json"),
    ])
    def test_byte_identical_reports(self, capsys, argv):
        first = run(capsys, *argv)
        second = run(capsys, *argv)
        assert first == second


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dispersionless", "spectrum", "--expr", "SZ"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "[-1.00000000, 1.00000000]"
