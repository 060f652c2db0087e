import pytest

from foml.cli import main

BOX = ("(declare-op 0 0)\n(declare-flex v)\n"
       "(goal (=> (= v 0) (nabla (= v 0))))\n")

SWAP = """(declare-op 0 0)
(declare-flex x) (declare-flex y)
(init (and (= x 0) (= y 0)))
(next (and (= (prime x) y) (= (prime y) x)))
(invariant (= y x))
(inductive-invariant (= x y))
"""


@pytest.fixture
def box_file(tmp_path):
    path = tmp_path / "box.foml"
    path.write_text(BOX)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSubcommands:
    def test_coalesce_fol(self, capsys, box_file):
        code, out, _ = run(capsys, "coalesce-fol", box_file)
        assert code == 0
        assert "(goal (=> (= v 0) c0__" in out
        assert "(symbols" in out

    def test_coalesce_ml(self, capsys, box_file):
        code, out, _ = run(capsys, "coalesce-ml", box_file)
        assert code == 0
        assert "(atoms" in out
        assert "(hypotheses)" in out

    def test_prove_ml_countermodel_exit_code(self, capsys, box_file):
        code, out, _ = run(capsys, "prove-ml", box_file)
        assert code == 1
        assert "countermodel" in out
        assert "(model" in out

    def test_prove_ml_proved(self, capsys, tmp_path):
        path = tmp_path / "seq.mlseq"
        path.write_text("(mlseq (frame nabla k) (frame prime k)"
                        " (global-hypotheses a) (goal (nabla a)))")
        code, out, _ = run(capsys, "prove-ml", str(path))
        assert code == 0
        assert out.strip() == "proved"

    def test_prove_ml_frame_flag_overrides(self, capsys, tmp_path):
        path = tmp_path / "t.mlseq"
        path.write_text("(mlseq (global-hypotheses)"
                        " (goal (=> (nabla a) a)))")
        assert run(capsys, "prove-ml", str(path))[0] == 1
        assert run(capsys, "prove-ml", str(path), "--frame=t")[0] == 0

    def test_leibniz(self, capsys, tmp_path):
        path = tmp_path / "defs.foml"
        path.write_text(
            "(define (cst x) (exists y (nabla (= x y))))\n"
            "(define (id x) x)\n(goal false)\n")
        code, out, _ = run(capsys, "leibniz", str(path))
        assert code == 0
        assert out.splitlines() == ["cst: N", "id: L"]

    def test_action(self, capsys, tmp_path):
        path = tmp_path / "act.foml"
        path.write_text("(declare-op 0 0) (declare-flex v)"
                        "(goal (= (prime v) 0)) (mode action)")
        code, out, _ = run(capsys, "action", str(path))
        assert code == 0
        assert "(declare-flex v')" in out
        assert "(goal (= v' 0))" in out

    def test_safety_writes_files(self, capsys, tmp_path):
        path = tmp_path / "swap.foml"
        path.write_text(SWAP)
        outdir = tmp_path / "out"
        code, out, _ = run(capsys, "safety", str(path),
                           "--out", str(outdir))
        assert code == 0
        names = sorted(p.name for p in outdir.iterdir())
        assert names == ["swap-glue.mlseq", "swap-ob1.foml",
                         "swap-ob2.foml", "swap-ob3.foml"]
        # the written obligations re-parse
        from foml.parser import parse_problem

        for n in names:
            if n.endswith(".foml"):
                parse_problem((outdir / n).read_text())

    def test_check_model_satisfied_and_refuted(self, capsys, tmp_path,
                                               box_file):
        good = tmp_path / "good.model"
        good.write_text(
            "(model (universe 0 1) (tt 0) (ff 1)"
            " (op 0 (row 1)) (states s0) (R (s0 s0))"
            " (zeta (v s0 0)))")
        code, out, _ = run(capsys, "check-model", str(good), box_file)
        assert code == 0
        assert "satisfied at every state" in out

        bad = tmp_path / "bad.model"
        bad.write_text(
            "(model (universe 0 1) (tt 0) (ff 1)"
            " (op 0 (row 0)) (states s0 s1) (R (s0 s1))"
            " (zeta (v s0 0) (v s1 1)))")
        code, out, _ = run(capsys, "check-model", str(bad), box_file)
        assert code == 1
        assert "fails at state s0" in out

    def test_check_model_vacuous_when_hypothesis_fails(self, capsys,
                                                       tmp_path):
        prob = tmp_path / "vac.foml"
        prob.write_text("(declare-op p 0) (assume (nabla p)) (goal p)")
        model = tmp_path / "vac.model"
        model.write_text(
            "(model (universe 0 1) (tt 0) (ff 1) (op p (row 1))"
            " (states s0 s1) (R (s0 s1)))")
        code, out, _ = run(capsys, "check-model", str(model), str(prob))
        assert code == 0
        assert "vacuously" in out

    def test_fuzz(self, capsys):
        code, out, _ = run(capsys, "fuzz", "--seed", "1",
                           "--iters", "50")
        assert code == 0
        assert "50 iterations, 0 discrepancies" in out

    def test_emit_formats(self, capsys, box_file, tmp_path):
        code, out, _ = run(capsys, "emit", box_file, "--emit=smt")
        assert code == 0 and "(check-sat)" in out
        code, out, _ = run(capsys, "emit", box_file, "--emit=tptp")
        assert code == 0 and "conjecture" in out
        target = tmp_path / "ob.mlseq"
        code, out, _ = run(capsys, "emit", box_file, "--emit=mlseq",
                           "-o", str(target))
        assert code == 0
        from foml.emit import parse_mlseq

        parse_mlseq(target.read_text())

    def test_rewrite_rigid_box_flag(self, capsys, tmp_path):
        path = tmp_path / "rigid.foml"
        path.write_text("(declare-rigid x) (declare-rigid y)"
                        "(goal (=> (= x y) (nabla (= x y))))")
        code, out, _ = run(capsys, "coalesce-fol", str(path),
                           "--rewrite-rigid-box=reflexive")
        assert code == 0
        assert "(goal (=> (= x y) (= x y)))" in out
        code, out, _ = run(capsys, "coalesce-fol", str(path),
                           "--rewrite-rigid-box")
        goal_line = next(l for l in out.splitlines()
                         if l.startswith("(goal"))
        assert "nabla" not in goal_line  # deadlock disjunct coalesced
        assert "(lambda () (nabla false))" in out


class TestDeterminism:
    def test_identical_runs_identical_output(self, capsys, box_file):
        one = run(capsys, "coalesce-fol", box_file)
        two = run(capsys, "coalesce-fol", box_file)
        assert one == two
        one = run(capsys, "fuzz", "--seed", "9", "--iters", "30")
        two = run(capsys, "fuzz", "--seed", "9", "--iters", "30")
        assert one == two


class TestExitCodes:
    def test_usage_error_is_64(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["no-such-command"])
        assert exc.value.code == 64

    def test_parse_error_is_65(self, capsys, tmp_path):
        path = tmp_path / "bad.foml"
        path.write_text("(goal (= x))")
        code, _, err = run(capsys, "coalesce-fol", str(path))
        assert code == 65
        assert "line 1" in err

    def test_missing_file_is_65(self, capsys):
        code, _, err = run(capsys, "coalesce-fol", "/no/such/file.foml")
        assert code == 65
