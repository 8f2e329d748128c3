import json

import pytest
from click.testing import CliRunner

from evtforge.cli import main
from tests.conftest import FIXTURES


@pytest.fixture
def runner():
    return CliRunner()


def fx(*names):
    return [str(FIXTURES / n) for n in names]


class TestTranslate:
    def test_m0_matches_golden(self, runner):
        res = runner.invoke(main, ["translate", *fx("ebm0.eb")])
        assert res.exit_code == 0
        golden = (FIXTURES / "golden" / "evtm0.txt").read_text(encoding="utf-8")
        assert res.output == golden

    def test_parse_error_exit_code(self, runner, tmp_path):
        bad = tmp_path / "bad.eb"
        bad.write_text("machine only half", encoding="utf-8")
        res = runner.invoke(main, ["translate", str(bad)])
        assert res.exit_code == 1

    def test_empty_file_is_an_error(self, runner, tmp_path):
        empty = tmp_path / "empty.eb"
        empty.write_text("", encoding="utf-8")
        res = runner.invoke(main, ["translate", str(empty)])
        assert res.exit_code == 1

    def test_semantic_error_exit_code(self, runner, tmp_path):
        bad = tmp_path / "bad.eb"
        bad.write_text(
            "machine m sees nowhere events event Initialisation end end",
            encoding="utf-8")
        res = runner.invoke(main, ["translate", str(bad)])
        assert res.exit_code == 2

    def test_rodin_input(self, runner):
        res = runner.invoke(main, ["translate", *fx("rodin/cd.buc", "rodin/m0.bum")])
        assert res.exit_code == 0
        golden = (FIXTURES / "golden" / "evtm0.txt").read_text(encoding="utf-8")
        assert res.output == golden

    def test_no_elide_prints_slices(self, runner):
        res = runner.invoke(main, ["translate", *fx("ebm0.eb", "ebm1.eb"),
                                   "--no-elide"])
        assert res.exit_code == 0
        assert "hide via" in res.output

    def test_out_file(self, runner, tmp_path):
        target = tmp_path / "out.evt"
        res = runner.invoke(main, ["translate", *fx("ebm0.eb"),
                                   "--out", str(target)])
        assert res.exit_code == 0
        assert target.read_text(encoding="utf-8").startswith("spec cd =")

    def test_identical_runs_identical_output(self, runner):
        a = runner.invoke(main, ["translate", *fx("ebm0.eb", "ebm1.eb", "ebm2.eb")])
        b = runner.invoke(main, ["translate", *fx("ebm0.eb", "ebm1.eb", "ebm2.eb")])
        assert a.output == b.output


class TestModels:
    def test_counter_listing(self, runner):
        res = runner.invoke(main, [
            "models", "m0", *fx("ebm0.eb"),
            "--pin", "d=2", "--bound", "3", "--event", "ML_out", "--list"])
        assert res.exit_code == 0
        assert "(n=0) -> (n=1)" in res.output
        assert "(n=1) -> (n=2)" in res.output
        assert "(n=2)" not in res.output.split("ML_out")[0]

    def test_sugar_defined_spec_evaluates(self, runner):
        res = runner.invoke(main, [
            "models", "M1", *fx("decomp.eb", "decomp_sv.evt"),
            "--bound", "1", "--event", "e3_e"])
        assert res.exit_code == 0
        assert "e3_e: 4 pair(s)" in res.output

    def test_rex_four_tuples(self, runner):
        res = runner.invoke(main, [
            "models", "rex", *fx("rex.eb"), "--event", "e", "--list"])
        assert res.exit_code == 0
        assert "e: 4 pair(s)" in res.output

    def test_false_guard_empties_relation(self, runner, tmp_path):
        src = tmp_path / "f.eb"
        src.write_text("""
machine f
  variables v
  invariants t: v ∈ {0, 1}
  events
    event Initialisation thenAct a: v := 0 end
    event e status ordinary when g: 1 < 0 thenAct a: v := 0 end
end""", encoding="utf-8")
        res = runner.invoke(main, ["models", "f", str(src)])
        assert "e: 0 pair(s)" in res.output
        assert "1 initial state(s)" in res.output

    def test_parameterised_event_enumerates_witnesses(self, runner, tmp_path):
        src = tmp_path / "jug.eb"
        src.write_text("""
machine jug
  variables w
  invariants
    t1: w ∈ ℕ
    i2: w ≤ 2
  events
    event Initialisation thenAct a: w := 0 end
    event pour
      status ordinary
      any k
      when g1: k ∈ ℕ g2: k > 0 g3: w + k ≤ 2
      thenAct a1: w := w + k
    end
end""", encoding="utf-8")
        res = runner.invoke(main, ["models", "jug", str(src),
                                   "--event", "pour", "--list"])
        assert res.exit_code == 0
        assert "pour: 3 pair(s)" in res.output
        assert "(w=0) -> (w=2)" in res.output

    def test_unknown_event_name_errors(self, runner):
        res = runner.invoke(main, ["models", "m0", *fx("ebm0.eb"),
                                   "--event", "nosuch"])
        assert res.exit_code == 2

    def test_json_output(self, runner):
        res = runner.invoke(main, [
            "models", "m0", *fx("ebm0.eb"), "--pin", "d=2", "--json"])
        data = json.loads(res.output)
        assert data["algebras"][0]["events"]["ML_out"] == 2

    def test_bound_env_var(self, runner):
        res = runner.invoke(main, ["models", "m0", *fx("ebm0.eb"), "--pin", "d=2"],
                            env={"EVTFORGE_BOUND": "2"})
        assert "bound 2" in res.output

    def test_ceiling_exit(self, runner):
        res = runner.invoke(main, [
            "models", "m0", *fx("ebm0.eb"), "--ceiling", "3"])
        assert res.exit_code == 2


class TestRefine:
    def test_chain_holds(self, runner):
        res = runner.invoke(main, [
            "refine", *fx("ebm0.eb", "ebm1.eb", "ebm2.eb", "refinements.evt"),
            "--pin", "d=2", "--allow-status-drop"])
        assert res.exit_code == 0, res.output
        assert res.output.count("holds") == 3

    def test_status_drop_needs_flag(self, runner):
        res = runner.invoke(main, [
            "refine", *fx("ebm0.eb", "ebm1.eb", "ebm2.eb", "refinements.evt"),
            "--pin", "d=2"])
        assert res.exit_code == 2

    def test_weakened_fails_exit_3(self, runner):
        res = runner.invoke(main, [
            "refine", *fx("ebm0.eb", "ebm0_weak.eb", "refinement_weak.evt"),
            "--pin", "d=2"])
        assert res.exit_code == 3
        assert "FAILS" in res.output

    def test_json_verdicts(self, runner):
        res = runner.invoke(main, [
            "refine", *fx("ebm0.eb", "ebm0_weak.eb", "refinement_weak.evt"),
            "--pin", "d=2", "--json"])
        data = json.loads(res.output)
        assert data[0]["holds"] is False
        assert set(data[0]["counterexample"]) == {"algebra", "event", "before", "after"}

    def test_no_declarations(self, runner):
        res = runner.invoke(main, ["refine", *fx("ebm0.eb")])
        assert res.exit_code == 2


class TestPushout:
    def test_status_supremum_shown(self, runner):
        res = runner.invoke(main, [
            "pushout", *fx("span1.sig", "span2.sig")])
        assert res.exit_code == 0
        assert "e1 convergent" in res.output
        assert "e2 ↦ e1" in res.output
        assert "y ↦ x" in res.output

    def test_identity_span(self, runner, tmp_path):
        doc = """
signature S =
  events e ordinary
  vars x : Int
end
morphism id : S -> S =
  {}
end
"""
        f = tmp_path / "id.sig"
        f.write_text(doc, encoding="utf-8")
        res = runner.invoke(main, ["pushout", str(f), str(f)])
        assert res.exit_code == 0
        assert "e ordinary" in res.output
