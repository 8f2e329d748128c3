import pytest

from evtforge.eventb import parse_text
from evtforge.fopeq import Bounds, INT, free_vars
from evtforge.institution import INIT, Status, make_state
from evtforge.mathlang import canonical, parse_formula_text, unparse_formula, ElabContext
from evtforge.specs import Evaluator, Named, sig_of
from evtforge.translate import translate
from tests.conftest import load_fixture

B3 = Bounds(int_bound=3)


def canon_sentences(sentences):
    return {(s.event, unparse_formula(canonical(s.body))) for s in sentences}


@pytest.fixture(scope="module")
def m0_view(bridge):
    ev = Evaluator(bridge.library, B3)
    return ev.sentences_of(bridge.library.lookup("m0"))


class TestSentenceTranslation:
    def test_m0_sentence_set(self, m0_view):
        got = canon_sentences(m0_view)
        events = ["Init", "ML_in", "ML_out"]
        expected = set()
        for e in events:
            expected.add((e, "d > 0"))
            expected.add((e, "n ≤ d ∧ n′ ≤ d"))
            expected.add((e, "n ≥ 0 ∧ n′ ≥ 0"))
        expected |= {
            ("Init", "n′ = 0"),
            ("ML_out", "n < d ∧ n′ = n + 1"),
            ("ML_in", "n > 0 ∧ n′ = n - 1"),
        }
        assert got == expected

    def test_invariant_families_cover_all_events(self, bridge):
        ev = Evaluator(bridge.library, B3)
        sents = ev.sentences_of(bridge.library.lookup("m1"))
        sig = sig_of(bridge.library.lookup("m1"), bridge.library)
        per_event = {}
        for s in sents:
            per_event.setdefault(unparse_formula(canonical(s.body)), set()).add(s.event)
        fam = per_event["(a = 0 ∨ c = 0) ∧ (a′ = 0 ∨ c′ = 0)"]
        assert fam == set(sig.event_names)
        assert len(sig.event_names) == 5

    def test_variant_sentences_for_convergent_events(self, bridge):
        ev = Evaluator(bridge.library, B3)
        sents = ev.sentences_of(bridge.library.lookup("m1"))
        variant = [(s.event, unparse_formula(s.body)) for s in sents
                   if "2 * a" in unparse_formula(s.body)]
        assert set(variant) == {
            ("IL_in", "2 * a′ + b′ < 2 * a + b"),
            ("IL_out", "2 * a′ + b′ < 2 * a + b"),
        }

    def test_variant_sentences_for_anticipated_events(self, bridge):
        ev = Evaluator(bridge.library, B3)
        sents = ev.sentences_of(bridge.library.lookup("m2"))
        variant = [(s.event, unparse_formula(s.body)) for s in sents
                   if "ml_pass′ + il_pass′" in unparse_formula(s.body)]
        assert set(variant) == {
            ("ML_tl_green", "ml_pass′ + il_pass′ ≤ ml_pass + il_pass"),
            ("IL_tl_green", "ml_pass′ + il_pass′ ≤ ml_pass + il_pass"),
        }

    def test_all_ordinary_machine_has_no_variant_sentences(self, bridge):
        ev = Evaluator(bridge.library, B3)
        sents = ev.sentences_of(bridge.library.lookup("m0"))
        assert not any("<" in unparse_formula(s.body)
                       and "′" in unparse_formula(s.body)
                       and "d" not in unparse_formula(s.body)
                       for s in sents)

    def test_init_sentence_shape(self, m0_view):
        init_bodies = {unparse_formula(canonical(s.body))
                       for s in m0_view if s.event == INIT}
        assert "n′ = 0" in init_bodies

    def test_event_bodies_closed_except_state_vars(self, bridge):
        ev = Evaluator(bridge.library, B3)
        sig = sig_of(bridge.library.lookup("m2"), bridge.library)
        allowed = set(sig.var_names)
        for s in ev.sentences_of(bridge.library.lookup("m2")):
            for name, _ in free_vars(s.body):
                assert name in allowed  # parameters never escape their quantifier


class TestParameters:
    def test_params_become_existentials(self):
        src = """
machine pm
  variables v
  invariants t: v ∈ ℕ
  events
    event Initialisation thenAct a: v := 0 end
    event e
      status ordinary
      any p
      when g1: p ∈ ℕ g2: v + p ≤ 2
      thenAct a1: v := v + p
    end
end"""
        out = translate(parse_text(src))
        ev = Evaluator(out.library, B3)
        sents = [s for s in ev.sentences_of(out.library.lookup("pm"))
                 if s.event == "e" and "∃" in unparse_formula(s.body)]
        assert len(sents) == 1
        body = unparse_formula(sents[0].body)
        assert body.startswith("∃ p : Int ·")
        assert free_vars(sents[0].body) <= {("v", False), ("v", True)}

    def test_unresolvable_parameter_sort(self):
        src = """
machine pm
  variables v
  invariants t: v ∈ ℕ
  events
    event Initialisation thenAct a: v := 0 end
    event e status ordinary any p thenAct a1: v := v end
end"""
        from evtforge.errors import SpecError
        with pytest.raises(SpecError):
            translate(parse_text(src))

    def test_witness_is_conjoined(self):
        src = """
machine pm
  variables v
  invariants t: v ∈ ℕ
  events
    event Initialisation thenAct a: v := 0 end
    event e
      status ordinary
      any p : ℤ
      with w1: v′ = p
      thenAct a1: v :| v′ ≥ 0
    end
end"""
        out = translate(parse_text(src))
        ev = Evaluator(out.library, B3)
        body = [unparse_formula(s.body)
                for s in ev.sentences_of(out.library.lookup("pm"))
                if s.event == "e"][0]
        assert "v′ = p" in body and "v′ ≥ 0" in body


class TestContexts:
    def test_cd_translates_to_single_axiom(self, bridge):
        ev = Evaluator(bridge.library, B3)
        fsig, closed = ev._flatten_fopeq(bridge.library.lookup("cd"))
        assert [unparse_formula(f) for f in closed] == ["d > 0"]
        assert {o.name for o in fsig.ops} == {"d"}

    def test_axiomless_context(self):
        out = translate(parse_text("context empty constants k axioms t: k ∈ ℤ end"))
        ev = Evaluator(out.library, B3)
        _, closed = ev._flatten_fopeq(out.library.lookup("empty"))
        assert closed == []

    def test_color_context(self, bridge):
        ev = Evaluator(bridge.library, B3)
        fsig, closed = ev._flatten_fopeq(bridge.library.lookup("Color"))
        assert fsig.sorts == ("Color",)
        assert {o.name for o in fsig.ops} == {"green", "red"}
        texts = [unparse_formula(f) for f in closed]
        assert texts == ["Color = {green, red}", "green ≠ red"]

    def test_context_extension_unions(self):
        src = """
context c1 constants a axioms t1: a ∈ ℤ end
context c2 constants b axioms t2: b ∈ ℤ end
context c3 extends c1, c2 constants k axioms t3: k ∈ ℤ ax: k > a + b end
"""
        out = translate(parse_text(src))
        fsig = out.env.fopeq("c3")
        assert {o.name for o in fsig.ops} == {"a", "b", "k"}


class TestStructure:
    def test_signature_coherence_for_all_units(self, bridge):
        for kind, name in bridge.order:
            spec = bridge.library.lookup(name)
            assert sig_of(spec, bridge.library) == bridge.env.signatures[name]

    def test_bare_presentation_without_imports(self):
        out = translate(parse_text(load_fixture("rex.eb")))
        from evtforge.specs import Presentation
        assert isinstance(out.library.lookup("rex"), Presentation)

    def test_theorems_reported_dropped(self, bridge):
        notes = " ".join(bridge.diagnostics)
        assert "m1" in notes and "theorem" in notes


class TestNoFrameCondition:
    def test_unassigned_variable_left_unconstrained(self, bridge_decomp=None):
        # e1 constrains only v1; v2 and v3 may change arbitrarily
        out = translate(parse_text(load_fixture("decomp.eb")))
        ev = Evaluator(out.library, Bounds(int_bound=1))
        rep = ev.model_class(out.library.lookup("M"))
        sl = rep.slices[0]
        pairs = sl.r_map["e1"]
        befores = {s for s, _ in pairs}
        v2_changes = any(dict(s)["v2"] != dict(t)["v2"] for s, t in pairs)
        assert v2_changes
        assert len(pairs) == 16  # 4 valid befores x 4 unconstrained afters

    def test_rex_before_value_of_assigned_var_is_free(self, fixtures_dir):
        out = translate(parse_text(load_fixture("rex.eb")))
        ev = Evaluator(out.library, B3)
        rep = ev.model_class(out.library.lookup("rex"))
        pairs = rep.slices[0].r_map["e"]
        expected = {
            (make_state({"x": x, "y": y}), make_state({"x": x + 1, "y": False}))
            for x in (0, 1) for y in (False, True)
        }
        assert pairs == expected


class TestMultiRefines:
    def test_event_refining_two_abstract_events(self):
        # both abstract sentences land, conjoined, on the one concrete event
        src = """
machine aa
  variables v
  invariants t: v ∈ {0, 1, 2}
  events
    event Initialisation thenAct a: v := 0 end
    event e1 status ordinary when g: v < 2 end
    event e2 status ordinary when g: v > 0 end
end

machine cc
  refines aa
  variables v
  invariants t: v ∈ {0, 1, 2}
  events
    event Initialisation thenAct a: v := 0 end
    event both status ordinary refines e1, e2 end
end"""
        out = translate(parse_text(src))
        sig = out.env.evt("cc")
        assert set(sig.event_names) == {INIT, "both"}
        ev = Evaluator(out.library, B3)
        rep = ev.model_class(out.library.lookup("cc"))
        pairs = rep.slices[0].r_map["both"]
        assert pairs  # conjunction v < 2 and v > 0 is satisfiable
        assert all(dict(s)["v"] == 1 for s, _ in pairs)


class TestSameNameMerging:
    def test_multiple_sentences_conjoin_at_satisfaction(self):
        src = """
machine mm
  variables v
  invariants t: v ∈ {0, 1, 2}
  events
    event Initialisation thenAct a: v := 0 end
    event e status ordinary when g: v < 2 thenAct a: v := v + 1 end
end"""
        out = translate(parse_text(src))
        lib = out.library
        ev = Evaluator(lib, B3)
        rep = ev.model_class(lib.lookup("mm"))
        base_pairs = rep.slices[0].r_map["e"]
        # an enrichment re-declaring e adds a second sentence for the same name
        from evtforge.sugar import parse_document
        parse_document("""
spec mm2 =
  mm
  then
    events
      e ordinary
        when v > 0
end""", lib)
        rep2 = ev.model_class(lib.lookup("mm2"))
        stricter = rep2.slices[0].r_map["e"]
        assert stricter < base_pairs
        assert all(dict(s)["v"] > 0 for s, _ in stricter)
