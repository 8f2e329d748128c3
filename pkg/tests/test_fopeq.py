import itertools

import pytest
from hypothesis import given, settings, strategies as st

from evtforge.errors import EnumerationLimit, SortError
from evtforge.fopeq import (
    BOOL, INT, And, BoolLit, Bounds, CarrierEq, Equal, FiniteAlgebra,
    FopeqMorphism, FopeqSignature, Forall, Exists, Implies, InSet, IntLit, Not,
    Op, OpApp, Or, Pred, PredApp, TRUE, FALSE, UNDEF, Var, algebra_reduct,
    compile_formula, conjoin, enumerate_algebras, eval_formula, eval_term,
    fopeq_compose, fopeq_identity, fopeq_pushout, free_vars, make_algebra,
    prime_free_vars, rename_free_vars, translate_formula,
)
from evtforge.mathlang import ElabContext, canonical, parse_formula_text, unparse_formula

B3 = Bounds(int_bound=3)


def plain_algebra(bound=3, **constants):
    sig = FopeqSignature(ops=tuple(Op(k, (), INT) for k in constants))
    return make_algebra(sig, bound, {}, {k: {(): v} for k, v in constants.items()})


class TestEvalTerm:
    def test_arithmetic_in_bounds(self):
        a = plain_algebra()
        t = OpApp("+", (Var("x"), IntLit(1)))
        assert eval_term(t, a, {("x", False): 2}) == 3

    def test_arithmetic_escaping_carrier_is_undefined(self):
        # oracle: 3 + 1 = 4 is outside the carrier -3..3
        a = plain_algebra()
        t = OpApp("+", (Var("x"), IntLit(1)))
        assert eval_term(t, a, {("x", False): 3}) is UNDEF

    def test_constant_lookup(self):
        a = plain_algebra(d=2)
        assert eval_term(OpApp("d"), a, {}) == 2

    def test_undefined_propagates_strictly(self):
        a = plain_algebra()
        t = OpApp("*", (OpApp("+", (IntLit(3), IntLit(3))), IntLit(0)))
        assert eval_term(t, a, {}) is UNDEF

    def test_missing_binding_is_structural(self):
        a = plain_algebra()
        with pytest.raises(SortError):
            eval_term(Var("zz"), a, {})


class TestEvalFormula:
    def test_comparison(self):
        a = plain_algebra(d=2)
        f = PredApp("<", (Var("n"), OpApp("d")))
        assert eval_formula(f, a, {("n", False): 1}) is True

    def test_exists_brute_force(self):
        # oracle: brute force p in -3..3 finds p = 1
        a = plain_algebra()
        f = Exists((("p", INT),), And((
            PredApp(">", (Var("p"), IntLit(0))),
            PredApp("<", (Var("p"), IntLit(2))))))
        assert eval_formula(f, a, {}) is True

    def test_atom_with_undefined_term_is_false(self):
        a = plain_algebra()
        f = Equal(Var("x", True), OpApp("+", (Var("x"), IntLit(1))))
        assert eval_formula(f, a, {("x", False): 3, ("x", True): 0}) is False

    def test_negated_undefined_atom_is_true(self):
        a = plain_algebra()
        f = Not(Equal(Var("x", True), OpApp("+", (Var("x"), IntLit(1)))))
        assert eval_formula(f, a, {("x", False): 3, ("x", True): 0}) is True

    def test_total_on_closed_formulas(self):
        a = plain_algebra(d=1)
        for f in [TRUE, FALSE, Equal(OpApp("d"), IntLit(1)),
                  Forall((("u", BOOL),), Equal(Var("u"), Var("u"))),
                  CarrierEq(BOOL, (BoolLit(True), BoolLit(False)))]:
            assert eval_formula(f, a, {}) in (True, False)


# -- compiled evaluation agrees with the reference interpreter --------------

_names = st.sampled_from(["x", "y"])


def _terms(depth):
    if depth == 0:
        return st.one_of(
            st.builds(Var, _names, st.booleans()),
            st.builds(IntLit, st.integers(-4, 4)),
            st.just(OpApp("d")),
        )
    sub = _terms(depth - 1)
    return st.one_of(
        _terms(0),
        st.builds(lambda o, a, b: OpApp(o, (a, b)),
                  st.sampled_from(["+", "-", "*"]), sub, sub),
    )


def _formulas(depth):
    atoms = st.one_of(
        st.just(TRUE), st.just(FALSE),
        st.builds(Equal, _terms(1), _terms(1)),
        st.builds(lambda p, a, b: PredApp(p, (a, b)),
                  st.sampled_from(["<", "<=", ">", ">="]), _terms(1), _terms(1)),
        st.builds(lambda t, e: InSet(t, (e, IntLit(0))), _terms(1), _terms(0)),
    )
    if depth == 0:
        return atoms
    sub = _formulas(depth - 1)
    return st.one_of(
        atoms,
        st.builds(Not, sub),
        st.builds(lambda a, b: And((a, b)), sub, sub),
        st.builds(lambda a, b: Or((a, b)), sub, sub),
        st.builds(Implies, sub, sub),
        st.builds(lambda f: Exists((("q", INT),), f), sub),
    )


@given(_formulas(2), st.integers(-2, 2), st.integers(-3, 3), st.integers(-3, 3))
@settings(max_examples=200, deadline=None)
def test_compiled_matches_reference(f, d, x, y):
    a = plain_algebra(d=d)
    val = {("x", False): x, ("y", False): y, ("x", True): y, ("y", True): x}
    assert compile_formula(f, a)(val) == eval_formula(f, a, val)


# -- translation -------------------------------------------------------------


def _two_sigs():
    src = FopeqSignature(sorts=("S",), ops=(Op("k", (), "S"), Op("d", (), INT)),
                         preds=(Pred("p", ("S",)),))
    tgt = FopeqSignature(sorts=("T",), ops=(Op("k2", (), "T"), Op("c", (), INT)),
                         preds=(Pred("q", ("T",)),))
    m = FopeqMorphism(src, tgt, (("S", "T"),), (("k", "k2"), ("d", "c")),
                      (("p", "q"),))
    return src, tgt, m


class TestTranslateFormula:
    def test_renames_symbols_but_not_variables(self):
        src, tgt, m = _two_sigs()
        f = And((Equal(Var("v1"), IntLit(0)), PredApp("p", (OpApp("k"),))))
        g = translate_formula(m, f)
        assert g == And((Equal(Var("v1"), IntLit(0)), PredApp("q", (OpApp("k2"),))))

    def test_identity(self):
        src, tgt, m = _two_sigs()
        f = PredApp("p", (OpApp("k"),))
        assert translate_formula(fopeq_identity(src), f) == f

    def test_symbol_outside_domain(self):
        src, tgt, m = _two_sigs()
        with pytest.raises(SortError):
            translate_formula(m, PredApp("zz", ()))

    @given(_formulas(2))
    @settings(max_examples=100, deadline=None)
    def test_functoriality_on_builtin_formulas(self, f):
        # builtin-only formulas survive any morphism; compose == sequential
        src, tgt, m = _two_sigs()
        m2 = fopeq_identity(tgt)
        composed = fopeq_compose(m2, m)
        d_free = rename_free_vars(f, {})  # identity rename, exercises walker
        assert translate_formula(composed, d_free) == translate_formula(
            m2, translate_formula(m, d_free))


def test_rename_free_vars_respects_binding():
    f = Exists((("x", INT),), Equal(Var("x"), Var("y", True)))
    g = rename_free_vars(f, {"x": "a", "y": "b"})
    assert g == Exists((("x", INT),), Equal(Var("x"), Var("b", True)))


def test_prime_free_vars():
    f = And((Equal(Var("n"), IntLit(0)), Equal(Var("m", True), IntLit(1))))
    g = prime_free_vars(f, ["n", "m"])
    assert g == And((Equal(Var("n", True), IntLit(0)),
                     Equal(Var("m", True), IntLit(1))))


# -- pushouts ----------------------------------------------------------------


class TestPushout:
    def test_identities_give_source(self):
        sig = FopeqSignature(sorts=("S",), ops=(Op("a", (), "S"),))
        i = fopeq_identity(sig)
        merged, j1, j2 = fopeq_pushout(i, i)
        assert merged == sig
        assert j1 == i and j2 == i

    def test_shared_sort_identified(self):
        base = FopeqSignature(sorts=("s",))
        s1 = FopeqSignature(sorts=("s1",))
        s2 = FopeqSignature(sorts=("s2",))
        m1 = FopeqMorphism(base, s1, (("s", "s1"),), (), ())
        m2 = FopeqMorphism(base, s2, (("s", "s2"),), (), ())
        merged, j1, j2 = fopeq_pushout(m1, m2)
        assert len(merged.sorts) == 1
        assert j1.apply_sort("s1") == j2.apply_sort("s2")

    def test_disjoint_extensions_union(self):
        base = FopeqSignature(sorts=("S",))
        s1 = FopeqSignature(sorts=("S",), ops=(Op("a", (), "S"),))
        s2 = FopeqSignature(sorts=("S",), ops=(Op("b", (), "S"),))
        inc = (("S", "S"),)
        merged, j1, j2 = fopeq_pushout(
            FopeqMorphism(base, s1, inc, (), ()),
            FopeqMorphism(base, s2, inc, (), ()))
        assert {o.name for o in merged.ops} == {"a", "b"}

    def test_name_clash_gets_suffix(self):
        base = FopeqSignature(sorts=("S",))
        s1 = FopeqSignature(sorts=("S",), ops=(Op("a", (), "S"),))
        s2 = FopeqSignature(sorts=("S",), ops=(Op("a", ("S",), "S"),))
        inc = (("S", "S"),)
        merged, j1, j2 = fopeq_pushout(
            FopeqMorphism(base, s1, inc, (), ()),
            FopeqMorphism(base, s2, inc, (), ()))
        assert {o.name for o in merged.ops} == {"a", "a#1"}
        assert j1.apply_op("a") == "a"
        assert j2.apply_op("a") == "a#1"

    def test_square_commutes(self):
        base = FopeqSignature(sorts=("s",), ops=(Op("k", (), "s"),))
        s1 = FopeqSignature(sorts=("u",), ops=(Op("k1", (), "u"),))
        s2 = FopeqSignature(sorts=("v",), ops=(Op("k2", (), "v"),))
        m1 = FopeqMorphism(base, s1, (("s", "u"),), (("k", "k1"),), ())
        m2 = FopeqMorphism(base, s2, (("s", "v"),), (("k", "k2"),), ())
        merged, j1, j2 = fopeq_pushout(m1, m2)
        assert fopeq_compose(j1, m1) == fopeq_compose(j2, m2)


def _all_morphisms(src: FopeqSignature, tgt: FopeqSignature):
    """Every valid morphism between two small signatures."""
    sort_choices = [list(tgt.sorts) or [None] for _ in src.sorts]
    out = []
    for sorts in itertools.product(*sort_choices):
        if None in sorts and src.sorts:
            continue
        smap = dict(zip(src.sorts, sorts))
        op_choices = []
        for o in src.ops:
            want_args = tuple(smap.get(s, s) for s in o.args)
            want_res = smap.get(o.result, o.result)
            cands = [t.name for t in tgt.ops
                     if t.args == want_args and t.result == want_res]
            op_choices.append(cands)
        pred_choices = []
        for p in src.preds:
            want = tuple(smap.get(s, s) for s in p.args)
            pred_choices.append([t.name for t in tgt.preds if t.args == want])
        for ops in itertools.product(*op_choices):
            for preds in itertools.product(*pred_choices):
                out.append(FopeqMorphism(
                    src, tgt, tuple(smap.items()),
                    tuple(zip([o.name for o in src.ops], ops)),
                    tuple(zip([p.name for p in src.preds], preds))))
    return out


def test_pushout_universality_exhaustive_small():
    """Every commuting cospan factors uniquely through the pushout.

    Pool: signatures with up to 3 sorts and 4 symbols."""
    pool = [
        FopeqSignature(),
        FopeqSignature(sorts=("s",)),
        FopeqSignature(sorts=("s",), ops=(Op("a", (), "s"),)),
        FopeqSignature(sorts=("s", "t"), ops=(Op("a", (), "s"), Op("b", (), "t"))),
        FopeqSignature(sorts=("s", "t", "u"),
                       ops=(Op("a", (), "s"),), preds=(Pred("p", ("t",)),)),
    ]
    checked = 0
    for base in pool[:3]:
        for t1 in pool:
            for m1 in _all_morphisms(base, t1):
                for t2 in pool:
                    for m2 in _all_morphisms(base, t2):
                        merged, j1, j2 = fopeq_pushout(m1, m2)
                        assert fopeq_compose(j1, m1) == fopeq_compose(j2, m2)
                        for tc in pool:
                            n2_by_comp = {}
                            for n2 in _all_morphisms(t2, tc):
                                n2_by_comp.setdefault(fopeq_compose(n2, m2), []).append(n2)
                            for n1 in _all_morphisms(t1, tc):
                                comp = fopeq_compose(n1, m1)
                                for n2 in n2_by_comp.get(comp, ()):
                                    mediating = [
                                        u for u in _all_morphisms(merged, tc)
                                        if fopeq_compose(u, j1) == n1
                                        and fopeq_compose(u, j2) == n2]
                                    assert len(mediating) == 1
                                    checked += 1
    assert checked > 50


# -- finite algebra enumeration ---------------------------------------------


class TestEnumerate:
    def test_constant_with_axioms(self):
        # oracle: brute force d in -3..3 then filter by d > 0 and d <= 3
        sig = FopeqSignature(ops=(Op("d", (), INT),))
        axioms = [PredApp(">", (OpApp("d"), IntLit(0))),
                  PredApp("<=", (OpApp("d"), IntLit(3)))]
        algs = enumerate_algebras(sig, B3, axioms=axioms)
        assert [a.constant("d") for a in algs] == [1, 2, 3]

    def test_no_free_symbols_single_algebra(self):
        assert len(enumerate_algebras(FopeqSignature(), B3)) == 1

    def test_enumerated_sort_two_assignments(self):
        sig = FopeqSignature(sorts=("Color",),
                             ops=(Op("green", (), "Color"), Op("red", (), "Color")))
        axioms = [Not(Equal(OpApp("green"), OpApp("red"))),
                  CarrierEq("Color", (OpApp("green"), OpApp("red")))]
        algs = enumerate_algebras(sig, Bounds(int_bound=3, carrier_sizes=(("Color", 2),)),
                                  axioms=axioms)
        assert len(algs) == 2

    def test_pinning(self):
        sig = FopeqSignature(ops=(Op("d", (), INT),))
        algs = enumerate_algebras(sig, Bounds(int_bound=3, pins=(("d", 2),)))
        assert len(algs) == 1 and algs[0].constant("d") == 2

    def test_ceiling_refusal(self):
        sig = FopeqSignature(ops=(Op("f", (INT, INT), INT),))
        with pytest.raises(EnumerationLimit):
            enumerate_algebras(sig, Bounds(int_bound=3, pair_ceiling=100))

    def test_deterministic_order(self):
        sig = FopeqSignature(ops=(Op("d", (), INT), Op("e", (), BOOL)))
        a1 = enumerate_algebras(sig, B3)
        a2 = enumerate_algebras(sig, B3)
        assert a1 == a2


def test_algebra_reduct_drops_and_renames():
    src, tgt, m = _two_sigs()
    a = make_algebra(tgt, 3, {"T": ("T0", "T1")},
                     {"k2": {(): "T1"}, "c": {(): 2}}, {"q": {("T0",)}})
    r = algebra_reduct(a, m)
    assert r.carrier("S") == ("T0", "T1")
    assert r.constant("k") == "T1"
    assert r.pred_tables["p"] == frozenset({("T0",)})


# -- the satisfaction condition restricted to the first-order substrate ------


def test_fopeq_satisfaction_condition_by_enumeration():
    """A'|_sigma satisfies f iff A' satisfies the translated f, for closed f,
    over all small algebras."""
    src = FopeqSignature(sorts=("S",), ops=(Op("k", (), "S"),),
                         preds=(Pred("p", ("S",)),))
    tgt = FopeqSignature(sorts=("T",), ops=(Op("k2", (), "T"), Op("extra", (), "T")),
                         preds=(Pred("q", ("T",)),))
    m = FopeqMorphism(src, tgt, (("S", "T"),), (("k", "k2"),), (("p", "q"),))
    formulas = [
        PredApp("p", (OpApp("k"),)),
        Not(PredApp("p", (OpApp("k"),))),
        Forall((("u", "S"),), PredApp("p", (Var("u"),))),
        Exists((("u", "S"),), Not(Equal(Var("u"), OpApp("k")))),
        Implies(PredApp("p", (OpApp("k"),)), FALSE),
    ]
    bounds = Bounds(int_bound=1, carrier_sizes=(("T", 2),))
    for a in enumerate_algebras(tgt, bounds):
        reduced = algebra_reduct(a, m)
        for f in formulas:
            assert eval_formula(f, reduced, {}) == eval_formula(
                translate_formula(m, f), a, {})


# -- parsing / printing round trips ------------------------------------------


@pytest.mark.parametrize("text", [
    "n ≤ d", "n < d ∧ n′ = n + 1", "a = 0 ∨ c = 0",
    "ml = green ⇒ c = 0", "¬(a = 0) ∨ b ≠ 1",
    "x ∈ {0, 1} ∧ y = TRUE", "∃ p : ℤ · p > 0 ∧ p < 2",
    "a + b + 1 < d ⇔ c ≥ 0",
])
def test_unparse_parse_round_trip(text):
    sig = FopeqSignature(sorts=("Color",),
                         ops=(Op("d", (), INT), Op("green", (), "Color")))
    ctx = ElabContext(sig, vars=(("n", INT), ("a", INT), ("b", INT), ("c", INT),
                                 ("x", INT), ("y", BOOL), ("ml", "Color")))
    f = parse_formula_text(text, ctx)
    assert parse_formula_text(unparse_formula(f), ctx) == f


def test_canonical_flattens_and_sorts():
    ctx = ElabContext(FopeqSignature(), vars=(("a", INT), ("b", INT)))
    f1 = parse_formula_text("a = 0 ∧ (b = 1 ∧ true)", ctx)
    f2 = parse_formula_text("b = 1 ∧ a = 0", ctx)
    assert canonical(f1) == canonical(f2)
