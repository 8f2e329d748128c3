"""Event-system signatures, sentences, models and their structural maps.

A signature couples a first-order part with status-tagged event names and
sorted state variables.  Sentences pair an event name with an open formula
over the variables and their primed versions; models interpret each event as
a before/after relation on states, plus an initialising state set.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import EnumerationLimit, SortError, SpecError
from . import fopeq
from .fopeq import (
    And, Bounds, FiniteAlgebra, FopeqMorphism, FopeqSignature, Formula, Not,
    TRUE, Value, algebra_reduct, compile_formula, eval_formula, fopeq_compose,
    fopeq_identity, fopeq_pushout, free_vars, pushout_names, rename_free_vars,
    translate_formula,
)

INIT = "Init"


class Status(enum.IntEnum):
    """Event status poset: ordinary < anticipated < convergent."""

    ordinary = 0
    anticipated = 1
    convergent = 2

    def __str__(self):
        return self.name


def status_sup(*statuses: Status) -> Status:
    return Status(max(int(s) for s in statuses))


def _is_primed_name(name: str) -> bool:
    return name.endswith("'") or name.endswith("′")


# ---------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class EvtSignature:
    """Five components: first-order part, status-tagged events, sorted vars.

    Every signature contains the initial event with ordinary status.
    """

    fopeq: FopeqSignature = fopeq.EMPTY_SIGNATURE
    events: tuple[tuple[str, Status], ...] = ()
    vars: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        ev = dict(self.events)
        if len(ev) != len(self.events):
            raise SortError("duplicate event names in signature")
        if ev.get(INIT, Status.ordinary) != Status.ordinary:
            raise SortError("the initial event must have ordinary status")
        ev.setdefault(INIT, Status.ordinary)
        object.__setattr__(self, "events", tuple(sorted(ev.items())))
        vs = dict(self.vars)
        if len(vs) != len(self.vars):
            raise SortError("duplicate variable names in signature")
        object.__setattr__(self, "vars", tuple(sorted(vs.items())))
        for name, sort in self.vars:
            if _is_primed_name(name):
                raise SortError(f"variable name {name} looks primed")
            if not self.fopeq.has_sort(sort):
                raise SortError(f"variable {name} has undeclared sort {sort}")
        for name, _ in self.events:
            if _is_primed_name(name):
                raise SortError(f"event name {name} looks primed")
        object.__setattr__(self, "_hash", hash((self.fopeq, self.events, self.vars)))

    def __hash__(self):
        return self._hash

    @property
    def event_map(self) -> dict[str, Status]:
        return dict(self.events)

    @property
    def var_map(self) -> dict[str, str]:
        return dict(self.vars)

    @property
    def event_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.events)

    @property
    def non_init_events(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.events if n != INIT)

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.vars)

    def status(self, event: str) -> Status:
        m = self.event_map
        if event not in m:
            raise SortError(f"unknown event {event}")
        return m[event]


def signature_union(a: EvtSignature, b: EvtSignature) -> EvtSignature:
    """Name-based union: shared symbols need identical profiles, shared events
    join by status supremum."""
    ev = dict(a.events)
    for name, st in b.events:
        ev[name] = status_sup(ev.get(name, Status.ordinary), st) if name in ev else st
    if ev.get(INIT, Status.ordinary) != Status.ordinary:
        raise SortError("union would give the initial event a non-ordinary status")
    vs = dict(a.vars)
    for name, sort in b.vars:
        if name in vs and vs[name] != sort:
            raise SortError(f"variable {name} declared with conflicting sorts")
        vs[name] = sort
    return EvtSignature(a.fopeq.union(b.fopeq), tuple(ev.items()), tuple(vs.items()))


# ---------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True)
class EvtMorphism:
    source: EvtSignature
    target: EvtSignature
    fopeq: FopeqMorphism
    event_map: tuple[tuple[str, str], ...]
    var_map: tuple[tuple[str, str], ...]
    check_status: bool = True

    def __post_init__(self):
        object.__setattr__(self, "event_map", tuple(sorted(self.event_map)))
        object.__setattr__(self, "var_map", tuple(sorted(self.var_map)))
        if self.fopeq.source != self.source.fopeq or self.fopeq.target != self.target.fopeq:
            raise SortError("first-order component does not match the endpoints")
        em, vm = dict(self.event_map), dict(self.var_map)
        tgt_events = self.target.event_map
        if em.get(INIT, INIT) != INIT:
            raise SortError("the initial event must map to the initial event")
        for name, st in self.source.events:
            if name not in em:
                raise SortError(f"event map not total: {name} unmapped")
            out = em[name]
            if out not in tgt_events:
                raise SortError(f"event {name} maps to unknown event {out}")
            if out == INIT and name != INIT:
                raise SortError("a non-initial event may not map to the initial event")
            if self.check_status and tgt_events[out] < st:
                raise SortError(
                    f"event map lowers the status of {name} "
                    f"({st} to {tgt_events[out]})")
        tgt_vars = self.target.var_map
        for name, sort in self.source.vars:
            if name not in vm:
                raise SortError(f"variable map not total: {name} unmapped")
            out = vm[name]
            if out not in tgt_vars:
                raise SortError(f"variable {name} maps to unknown variable {out}")
            if tgt_vars[out] != self.fopeq.apply_sort(sort):
                raise SortError(f"variable map does not respect the sort of {name}")
        object.__setattr__(self, "_hash", hash(
            (self.source, self.target, self.fopeq, self.event_map, self.var_map,
             self.check_status)))

    def __hash__(self):
        return self._hash

    def apply_event(self, name: str) -> str:
        m = dict(self.event_map)
        if name not in m:
            raise SortError(f"event {name} outside the morphism domain")
        return m[name]

    def apply_var(self, name: str) -> str:
        m = dict(self.var_map)
        if name not in m:
            raise SortError(f"variable {name} outside the morphism domain")
        return m[name]


def evt_identity(sig: EvtSignature) -> EvtMorphism:
    return EvtMorphism(
        sig, sig, fopeq_identity(sig.fopeq),
        tuple((n, n) for n, _ in sig.events),
        tuple((n, n) for n, _ in sig.vars),
    )


def evt_compose(m2: EvtMorphism, m1: EvtMorphism) -> EvtMorphism:
    """Composition m2 ∘ m1 (apply m1 first)."""
    if m1.target != m2.source:
        raise SortError("morphisms not composable")
    return EvtMorphism(
        m1.source, m2.target, fopeq_compose(m2.fopeq, m1.fopeq),
        tuple((e, m2.apply_event(t)) for e, t in m1.event_map),
        tuple((v, m2.apply_var(t)) for v, t in m1.var_map),
        check_status=m1.check_status and m2.check_status,
    )


# ---------------------------------------------------------------------------
# sentences


@dataclass(frozen=True)
class EvtSentence:
    event: str
    body: Formula


def check_sentence(s: EvtSentence, sig: EvtSignature) -> None:
    if s.event not in sig.event_map:
        raise SortError(f"sentence names unknown event {s.event}")
    ctx = sig.var_map
    for name, primed in free_vars(s.body):
        if name not in ctx:
            raise SortError(f"sentence body uses unknown variable {name}")
    fopeq.check_formula(s.body, sig.fopeq, ctx)


def translate_sentence(m: EvtMorphism, s: EvtSentence) -> EvtSentence:
    body = translate_formula(m.fopeq, s.body)
    body = rename_free_vars(body, dict(m.var_map))
    return EvtSentence(m.apply_event(s.event), body)


# ---------------------------------------------------------------------------
# states and models

State = tuple[tuple[str, Value], ...]  # sorted by variable name


def make_state(assignment: Mapping[str, Value]) -> State:
    return tuple(sorted(assignment.items()))


def state_valuation(s: State, primed: bool) -> dict[tuple[str, bool], Value]:
    return {(name, primed): v for name, v in s}


def pair_valuation(before: State, after: State) -> dict[tuple[str, bool], Value]:
    val = state_valuation(before, False)
    val.update(state_valuation(after, True))
    return val


def reduce_state(s: State, m: EvtMorphism) -> State:
    big = dict(s)
    return tuple(sorted((v, big[m.apply_var(v)]) for v, _ in m.source.vars))


@dataclass(frozen=True)
class EvtModel:
    """A first-order algebra, a non-empty initialising state set, and a
    before/after relation for every non-initial event."""

    signature: EvtSignature
    algebra: FiniteAlgebra
    init: frozenset[State]
    rel: tuple[tuple[str, frozenset[tuple[State, State]]], ...]

    def __post_init__(self):
        object.__setattr__(self, "init", frozenset(self.init))
        object.__setattr__(self, "rel", tuple(sorted(
            (e, frozenset(pairs)) for e, pairs in self.rel)))
        if not self.init:
            raise SortError("the initialising set must be non-empty")
        if set(dict(self.rel)) != set(self.signature.non_init_events):
            raise SortError("relation domain must be the non-initial events")
        if not self.signature.vars and self.init != frozenset({()}):
            raise SortError("with no variables the initialising set is the empty map")

    @property
    def rel_map(self) -> dict[str, frozenset[tuple[State, State]]]:
        return dict(self.rel)


def make_model(
    sig: EvtSignature,
    algebra: FiniteAlgebra,
    init: Iterable[State],
    rel: Mapping[str, Iterable[tuple[State, State]]],
) -> EvtModel:
    full = {e: frozenset(rel.get(e, ())) for e in sig.non_init_events}
    return EvtModel(sig, algebra, frozenset(init), tuple(full.items()))


def init_d1(f: Formula, var_names: Iterable[str]) -> Formula:
    """Replace maximal atoms mentioning an unprimed state variable by true.

    Initialising states bind only after-values, so only the primed part of an
    initial-event sentence is evaluated.
    """
    names = set(var_names)

    def walk(f: Formula, shadowed: frozenset[str]) -> Formula:
        if isinstance(f, Not):
            return Not(walk(f.body, shadowed))
        if isinstance(f, And):
            return And(tuple(walk(p, shadowed) for p in f.parts))
        if isinstance(f, fopeq.Or):
            return fopeq.Or(tuple(walk(p, shadowed) for p in f.parts))
        if isinstance(f, fopeq.Implies):
            return fopeq.Implies(walk(f.left, shadowed), walk(f.right, shadowed))
        if isinstance(f, fopeq.Iff):
            return fopeq.Iff(walk(f.left, shadowed), walk(f.right, shadowed))
        if isinstance(f, (fopeq.Forall, fopeq.Exists)):
            inner = shadowed | {n for n, _ in f.vars}
            return type(f)(f.vars, walk(f.body, inner))
        hits = {
            name for name, primed in free_vars(f)
            if not primed and name in names and name not in shadowed
        }
        return TRUE if hits else f

    return walk(f, frozenset())


def satisfies(m: EvtModel, s: EvtSentence) -> bool:
    """All pairs of the event's relation (all initialising states for the
    initial event) make the body true."""
    sig = m.signature
    if s.event not in sig.event_map:
        raise SortError(f"sentence names unknown event {s.event}")
    if s.event == INIT:
        body = init_d1(s.body, sig.var_names)
        return all(
            eval_formula(body, m.algebra, state_valuation(after, True))
            for after in m.init
        )
    return all(
        eval_formula(s.body, m.algebra, pair_valuation(before, after))
        for before, after in m.rel_map[s.event]
    )


def model_reduct(m: EvtMorphism, model: EvtModel) -> EvtModel:
    """View a model over the morphism's target as one over its source."""
    if model.signature != m.target:
        raise SortError("model is not over the morphism's target")
    algebra = algebra_reduct(model.algebra, m.fopeq)
    init = frozenset(reduce_state(s, m) for s in model.init)
    rel = {}
    rmap = model.rel_map
    for e in m.source.non_init_events:
        pairs = rmap[m.apply_event(e)]
        rel[e] = frozenset(
            (reduce_state(s, m), reduce_state(t, m)) for s, t in pairs)
    return make_model(m.source, algebra, init, rel)


# ---------------------------------------------------------------------------
# state enumeration and maximal models


def enumerate_states(sig: EvtSignature, algebra: FiniteAlgebra) -> list[State]:
    names = sig.var_names
    domains = [algebra.carrier(dict(sig.vars)[n]) for n in names]
    return [tuple(zip(names, combo)) for combo in itertools.product(*domains)]


def _flatten_conjuncts(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        out = []
        for p in f.parts:
            out.extend(_flatten_conjuncts(p))
        return out
    return [f]


def _single_var(keys: frozenset[tuple[str, bool]]) -> Optional[tuple[str, bool]]:
    if len(keys) == 1:
        return next(iter(keys))
    return None


def _filter_pool(
    sig: EvtSignature,
    algebra: FiniteAlgebra,
    conjuncts: Sequence[Formula],
    primed: bool,
) -> list[State]:
    """States satisfying conjuncts whose free variables are all on one side.

    Per-variable unary conjuncts prune candidate values before the product is
    formed; remaining conjuncts filter the product.
    """
    names = sig.var_names
    sorts = dict(sig.vars)
    candidates = {n: list(algebra.carrier(sorts[n])) for n in names}
    rest = []
    for c in conjuncts:
        key = _single_var(free_vars(c))
        if key is not None and key[1] == primed:
            name = key[0]
            fn = compile_formula(c, algebra)
            candidates[name] = [
                v for v in candidates[name] if fn({(name, primed): v})]
        else:
            rest.append(compile_formula(c, algebra))
    pool = []
    domains = [candidates[n] for n in names]
    for combo in itertools.product(*domains):
        val = {(n, primed): v for n, v in zip(names, combo)}
        if all(fn(val) for fn in rest):
            pool.append(tuple(zip(names, combo)))
    return pool


def maximal_model(
    sig: EvtSignature,
    sentences: Sequence[EvtSentence],
    algebra: FiniteAlgebra,
    bounds: Bounds,
) -> tuple[frozenset[State], dict[str, frozenset[tuple[State, State]]]]:
    """The largest initialising set and per-event relation satisfying every
    sentence over the given algebra.

    Satisfaction quantifies universally over each relation, so the class of
    satisfying models is exactly the non-empty-L downward closure of this
    maximum.
    """
    by_event: dict[str, list[Formula]] = {e: [] for e in sig.event_names}
    for s in sentences:
        if s.event not in by_event:
            raise SortError(f"sentence names unknown event {s.event}")
        by_event[s.event].append(s.body)

    # initialising set: only the primed part of initial-event bodies applies
    init_conjs: list[Formula] = []
    for body in by_event[INIT]:
        init_conjs.extend(_flatten_conjuncts(init_d1(body, sig.var_names)))
    closed_true = True
    primed_conjs = []
    for c in init_conjs:
        if not free_vars(c):
            closed_true = closed_true and eval_formula(c, algebra, {})
        else:
            primed_conjs.append(c)
    if closed_true:
        l_max = frozenset(_filter_pool(sig, algebra, primed_conjs, True))
    else:
        l_max = frozenset()

    r_max: dict[str, frozenset[tuple[State, State]]] = {}
    for e in sig.non_init_events:
        conjs = []
        for body in by_event[e]:
            conjs.extend(_flatten_conjuncts(body))
        closed_ok = True
        before_only, after_only, mixed = [], [], []
        for c in conjs:
            fv = free_vars(c)
            if not fv:
                closed_ok = closed_ok and eval_formula(c, algebra, {})
            elif all(not primed for _, primed in fv):
                before_only.append(c)
            elif all(primed for _, primed in fv):
                after_only.append(c)
            else:
                mixed.append(c)
        if not closed_ok:
            r_max[e] = frozenset()
            continue
        before_pool = _filter_pool(sig, algebra, before_only, False)
        after_pool = _filter_pool(sig, algebra, after_only, True)
        n_pairs = len(before_pool) * len(after_pool)
        if n_pairs > bounds.pair_ceiling:
            raise EnumerationLimit(
                f"event {e}: {len(before_pool)}x{len(after_pool)} state pairs "
                f"exceed the ceiling {bounds.pair_ceiling}")
        mixed_fns = [compile_formula(c, algebra) for c in mixed]
        pairs = []
        before_vals = [(s, state_valuation(s, False)) for s in before_pool]
        after_vals = [(t, state_valuation(t, True)) for t in after_pool]
        for s, sval in before_vals:
            for t, tval in after_vals:
                val = {**sval, **tval}
                if all(fn(val) for fn in mixed_fns):
                    pairs.append((s, t))
        r_max[e] = frozenset(pairs)
    return l_max, r_max


# ---------------------------------------------------------------------------
# pushouts and amalgamation


def evt_pushout(
    s1: EvtMorphism, s2: EvtMorphism
) -> tuple[EvtSignature, EvtMorphism, EvtMorphism]:
    """Pushout of a span of signature morphisms; event statuses of merged
    classes join by supremum."""
    if s1.source != s2.source:
        raise SortError("pushout requires a common source signature")
    src = s1.source
    fsig, finj1, finj2 = fopeq_pushout(s1.fopeq, s2.fopeq)

    ev1, ev2 = pushout_names(
        src.event_names, s1.target.event_names, s2.target.event_names,
        dict(s1.event_map), dict(s2.event_map))
    statuses: dict[str, Status] = {}
    for name, st in s1.target.events:
        out = ev1[name]
        statuses[out] = status_sup(statuses.get(out, Status.ordinary), st) \
            if out in statuses else st
    for name, st in s2.target.events:
        out = ev2[name]
        statuses[out] = status_sup(statuses.get(out, Status.ordinary), st) \
            if out in statuses else st
    statuses[INIT] = Status.ordinary

    v1, v2 = pushout_names(
        src.var_names, s1.target.var_names, s2.target.var_names,
        dict(s1.var_map), dict(s2.var_map))
    var_sorts: dict[str, str] = {}
    for name, sort in s1.target.vars:
        var_sorts[v1[name]] = finj1.apply_sort(sort)
    for name, sort in s2.target.vars:
        out_sort = finj2.apply_sort(sort)
        if var_sorts.get(v2[name], out_sort) != out_sort:
            raise SortError(f"pushout merges variable {name} with conflicting sorts")
        var_sorts[v2[name]] = out_sort

    merged = EvtSignature(fsig, tuple(statuses.items()), tuple(var_sorts.items()))
    inj1 = EvtMorphism(s1.target, merged, finj1, tuple(ev1.items()), tuple(v1.items()))
    inj2 = EvtMorphism(s2.target, merged, finj2, tuple(ev2.items()), tuple(v2.items()))
    return merged, inj1, inj2


def _amalgamate_algebra(
    merged: EvtSignature, inj1: EvtMorphism, inj2: EvtMorphism,
    a1: FiniteAlgebra, a2: FiniteAlgebra,
) -> FiniteAlgebra:
    inv_sort1 = {inj1.fopeq.apply_sort(s): s for s in inj1.fopeq.source.sorts}
    inv_sort2 = {inj2.fopeq.apply_sort(s): s for s in inj2.fopeq.source.sorts}
    carriers = {}
    for s in merged.fopeq.sorts:
        if s in inv_sort1:
            carriers[s] = a1.carrier(inv_sort1[s])
        elif s in inv_sort2:
            carriers[s] = a2.carrier(inv_sort2[s])
        else:
            raise SortError(f"sort {s} not covered by either injection")
    inv_op1 = {inj1.fopeq.apply_op(o.name): o.name for o in inj1.fopeq.source.ops}
    inv_op2 = {inj2.fopeq.apply_op(o.name): o.name for o in inj2.fopeq.source.ops}
    ops = {}
    for o in merged.fopeq.ops:
        if o.name in inv_op1:
            ops[o.name] = a1.op_tables[inv_op1[o.name]]
        else:
            ops[o.name] = a2.op_tables[inv_op2[o.name]]
    inv_p1 = {inj1.fopeq.apply_pred(p.name): p.name for p in inj1.fopeq.source.preds}
    inv_p2 = {inj2.fopeq.apply_pred(p.name): p.name for p in inj2.fopeq.source.preds}
    preds = {}
    for p in merged.fopeq.preds:
        if p.name in inv_p1:
            preds[p.name] = a1.pred_tables[inv_p1[p.name]]
        else:
            preds[p.name] = a2.pred_tables[inv_p2[p.name]]
    return fopeq.make_algebra(merged.fopeq, a1.int_bound, carriers, ops, preds)


def amalgamate(
    m1: EvtModel,
    m2: EvtModel,
    span1: EvtMorphism,
    span2: EvtMorphism,
    pushout: Optional[tuple[EvtSignature, EvtMorphism, EvtMorphism]] = None,
) -> tuple[EvtModel, bool]:
    """Combine models with equal reducts along a span into a model over the
    pushout signature.

    Returns the canonical maximal amalgam plus a uniqueness flag (False when
    a smaller amalgam also satisfies both reduct equations).  Raises when the
    reducts differ, or when no amalgam exists.
    """
    if pushout is None:
        pushout = evt_pushout(span1, span2)
    merged, inj1, inj2 = pushout

    r1 = model_reduct(span1, m1)
    r2 = model_reduct(span2, m2)
    if r1 != r2:
        diff = _first_model_difference(r1, r2)
        raise SpecError(f"reducts along the span differ: {diff}")

    algebra = _amalgamate_algebra(merged, inj1, inj2, m1.algebra, m2.algebra)
    states = enumerate_states(merged, algebra)

    init = frozenset(
        s for s in states
        if reduce_state(s, inj1) in m1.init and reduce_state(s, inj2) in m2.init)
    rel: dict[str, frozenset] = {}
    back1 = {}
    for e in inj1.source.non_init_events:
        back1.setdefault(inj1.apply_event(e), []).append(e)
    back2 = {}
    for e in inj2.source.non_init_events:
        back2.setdefault(inj2.apply_event(e), []).append(e)
    rm1, rm2 = m1.rel_map, m2.rel_map
    for e in merged.non_init_events:
        pairs = []
        for s, t in itertools.product(states, states):
            ok = all(
                (reduce_state(s, inj1), reduce_state(t, inj1)) in rm1[e1]
                for e1 in back1.get(e, ()))
            ok = ok and all(
                (reduce_state(s, inj2), reduce_state(t, inj2)) in rm2[e2]
                for e2 in back2.get(e, ()))
            if ok:
                pairs.append((s, t))
        rel[e] = frozenset(pairs)

    if not init:
        raise SpecError("no amalgam exists: the joined initialising set is empty")
    candidate = make_model(merged, algebra, init, rel)
    if model_reduct(inj1, candidate) != m1 or model_reduct(inj2, candidate) != m2:
        raise SpecError("no amalgam exists: the maximal join does not reduce back")

    unique = not (_has_redundant_state(candidate, inj1, inj2)
                  or _has_redundant_pair(candidate, inj1, inj2))
    return candidate, unique


def _first_model_difference(r1: EvtModel, r2: EvtModel) -> str:
    if r1.algebra != r2.algebra:
        return "algebras differ"
    for s in sorted(r1.init ^ r2.init):
        return f"initial state {s} on one side only"
    for e in r1.signature.non_init_events:
        for p in sorted(r1.rel_map[e] ^ r2.rel_map[e]):
            return f"event {e} pair {p} on one side only"
    return "models differ"


def _has_redundant_state(m: EvtModel, inj1: EvtMorphism, inj2: EvtMorphism) -> bool:
    for x in m.init:
        others = m.init - {x}
        if not others:
            continue
        if (reduce_state(x, inj1) in {reduce_state(y, inj1) for y in others}
                and reduce_state(x, inj2) in {reduce_state(y, inj2) for y in others}):
            return True
    return False


def _has_redundant_pair(m: EvtModel, inj1: EvtMorphism, inj2: EvtMorphism) -> bool:
    def red(p, inj):
        return (reduce_state(p[0], inj), reduce_state(p[1], inj))

    for e, pairs in m.rel:
        for x in pairs:
            others = pairs - {x}
            if not others:
                continue
            cover1 = any(red(x, inj1) == red(y, inj1) for y in others)
            cover2 = any(red(x, inj2) == red(y, inj2) for y in others)
            if cover1 and cover2:
                return True
    return False


# ---------------------------------------------------------------------------
# embedding plain first-order specifications


def comorphism_sign(fsig: FopeqSignature) -> EvtSignature:
    """Wrap a first-order signature: initial event only, no variables."""
    if not isinstance(fsig, FopeqSignature):
        raise SortError("comorphism_sign expects a first-order signature")
    return EvtSignature(fsig, ((INIT, Status.ordinary),), ())


def comorphism_sen(sig: EvtSignature, f: Formula) -> tuple[EvtSentence, ...]:
    """A closed formula becomes one sentence per event of the target."""
    if free_vars(f):
        raise SortError("only closed formulas can be embedded")
    return tuple(EvtSentence(e, f) for e in sig.event_names)


def comorphism_mod(m: EvtModel) -> FiniteAlgebra:
    """Project an embedded model back to its algebra."""
    if m.signature.vars or m.signature.non_init_events:
        raise SortError("model does not come from an embedded specification")
    if any(pairs for _, pairs in m.rel):
        raise SortError("embedded models have empty event relations")
    return m.algebra
