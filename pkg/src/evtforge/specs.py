"""Structured specifications and their bounded model-class semantics.

Specs are built from flat presentations with rename (with), sum (and),
enrich (then), hide (hide via) and the embedding of plain first-order
specifications.  A spec evaluates, per admissible algebra, to the maximal
initialising set and per-event relations; satisfaction is universally
quantified over relations, so the model class is the downward closure of
these maxima and inclusion checks reduce to subset tests on them.

Invariant-style sentences are kept as formula families and expanded over the
event set of the specification being evaluated, so that invariants imported
from a sub-specification constrain events added elsewhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .errors import EnumerationLimit, SortError, SpecError
from . import fopeq as F
from .fopeq import (
    Bounds, FiniteAlgebra, FopeqSignature, Formula, OpApp, PredApp, Term, Var,
    algebra_reduct, conjoin, enumerate_algebras, prime_free_vars,
    rename_free_vars, translate_formula,
)
from .institution import (
    INIT, EvtMorphism, EvtSentence, EvtSignature, State, Status,
    comorphism_sign, evt_identity, maximal_model, reduce_state,
    signature_union, status_sup,
)
from .mathlang import SubsetType, TypeExpr, type_constraint, type_sort


# ---------------------------------------------------------------------------
# flat presentations


@dataclass(frozen=True)
class ActionClause:
    var: str
    kind: str  # ":=" | ":|"
    term: Optional[Term] = None
    pred: Optional[Formula] = None


@dataclass(frozen=True)
class EventClauses:
    name: str
    status: Status = Status.ordinary
    params: tuple[tuple[str, str], ...] = ()  # (name, sort)
    guards: tuple[Formula, ...] = ()
    witnesses: tuple[Formula, ...] = ()
    actions: tuple[ActionClause, ...] = ()

    def body(self) -> Formula:
        """Existentially close the parameters over guards, witnesses and
        before/after predicates; deterministic assignments become v′ = e."""
        parts: list[Formula] = list(self.guards) + list(self.witnesses)
        for a in self.actions:
            if a.kind == ":=":
                parts.append(F.Equal(Var(a.var, True), a.term))
            else:
                parts.append(a.pred)
        body = conjoin(parts)
        if self.params:
            body = F.Exists(self.params, body)
        return body


@dataclass(frozen=True)
class Flat:
    """Printable content of a presentation or enrichment."""

    sorts: tuple[str, ...] = ()
    constants: tuple[tuple[str, TypeExpr], ...] = ()
    axioms: tuple[Formula, ...] = ()  # closed, non-typing
    variables: tuple[tuple[str, TypeExpr], ...] = ()
    invariants: tuple[Formula, ...] = ()
    variant: Optional[Term] = None
    events: tuple[EventClauses, ...] = ()
    abstract_of: Optional[str] = None  # printed as the bare abstract name

    def typing_formulas(self) -> tuple[Formula, ...]:
        out = []
        for name, te in self.variables:
            g = type_constraint(te, Var(name))
            if g is not None:
                out.append(g)
        return tuple(out)

    def constant_axioms(self) -> tuple[Formula, ...]:
        out = []
        for name, te in self.constants:
            if isinstance(te, SubsetType):
                out.append(type_constraint(te, OpApp(name)))
        return tuple(out)


def extend_signature(base: EvtSignature, flat: Flat) -> EvtSignature:
    fsig = base.fopeq
    if flat.sorts:
        fsig = fsig.union(FopeqSignature(sorts=flat.sorts))
    if flat.constants:
        ops = tuple(F.Op(n, (), type_sort(te, fsig)) for n, te in flat.constants)
        fsig = FopeqSignature(fsig.sorts, fsig.ops + ops, fsig.preds)
    events = dict(base.events)
    for ev in flat.events:
        if ev.name in events:
            events[ev.name] = status_sup(events[ev.name], ev.status)
        else:
            events[ev.name] = ev.status
    vars_ = dict(base.vars)
    for name, te in flat.variables:
        sort = type_sort(te, fsig)
        if vars_.get(name, sort) != sort:
            raise SortError(f"variable {name} redeclared with a different sort")
        vars_[name] = sort
    return EvtSignature(fsig, tuple(events.items()), tuple(vars_.items()))


def flat_signature(flat: Flat) -> EvtSignature:
    return extend_signature(EvtSignature(), flat)


def extend_fopeq_signature(base: FopeqSignature, flat: Flat) -> FopeqSignature:
    fsig = base
    if flat.sorts:
        fsig = fsig.union(FopeqSignature(sorts=flat.sorts))
    if flat.constants:
        ops = tuple(F.Op(n, (), type_sort(te, fsig)) for n, te in flat.constants)
        fsig = FopeqSignature(fsig.sorts, fsig.ops + ops, fsig.preds)
    return fsig


# ---------------------------------------------------------------------------
# spec AST


@dataclass(frozen=True)
class Presentation:
    signature: Union[EvtSignature, FopeqSignature]
    flat: Flat


@dataclass(frozen=True)
class Named:
    name: str


@dataclass(frozen=True)
class Translate:
    child: "Spec"
    morphism: EvtMorphism  # source = sig_of(child)


@dataclass(frozen=True)
class Sum:
    left: "Spec"
    right: "Spec"


@dataclass(frozen=True)
class Enrich:
    child: "Spec"
    flat: Flat


@dataclass(frozen=True)
class Hide:
    child: "Spec"
    morphism: EvtMorphism  # target = sig_of(child)


@dataclass(frozen=True)
class Embed:
    child: "Spec"  # first-order flavoured


Spec = Union[Presentation, Named, Translate, Sum, Enrich, Hide, Embed]


def sum_all(parts: Sequence[Spec]) -> Spec:
    if not parts:
        raise SpecError("empty sum")
    out = parts[0]
    for p in parts[1:]:
        out = Sum(out, p)
    return out


class SpecLibrary:
    """Named specifications, in definition order."""

    def __init__(self):
        self.entries: dict[str, Spec] = {}

    def define(self, name: str, spec: Spec) -> None:
        if name in self.entries:
            raise SpecError(f"specification {name} defined twice")
        self.entries[name] = spec

    def lookup(self, name: str) -> Spec:
        if name not in self.entries:
            raise SpecError(f"unknown specification {name}")
        return self.entries[name]

    def names(self) -> tuple[str, ...]:
        return tuple(self.entries)


# ---------------------------------------------------------------------------
# signatures of specs


def is_fopeq_spec(spec: Spec, lib: Optional[SpecLibrary] = None) -> bool:
    sig = sig_of(spec, lib)
    return isinstance(sig, FopeqSignature)


def sig_of(spec: Spec, lib: Optional[SpecLibrary] = None):
    if isinstance(spec, Presentation):
        return spec.signature
    if isinstance(spec, Named):
        if lib is None:
            raise SpecError(f"no library to resolve {spec.name}")
        return sig_of(lib.lookup(spec.name), lib)
    if isinstance(spec, Translate):
        if sig_of(spec.child, lib) != spec.morphism.source:
            raise SpecError("rename morphism does not start at the child's signature")
        return spec.morphism.target
    if isinstance(spec, Hide):
        if sig_of(spec.child, lib) != spec.morphism.target:
            raise SpecError("hiding morphism does not end at the child's signature")
        return spec.morphism.source
    if isinstance(spec, Embed):
        child = sig_of(spec.child, lib)
        if not isinstance(child, FopeqSignature):
            raise SpecError("only first-order specifications can be embedded")
        return comorphism_sign(child)
    if isinstance(spec, Sum):
        left, right = sig_of(spec.left, lib), sig_of(spec.right, lib)
        if isinstance(left, FopeqSignature) and isinstance(right, FopeqSignature):
            return left.union(right)
        if isinstance(left, EvtSignature) and isinstance(right, EvtSignature):
            return signature_union(left, right)
        raise SpecError("sum mixes first-order and event specifications; embed first")
    if isinstance(spec, Enrich):
        child = sig_of(spec.child, lib)
        if isinstance(child, FopeqSignature):
            return extend_fopeq_signature(child, spec.flat)
        return extend_signature(child, spec.flat)
    raise SpecError(f"not a specification: {spec!r}")


def inclusion_morphism(small: EvtSignature, big: EvtSignature) -> EvtMorphism:
    """Identity-on-names morphism between signatures related by union."""
    fm = F.FopeqMorphism(
        small.fopeq, big.fopeq,
        tuple((s, s) for s in small.fopeq.sorts),
        tuple((o.name, o.name) for o in small.fopeq.ops),
        tuple((p.name, p.name) for p in small.fopeq.preds),
    )
    return EvtMorphism(
        small, big, fm,
        tuple((e, e) for e, _ in small.events),
        tuple((v, v) for v, _ in small.vars),
    )


# ---------------------------------------------------------------------------
# model class representation


@dataclass(frozen=True)
class AlgebraSlice:
    """Maximal initialising set and relations for one admissible algebra."""

    algebra: FiniteAlgebra
    l_max: frozenset[State]
    r_max: tuple[tuple[str, frozenset[tuple[State, State]]], ...]

    @property
    def r_map(self) -> dict[str, frozenset[tuple[State, State]]]:
        return dict(self.r_max)


@dataclass(frozen=True)
class ModelClassRep:
    """Per-algebra maxima; the class is the non-empty-L downward closure.

    Algebras whose maximal initialising set is empty admit no models and are
    not listed.
    """

    signature: EvtSignature
    slices: tuple[AlgebraSlice, ...]

    @property
    def by_algebra(self) -> dict[FiniteAlgebra, AlgebraSlice]:
        return {s.algebra: s for s in self.slices}

    def algebras(self) -> tuple[FiniteAlgebra, ...]:
        return tuple(s.algebra for s in self.slices)


def make_rep(sig: EvtSignature, slices: Iterable[AlgebraSlice]) -> ModelClassRep:
    kept = [s for s in slices if s.l_max]
    kept.sort(key=lambda s: s.algebra.describe())
    return ModelClassRep(sig, tuple(kept))


def rep_contains(rep: ModelClassRep, model) -> bool:
    """Membership of a concrete model in the represented class."""
    sl = rep.by_algebra.get(model.algebra)
    if sl is None:
        return False
    if not model.init or not model.init <= sl.l_max:
        return False
    rm = sl.r_map
    return all(pairs <= rm[e] for e, pairs in model.rel)


def term_prime(t: Term, names: Iterable[str]) -> Term:
    names = set(names)

    def walk(t: Term) -> Term:
        if isinstance(t, Var):
            if not t.primed and t.name in names:
                return Var(t.name, True)
            return t
        if isinstance(t, OpApp):
            return OpApp(t.op, tuple(walk(a) for a in t.args))
        return t

    return walk(t)


def term_rename(t: Term, m: EvtMorphism) -> Term:
    if isinstance(t, Var):
        return Var(m.apply_var(t.name), t.primed)
    if isinstance(t, OpApp):
        return OpApp(m.fopeq.apply_op(t.op), tuple(term_rename(a, m) for a in t.args))
    return t


# ---------------------------------------------------------------------------
# flattening


@dataclass
class Flattened:
    """Sentence-level view of a spec, with hide-images as opaque constraints."""

    families: list[tuple[Formula, bool]] = field(default_factory=list)  # (formula, paired)
    variants: list[Term] = field(default_factory=list)
    sentences: list[EvtSentence] = field(default_factory=list)
    axioms: list[Formula] = field(default_factory=list)  # closed algebra filters
    constraints: list[tuple[ModelClassRep, EvtMorphism]] = field(default_factory=list)


def expand_families(fl: Flattened, sig: EvtSignature) -> list[EvtSentence]:
    """All concrete sentences of the flattening over the given signature's
    event set: invariant families pair before/after copies on every event,
    embedded axioms attach verbatim, variants constrain non-ordinary events."""
    out: list[EvtSentence] = list(fl.sentences)
    names = sig.var_names
    for f, paired in fl.families:
        body = F.And((f, prime_free_vars(f, names))) if paired else f
        for e in sig.event_names:
            out.append(EvtSentence(e, body))
    for n in fl.variants:
        primed = term_prime(n, names)
        for e, st in sig.events:
            if st == Status.convergent:
                out.append(EvtSentence(e, PredApp("<", (primed, n))))
            elif st == Status.anticipated:
                out.append(EvtSentence(e, PredApp("<=", (primed, n))))
    return out


class Evaluator:
    """Computes bounded model classes of structured specifications."""

    def __init__(self, lib: Optional[SpecLibrary], bounds: Bounds):
        self.lib = lib
        self.bounds = bounds
        self._classes: dict = {}
        self._flats: dict = {}

    # -- flattening ---------------------------------------------------------

    def flatten(self, spec: Spec) -> Flattened:
        key = spec
        if key in self._flats:
            return self._flats[key]
        fl = self._flatten(spec)
        self._flats[key] = fl
        return fl

    def _flatten(self, spec: Spec) -> Flattened:
        if isinstance(spec, Named):
            return self.flatten(self._resolve(spec.name))
        if isinstance(spec, Presentation):
            if isinstance(spec.signature, FopeqSignature):
                raise SpecError("first-order specification used as an event one")
            return self._flat_contents(spec.flat)
        if isinstance(spec, Enrich):
            if is_fopeq_spec(spec, self.lib):
                raise SpecError("first-order specification used as an event one")
            child = self._lift(self.flatten(spec.child),
                               sig_of(spec.child, self.lib), sig_of(spec, self.lib))
            delta = self._flat_contents(spec.flat)
            return _merge_flattened(child, delta)
        if isinstance(spec, Sum):
            sig = sig_of(spec, self.lib)
            left = self._lift(self.flatten(spec.left),
                              sig_of(spec.left, self.lib), sig)
            right = self._lift(self.flatten(spec.right),
                               sig_of(spec.right, self.lib), sig)
            return _merge_flattened(left, right)
        if isinstance(spec, Embed):
            fsig, closed = self._flatten_fopeq(spec.child)
            fl = Flattened()
            for f in closed:
                fl.axioms.append(f)
                fl.families.append((f, False))
            return fl
        if isinstance(spec, Translate):
            child = self.flatten(spec.child)
            m = spec.morphism
            out = Flattened()
            vmap = dict(m.var_map)
            for f, paired in child.families:
                g = rename_free_vars(translate_formula(m.fopeq, f), vmap)
                out.families.append((g, paired))
            for t in child.variants:
                out.variants.append(term_rename(t, m))
            for s in child.sentences:
                body = rename_free_vars(translate_formula(m.fopeq, s.body), vmap)
                out.sentences.append(EvtSentence(m.apply_event(s.event), body))
            for f in child.axioms:
                out.axioms.append(translate_formula(m.fopeq, f))
            for rep, tau in child.constraints:
                out.constraints.append((rep, _compose_evt(m, tau)))
            return out
        if isinstance(spec, Hide):
            rep = self._hide_image(self.model_class(spec.child), spec.morphism)
            fl = Flattened()
            fl.constraints.append((rep, evt_identity(rep.signature)))
            return fl
        raise SpecError(f"not a specification: {spec!r}")

    def _resolve(self, name: str) -> Spec:
        if self.lib is None:
            raise SpecError(f"no library to resolve {name}")
        return self.lib.lookup(name)

    def _lift(self, fl: Flattened, small, big) -> Flattened:
        """Re-target hide-image constraints into an enclosing signature.

        Formulas and sentences are name-based and stay valid under union;
        only the constraint morphisms need composing with the inclusion.
        """
        if not fl.constraints or small == big:
            return fl
        if isinstance(small, FopeqSignature):
            raise SpecError("first-order specification used as an event one")
        incl = inclusion_morphism(small, big)
        out = Flattened(list(fl.families), list(fl.variants),
                        list(fl.sentences), list(fl.axioms), [])
        for rep, tau in fl.constraints:
            out.constraints.append((rep, _compose_evt(incl, tau)))
        return out

    def _flat_contents(self, flat: Flat) -> Flattened:
        out = Flattened()
        for f in flat.typing_formulas():
            out.families.append((f, True))
        for f in flat.invariants:
            out.families.append((f, True))
        for f in _dedupe(list(flat.axioms) + list(flat.constant_axioms())):
            out.axioms.append(f)
            out.families.append((f, False))
        if flat.variant is not None:
            out.variants.append(flat.variant)
        for ev in flat.events:
            name = INIT if ev.name == INIT else ev.name
            out.sentences.append(EvtSentence(name, ev.body()))
        return out

    def _flatten_fopeq(self, spec: Spec) -> tuple[FopeqSignature, list[Formula]]:
        if isinstance(spec, Named):
            return self._flatten_fopeq(self._resolve(spec.name))
        if isinstance(spec, Presentation):
            if not isinstance(spec.signature, FopeqSignature):
                raise SpecError("event specification used as a first-order one")
            return spec.signature, list(spec.flat.axioms) + list(spec.flat.constant_axioms())
        if isinstance(spec, Enrich):
            fsig, closed = self._flatten_fopeq(spec.child)
            out = extend_fopeq_signature(fsig, spec.flat)
            return out, closed + list(spec.flat.axioms) + list(spec.flat.constant_axioms())
        if isinstance(spec, Sum):
            ls, lc = self._flatten_fopeq(spec.left)
            rs, rc = self._flatten_fopeq(spec.right)
            return ls.union(rs), lc + rc
        raise SpecError("unsupported first-order specification shape")

    # -- evaluation ---------------------------------------------------------

    def sentences_of(self, spec: Spec) -> list[EvtSentence]:
        """The concrete sentence set at the spec's own signature."""
        sig = sig_of(spec, self.lib)
        if isinstance(sig, FopeqSignature):
            spec = Embed(spec)
            sig = sig_of(spec, self.lib)
        return expand_families(self.flatten(spec), sig)

    def model_class(self, spec: Spec) -> ModelClassRep:
        key = spec
        if key in self._classes:
            return self._classes[key]
        rep = self._model_class(spec)
        self._classes[key] = rep
        return rep

    def _model_class(self, spec: Spec) -> ModelClassRep:
        sig = sig_of(spec, self.lib)
        if isinstance(sig, FopeqSignature):
            spec = Embed(spec)
            sig = sig_of(spec, self.lib)
        fl = self.flatten(spec)
        algebras = enumerate_algebras(sig.fopeq, self.bounds, axioms=fl.axioms)
        sentences = expand_families(fl, sig)

        slices = []
        for a in algebras:
            constraint_slices = []
            admissible = True
            for rep, tau in fl.constraints:
                reduced = algebra_reduct(a, tau.fopeq)
                sl = rep.by_algebra.get(reduced)
                if sl is None:
                    admissible = False
                    break
                constraint_slices.append((sl, tau))
            if not admissible:
                continue
            l_max, r_max = maximal_model(sig, sentences, a, self.bounds)
            for sl, tau in constraint_slices:
                l_max = frozenset(
                    s for s in l_max if reduce_state(s, tau) in sl.l_max)
                rm = sl.r_map
                back: dict[str, list[str]] = {}
                for e0 in tau.source.non_init_events:
                    back.setdefault(tau.apply_event(e0), []).append(e0)
                new_r = {}
                for e, pairs in r_max.items():
                    sources = back.get(e, ())
                    if sources:
                        pairs = frozenset(
                            (s, t) for s, t in pairs
                            if all((reduce_state(s, tau), reduce_state(t, tau)) in rm[e0]
                                   for e0 in sources))
                    new_r[e] = pairs
                r_max = new_r
            slices.append(AlgebraSlice(a, l_max, tuple(sorted(r_max.items()))))
        return make_rep(sig, slices)

    # -- hiding -------------------------------------------------------------

    def _hide_image(self, rep: ModelClassRep, m: EvtMorphism) -> ModelClassRep:
        """The class of reducts along m, as maxima over the source signature.

        Maxima represent the image exactly when the event map is injective
        and algebras collapsing to the same reduct agree; both are verified,
        with no fallback beyond the checks (a refusal otherwise).
        """
        events = [m.apply_event(e) for e in m.source.non_init_events]
        if len(set(events)) != len(events):
            raise EnumerationLimit(
                "hiding along a non-injective event map does not preserve the "
                "maxima representation")
        grouped: dict[FiniteAlgebra, AlgebraSlice] = {}
        for sl in rep.slices:
            reduced_alg = algebra_reduct(sl.algebra, m.fopeq)
            l_img = frozenset(reduce_state(s, m) for s in sl.l_max)
            rm = sl.r_map
            r_img = tuple(sorted(
                (e, frozenset((reduce_state(s, m), reduce_state(t, m))
                              for s, t in rm[m.apply_event(e)]))
                for e in m.source.non_init_events))
            candidate = AlgebraSlice(reduced_alg, l_img, r_img)
            prior = grouped.get(reduced_alg)
            if prior is not None and prior != candidate:
                raise EnumerationLimit(
                    "hiding collapses algebras with different behaviour; the "
                    "image is not a single downward-closed class")
            grouped[reduced_alg] = candidate
        return make_rep(m.source, grouped.values())


def _merge_flattened(a: Flattened, b: Flattened) -> Flattened:
    out = Flattened()
    out.families = _dedupe(a.families + b.families)
    out.variants = _dedupe(a.variants + b.variants)
    out.sentences = _dedupe(a.sentences + b.sentences)
    out.axioms = _dedupe(a.axioms + b.axioms)
    out.constraints = a.constraints + b.constraints
    return out


def _dedupe(items: list) -> list:
    seen = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def _compose_evt(outer: EvtMorphism, inner: EvtMorphism) -> EvtMorphism:
    from .institution import evt_compose

    return evt_compose(outer, inner)


# ---------------------------------------------------------------------------
# explicit enumeration (oracle-sized instances only)


def enumerate_models(rep: ModelClassRep, limit: int = 1 << 16):
    """Every concrete model in the represented class; guarded by a count
    limit since the downward closure is exponential."""
    from .institution import make_model

    total = 0
    for sl in rep.slices:
        count = (2 ** len(sl.l_max) - 1)
        for _, pairs in sl.r_max:
            count *= 2 ** len(pairs)
        total += count
        if total > limit:
            raise EnumerationLimit(f"class has more than {limit} models")
    for sl in rep.slices:
        l_subsets = _subsets(sorted(sl.l_max), nonempty=True)
        event_names = [e for e, _ in sl.r_max]
        pair_choices = [_subsets(sorted(pairs)) for _, pairs in sl.r_max]
        for init in l_subsets:
            for chosen in itertools.product(*pair_choices):
                yield make_model(rep.signature, sl.algebra, frozenset(init),
                                 dict(zip(event_names, map(frozenset, chosen))))


def _subsets(items: list, nonempty: bool = False):
    out = []
    for r in range(0 if not nonempty else 1, len(items) + 1):
        out.extend(itertools.combinations(items, r))
    return out
