"""Refinement as model-class inclusion.

A declaration names an abstract and a concrete specification and a signature
morphism between them.  The refinement holds when every concrete model,
reduced along the morphism, is a model of the abstract specification; with
classes represented by per-algebra maxima this is a subset test on the maxima
(checked sound against literal enumeration in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import SortError, SpecError
from . import fopeq as F
from .fopeq import algebra_reduct
from .institution import (
    INIT, EvtMorphism, EvtSignature, State, evt_compose, evt_identity,
    reduce_state,
)
from .specs import Evaluator, ModelClassRep, Spec, SpecLibrary, sig_of
from .sugar import RefinementText


@dataclass(frozen=True)
class RefinementDecl:
    name: str
    abstract: str
    concrete: str
    morphism: EvtMorphism  # abstract signature -> concrete signature


@dataclass
class Counterexample:
    algebra: str
    event: Optional[str]  # None: the algebra itself is not abstract-admissible
    before: Optional[State] = None
    after: Optional[State] = None

    def as_dict(self) -> dict:
        return {
            "algebra": self.algebra,
            "event": self.event,
            "before": None if self.before is None else dict(self.before),
            "after": None if self.after is None else dict(self.after),
        }


@dataclass
class RefinementVerdict:
    name: str
    holds: bool
    counterexample: Optional[Counterexample] = None
    stats: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": self.holds,
            "counterexample": None if self.counterexample is None
            else self.counterexample.as_dict(),
            "stats": dict(self.stats),
        }


def resolve_refinement(
    rt: RefinementText,
    lib: SpecLibrary,
    allow_status_drop: bool = False,
    warnings: Optional[list[str]] = None,
) -> RefinementDecl:
    """Build the abstract-to-concrete morphism from a parsed declaration;
    unmapped symbols default to the identity."""
    abstract = sig_of(lib.lookup(rt.abstract), lib)
    concrete = sig_of(lib.lookup(rt.concrete), lib)
    if not isinstance(abstract, EvtSignature) or not isinstance(concrete, EvtSignature):
        raise SpecError(f"refinement {rt.name}: both sides must be machine specs")

    ev_map = {e: e for e, _ in abstract.events}
    var_map = {v: v for v, _ in abstract.vars}
    sort_map = {s: s for s in abstract.fopeq.sorts}
    op_map = {o.name: o.name for o in abstract.fopeq.ops}
    ev_names = abstract.event_map
    var_names = abstract.var_map
    for m in rt.maplets:
        kinds = [m.src in ev_names, m.src in var_names,
                 m.src in op_map, m.src in sort_map]
        if sum(kinds) > 1:
            raise SpecError(f"refinement {rt.name}: maplet source {m.src} ambiguous")
        if m.src in ev_names:
            ev_map[m.src] = m.dst
        elif m.src in var_names:
            var_map[m.src] = m.dst
        elif m.src in op_map:
            op_map[m.src] = m.dst
        elif m.src in sort_map:
            sort_map[m.src] = m.dst
        else:
            raise SpecError(
                f"refinement {rt.name}: {m.src} not in the abstract signature")
    for e, target in ev_map.items():
        if target not in concrete.event_map:
            raise SpecError(
                f"refinement {rt.name}: {e} maps to unknown concrete event {target}")
    for v, target in var_map.items():
        if target not in concrete.var_map:
            raise SpecError(
                f"refinement {rt.name}: {v} maps to unknown concrete variable {target}")

    fm = F.FopeqMorphism(abstract.fopeq, concrete.fopeq, tuple(sort_map.items()),
                         tuple(op_map.items()),
                         tuple((p.name, p.name) for p in abstract.fopeq.preds))
    try:
        morphism = EvtMorphism(abstract, concrete, fm, tuple(ev_map.items()),
                               tuple(var_map.items()))
    except SortError as e:
        if not allow_status_drop or "status" not in str(e):
            raise SpecError(f"refinement {rt.name}: {e}") from e
        if warnings is not None:
            warnings.append(f"refinement {rt.name}: {e} (accepted, statuses ignored)")
        morphism = EvtMorphism(abstract, concrete, fm, tuple(ev_map.items()),
                               tuple(var_map.items()), check_status=False)
    return RefinementDecl(rt.name, rt.abstract, rt.concrete, morphism)


def check_refinement_morphism(decl: RefinementDecl,
                              evaluator: Evaluator) -> RefinementVerdict:
    """Inclusion of the concrete class, reduced along the morphism, in the
    abstract class; per-algebra subset tests on the maxima."""
    lib = evaluator.lib
    rep_a = evaluator.model_class(lib.lookup(decl.abstract))
    rep_c = evaluator.model_class(lib.lookup(decl.concrete))
    return _check_inclusion(decl.name, rep_c, rep_a, decl.morphism)


def check_refinement_same_sig(name: str, spec_a: Spec, spec_c: Spec,
                              evaluator: Evaluator) -> RefinementVerdict:
    sig_a = sig_of(spec_a, evaluator.lib)
    sig_c = sig_of(spec_c, evaluator.lib)
    if sig_a != sig_c:
        raise SpecError(f"refinement {name}: signatures differ")
    rep_a = evaluator.model_class(spec_a)
    rep_c = evaluator.model_class(spec_c)
    return _check_inclusion(name, rep_c, rep_a, evt_identity(sig_a))


def _check_inclusion(name: str, rep_c: ModelClassRep, rep_a: ModelClassRep,
                     m: EvtMorphism) -> RefinementVerdict:
    algebras = 0
    pairs_checked = 0
    for sl in rep_c.slices:
        algebras += 1
        reduced_alg = algebra_reduct(sl.algebra, m.fopeq)
        asl = rep_a.by_algebra.get(reduced_alg)
        label = sl.algebra.describe()
        if asl is None:
            return RefinementVerdict(
                name, False,
                Counterexample(label, None),
                {"algebras": algebras, "pairs": pairs_checked})
        for s in sorted(sl.l_max):
            red = reduce_state(s, m)
            if red not in asl.l_max:
                return RefinementVerdict(
                    name, False, Counterexample(label, INIT, after=red),
                    {"algebras": algebras, "pairs": pairs_checked})
        arm = asl.r_map
        crm = sl.r_map
        for e in m.source.non_init_events:
            target = m.apply_event(e)
            for s, t in sorted(crm[target]):
                pairs_checked += 1
                red = (reduce_state(s, m), reduce_state(t, m))
                if red not in arm[e]:
                    return RefinementVerdict(
                        name, False,
                        Counterexample(label, e, before=red[0], after=red[1]),
                        {"algebras": algebras, "pairs": pairs_checked})
    return RefinementVerdict(name, True, None,
                             {"algebras": algebras, "pairs": pairs_checked})


def compose_refinements(name: str, first: RefinementDecl,
                        second: RefinementDecl) -> RefinementDecl:
    """Chain a ⊑ b and b ⊑ c into a ⊑ c."""
    if first.concrete != second.abstract:
        raise SpecError("refinements do not chain")
    return RefinementDecl(
        name, first.abstract, second.concrete,
        evt_compose(second.morphism, first.morphism))


def literal_inclusion(rep_c: ModelClassRep, rep_a: ModelClassRep,
                      m: EvtMorphism, limit: int = 1 << 16) -> bool:
    """Oracle: enumerate every concrete model, reduce it, and test abstract
    membership.  Exponential; test-sized instances only."""
    from .institution import model_reduct
    from .specs import enumerate_models, rep_contains

    for model in enumerate_models(rep_c, limit):
        if not rep_contains(rep_a, model_reduct(m, model)):
            return False
    return True
