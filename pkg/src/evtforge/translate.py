"""Translation of machines and contexts into structured specifications.

A context becomes a first-order spec (extended contexts summed, then the own
body).  A machine becomes: the seen contexts embedded, summed with the
abstract-machine import when the machine refines one, then enriched with the
sentences of its own body.

The abstract import consists of the abstract invariants (re-expanded over the
concrete event set) plus, for every concrete event refining abstract ones, a
hide/rename slice of the abstract spec restricted to the refined events.
Slices whose event map is the identity are kept in the tree; the printer may
elide them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import SortError, SpecError
from .fopeq import Formula, INT, free_vars
from .institution import INIT, EvtMorphism, EvtSignature, Status
from . import fopeq as F
from .eventb import (
    ContextDef, EbSpecification, Environment, EventDef, MachineDef,
    build_env, typing_of_axiom, typing_of_invariant,
)
from .mathlang import (
    ElabContext, SBin, SName, SSet, SubsetType, elab_formula, elab_term,
    type_constraint, type_sort,
)
from .specs import (
    ActionClause, Embed, Enrich, EventClauses, Flat, Hide, Named,
    Presentation, Spec, SpecLibrary, Translate, sig_of, sum_all,
)


@dataclass
class TranslationOutput:
    library: SpecLibrary = field(default_factory=SpecLibrary)
    env: Environment = field(default_factory=Environment)
    order: list[tuple[str, str]] = field(default_factory=list)  # (kind, name)
    diagnostics: list[str] = field(default_factory=list)
    _invariant_formulas: dict[str, tuple[Formula, ...]] = field(default_factory=dict)


def translate(spec: EbSpecification,
              base: Optional[TranslationOutput] = None) -> TranslationOutput:
    """Translate every machine/context of the parsed input, left to right."""
    out = base or TranslationOutput()
    out.env = build_env(spec, out.env)
    for item in spec.items:
        if isinstance(item, ContextDef):
            _translate_context(item, out)
        else:
            _translate_machine(item, out)
    return out


# ---------------------------------------------------------------------------
# contexts


def _translate_context(c: ContextDef, out: TranslationOutput) -> None:
    fsig = out.env.fopeq(c.name)
    ctx = ElabContext(fsig)
    axioms = []
    for ax in c.axioms:
        _, kept = typing_of_axiom(ax, c.constants, fsig.all_sorts())
        if not kept:
            continue
        axioms.append(elab_formula(ax.pred, ctx))
    for f in axioms:
        if free_vars(f):
            raise SpecError(f"context {c.name}: axiom is not closed")
    if c.theorems:
        out.diagnostics.append(
            f"context {c.name}: {len(c.theorems)} theorem(s) parsed and ignored")

    ctypes = out.env.constant_types[c.name]
    own_constants = tuple((n, ctypes[n]) for n in c.constants)
    flat = Flat(sorts=c.sets, constants=own_constants, axioms=tuple(axioms))
    if c.extends:
        spec: Spec = Enrich(sum_all([Named(n) for n in c.extends]), flat)
    else:
        spec = Presentation(fsig, flat)
    if sig_of(spec, out.library) != fsig:
        raise SpecError(f"context {c.name}: translated signature mismatch")
    out.library.define(c.name, spec)
    out.order.append(("context", c.name))


# ---------------------------------------------------------------------------
# machines


def _translate_machine(m: MachineDef, out: TranslationOutput) -> None:
    sig = out.env.evt(m.name)
    body = _machine_body_flat(m, sig, out)
    _record_invariants(m, body, out)

    imports: list[Spec] = []
    if m.refines is not None:
        imports.append(_invariant_import(m, out))
    imports.extend(Embed(Named(ctx)) for ctx in m.sees)
    if m.refines is not None:
        imports.extend(_refinement_slices(m, sig, out))

    if imports:
        spec: Spec = Enrich(sum_all(imports), body)
    else:
        spec = Presentation(sig, body)
    got = sig_of(spec, out.library)
    if got != sig:
        raise SpecError(
            f"machine {m.name}: translated signature disagrees with extraction")
    out.library.define(m.name, spec)
    out.order.append(("machine", m.name))
    if m.theorems:
        out.diagnostics.append(
            f"machine {m.name}: {len(m.theorems)} theorem(s) parsed and ignored")


def _machine_body_flat(m: MachineDef, sig: EvtSignature,
                       out: TranslationOutput) -> Flat:
    vtypes = out.env.var_types[m.name]
    own_vars = tuple((v, vtypes[v]) for v in m.variables if v in vtypes)
    for v in m.variables:
        if v not in vtypes and m.refines is None:
            raise SpecError(f"machine {m.name}: variable {v} has no typing invariant")

    base = ElabContext(sig.fopeq, vars=sig.vars, allow_primes=False)
    invariants = []
    for inv in m.invariants:
        if typing_of_invariant(inv, m.variables, sig.fopeq.all_sorts()):
            continue
        invariants.append(elab_formula(inv.pred, base))

    variant = None
    if m.variant is not None:
        t, s = elab_term(m.variant, base)
        if s != INT:
            raise SpecError(f"machine {m.name}: variant must be numeric")
        variant = t

    events = tuple(_event_clauses(m, e, sig, out) for e in m.events)
    return Flat(variables=own_vars, invariants=tuple(invariants),
                variant=variant, events=events)


def _event_clauses(m: MachineDef, e: EventDef, sig: EvtSignature,
                   out: TranslationOutput) -> EventClauses:
    name = INIT if e.is_init else e.name
    params = _param_sorts(m, e, sig)
    guard_ctx = ElabContext(sig.fopeq, vars=sig.vars + params, allow_primes=False)
    prime_ctx = ElabContext(sig.fopeq, vars=sig.vars + params, allow_primes=True)

    guards = [elab_formula(g.pred, guard_ctx) for g in e.guards]
    for p, te in zip(e.params, params):
        if p[1] is not None:
            g = type_constraint(p[1], F.Var(te[0]))
            if g is not None:
                guards.append(g)
    witnesses = [elab_formula(w.pred, prime_ctx) for w in e.witnesses]

    actions = []
    var_sorts = sig.var_map
    for a in e.actions:
        want = var_sorts[a.var]
        if a.kind == ":=":
            t, got = elab_term(a.rhs, guard_ctx if not e.is_init else
                               ElabContext(sig.fopeq, vars=sig.vars, allow_primes=False))
            if got != want:
                raise SortError(
                    f"{m.name}.{e.name}: {a.var} := expression of sort {got}")
            actions.append(ActionClause(a.var, ":=", term=t))
        else:
            f = elab_formula(a.rhs, prime_ctx)
            actions.append(ActionClause(a.var, ":|", pred=f))

    return EventClauses(
        name=name, status=sig.status(name), params=params,
        guards=tuple(guards), witnesses=tuple(witnesses), actions=tuple(actions))


def _param_sorts(m: MachineDef, e: EventDef,
                 sig: EvtSignature) -> tuple[tuple[str, str], ...]:
    """Parameter sorts from annotations, else from typing-shaped guards."""
    resolved = []
    for name, te in e.params:
        if name in sig.var_map:
            raise SpecError(f"{m.name}.{e.name}: parameter {name} shadows a variable")
        if te is not None:
            resolved.append((name, type_sort(te, sig.fopeq)))
            continue
        sort = None
        for g in e.guards:
            node = g.pred
            if (isinstance(node, SBin) and node.op == "in"
                    and isinstance(node.left, SName) and node.left.name == name
                    and not node.left.primed):
                rhs = node.right
                if isinstance(rhs, SName):
                    if rhs.name in ("NAT", "INT", INT):
                        sort = INT
                    elif rhs.name in ("BOOL", F.BOOL):
                        sort = F.BOOL
                    elif sig.fopeq.has_sort(rhs.name):
                        sort = rhs.name
                elif isinstance(rhs, SSet):
                    from .mathlang import _literal_term
                    try:
                        st = SubsetType(tuple(_literal_term(x) for x in rhs.elems))
                        sort = type_sort(st, sig.fopeq)
                    except Exception:
                        pass
            if sort:
                break
        if sort is None:
            raise SpecError(
                f"{m.name}.{e.name}: cannot infer a sort for parameter {name}")
        resolved.append((name, sort))
    return tuple(resolved)


# ---------------------------------------------------------------------------
# the abstract-machine import


def _record_invariants(m: MachineDef, body: Flat, out: TranslationOutput) -> None:
    """Remember the machine's effective invariant formulas (non-typing
    invariants plus typing constraints, own and inherited) for re-expansion
    over the event sets of later refinements."""
    inherited: tuple[Formula, ...] = ()
    if m.refines is not None:
        if m.refines not in out._invariant_formulas:
            raise SpecError(f"abstract machine {m.refines} was not translated here")
        inherited = out._invariant_formulas[m.refines]
    own = body.typing_formulas() + body.invariants
    seen: list[Formula] = []
    for f in inherited + own:
        if f not in seen:
            seen.append(f)
    out._invariant_formulas[m.name] = tuple(seen)


def _invariant_import(m: MachineDef, out: TranslationOutput) -> Spec:
    abstract_sig = out.env.evt(m.refines)
    inv_sig = EvtSignature(abstract_sig.fopeq, (), abstract_sig.vars)
    flat = Flat(invariants=out._invariant_formulas[m.refines],
                abstract_of=m.refines)
    return Presentation(inv_sig, flat)


def _refinement_slices(m: MachineDef, sig: EvtSignature,
                       out: TranslationOutput) -> list[Spec]:
    abstract_sig = out.env.evt(m.refines)
    slices: list[Spec] = []
    refined: set[str] = {INIT}

    def make_slice(abstract_events: Sequence[str], concrete: str) -> Spec:
        hidden = EvtSignature(
            abstract_sig.fopeq,
            tuple((e, Status.ordinary) for e in abstract_events),
            abstract_sig.vars)
        sigma_h = EvtMorphism(
            hidden, abstract_sig, F.fopeq_identity(abstract_sig.fopeq),
            tuple((e, e) for e in hidden.event_names),
            tuple((v, v) for v in hidden.var_names))
        fincl = F.FopeqMorphism(
            abstract_sig.fopeq, sig.fopeq,
            tuple((s, s) for s in abstract_sig.fopeq.sorts),
            tuple((o.name, o.name) for o in abstract_sig.fopeq.ops),
            tuple((p.name, p.name) for p in abstract_sig.fopeq.preds))
        sigma_m = EvtMorphism(
            hidden, sig, fincl,
            tuple((e, concrete if e != INIT else INIT) for e in hidden.event_names),
            tuple((v, v) for v in hidden.var_names))
        return Translate(Hide(Named(m.refines), sigma_h), sigma_m)

    slices.append(make_slice((INIT,), INIT))
    for e in m.events:
        if e.is_init:
            continue
        if e.refines:
            refined.update(e.refines)
            slices.append(make_slice(tuple(e.refines), e.name))
    # abstract events nobody refines persist with their sentences
    for name in abstract_sig.non_init_events:
        if name not in refined:
            slices.append(make_slice((name,), name))
    return slices
