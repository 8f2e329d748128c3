"""Machine/context abstract syntax, the plain-text parser and printer, and
signature extraction into an environment.

Predicates and expressions are kept as unelaborated surface trees; sort
elaboration happens once signatures are known.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .errors import ParseError, SpecError
from .fopeq import BOOL, INT, FopeqSignature, Op
from .institution import INIT, EvtSignature, Status
from .mathlang import (
    BoolType, ExprParser, IntType, NatType, SBin, SName, SSet, SortType,
    SubsetType, TokenStream, TypeExpr, parse_type_expr, tokenize, type_sort,
    unparse_surface, unparse_type, _literal_term,
)

INIT_EVENT_NAME = "Initialisation"

_MACHINE_KEYWORDS = {
    "machine", "context", "refines", "sees", "variables", "invariants",
    "variant", "events", "event", "end",
}
_CONTEXT_KEYWORDS = {"machine", "context", "extends", "sets", "constants", "axioms", "end"}
_EVENT_KEYWORDS = {"status", "refines", "any", "when", "with", "thenAct", "end", "event"}
_ALL_KEYWORDS = _MACHINE_KEYWORDS | _CONTEXT_KEYWORDS | _EVENT_KEYWORDS


@dataclass(frozen=True)
class LabelledPred:
    label: str
    pred: object  # surface expression
    theorem: bool = False


@dataclass(frozen=True)
class ActionDef:
    label: str
    var: str
    kind: str  # ":=" deterministic or ":|" becomes-such-that
    rhs: object  # surface expression


@dataclass(frozen=True)
class EventDef:
    name: str
    status: Status = Status.ordinary
    refines: tuple[str, ...] = ()
    params: tuple[tuple[str, Optional[TypeExpr]], ...] = ()
    guards: tuple[LabelledPred, ...] = ()
    witnesses: tuple[LabelledPred, ...] = ()
    actions: tuple[ActionDef, ...] = ()
    extended: bool = False

    @property
    def is_init(self) -> bool:
        return self.name == INIT_EVENT_NAME


@dataclass(frozen=True)
class MachineDef:
    name: str
    refines: Optional[str] = None
    sees: tuple[str, ...] = ()
    variables: tuple[str, ...] = ()
    invariants: tuple[LabelledPred, ...] = ()
    theorems: tuple[LabelledPred, ...] = ()
    variant: Optional[object] = None  # surface expression
    events: tuple[EventDef, ...] = ()

    @property
    def init_event(self) -> EventDef:
        for e in self.events:
            if e.is_init:
                return e
        raise SpecError(f"machine {self.name} has no initialisation event")


@dataclass(frozen=True)
class ContextDef:
    name: str
    extends: tuple[str, ...] = ()
    sets: tuple[str, ...] = ()
    constants: tuple[str, ...] = ()
    axioms: tuple[LabelledPred, ...] = ()
    theorems: tuple[LabelledPred, ...] = ()


@dataclass(frozen=True)
class EbSpecification:
    items: tuple[Union[MachineDef, ContextDef], ...] = ()

    def machines(self) -> tuple[MachineDef, ...]:
        return tuple(i for i in self.items if isinstance(i, MachineDef))

    def contexts(self) -> tuple[ContextDef, ...]:
        return tuple(i for i in self.items if isinstance(i, ContextDef))

    def find(self, name: str):
        for i in self.items:
            if i.name == name:
                return i
        raise SpecError(f"no machine or context named {name}")


# ---------------------------------------------------------------------------
# text parser


class _Parser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text))

    def at_keyword(self, *words: str) -> bool:
        t = self.ts.peek()
        return t.kind == "IDENT" and not t.primed and t.text in words

    def parse(self) -> EbSpecification:
        items = []
        while True:
            t = self.ts.peek()
            if t.kind == "EOF":
                break
            if self.at_keyword("machine"):
                items.append(self.machine())
            elif self.at_keyword("context"):
                items.append(self.context())
            else:
                raise ParseError(
                    f"expected 'machine' or 'context', found {t.text!r}", t.line, t.col)
        return EbSpecification(tuple(items))

    def _name(self) -> str:
        t = self.ts.expect_ident()
        if t.primed:
            raise ParseError("names may not be primed", t.line, t.col)
        if t.text in _ALL_KEYWORDS:
            raise ParseError(f"{t.text!r} is a keyword", t.line, t.col)
        return t.text

    def _name_list(self) -> list[str]:
        names = [self._name()]
        while True:
            if self.ts.accept_sym(","):
                names.append(self._name())
                continue
            t = self.ts.peek()
            if t.kind == "IDENT" and not t.primed and t.text not in _ALL_KEYWORDS \
                    and not (self.ts.peek(ahead=1).kind == "SYM"
                             and self.ts.peek(ahead=1).text == ":"):
                names.append(self._name())
                continue
            return names

    def _labelled(self) -> LabelledPred:
        label = self.ts.expect_ident()
        self.ts.expect_sym(":")
        pred = ExprParser(self.ts).parse_formula_expr()
        theorem = False
        if self.at_keyword("theorem"):
            self.ts.next()
            theorem = True
        return LabelledPred(label.text, pred, theorem)

    def _labelled_list(self) -> list[LabelledPred]:
        out = []
        while True:
            t = self.ts.peek()
            if (t.kind == "IDENT" and not t.primed and t.text not in _ALL_KEYWORDS
                    and self.ts.peek(ahead=1).kind == "SYM"
                    and self.ts.peek(ahead=1).text == ":"):
                out.append(self._labelled())
            else:
                return out

    def context(self) -> ContextDef:
        self.ts.expect_word("context")
        name = self._name()
        extends: list[str] = []
        sets: list[str] = []
        constants: list[str] = []
        axioms: list[LabelledPred] = []
        while not self.at_keyword("end"):
            if self.at_keyword("extends"):
                self.ts.next()
                extends = self._name_list()
            elif self.at_keyword("sets"):
                self.ts.next()
                sets = self._name_list()
            elif self.at_keyword("constants"):
                self.ts.next()
                constants = self._name_list()
            elif self.at_keyword("axioms"):
                self.ts.next()
                axioms = self._labelled_list()
            else:
                self.ts.error("expected a context section")
        self.ts.expect_word("end")
        theorems = tuple(a for a in axioms if a.theorem)
        return ContextDef(name, tuple(extends), tuple(sets), tuple(constants),
                          tuple(a for a in axioms if not a.theorem), theorems)

    def machine(self) -> MachineDef:
        self.ts.expect_word("machine")
        name = self._name()
        refines: Optional[str] = None
        sees: list[str] = []
        variables: list[str] = []
        invariants: list[LabelledPred] = []
        variant = None
        events: list[EventDef] = []
        while not self.at_keyword("end"):
            if self.at_keyword("refines"):
                self.ts.next()
                if refines is not None:
                    self.ts.error("a machine refines at most one machine")
                refines = self._name()
            elif self.at_keyword("sees"):
                self.ts.next()
                sees = self._name_list()
            elif self.at_keyword("variables"):
                self.ts.next()
                variables = self._name_list()
            elif self.at_keyword("invariants"):
                self.ts.next()
                invariants = self._labelled_list()
            elif self.at_keyword("variant"):
                self.ts.next()
                if variant is not None:
                    self.ts.error("a machine has at most one variant")
                variant = ExprParser(self.ts).parse_formula_expr()
            elif self.at_keyword("events"):
                self.ts.next()
                while self.at_keyword("event"):
                    events.append(self.event())
            else:
                self.ts.error("expected a machine section")
        self.ts.expect_word("end")
        theorems = tuple(i for i in invariants if i.theorem)
        return MachineDef(
            name, refines, tuple(sees), tuple(variables),
            tuple(i for i in invariants if not i.theorem), theorems,
            variant, tuple(events))

    def event(self) -> EventDef:
        self.ts.expect_word("event")
        t = self.ts.expect_ident()
        name = t.text
        status = Status.ordinary
        refines: list[str] = []
        params: list[tuple[str, Optional[TypeExpr]]] = []
        guards: list[LabelledPred] = []
        witnesses: list[LabelledPred] = []
        actions: list[ActionDef] = []
        while not self.at_keyword("end"):
            if self.at_keyword("status"):
                self.ts.next()
                st = self.ts.expect_ident().text
                try:
                    status = Status[st]
                except KeyError:
                    self.ts.error(f"unknown status {st!r}")
            elif self.at_keyword("refines"):
                self.ts.next()
                refines = self._name_list()
            elif self.at_keyword("any"):
                self.ts.next()
                params = self._params()
            elif self.at_keyword("when"):
                self.ts.next()
                guards = self._labelled_list()
            elif self.at_keyword("with"):
                self.ts.next()
                witnesses = self._labelled_list()
            elif self.at_keyword("thenAct"):
                self.ts.next()
                actions = self._actions()
            else:
                self.ts.error("expected an event section")
        self.ts.expect_word("end")
        if name == INIT_EVENT_NAME and status != Status.ordinary:
            raise ParseError("the initialisation event is always ordinary", t.line, t.col)
        return EventDef(name, status, tuple(refines), tuple(params),
                        tuple(guards), tuple(witnesses), tuple(actions))

    def _params(self) -> list[tuple[str, Optional[TypeExpr]]]:
        out = [self._param()]
        while self.ts.accept_sym(","):
            out.append(self._param())
        return out

    def _param(self) -> tuple[str, Optional[TypeExpr]]:
        name = self._name()
        if self.ts.accept_sym(":"):
            return (name, parse_type_expr(self.ts))
        return (name, None)

    def _actions(self) -> list[ActionDef]:
        out = []
        while True:
            t = self.ts.peek()
            if not (t.kind == "IDENT" and not t.primed and t.text not in _ALL_KEYWORDS
                    and self.ts.peek(ahead=1).kind == "SYM"
                    and self.ts.peek(ahead=1).text == ":"):
                return out
            label = self.ts.expect_ident().text
            self.ts.expect_sym(":")
            var = self._name()
            t = self.ts.peek()
            if self.ts.accept_sym(":="):
                rhs = ExprParser(self.ts).parse_formula_expr()
                out.append(ActionDef(label, var, ":=", rhs))
            elif self.ts.accept_sym(":|"):
                rhs = ExprParser(self.ts).parse_formula_expr()
                out.append(ActionDef(label, var, ":|", rhs))
            else:
                raise ParseError(f"expected ':=' or ':|' after {var}", t.line, t.col)


def parse_text(source: str) -> EbSpecification:
    """Parse the plain-text syntax; the result is validated for name rules."""
    spec = _Parser(source).parse()
    validate(spec)
    return spec


# ---------------------------------------------------------------------------
# validation


def validate(spec: EbSpecification) -> None:
    """Intra-file checks; cross-file references resolve in build_env."""
    all_names = [i.name for i in spec.items]
    seen: set[str] = set()
    for item in spec.items:
        if item.name in seen:
            raise SpecError(f"duplicate machine/context name {item.name}")
        later = set(all_names) - seen - {item.name}
        if isinstance(item, ContextDef):
            for ref in item.extends:
                if ref in later:
                    raise SpecError(f"context {item.name}: forward reference to {ref}")
            names = list(item.sets) + list(item.constants)
            if len(names) != len(set(names)):
                raise SpecError(f"context {item.name} reuses a set/constant name")
        else:
            _validate_machine(item, later)
        seen.add(item.name)


def _validate_machine(m: MachineDef, later: set[str]) -> None:
    if m.refines is not None and m.refines in later:
        raise SpecError(f"machine {m.name}: forward reference to {m.refines}")
    for ref in m.sees:
        if ref in later:
            raise SpecError(f"machine {m.name}: forward reference to {ref}")
    inits = [e for e in m.events if e.is_init]
    if len(inits) != 1:
        raise SpecError(f"machine {m.name} needs exactly one initialisation event")
    init = inits[0]
    if init.params or init.guards or init.witnesses or init.refines:
        raise SpecError(f"{m.name}: the initialisation event only has actions")
    for a in init.actions:
        if _mentions_unprimed_var(a.rhs, set(m.variables)):
            raise SpecError(
                f"{m.name}: initialisation may not read state variables")
    names = [e.name for e in m.events]
    if len(names) != len(set(names)):
        raise SpecError(f"machine {m.name} declares an event twice")
    if len(set(m.variables)) != len(m.variables):
        raise SpecError(f"machine {m.name} declares a variable twice")
    for e in m.events:
        labels = [g.label for g in e.guards] + [w.label for w in e.witnesses] \
            + [a.label for a in e.actions]
        if len(labels) != len(set(labels)):
            raise SpecError(f"{m.name}.{e.name}: labels are not unique")
        assigned = [a.var for a in e.actions]
        if len(assigned) != len(set(assigned)):
            raise SpecError(f"{m.name}.{e.name}: a variable is assigned twice")
        for a in e.actions:
            if a.var not in m.variables:
                raise SpecError(
                    f"{m.name}.{e.name}: assignment to undeclared variable {a.var}")
        if m.refines is None and e.refines:
            raise SpecError(
                f"{m.name}.{e.name}: refines clause without an abstract machine")


def _mentions_unprimed_var(node, names: set[str]) -> bool:
    if isinstance(node, SName):
        return node.name in names and not node.primed
    if isinstance(node, SBin):
        return (_mentions_unprimed_var(node.left, names)
                or _mentions_unprimed_var(node.right, names))
    if isinstance(node, (SSet,)):
        return any(_mentions_unprimed_var(e, names) for e in node.elems)
    if hasattr(node, "body"):
        return _mentions_unprimed_var(node.body, names)
    if hasattr(node, "args"):
        return any(_mentions_unprimed_var(a, names) for a in node.args)
    return False


# ---------------------------------------------------------------------------
# typing classification


def typing_of_invariant(lp: LabelledPred, own_vars: Sequence[str],
                        known_sorts: Sequence[str]) -> Optional[tuple[str, TypeExpr]]:
    """Recognise `v ∈ ℕ / ℤ / BOOL / S / {literals}` as a sort declaration."""
    node = lp.pred
    if not (isinstance(node, SBin) and node.op == "in"):
        return None
    lhs = node.left
    if not (isinstance(lhs, SName) and not lhs.primed and lhs.name in own_vars):
        return None
    rhs = node.right
    if isinstance(rhs, SName) and not rhs.primed:
        if rhs.name == "NAT":
            return (lhs.name, NatType())
        if rhs.name in ("INT", INT):
            return (lhs.name, IntType())
        if rhs.name in ("BOOL", BOOL):
            return (lhs.name, BoolType())
        if rhs.name in known_sorts:
            return (lhs.name, SortType(rhs.name))
        return None
    if isinstance(rhs, SSet):
        try:
            elems = tuple(_literal_term(e) for e in rhs.elems)
        except Exception:
            return None
        return (lhs.name, SubsetType(elems))
    return None


def typing_of_axiom(lp: LabelledPred, constants: Sequence[str],
                    known_sorts: Sequence[str]):
    """Constant typing from axioms.

    `c ∈ ℕ/ℤ/BOOL/S` types c and is consumed; `S = {c1, ..., cn}` types the
    members and is kept as an enumeration-exhaustiveness axiom.
    """
    node = lp.pred
    if isinstance(node, SBin) and node.op == "in":
        lhs, rhs = node.left, node.right
        if isinstance(lhs, SName) and not lhs.primed and lhs.name in constants:
            if isinstance(rhs, SName) and not rhs.primed:
                if rhs.name == "NAT":
                    return {lhs.name: NatType()}, False
                if rhs.name in ("INT", INT):
                    return {lhs.name: IntType()}, False
                if rhs.name in ("BOOL", BOOL):
                    return {lhs.name: BoolType()}, False
                if rhs.name in known_sorts:
                    return {lhs.name: SortType(rhs.name)}, False
            if isinstance(rhs, SSet):
                try:
                    elems = tuple(_literal_term(e) for e in rhs.elems)
                except Exception:
                    return None, True
                return {lhs.name: SubsetType(elems)}, True
    if isinstance(node, SBin) and node.op == "=":
        lhs, rhs = node.left, node.right
        if (isinstance(lhs, SName) and not lhs.primed and lhs.name in known_sorts
                and isinstance(rhs, SSet)):
            out = {}
            for e in rhs.elems:
                if isinstance(e, SName) and not e.primed and e.name in constants:
                    out[e.name] = SortType(lhs.name)
            return (out or None), True
    return None, True


# ---------------------------------------------------------------------------
# the environment: name -> signature


@dataclass
class Environment:
    """Signatures for every machine/context seen so far, plus the typing data
    needed to elaborate their bodies."""

    signatures: dict[str, Union[EvtSignature, FopeqSignature]] = field(default_factory=dict)
    constant_types: dict[str, dict[str, TypeExpr]] = field(default_factory=dict)
    var_types: dict[str, dict[str, TypeExpr]] = field(default_factory=dict)

    def evt(self, name: str) -> EvtSignature:
        sig = self.signatures.get(name)
        if sig is None:
            raise SpecError(f"unknown machine {name}")
        if not isinstance(sig, EvtSignature):
            raise SpecError(f"{name} is not a machine")
        return sig

    def fopeq(self, name: str) -> FopeqSignature:
        sig = self.signatures.get(name)
        if sig is None:
            raise SpecError(f"unknown context {name}")
        if not isinstance(sig, FopeqSignature):
            raise SpecError(f"{name} is not a context")
        return sig


def context_signature(c: ContextDef, env: Environment) -> tuple[FopeqSignature, dict]:
    sig = FopeqSignature(sorts=tuple(c.sets))
    ctypes: dict[str, TypeExpr] = {}
    for base in c.extends:
        sig = sig.union(env.fopeq(base))
        ctypes.update(env.constant_types.get(base, {}))
    known_sorts = sig.all_sorts()
    for ax in c.axioms:
        found, _kept = typing_of_axiom(ax, c.constants, known_sorts)
        if found:
            ctypes.update(found)
    ops = []
    for name in c.constants:
        if name not in ctypes:
            raise SpecError(
                f"context {c.name}: no typing axiom for constant {name}")
        ops.append(Op(name, (), type_sort(ctypes[name], sig)))
    sig = FopeqSignature(sig.sorts, sig.ops + tuple(ops), sig.preds)
    return sig, ctypes


def machine_signature(m: MachineDef, env: Environment) -> tuple[EvtSignature, dict]:
    fsig = FopeqSignature()
    for ctx in m.sees:
        fsig = fsig.union(env.fopeq(ctx))

    abstract: Optional[EvtSignature] = None
    if m.refines is not None:
        abstract = env.evt(m.refines)
        fsig = fsig.union(abstract.fopeq)

    vtypes: dict[str, TypeExpr] = {}
    for inv in m.invariants:
        found = typing_of_invariant(inv, m.variables, fsig.all_sorts())
        if found:
            name, te = found
            if name in vtypes:
                raise SpecError(f"machine {m.name}: variable {name} typed twice")
            vtypes[name] = te

    var_sorts: dict[str, str] = {}
    for v in m.variables:
        if v in vtypes:
            var_sorts[v] = type_sort(vtypes[v], fsig)
        elif abstract is not None and v in abstract.var_map:
            var_sorts[v] = abstract.var_map[v]
        else:
            raise SpecError(
                f"machine {m.name}: no typing invariant for variable {v}")

    events = {e.name if not e.is_init else INIT:
              Status.ordinary if e.is_init else e.status for e in m.events}
    refined = {INIT}
    for e in m.events:
        refined.update(e.refines)
        if e.is_init:
            refined.add(INIT)
    if abstract is not None:
        for ref in refined - {INIT}:
            if ref not in abstract.event_map:
                raise SpecError(
                    f"machine {m.name}: refined event {ref} not in {m.refines}")
        for name, st in abstract.events:
            if name not in refined and name not in events:
                events[name] = st  # unrefined abstract events persist
        for name, sort in abstract.vars:
            if name in var_sorts and var_sorts[name] != sort:
                raise SpecError(
                    f"machine {m.name}: variable {name} changes sort in refinement")
            var_sorts.setdefault(name, sort)

    sig = EvtSignature(fsig, tuple(events.items()), tuple(var_sorts.items()))
    return sig, vtypes


def build_env(spec: EbSpecification, base: Optional[Environment] = None) -> Environment:
    """Left-to-right signature extraction over the machine/context list."""
    env = base or Environment()
    for item in spec.items:
        if isinstance(item, ContextDef):
            sig, ctypes = context_signature(item, env)
            env.signatures[item.name] = sig
            env.constant_types[item.name] = ctypes
        else:
            sig, vtypes = machine_signature(item, env)
            env.signatures[item.name] = sig
            env.var_types[item.name] = vtypes
    return env


# ---------------------------------------------------------------------------
# printer (round-trips through parse_text)


def _print_labelled(lines: list[str], indent: str, preds: Sequence[LabelledPred]):
    for p in preds:
        suffix = " theorem" if p.theorem else ""
        lines.append(f"{indent}{p.label}: {unparse_surface(p.pred)}{suffix}")


def pretty_print_eb(spec: EbSpecification) -> str:
    lines: list[str] = []
    for item in spec.items:
        if lines:
            lines.append("")
        if isinstance(item, ContextDef):
            lines.append(f"context {item.name}")
            if item.extends:
                lines.append(f"  extends {', '.join(item.extends)}")
            if item.sets:
                lines.append(f"  sets {', '.join(item.sets)}")
            if item.constants:
                lines.append(f"  constants {', '.join(item.constants)}")
            axioms = list(item.axioms) + list(item.theorems)
            if axioms:
                lines.append("  axioms")
                _print_labelled(lines, "    ", axioms)
            lines.append("end")
            continue
        m = item
        lines.append(f"machine {m.name}")
        if m.refines:
            lines.append(f"  refines {m.refines}")
        if m.sees:
            lines.append(f"  sees {', '.join(m.sees)}")
        if m.variables:
            lines.append(f"  variables {', '.join(m.variables)}")
        invariants = list(m.invariants) + list(m.theorems)
        if invariants:
            lines.append("  invariants")
            _print_labelled(lines, "    ", invariants)
        if m.variant is not None:
            lines.append(f"  variant {unparse_surface(m.variant)}")
        if m.events:
            lines.append("  events")
            for e in m.events:
                lines.append(f"    event {e.name}")
                if not e.is_init:
                    lines.append(f"      status {e.status}")
                if e.refines:
                    lines.append(f"      refines {', '.join(e.refines)}")
                if e.params:
                    decls = ", ".join(
                        n if te is None else f"{n} : {unparse_type(te)}"
                        for n, te in e.params)
                    lines.append(f"      any {decls}")
                if e.guards:
                    lines.append("      when")
                    _print_labelled(lines, "        ", e.guards)
                if e.witnesses:
                    lines.append("      with")
                    _print_labelled(lines, "        ", e.witnesses)
                if e.actions:
                    lines.append("      thenAct")
                    for a in e.actions:
                        lines.append(
                            f"        {a.label}: {a.var} {a.kind} {unparse_surface(a.rhs)}")
                lines.append("    end")
        lines.append("end")
    return "\n".join(lines) + "\n"
