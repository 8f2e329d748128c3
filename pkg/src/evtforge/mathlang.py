"""Lexer, expression parser and sort elaboration for the mathematical fragment.

The fragment: bounded Int and Bool, user enumerated sorts, comparisons,
+ - *, membership in literal sets, propositional connectives and bounded
quantifiers.  Anything else is a parse error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ParseError, SortError
from .fopeq import (
    BOOL, INT, And, BoolLit, CarrierEq, Equal, Exists, FalseF, FopeqSignature,
    Forall, Formula, Iff, Implies, InSet, IntLit, Not, OpApp, Or, PredApp,
    Term, TrueF, TRUE, FALSE, Var, conjoin,
)

# ---------------------------------------------------------------------------
# tokens


@dataclass
class Token:
    kind: str  # IDENT NUMBER SYM NEWLINE EOF
    text: str
    line: int
    col: int
    primed: bool = False

    def __repr__(self):
        return f"{self.kind}({self.text!r})"


_MULTI = [":=", ":|", "|->", "<=>", "<=", ">=", "=>", "/\\", "\\/", "/=", "->"]
_UNICODE_SYM = {
    "∧": "/\\", "∨": "\\/", "¬": "!", "⇒": "=>", "⇔": "<=>",
    "≤": "<=", "≥": ">=", "≠": "/=", "∈": "in", "↦": "|->",
    "⟨": "<:", "⟩": ":>", "·": ".", "≔": ":=",
    "×": "*", "−": "-",
}
_QUANT = {"∀": "#forall", "∃": "#exists"}
_WORD_SORTS = {"ℕ": "NAT", "ℤ": "INT", "ℙ": "POW"}
_SINGLE = set("=<>+-*(){},:.!")


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def push(kind, s, primed=False):
        toks.append(Token(kind, s, line, start_col, primed))

    while i < n:
        c = text[i]
        start_col = col
        if c == "\n":
            toks.append(Token("NEWLINE", "\n", line, col))
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
                col += 1
            continue
        if c in _WORD_SORTS:
            push("IDENT", _WORD_SORTS[c])
            i += 1
            col += 1
            continue
        if c in _QUANT:
            push("SYM", _QUANT[c])
            i += 1
            col += 1
            continue
        if c in _UNICODE_SYM:
            push("SYM", _UNICODE_SYM[c])
            i += 1
            col += 1
            continue
        if text.startswith("#exists", i) or text.startswith("#forall", i):
            push("SYM", text[i:i + 7])
            i += 7
            col += 7
            continue
        matched = False
        for m in _MULTI:
            if text.startswith(m, i):
                push("SYM", m)
                i += len(m)
                col += len(m)
                matched = True
                break
        if matched:
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            push("NUMBER", text[i:j])
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            primed = False
            if j < n and text[j] in ("'", "′"):
                primed = True
                j += 1
            push("IDENT", word, primed)
            col += j - i
            i = j
            continue
        if c in _SINGLE:
            push("SYM", c)
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


class TokenStream:
    def __init__(self, tokens: Sequence[Token]):
        self.tokens = list(tokens)
        self.pos = 0

    def peek(self, skip_newlines: bool = True, ahead: int = 0) -> Token:
        i = self.pos
        seen = 0
        while i < len(self.tokens):
            t = self.tokens[i]
            if skip_newlines and t.kind == "NEWLINE":
                i += 1
                continue
            if seen == ahead:
                return t
            seen += 1
            i += 1
        return self.tokens[-1]

    def next(self, skip_newlines: bool = True) -> Token:
        while True:
            t = self.tokens[self.pos]
            self.pos += 1
            if skip_newlines and t.kind == "NEWLINE":
                continue
            return t

    def skip_newlines(self) -> None:
        while self.tokens[self.pos].kind == "NEWLINE":
            self.pos += 1

    def at_sym(self, text: str, skip_newlines: bool = True) -> bool:
        t = self.peek(skip_newlines)
        return t.kind == "SYM" and t.text == text

    def at_word(self, word: str, skip_newlines: bool = True) -> bool:
        t = self.peek(skip_newlines)
        return t.kind == "IDENT" and t.text == word and not t.primed

    def accept_sym(self, text: str, skip_newlines: bool = True) -> bool:
        if self.at_sym(text, skip_newlines):
            self.next(skip_newlines)
            return True
        return False

    def accept_word(self, word: str, skip_newlines: bool = True) -> bool:
        if self.at_word(word, skip_newlines):
            self.next(skip_newlines)
            return True
        return False

    def expect_sym(self, text: str, skip_newlines: bool = True) -> Token:
        t = self.peek(skip_newlines)
        if t.kind == "SYM" and t.text == text:
            return self.next(skip_newlines)
        raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)

    def expect_word(self, word: str) -> Token:
        t = self.peek()
        if t.kind == "IDENT" and t.text == word and not t.primed:
            return self.next()
        raise ParseError(f"expected {word!r}, found {t.text!r}", t.line, t.col)

    def expect_ident(self) -> Token:
        t = self.peek()
        if t.kind != "IDENT":
            raise ParseError(f"expected identifier, found {t.text!r}", t.line, t.col)
        return self.next()

    def error(self, message: str):
        t = self.peek()
        raise ParseError(message, t.line, t.col)


# ---------------------------------------------------------------------------
# surface expression AST (untyped; elaboration sorts it out)


@dataclass(frozen=True)
class SNum:
    value: int


@dataclass(frozen=True)
class SBool:
    value: bool


@dataclass(frozen=True)
class SName:
    name: str
    primed: bool = False


@dataclass(frozen=True)
class SApp:
    name: str
    args: tuple


@dataclass(frozen=True)
class SBin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class SUn:
    op: str
    body: object


@dataclass(frozen=True)
class SSet:
    elems: tuple


@dataclass(frozen=True)
class SQuant:
    kind: str  # "forall" | "exists"
    bindings: tuple  # ((name, TypeExpr), ...)
    body: object


_RELOPS = {"=", "/=", "<", "<=", ">", ">=", "in"}
_BOOL_WORDS = {"true": True, "false": False, "TRUE": True, "FALSE": False}


class ExprParser:
    """Pratt-style parser over the shared token stream.

    With stop_at_newline, a newline outside parentheses ends the expression
    (used by clause lists in the sugared notation).
    """

    def __init__(self, ts: TokenStream, stop_at_newline: bool = False):
        self.ts = ts
        self.stop_at_newline = stop_at_newline
        self.depth = 0

    def _skip_nl(self) -> bool:
        return (not self.stop_at_newline) or self.depth > 0

    def parse_formula_expr(self):
        return self._iff()

    def _iff(self):
        left = self._implies()
        while self.ts.at_sym("<=>", self._skip_nl()):
            self.ts.next(self._skip_nl())
            left = SBin("<=>", left, self._implies())
        return left

    def _implies(self):
        left = self._or()
        if self.ts.at_sym("=>", self._skip_nl()):
            self.ts.next(self._skip_nl())
            return SBin("=>", left, self._implies())
        return left

    def _or(self):
        left = self._and()
        while self.ts.at_sym("\\/", self._skip_nl()):
            self.ts.next(self._skip_nl())
            left = SBin("\\/", left, self._and())
        return left

    def _and(self):
        left = self._unary()
        while self.ts.at_sym("/\\", self._skip_nl()):
            self.ts.next(self._skip_nl())
            left = SBin("/\\", left, self._unary())
        return left

    def _unary(self):
        if self.ts.at_sym("!", self._skip_nl()):
            self.ts.next(self._skip_nl())
            return SUn("!", self._unary())
        for sym, kind in (("#forall", "forall"), ("#exists", "exists")):
            if self.ts.at_sym(sym, self._skip_nl()):
                self.ts.next(self._skip_nl())
                bindings = [self._binding()]
                while self.ts.accept_sym(",", self._skip_nl()):
                    bindings.append(self._binding())
                self.ts.expect_sym(".", self._skip_nl())
                body = self.parse_formula_expr()
                return SQuant(kind, tuple(bindings), body)
        return self._comparison()

    def _binding(self):
        name = self.ts.expect_ident()
        if name.primed:
            raise ParseError("bound variables may not be primed", name.line, name.col)
        self.ts.expect_sym(":", self._skip_nl())
        te = parse_type_expr(self.ts, self._skip_nl())
        return (name.text, te)

    def _comparison(self):
        left = self._arith()
        t = self.ts.peek(self._skip_nl())
        if t.kind == "SYM" and t.text in _RELOPS:
            self.ts.next(self._skip_nl())
            right = self._set_or_arith() if t.text == "in" else self._arith()
            return SBin(t.text, left, right)
        if t.kind == "IDENT" and t.text == "in" and not t.primed:
            self.ts.next(self._skip_nl())
            return SBin("in", left, self._set_or_arith())
        if t.kind == "SYM" and t.text == "=" or (
                t.kind == "SYM" and t.text in _RELOPS):
            pass
        # equality against a set literal comes through _arith -> SSet
        return left

    def _set_or_arith(self):
        if self.ts.at_sym("{", self._skip_nl()):
            return self._set_literal()
        return self._arith()

    def _set_literal(self):
        self.ts.expect_sym("{", self._skip_nl())
        self.depth += 1
        elems = [self._arith()]
        while self.ts.accept_sym(",", True):
            elems.append(self._arith())
        self.depth -= 1
        self.ts.expect_sym("}", self._skip_nl())
        return SSet(tuple(elems))

    def _arith(self):
        left = self._mul()
        while True:
            t = self.ts.peek(self._skip_nl())
            if t.kind == "SYM" and t.text in ("+", "-"):
                self.ts.next(self._skip_nl())
                left = SBin(t.text, left, self._mul())
            else:
                return left

    def _mul(self):
        left = self._neg()
        while self.ts.at_sym("*", self._skip_nl()):
            self.ts.next(self._skip_nl())
            left = SBin("*", left, self._neg())
        return left

    def _neg(self):
        if self.ts.at_sym("-", self._skip_nl()):
            self.ts.next(self._skip_nl())
            body = self._neg()
            if isinstance(body, SNum):
                return SNum(-body.value)
            return SUn("-", body)
        return self._primary()

    def _primary(self):
        t = self.ts.peek(self._skip_nl())
        if t.kind == "NUMBER":
            self.ts.next(self._skip_nl())
            return SNum(int(t.text))
        if t.kind == "SYM" and t.text == "(":
            self.ts.next(self._skip_nl())
            self.depth += 1
            inner = self.parse_formula_expr()
            self.depth -= 1
            self.ts.expect_sym(")", self._skip_nl())
            return inner
        if t.kind == "SYM" and t.text == "{":
            return self._set_literal()
        if t.kind == "IDENT":
            if t.text in _BOOL_WORDS and not t.primed:
                self.ts.next(self._skip_nl())
                return SBool(_BOOL_WORDS[t.text])
            self.ts.next(self._skip_nl())
            if not t.primed and self.ts.at_sym("(", False):
                self.ts.next(self._skip_nl())
                self.depth += 1
                args = [self._arith()]
                while self.ts.accept_sym(",", True):
                    args.append(self._arith())
                self.depth -= 1
                self.ts.expect_sym(")", self._skip_nl())
                return SApp(t.text, tuple(args))
            return SName(t.text, t.primed)
        raise ParseError(f"expected an expression, found {t.text!r}", t.line, t.col)


def parse_expression(ts: TokenStream, stop_at_newline: bool = False):
    return ExprParser(ts, stop_at_newline).parse_formula_expr()


def parse_expression_text(text: str):
    ts = TokenStream(tokenize(text))
    node = parse_expression(ts)
    t = ts.peek()
    if t.kind != "EOF":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return node


_SURF_PREC = {
    "<=>": 1, "=>": 2, "\\/": 3, "/\\": 4,
    "=": 6, "/=": 6, "<": 6, "<=": 6, ">": 6, ">=": 6, "in": 6,
    "+": 10, "-": 10, "*": 20,
}
_SURF_SYM = {
    "<=>": "⇔", "=>": "⇒", "\\/": "∨", "/\\": "∧",
    "=": "=", "/=": "≠", "<": "<", "<=": "≤", ">": ">", ">=": "≥", "in": "∈",
    "+": "+", "-": "-", "*": "*",
}


def unparse_surface(node, parent_prec: int = 0) -> str:
    """Canonical text for an unelaborated expression tree."""
    if isinstance(node, SNum):
        return str(node.value)
    if isinstance(node, SBool):
        return "true" if node.value else "false"
    if isinstance(node, SName):
        base = node.name
        if base == "NAT":
            base = "ℕ"
        elif base == "INT":
            base = "ℤ"
        return f"{base}′" if node.primed else base
    if isinstance(node, SApp):
        return f"{node.name}({', '.join(unparse_surface(a) for a in node.args)})"
    if isinstance(node, SSet):
        return "{" + ", ".join(unparse_surface(e) for e in node.elems) + "}"
    if isinstance(node, SUn):
        if node.op == "-":
            return f"-{unparse_surface(node.body, 30)}"
        return f"¬{unparse_surface(node.body, 5)}"
    if isinstance(node, SQuant):
        sym = "∀" if node.kind == "forall" else "∃"
        binds = ", ".join(f"{n} : {unparse_type(te)}" for n, te in node.bindings)
        s = f"{sym} {binds} · {unparse_surface(node.body, 0)}"
        return f"({s})" if parent_prec >= 1 else s
    if isinstance(node, SBin):
        prec = _SURF_PREC[node.op]
        if node.op == "=>":
            lp, rp = prec, prec - 1
        else:
            lp, rp = prec - 1, prec
        if node.op in ("=", "/=", "<", "<=", ">", ">=", "in"):
            lp = rp = prec  # non-associative: parenthesise nested relations
        left = unparse_surface(node.left, lp)
        right = unparse_surface(node.right, rp)
        s = f"{left} {_SURF_SYM[node.op]} {right}"
        return f"({s})" if prec <= parent_prec else s
    raise SortError(f"not a surface expression: {node!r}")


# ---------------------------------------------------------------------------
# type expressions


@dataclass(frozen=True)
class NatType:
    pass


@dataclass(frozen=True)
class IntType:
    pass


@dataclass(frozen=True)
class BoolType:
    pass


@dataclass(frozen=True)
class SortType:
    name: str


@dataclass(frozen=True)
class SubsetType:
    """A literal-set type: the carrier subset listed by the element terms."""

    elems: tuple[Term, ...]


TypeExpr = object

NAT = NatType()
INT_TYPE = IntType()
BOOL_TYPE = BoolType()


def parse_type_expr(ts: TokenStream, skip_nl: bool = True) -> TypeExpr:
    t = ts.peek(skip_nl)
    if t.kind == "SYM" and t.text == "{":
        node = ExprParser(ts)._set_literal()
        return SubsetType(tuple(_literal_term(e) for e in node.elems))
    tok = ts.expect_ident()
    if tok.primed:
        raise ParseError("sort names may not be primed", tok.line, tok.col)
    if tok.text == "NAT":
        return NAT
    if tok.text in ("INT", INT):
        return INT_TYPE
    if tok.text in ("BOOL", BOOL):
        return BOOL_TYPE
    return SortType(tok.text)


def _literal_term(node) -> Term:
    if isinstance(node, SNum):
        return IntLit(node.value)
    if isinstance(node, SBool):
        return BoolLit(node.value)
    if isinstance(node, SName) and not node.primed:
        return OpApp(node.name)
    raise SortError("set types may only list literals or constants")


def type_sort(te: TypeExpr, sig: FopeqSignature) -> str:
    """The carrier sort behind a type expression."""
    if isinstance(te, (NatType, IntType)):
        return INT
    if isinstance(te, BoolType):
        return BOOL
    if isinstance(te, SortType):
        if not sig.has_sort(te.name):
            raise SortError(f"unknown sort {te.name}")
        return te.name
    if isinstance(te, SubsetType):
        sorts = set()
        for e in te.elems:
            if isinstance(e, IntLit):
                sorts.add(INT)
            elif isinstance(e, BoolLit):
                sorts.add(BOOL)
            elif isinstance(e, OpApp):
                args, result = sig.op_profile(e.op)
                if args:
                    raise SortError(f"set type element {e.op} is not a constant")
                sorts.add(result)
        if len(sorts) != 1:
            raise SortError(f"set type mixes sorts: {sorted(sorts)}")
        return sorts.pop()
    raise SortError(f"not a type expression: {te!r}")


def type_constraint(te: TypeExpr, v: Term) -> Optional[Formula]:
    """Residual membership constraint a type expression imposes on a term."""
    if isinstance(te, NatType):
        return PredApp(">=", (v, IntLit(0)))
    if isinstance(te, SubsetType):
        return InSet(v, te.elems)
    return None


def unparse_type(te: TypeExpr) -> str:
    if isinstance(te, NatType):
        return "ℕ"
    if isinstance(te, IntType):
        return "ℤ"
    if isinstance(te, BoolType):
        return "BOOL"
    if isinstance(te, SortType):
        return te.name
    if isinstance(te, SubsetType):
        return "{" + ", ".join(unparse_term(e) for e in te.elems) + "}"
    raise SortError(f"not a type expression: {te!r}")


# ---------------------------------------------------------------------------
# elaboration: surface tree -> well-sorted Term/Formula


@dataclass(frozen=True)
class ElabContext:
    sig: FopeqSignature
    vars: tuple[tuple[str, str], ...] = ()  # (name, sort), unprimed names
    allow_primes: bool = True

    @property
    def var_map(self) -> dict[str, str]:
        return dict(self.vars)

    def with_vars(self, extra: Sequence[tuple[str, str]]) -> "ElabContext":
        return ElabContext(self.sig, self.vars + tuple(extra), self.allow_primes)


_SYM_TO_PRED = {"<": "<", "<=": "<=", ">": ">", ">=": ">="}


def elab_term(node, ctx: ElabContext) -> tuple[Term, str]:
    sig = ctx.sig
    if isinstance(node, SNum):
        return IntLit(node.value), INT
    if isinstance(node, SBool):
        return BoolLit(node.value), BOOL
    if isinstance(node, SName):
        vm = ctx.var_map
        if node.name in vm:
            if node.primed and not ctx.allow_primes:
                raise SortError(f"primed variable {node.name}′ not allowed here")
            return Var(node.name, node.primed), vm[node.name]
        if node.primed:
            raise SortError(f"unknown variable {node.name}′")
        if node.name in sig.op_map and not sig.op_map[node.name].args:
            return OpApp(node.name), sig.op_map[node.name].result
        raise SortError(f"unknown identifier {node.name}")
    if isinstance(node, SApp):
        args, result = sig.op_profile(node.name)
        if len(args) != len(node.args):
            raise SortError(f"operation {node.name} expects {len(args)} arguments")
        elaborated = []
        for want, sub in zip(args, node.args):
            t, got = elab_term(sub, ctx)
            if got != want:
                raise SortError(f"argument of {node.name} has sort {got}, expected {want}")
            elaborated.append(t)
        return OpApp(node.name, tuple(elaborated)), result
    if isinstance(node, SUn) and node.op == "-":
        t, s = elab_term(node.body, ctx)
        if s != INT:
            raise SortError("unary minus needs an integer")
        return OpApp("-", (IntLit(0), t)), INT
    if isinstance(node, SBin) and node.op in ("+", "-", "*"):
        lt, ls = elab_term(node.left, ctx)
        rt, rs = elab_term(node.right, ctx)
        if ls != INT or rs != INT:
            raise SortError(f"arithmetic {node.op} needs integers, got {ls}, {rs}")
        return OpApp(node.op, (lt, rt)), INT
    raise SortError("expected a term, found a formula")


def elab_formula(node, ctx: ElabContext) -> Formula:
    sig = ctx.sig
    if isinstance(node, SBool):
        return TRUE if node.value else FALSE
    if isinstance(node, SUn) and node.op == "!":
        return Not(elab_formula(node.body, ctx))
    if isinstance(node, SQuant):
        bindings = []
        guards = []
        for name, te in node.bindings:
            if name in ctx.var_map:
                raise SortError(f"bound variable {name} shadows a variable in scope")
            sort = type_sort(te, sig)
            bindings.append((name, sort))
            g = type_constraint(te, Var(name))
            if g is not None:
                guards.append(g)
        inner = ctx.with_vars(bindings)
        body = elab_formula(node.body, inner)
        if node.kind == "forall":
            if guards:
                body = Implies(conjoin(guards), body)
            return Forall(tuple(bindings), body)
        if guards:
            body = conjoin([*guards, body])
        return Exists(tuple(bindings), body)
    if isinstance(node, SBin):
        op = node.op
        if op == "<=>":
            return Iff(elab_formula(node.left, ctx), elab_formula(node.right, ctx))
        if op == "=>":
            return Implies(elab_formula(node.left, ctx), elab_formula(node.right, ctx))
        if op == "/\\":
            left = elab_formula(node.left, ctx)
            right = elab_formula(node.right, ctx)
            parts = (left.parts if isinstance(left, And) else (left,))
            parts += (right.parts if isinstance(right, And) else (right,))
            return And(parts)
        if op == "\\/":
            left = elab_formula(node.left, ctx)
            right = elab_formula(node.right, ctx)
            parts = (left.parts if isinstance(left, Or) else (left,))
            parts += (right.parts if isinstance(right, Or) else (right,))
            return Or(parts)
        if op == "in":
            return _elab_membership(node.left, node.right, ctx)
        if op in ("=", "/="):
            eq = _elab_equality(node.left, node.right, ctx)
            return Not(eq) if op == "/=" else eq
        if op in _SYM_TO_PRED:
            lt, ls = elab_term(node.left, ctx)
            rt, rs = elab_term(node.right, ctx)
            if ls != INT or rs != INT:
                raise SortError(f"comparison {op} needs integers, got {ls}, {rs}")
            return PredApp(_SYM_TO_PRED[op], (lt, rt))
    if isinstance(node, SApp) and node.name in {p.name for p in sig.preds}:
        args = sig.pred_profile(node.name)
        if len(args) != len(node.args):
            raise SortError(f"predicate {node.name} expects {len(args)} arguments")
        elaborated = []
        for want, sub in zip(args, node.args):
            t, got = elab_term(sub, ctx)
            if got != want:
                raise SortError(f"argument of {node.name} has sort {got}, expected {want}")
            elaborated.append(t)
        return PredApp(node.name, tuple(elaborated))
    raise SortError("expected a formula, found a term")


def _elab_equality(left, right, ctx: ElabContext) -> Formula:
    # `S = {c1, ..., cn}` with S a sort name is enumeration exhaustiveness
    if (isinstance(left, SName) and not left.primed
            and left.name not in ctx.var_map
            and left.name not in ctx.sig.op_map
            and ctx.sig.has_sort(left.name)):
        if isinstance(right, SSet):
            elems = tuple(elab_term(e, ctx)[0] for e in right.elems)
            for e, sur in zip(elems, right.elems):
                got = elab_term(sur, ctx)[1]
                if got != left.name:
                    raise SortError(
                        f"enumeration element has sort {got}, expected {left.name}")
            return CarrierEq(left.name, elems)
        raise SortError(f"sort {left.name} can only be equated with a literal set")
    lt, ls = elab_term(left, ctx)
    rt, rs = elab_term(right, ctx)
    if ls != rs:
        raise SortError(f"equality between sorts {ls} and {rs}")
    return Equal(lt, rt)


def _elab_membership(left, right, ctx: ElabContext) -> Formula:
    lt, ls = elab_term(left, ctx)
    if isinstance(right, SSet):
        elems = []
        for e in right.elems:
            t, s = elab_term(e, ctx)
            if s != ls:
                raise SortError(f"set element has sort {s}, expected {ls}")
            elems.append(t)
        return InSet(lt, tuple(elems))
    if isinstance(right, SName) and not right.primed:
        name = right.name
        if name == "NAT":
            if ls != INT:
                raise SortError("membership in ℕ needs an integer")
            return PredApp(">=", (lt, IntLit(0)))
        if name in ("INT", INT):
            if ls != INT:
                raise SortError("membership in ℤ needs an integer")
            return TRUE
        if name in ("BOOL", BOOL):
            if ls != BOOL:
                raise SortError("membership in BOOL needs a boolean")
            return TRUE
        if ctx.sig.has_sort(name):
            if ls != name:
                raise SortError(f"membership in {name} needs sort {name}, got {ls}")
            return TRUE
    raise SortError("membership is supported only for ℕ, ℤ, BOOL, a sort, or a literal set")


def parse_formula_text(text: str, ctx: ElabContext, stop_at_newline: bool = False) -> Formula:
    ts = TokenStream(tokenize(text))
    node = parse_expression(ts, stop_at_newline)
    t = ts.peek()
    if t.kind != "EOF":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return elab_formula(node, ctx)


def parse_term_text(text: str, ctx: ElabContext) -> Term:
    ts = TokenStream(tokenize(text))
    node = parse_expression(ts)
    t = ts.peek()
    if t.kind != "EOF":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return elab_term(node, ctx)[0]


# ---------------------------------------------------------------------------
# unparsing (canonical text, unicode operators)

_TERM_PREC = {"+": 10, "-": 10, "*": 20}


def unparse_term(t: Term, parent_prec: int = 0) -> str:
    if isinstance(t, Var):
        return f"{t.name}′" if t.primed else t.name
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, BoolLit):
        return "TRUE" if t.value else "FALSE"
    if isinstance(t, OpApp):
        if t.op in _TERM_PREC and len(t.args) == 2:
            prec = _TERM_PREC[t.op]
            left = unparse_term(t.args[0], prec - 1)
            right = unparse_term(t.args[1], prec)
            s = f"{left} {t.op} {right}"
            return f"({s})" if prec <= parent_prec else s
        if not t.args:
            return t.op
        return f"{t.op}({', '.join(unparse_term(a) for a in t.args)})"
    raise SortError(f"not a term: {t!r}")


_PRED_SYM = {"<": "<", "<=": "≤", ">": ">", ">=": "≥"}
# formula precedence: iff 1, implies 2, or 3, and 4, not 5, atoms 6
_F_ATOM = 6


def unparse_formula(f: Formula, parent_prec: int = 0) -> str:
    def wrap(s: str, prec: int) -> str:
        return f"({s})" if prec <= parent_prec else s

    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Equal):
        return wrap(f"{unparse_term(f.left)} = {unparse_term(f.right)}", _F_ATOM)
    if isinstance(f, PredApp):
        if f.pred in _PRED_SYM and len(f.args) == 2:
            # n ≥ 0 reads back as n ∈ ℕ only through typing; print the atom
            return wrap(
                f"{unparse_term(f.args[0])} {_PRED_SYM[f.pred]} {unparse_term(f.args[1])}",
                _F_ATOM)
        return wrap(f"{f.pred}({', '.join(unparse_term(a) for a in f.args)})", _F_ATOM)
    if isinstance(f, InSet):
        elems = ", ".join(unparse_term(e) for e in f.elems)
        return wrap(f"{unparse_term(f.item)} ∈ {{{elems}}}", _F_ATOM)
    if isinstance(f, CarrierEq):
        elems = ", ".join(unparse_term(e) for e in f.elems)
        return wrap(f"{f.sort} = {{{elems}}}", _F_ATOM)
    if isinstance(f, Not):
        if isinstance(f.body, Equal):
            return wrap(
                f"{unparse_term(f.body.left)} ≠ {unparse_term(f.body.right)}", _F_ATOM)
        return wrap(f"¬{unparse_formula(f.body, 5)}", 5)
    if isinstance(f, And):
        s = " ∧ ".join(unparse_formula(p, 4) for p in f.parts)
        return wrap(s, 4)
    if isinstance(f, Or):
        s = " ∨ ".join(unparse_formula(p, 3) for p in f.parts)
        return wrap(s, 3)
    if isinstance(f, Implies):
        s = f"{unparse_formula(f.left, 2)} ⇒ {unparse_formula(f.right, 1)}"
        return wrap(s, 2)
    if isinstance(f, Iff):
        s = f"{unparse_formula(f.left, 1)} ⇔ {unparse_formula(f.right, 1)}"
        return wrap(s, 1)
    if isinstance(f, (Forall, Exists)):
        sym = "∀" if isinstance(f, Forall) else "∃"
        binds = ", ".join(f"{n} : {s}" for n, s in f.vars)
        return wrap(f"{sym} {binds} · {unparse_formula(f.body, 0)}", 1)
    raise SortError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# canonical forms for set-level sentence comparison


def canonical(f: Formula) -> Formula:
    """Flatten conjunctions, drop true conjuncts, sort and dedupe.

    Comparison device only; stored formulas are never rewritten.
    """
    if isinstance(f, And):
        parts = []
        for p in f.parts:
            q = canonical(p)
            if isinstance(q, TrueF):
                continue
            if isinstance(q, And):
                parts.extend(q.parts)
            else:
                parts.append(q)
        unique = sorted(set(parts), key=unparse_formula)
        return conjoin(unique)
    if isinstance(f, Or):
        return Or(tuple(canonical(p) for p in f.parts))
    if isinstance(f, Not):
        return Not(canonical(f.body))
    if isinstance(f, Implies):
        return Implies(canonical(f.left), canonical(f.right))
    if isinstance(f, Iff):
        return Iff(canonical(f.left), canonical(f.right))
    if isinstance(f, (Forall, Exists)):
        return type(f)(f.vars, canonical(f.body))
    return f
