"""Expressions for initial markings, arc inscriptions and guards.

Concrete syntax::

    1`("ATC","Data",0)          multiset term (an apostrophe may replace the backtick)
    1`(s,d,t) ++ 1`(s,d,t)      multiset sum
    s = "CS" andalso t >= 0     guard

The lexer defined here is also used by the net-definition and property
parsers.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .kernel import ColorSet, Multiset, Value, format_value, shape_of, value_key

# ---------------------------------------------------------------------------
# Lexing


class SourceError(Exception):
    """Error carrying a 1-based source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0, code: str = "syntax"):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col
        self.code = code


class LexError(SourceError):
    def __init__(self, message, line=0, col=0):
        super().__init__(message, line, col, code="lexical")


@dataclass(frozen=True)
class Token:
    kind: str  # NAME, INT, STRING, SYM, EOF
    text: str
    line: int
    col: int
    value: object = None


_SYMBOLS = sorted(
    ["++", "<>", "<=", ">=", "==", "->", ":=", "(", ")", ",", "`", "'", "+", "-",
     "=", "<", ">", ";", ":", "{", "}", "*", ".", "[", "]"],
    key=len, reverse=True)
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"[0-9]+")
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if c == '"':
            j = i + 1
            chars = []
            while True:
                if j >= n or text[j] == "\n":
                    raise LexError("unterminated string literal", line, start_col)
                ch = text[j]
                if ch == '"':
                    break
                if ch == "\\":
                    if j + 1 >= n or text[j + 1] not in _ESCAPES:
                        raise LexError("invalid escape in string literal", line, col + (j - i))
                    chars.append(_ESCAPES[text[j + 1]])
                    j += 2
                    continue
                chars.append(ch)
                j += 1
            tokens.append(Token("STRING", text[i:j + 1], line, start_col, "".join(chars)))
            col += j + 1 - i
            i = j + 1
            continue
        m = _NAME_RE.match(text, i)
        if m:
            tokens.append(Token("NAME", m.group(), line, start_col))
            col += m.end() - i
            i = m.end()
            continue
        m = _INT_RE.match(text, i)
        if m:
            tokens.append(Token("INT", m.group(), line, start_col, int(m.group())))
            col += m.end() - i
            i = m.end()
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("SYM", sym, line, start_col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise LexError(f"unexpected character {c!r}", line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Types and trees

BOOL = "bool"
INT = "int"
STRING = "string"


@dataclass(frozen=True)
class MultisetType:
    elem: object  # a shape

    def __str__(self):
        return f"multiset of {describe_shape(self.elem)}"


def describe_shape(shape) -> str:
    if isinstance(shape, MultisetType):
        return str(shape)
    if isinstance(shape, tuple):
        return "(" + " * ".join(describe_shape(s) for s in shape) + ")"
    return str(shape)


@dataclass(frozen=True)
class Expr:
    ty: object = field(default=None, compare=False, kw_only=True)
    line: int = field(default=0, compare=False, kw_only=True)
    col: int = field(default=0, compare=False, kw_only=True)


@dataclass(frozen=True)
class Lit(Expr):
    value: Value


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class TupleExpr(Expr):
    items: Tuple[Expr, ...]


@dataclass(frozen=True)
class MsTerm(Expr):
    count: int
    body: Expr


@dataclass(frozen=True)
class MsSum(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Compare(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Or(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class Arith(Expr):
    op: str  # "+" or "-"
    left: Expr
    right: Expr


@dataclass
class Env:
    """Declarations visible to an expression."""

    colorsets: Dict[str, ColorSet] = field(default_factory=dict)
    variables: Dict[str, ColorSet] = field(default_factory=dict)


class ExprError(SourceError):
    pass


class EvalError(Exception):
    pass


# ---------------------------------------------------------------------------
# Parsing


class TokenStream:
    def __init__(self, tokens: Sequence[Token]):
        self.tokens = list(tokens)
        if not self.tokens or self.tokens[-1].kind != "EOF":
            last = self.tokens[-1] if self.tokens else Token("EOF", "", 1, 1)
            self.tokens.append(Token("EOF", "", last.line, last.col + len(last.text)))
        self.pos = 0

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, text: str, kind: str | None = None) -> bool:
        tok = self.peek()
        if kind is not None and tok.kind != kind:
            return False
        return tok.text == text and tok.kind in ("SYM", "NAME")

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            raise SourceError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return self.next()

    def expect_name(self, what: str = "name") -> Token:
        tok = self.peek()
        if tok.kind != "NAME":
            raise SourceError(f"expected {what}, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return self.next()


_RELOPS = ("=", "==", "<>", "<", "<=", ">", ">=")
RESERVED = {"andalso", "orelse", "not", "true", "false"}


class _Parser:
    def __init__(self, ts: TokenStream, env: Env):
        self.ts = ts
        self.env = env

    def parse(self) -> Expr:
        return self.orexpr()

    def orexpr(self):
        left = self.andexpr()
        while self.ts.at("orelse", "NAME"):
            tok = self.ts.next()
            right = self.andexpr()
            self._want_bool(left, tok)
            self._want_bool(right, tok)
            left = Or(left, right, ty=BOOL, line=tok.line, col=tok.col)
        return left

    def andexpr(self):
        left = self.notexpr()
        while self.ts.at("andalso", "NAME"):
            tok = self.ts.next()
            right = self.notexpr()
            self._want_bool(left, tok)
            self._want_bool(right, tok)
            left = And(left, right, ty=BOOL, line=tok.line, col=tok.col)
        return left

    def notexpr(self):
        if self.ts.at("not", "NAME"):
            tok = self.ts.next()
            operand = self.notexpr()
            self._want_bool(operand, tok)
            return Not(operand, ty=BOOL, line=tok.line, col=tok.col)
        return self.msum()

    def msum(self):
        left = self.compare()
        while self.ts.at("++"):
            tok = self.ts.next()
            right = self.compare()
            lt, rt = _as_ms(left.ty), _as_ms(right.ty)
            if lt != rt:
                raise ExprError(f"cannot add {describe_shape(lt)} and {describe_shape(rt)}",
                                tok.line, tok.col, code="type")
            left = MsSum(_lift(left), _lift(right), ty=lt, line=tok.line, col=tok.col)
        return left

    def compare(self):
        left = self.additive()
        tok = self.ts.peek()
        if tok.kind == "SYM" and tok.text in _RELOPS:
            self.ts.next()
            right = self.additive()
            op = "=" if tok.text == "==" else tok.text
            if left.ty != right.ty:
                raise ExprError(
                    f"cannot compare {describe_shape(left.ty)} with {describe_shape(right.ty)}",
                    tok.line, tok.col, code="type")
            if op not in ("=", "<>") and left.ty != INT:
                raise ExprError(f"ordering comparison {op} needs int operands",
                                tok.line, tok.col, code="type")
            if isinstance(left.ty, MultisetType):
                raise ExprError("multisets cannot be compared inside expressions",
                                tok.line, tok.col, code="type")
            return Compare(op, left, right, ty=BOOL, line=tok.line, col=tok.col)
        return left

    def additive(self):
        left = self.unary()
        while self.ts.peek().kind == "SYM" and self.ts.peek().text in ("+", "-"):
            tok = self.ts.next()
            right = self.unary()
            if left.ty != INT or right.ty != INT:
                raise ExprError(f"operator {tok.text} needs int operands", tok.line, tok.col, code="type")
            left = Arith(tok.text, left, right, ty=INT, line=tok.line, col=tok.col)
        return left

    def unary(self):
        tok = self.ts.peek()
        if tok.kind == "SYM" and tok.text == "-":
            self.ts.next()
            nxt = self.ts.peek()
            if nxt.kind == "INT":
                self.ts.next()
                return Lit(-nxt.value, ty=INT, line=tok.line, col=tok.col)
            operand = self.unary()
            if operand.ty != INT:
                raise ExprError("unary minus needs an int operand", tok.line, tok.col, code="type")
            return Arith("-", Lit(0, ty=INT, line=tok.line, col=tok.col), operand,
                         ty=INT, line=tok.line, col=tok.col)
        if tok.kind == "INT" and self.ts.peek(1).kind == "SYM" and self.ts.peek(1).text in ("`", "'"):
            self.ts.next()
            self.ts.next()
            if tok.value <= 0:
                raise ExprError("multiset coefficient must be positive", tok.line, tok.col, code="type")
            body = self.primary()
            if isinstance(body.ty, MultisetType):
                raise ExprError("nested multiset term", tok.line, tok.col, code="type")
            return MsTerm(tok.value, body, ty=MultisetType(body.ty), line=tok.line, col=tok.col)
        return self.primary()

    def primary(self):
        tok = self.ts.next()
        if tok.kind == "INT":
            return Lit(tok.value, ty=INT, line=tok.line, col=tok.col)
        if tok.kind == "STRING":
            return Lit(tok.value, ty=STRING, line=tok.line, col=tok.col)
        if tok.kind == "NAME":
            if tok.text in ("true", "false"):
                return Lit(tok.text == "true", ty=BOOL, line=tok.line, col=tok.col)
            if tok.text in RESERVED:
                raise ExprError(f"unexpected keyword {tok.text!r}", tok.line, tok.col)
            cs = self.env.variables.get(tok.text)
            if cs is None:
                raise ExprError(f"unknown identifier {tok.text!r}", tok.line, tok.col, code="unknown")
            return Var(tok.text, ty=shape_of(cs), line=tok.line, col=tok.col)
        if tok.kind == "SYM" and tok.text == "(":
            if self.ts.accept(")"):
                return Lit((), ty="unit", line=tok.line, col=tok.col)
            first = self.parse()
            if self.ts.accept(")"):
                return first
            items = [first]
            while self.ts.accept(","):
                items.append(self.parse())
            self.ts.expect(")")
            for it in items:
                if isinstance(it.ty, MultisetType):
                    raise ExprError("multisets cannot appear inside tuples", it.line, it.col, code="type")
            return TupleExpr(tuple(items), ty=tuple(i.ty for i in items), line=tok.line, col=tok.col)
        raise ExprError(f"unexpected {tok.text or 'end of input'!r}", tok.line, tok.col)

    def _want_bool(self, e: Expr, tok: Token):
        if e.ty != BOOL:
            raise ExprError(f"operator {tok.text} needs boolean operands, got {describe_shape(e.ty)}",
                            tok.line, tok.col, code="type")


def _as_ms(ty):
    return ty if isinstance(ty, MultisetType) else MultisetType(ty)


def _lift(e: Expr) -> Expr:
    """Treat a bare element expression as a one-token multiset."""
    if isinstance(e.ty, MultisetType):
        return e
    return MsTerm(1, e, ty=MultisetType(e.ty), line=e.line, col=e.col)


def parse_tokens(tokens: Sequence[Token], env: Env, expected=None) -> Expr:
    """Parse a complete expression from a token slice.

    ``expected`` is a ColorSet (the expression must be a multiset over it, a
    bare element is lifted to a one-token multiset), the string "bool", or
    None for no constraint.
    """
    ts = TokenStream(tokens)
    expr = _Parser(ts, env).parse()
    tok = ts.peek()
    if tok.kind != "EOF":
        raise ExprError(f"unexpected {tok.text!r} after expression", tok.line, tok.col)
    return coerce(expr, expected)


def coerce(expr: Expr, expected) -> Expr:
    if expected is None:
        return expr
    if expected == BOOL:
        if expr.ty != BOOL:
            raise ExprError(f"expected a boolean expression, got {describe_shape(expr.ty)}",
                            expr.line, expr.col, code="type")
        return expr
    want = MultisetType(shape_of(expected))
    got = _as_ms(expr.ty)
    if got != want:
        raise ExprError(
            f"expression of type {describe_shape(got)} does not fit color set {expected.name} "
            f"({describe_shape(want)})", expr.line, expr.col, code="type")
    return _lift(expr)


def parse_expr(text: str, env: Env, expected=None) -> Expr:
    return parse_tokens(tokenize(text), env, expected)


# ---------------------------------------------------------------------------
# Evaluation


def eval_expr(e: Expr, binding: Mapping[str, Value]):
    """Value of ``e`` under ``binding``; multiset expressions yield a Multiset."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        try:
            return binding[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}") from None
    if isinstance(e, TupleExpr):
        return tuple(eval_expr(i, binding) for i in e.items)
    if isinstance(e, MsTerm):
        return Multiset(((eval_expr(e.body, binding), e.count),))
    if isinstance(e, MsSum):
        return _ms(eval_expr(e.left, binding)) + _ms(eval_expr(e.right, binding))
    if isinstance(e, Compare):
        a, b = eval_expr(e.left, binding), eval_expr(e.right, binding)
        op = e.op
        if op == "=":
            return a == b
        if op == "<>":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        return a >= b
    if isinstance(e, And):
        return bool(eval_expr(e.left, binding)) and bool(eval_expr(e.right, binding))
    if isinstance(e, Or):
        return bool(eval_expr(e.left, binding)) or bool(eval_expr(e.right, binding))
    if isinstance(e, Not):
        return not eval_expr(e.operand, binding)
    if isinstance(e, Arith):
        a, b = eval_expr(e.left, binding), eval_expr(e.right, binding)
        r = a + b if e.op == "+" else a - b
        if not -(2**63) <= r < 2**63:
            raise EvalError("integer overflow")
        return r
    raise TypeError(f"not an expression: {e!r}")


def _ms(v) -> Multiset:
    return v if isinstance(v, Multiset) else Multiset(((v, 1),))


def eval_multiset(e: Expr, binding: Mapping[str, Value], colorset: str | None = None) -> Multiset:
    ms = _ms(eval_expr(e, binding))
    if colorset is not None and ms.colorset is None:
        ms = Multiset(ms.items(), colorset)
    return ms


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Lit):
        return frozenset()
    if isinstance(e, TupleExpr):
        return frozenset().union(*(free_vars(i) for i in e.items)) if e.items else frozenset()
    if isinstance(e, MsTerm):
        return free_vars(e.body)
    if isinstance(e, Not):
        return free_vars(e.operand)
    return free_vars(e.left) | free_vars(e.right)


def format_expr(e: Expr) -> str:
    if isinstance(e, Lit):
        return format_value(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, TupleExpr):
        return "(" + ",".join(format_expr(i) for i in e.items) + ")"
    if isinstance(e, MsTerm):
        return f"{e.count}`{format_expr(e.body)}"
    if isinstance(e, MsSum):
        return f"{format_expr(e.left)} ++ {format_expr(e.right)}"
    if isinstance(e, Compare):
        return f"{format_expr(e.left)} {e.op} {format_expr(e.right)}"
    if isinstance(e, And):
        return f"({format_expr(e.left)} andalso {format_expr(e.right)})"
    if isinstance(e, Or):
        return f"({format_expr(e.left)} orelse {format_expr(e.right)})"
    if isinstance(e, Not):
        return f"not {format_expr(e.operand)}"
    if isinstance(e, Arith):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    raise TypeError(e)


# ---------------------------------------------------------------------------
# Pattern matching


def pattern_terms(e: Expr) -> Optional[List[Tuple[int, Expr]]]:
    """Split an input-arc pattern into (count, body) terms, or None if
    ``e`` is not a pattern (bodies may only be tuples, literals, variables)."""
    if isinstance(e, MsSum):
        left, right = pattern_terms(e.left), pattern_terms(e.right)
        if left is None or right is None:
            return None
        return left + right
    if isinstance(e, MsTerm):
        return [(e.count, e.body)] if _is_pattern_body(e.body) else None
    if _is_pattern_body(e):
        return [(1, e)]
    return None


def is_pattern(e: Expr) -> bool:
    return pattern_terms(e) is not None


def _is_pattern_body(e: Expr) -> bool:
    if isinstance(e, (Lit, Var)):
        return not isinstance(e.ty, MultisetType)
    if isinstance(e, TupleExpr):
        return all(_is_pattern_body(i) for i in e.items)
    return False


def _unify(body: Expr, value: Value, binding: Dict[str, Value]) -> Optional[Dict[str, Value]]:
    if isinstance(body, Lit):
        return binding if body.value == value and type(body.value) is type(value) else None
    if isinstance(body, Var):
        if body.name in binding:
            bound = binding[body.name]
            return binding if bound == value and type(bound) is type(value) else None
        out = dict(binding)
        out[body.name] = value
        return out
    if isinstance(body, TupleExpr):
        if not isinstance(value, tuple) or len(value) != len(body.items):
            return None
        for item, v in zip(body.items, value):
            binding = _unify(item, v, binding)
            if binding is None:
                return None
        return binding
    return None


def binding_key(binding: Mapping[str, Value]):
    """Order on bindings: lexicographic by (variable name, value order)."""
    return tuple((name, value_key(binding[name])) for name in sorted(binding))


def match_arc_pattern(pattern: Expr, available: Multiset,
                      partial: Mapping[str, Value] | None = None) -> List[Tuple[Dict[str, Value], Multiset]]:
    """Every extension of ``partial`` under which the pattern's tokens are
    present in ``available``, paired with the multiset it consumes.

    Results are deduplicated and sorted by binding, then by consumed tokens.
    """
    terms = pattern_terms(pattern)
    if terms is None:
        raise ValueError(f"not a pattern expression: {format_expr(pattern)}")
    support = available.support()
    start = dict(partial or {})
    found: Dict[tuple, Tuple[Dict[str, Value], Multiset]] = {}

    def search(i: int, binding: Dict[str, Value], residual: Dict[Value, int], taken: list):
        if i == len(terms):
            consumed = Multiset(taken, available.colorset)
            key = (tuple(sorted(binding.items(), key=lambda kv: kv[0])), consumed)
            found.setdefault(key, (binding, consumed))
            return
        count, body = terms[i]
        for v in support:
            if residual.get(v, 0) < count:
                continue
            b = _unify(body, v, binding)
            if b is None:
                continue
            residual[v] -= count
            taken.append((v, count))
            search(i + 1, b, residual, taken)
            taken.pop()
            residual[v] += count

    search(0, start, {v: available.count(v) for v in support}, [])
    results = list(found.values())
    results.sort(key=lambda bc: (binding_key(bc[0]), tuple(value_key(v) + (n,) for v, n in bc[1].items())))
    return results
