"""Text syntax for polynomials, rational functions and time/velocity expressions.

Grammar (usual precedence; ``^`` binds tightest and may not be chained)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' ['+'|'-'] INT)?
    atom   := NUMBER ['i'] | NAME | NAME '(' expr ')' | '(' expr ')'

Names are coordinates, velocities (``<coord>dot``), ``t``, ``i``, ``exp`` and
user parameters. Division is allowed by scalars and by products of the
declared denominator factors only.
"""

from __future__ import annotations

import re
from typing import Mapping, Sequence

from ..errors import DenominatorNotDeclared, ParseError
from .poly import RatFunc, SpacePoly
from .scalar import I, ONE, ZERO, Scalar, as_scalar

__all__ = [
    "parse_expression",
    "parse_poly",
    "parse_ratfunc",
    "parse_scalar",
    "format_scalar",
    "format_poly",
    "format_ratfunc",
    "format_expression",
    "default_names",
]

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)(?P<isuf>i(?![A-Za-z0-9_]))?|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")


def default_names(dim: int) -> list[str]:
    if dim <= 3:
        return ["x", "y", "z"][:dim]
    return [f"q{i + 1}" for i in range(dim)]


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    start = text.rfind("\n", 0, offset) + 1
    return line, offset - start + 1


class _Tok:
    __slots__ = ("kind", "value", "pos", "imag")

    def __init__(self, kind, value, pos, imag=False):
        self.kind = kind
        self.value = value
        self.pos = pos
        self.imag = imag


def _tokenize(text: str, field):
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            line, col = _position(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, field)
        start = m.start("num") if m.group("num") else (m.start("name") if m.group("name") else m.start("op"))
        if m.group("num") is not None:
            toks.append(_Tok("num", int(m.group("num")), start, bool(m.group("isuf"))))
        elif m.group("name") is not None:
            toks.append(_Tok("name", m.group("name"), start))
        else:
            toks.append(_Tok("op", m.group("op"), start))
        pos = m.end()
    toks.append(_Tok("end", None, n))
    return toks


# An expression value is a dict  (lam, N, vexps) -> RatFunc  meaning
#   sum  coeff(q) * qdot^vexps * t^N * exp(lam*t)
class _Ctx:
    def __init__(self, text, field, coords, factors, params, time, velocities):
        self.text = text
        self.field = field
        self.coords = list(coords)
        self.dim = len(coords)
        self.factors = tuple(factors)
        self.params = dict(params or {})
        self.time = time
        self.velocities = velocities
        self.zero_v = (0,) * self.dim
        self.toks = _tokenize(text, field)
        self.i = 0

    def error(self, msg, tok=None):
        tok = tok or self.toks[self.i]
        line, col = _position(self.text, tok.pos)
        raise ParseError(msg, line, col, self.field)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def is_op(self, ch):
        tok = self.toks[self.i]
        return tok.kind == "op" and tok.value == ch

    # -- value helpers ---------------------------------------------------
    def const(self, c: Scalar):
        if not c:
            return {}
        return {(ZERO, 0, self.zero_v): RatFunc.constant(c, self.dim, self.factors)}

    def add(self, a, b, sign=1):
        out = dict(a)
        for k, v in b.items():
            v = v if sign > 0 else -v
            if k in out:
                s = out[k] + v
                if s.is_zero():
                    del out[k]
                else:
                    out[k] = s
            else:
                out[k] = v
        return out

    def mul(self, a, b):
        out = {}
        for (l1, n1, v1), c1 in a.items():
            for (l2, n2, v2), c2 in b.items():
                k = (l1 + l2, n1 + n2, tuple(x + y for x, y in zip(v1, v2)))
                c = c1 * c2
                if k in out:
                    c = out[k] + c
                if c.is_zero():
                    out.pop(k, None)
                else:
                    out[k] = c
        return out

    def as_constant(self, v):
        if not v:
            return ZERO
        if len(v) != 1:
            return None
        (k, c), = v.items()
        if k != (ZERO, 0, self.zero_v) or not c.is_polynomial() or not c.num.is_constant():
            return None
        return c.num.constant_value()

    def reciprocal(self, v, tok):
        c = self.as_constant(v)
        if c is not None:
            if not c:
                self.error("division by zero", tok)
            return self.const(c.inverse())
        if len(v) != 1:
            self.error("can only divide by a monomial time factor or a product of declared factors", tok)
        (k, c), = v.items()
        lam, n, vex = k
        if n or any(vex):
            self.error("cannot divide by t or by velocities", tok)
        if not c.is_polynomial():
            self.error("cannot divide by a rational function", tok)
        try:
            r = RatFunc.divide(SpacePoly.constant(1, self.dim), c.num, self.factors)
        except DenominatorNotDeclared as exc:
            self.error(str(exc), tok)
        return {(-lam, 0, self.zero_v): r}

    # -- grammar ----------------------------------------------------------
    def parse(self):
        if self.peek().kind == "end":
            self.error("empty expression")
        v = self.expr()
        if self.peek().kind != "end":
            self.error(f"unexpected token {self.peek().value!r}")
        return v

    def expr(self):
        v = self.term()
        while self.is_op("+") or self.is_op("-"):
            sign = 1 if self.take().value == "+" else -1
            v = self.add(v, self.term(), sign)
        return v

    def term(self):
        v = self.unary()
        while self.is_op("*") or self.is_op("/"):
            op = self.take()
            if op.value == "*":
                v = self.mul(v, self.unary())
            else:
                tok = self.peek()
                v = self.mul(v, self.reciprocal(self.unary(), tok))
        return v

    def unary(self):
        if self.is_op("-"):
            self.take()
            return self.mul(self.const(-ONE), self.unary())
        if self.is_op("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base_tok = self.peek()
        v = self.atom()
        if self.is_op("^"):
            self.take()
            paren = False
            if self.is_op("("):
                self.take()
                paren = True
            sign = 1
            if self.is_op("-") or self.is_op("+"):
                sign = -1 if self.take().value == "-" else 1
            tok = self.peek()
            if tok.kind != "num" or tok.imag:
                self.error("exponent must be an integer", tok)
            self.take()
            if paren:
                if not self.is_op(")"):
                    self.error("expected ')'")
                self.take()
            e = sign * tok.value
            if e > 64:
                self.error("exponent too large", tok)
            if e < 0:
                v = self.reciprocal(v, base_tok)
                e = -e
            result = self.const(ONE)
            for _ in range(e):
                result = self.mul(result, v)
            v = result
            if self.is_op("^"):
                self.error("repeated '^' is not allowed; use parentheses")
        return v

    def atom(self):
        tok = self.take()
        if tok.kind == "num":
            c = Scalar(tok.value)
            return self.const(c * I if tok.imag else c)
        if tok.kind == "op" and tok.value == "(":
            v = self.expr()
            if not self.is_op(")"):
                self.error("expected ')'")
            self.take()
            return v
        if tok.kind == "name":
            return self.name(tok)
        if tok.kind == "end":
            self.error("unexpected end of input", tok)
        self.error(f"unexpected token {tok.value!r}", tok)

    def name(self, tok):
        name = tok.value
        if name in self.coords:
            idx = self.coords.index(name)
            return {(ZERO, 0, self.zero_v): RatFunc.from_poly(SpacePoly.variable(idx, self.dim), self.factors)}
        if name in self.params:
            return self.const(as_scalar(self.params[name]))
        if name == "i":
            return self.const(I)
        if name == "t":
            if not self.time:
                self.error("time 't' is not allowed here", tok)
            return {(ZERO, 1, self.zero_v): RatFunc.constant(1, self.dim, self.factors)}
        if name == "exp":
            if not self.time:
                self.error("exp() is not allowed here", tok)
            if not self.is_op("("):
                self.error("expected '(' after exp")
            self.take()
            arg_tok = self.peek()
            arg = self.expr()
            if not self.is_op(")"):
                self.error("expected ')'")
            self.take()
            if not arg:
                return self.const(ONE)
            if len(arg) != 1:
                self.error("exp() argument must be a constant multiple of t", arg_tok)
            (k, c), = arg.items()
            if k != (ZERO, 1, self.zero_v) or not c.is_polynomial() or not c.num.is_constant():
                self.error("exp() argument must be a constant multiple of t", arg_tok)
            lam = c.num.constant_value()
            return {(lam, 0, self.zero_v): RatFunc.constant(1, self.dim, self.factors)}
        if name.endswith("dot") and name[:-3] in self.coords:
            if not self.velocities:
                self.error("velocities are not allowed here", tok)
            idx = self.coords.index(name[:-3])
            v = [0] * self.dim
            v[idx] = 1
            return {(ZERO, 0, tuple(v)): RatFunc.constant(1, self.dim, self.factors)}
        self.error(f"unknown name {name!r}", tok)


def parse_expression(text: str, coords: Sequence[str], factors: Sequence[SpacePoly] = (),
                     params: Mapping[str, object] | None = None, *, time: bool = True,
                     velocities: bool = True, field: str | None = None) -> dict:
    """Parse into ``{(lam, N, velocity_exponents): RatFunc}``."""
    ctx = _Ctx(text, field, coords, factors, params, time, velocities)
    return ctx.parse()


def parse_ratfunc(text: str, coords: Sequence[str], factors: Sequence[SpacePoly] = (),
                  params: Mapping[str, object] | None = None, field: str | None = None) -> RatFunc:
    v = parse_expression(text, coords, factors, params, time=False, velocities=False, field=field)
    if not v:
        return RatFunc.constant(0, len(coords), factors)
    return v[(ZERO, 0, (0,) * len(coords))]


def parse_poly(text: str, coords: Sequence[str], params: Mapping[str, object] | None = None,
               field: str | None = None) -> SpacePoly:
    r = parse_ratfunc(text, coords, (), params, field)
    return r.num


def parse_scalar(text: str, params: Mapping[str, object] | None = None, field: str | None = None) -> Scalar:
    """Scalar literal or constant expression such as ``"3/4+1/2i"`` or ``"-2*m"``."""
    if isinstance(text, (int,)) or not isinstance(text, str):
        return as_scalar(text)
    try:
        return Scalar.parse(text)
    except ValueError:
        pass
    v = parse_expression(text, [], (), params, time=False, velocities=False, field=field)
    if not v:
        return ZERO
    return v[(ZERO, 0, ())].num.constant_value()


# -- printing -------------------------------------------------------------

def format_scalar(c: Scalar) -> str:
    """Scalar in expression syntax: ``3/4``, ``-2*i``, ``(1+3/4*i)``."""
    if c.is_real():
        return str(c.re)
    im = c.im
    if im == 1:
        im_s = "i"
    elif im == -1:
        im_s = "-i"
    else:
        im_s = f"{im}*i"
    if not c.re:
        return im_s
    return f"({c.re}{im_s if im_s.startswith('-') else '+' + im_s})"


def _monomial(exps, names) -> str:
    parts = []
    for k, name in zip(exps, names):
        if k == 1:
            parts.append(name)
        elif k:
            parts.append(f"{name}^{k}")
    return "*".join(parts)


def _signed_terms(items):
    """Join ``(coeff, monomial_text)`` pairs into a canonical sum."""
    out = []
    for c, mono in items:
        neg = False
        if c.is_real() and c.re < 0:
            neg, c = True, -c
        elif not c.re and c.im < 0:
            neg, c = True, -c
        if mono:
            if c == ONE:
                body = mono
            else:
                body = f"{format_scalar(c)}*{mono}"
        else:
            body = format_scalar(c)
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out) if out else "0"


def format_poly(p: SpacePoly, names: Sequence[str] | None = None) -> str:
    names = list(names) if names is not None else default_names(p.dim)
    return _signed_terms([(c, _monomial(e, names)) for e, c in p.sorted_terms()])


def _wrap(s: str) -> str:
    body = s[1:] if s.startswith("-") else s
    if any(ch in body for ch in " +-/") and not (s.startswith("(") and s.endswith(")") and _balanced(s[1:-1])):
        return f"({s})"
    return s


def _balanced(s: str) -> bool:
    depth = 0
    for ch in s:
        depth += ch == "("
        depth -= ch == ")"
        if depth < 0:
            return False
    return depth == 0


def format_ratfunc(r: RatFunc, names: Sequence[str] | None = None) -> str:
    names = list(names) if names is not None else default_names(r.dim)
    num = format_poly(r.num, names)
    if r.is_polynomial():
        return num
    dens = []
    for f, k in zip(r.factors, r.den):
        if k:
            fs = format_poly(f, names)
            if len(f.terms) > 1 or fs.startswith("-") or (len(f.terms) == 1 and "*" in fs):
                fs = f"({fs})"
            dens.append(fs if k == 1 else f"{fs}^{k}")
    den = "*".join(dens)
    if len(dens) > 1:
        den = f"({den})"
    return f"{_wrap(num)}/{den}"


def _profile_text(lam: Scalar, n: int, time_name: str) -> str:
    parts = []
    if lam:
        if lam == ONE:
            arg = time_name
        elif lam == -ONE:
            arg = f"-{time_name}"
        else:
            arg = f"{format_scalar(lam)}*{time_name}"
        parts.append(f"exp({arg})")
    if n == 1:
        parts.append(time_name)
    elif n:
        parts.append(f"{time_name}^{n}")
    return "*".join(parts)


_LEADING_NUMBER = re.compile(r"^(\d+(?:/\d+)?|\([^()]*\))(?:\*(.*))?$")


def format_expression(expr: Mapping, names: Sequence[str], time_name: str = "t") -> str:
    """Format a ``{(lam, N, vexps): RatFunc}`` mapping as parseable text.

    Terms are grouped by time profile, e.g. ``exp(-t)*(xdot + x) + t*ydot``.
    """
    names = list(names)
    vnames = [n + "dot" for n in names]
    groups: dict = {}
    for (lam, n, v), c in expr.items():
        groups.setdefault((lam, n), []).append((v, c))
    chunks = []
    for (lam, n) in sorted(groups, key=lambda k: (k[0].sort_key(), -k[1])):
        items = sorted(groups[(lam, n)], key=lambda it: (-sum(it[0]), tuple(-x for x in it[0])))
        pieces = []
        for v, c in items:
            mono = _monomial(v, vnames)
            if c.is_polynomial():
                if not mono:
                    pieces.append(format_poly(c.num, names))
                    continue
                terms = c.num.sorted_terms()
                if len(terms) == 1:
                    e, k = terms[0]
                    inner = _monomial(e, names)
                    pieces.append(_signed_terms([(k, f"{inner}*{mono}" if inner else mono)]))
                    continue
            cs = format_ratfunc(c, names)
            pieces.append(f"{_wrap(cs)}*{mono}" if mono else cs)
        inner = pieces[0]
        for p in pieces[1:]:
            inner += " - " + p[1:] if p.startswith("-") and not p.startswith("-(") else " + " + p
        prof = _profile_text(lam, n, time_name)
        if prof:
            if len(pieces) > 1 or any(ch in inner.lstrip("-") for ch in " /") or inner.startswith("-("):
                inner = f"{prof}*({inner})"
            else:
                sign, body = ("-", inner[1:]) if inner.startswith("-") else ("", inner)
                m = _LEADING_NUMBER.match(body)
                if body == "1":
                    inner = f"{sign}{prof}"
                elif m and m.group(2):
                    # keep the numeric factor in front: 2*t*z*zdot
                    inner = f"{sign}{m.group(1)}*{prof}*{m.group(2)}"
                elif m:
                    inner = f"{sign}{m.group(1)}*{prof}"
                else:
                    inner = f"{sign}{prof}*{body}"
        chunks.append(inner)
    out = ""
    for ch in chunks:
        if not out:
            out = ch
        elif ch.startswith("-") and not ch.startswith("-("):
            out += " - " + ch[1:]
        else:
            out += " + " + ch
    return out or "0"
