"""Sparse multivariate polynomials with exact rational coefficients.

Polynomials are stored as ``{exponent tuple: coefficient}``. Coefficients are
:class:`fractions.Fraction` when built from rational input and ``float`` once
an irrational (floating point) quantity enters, e.g. after an orthogonal change
of variables.
"""
from __future__ import annotations

import re
from fractions import Fraction
from numbers import Number, Rational
from typing import Iterable, Sequence

import numpy as np


class PolynomialSyntaxError(ValueError):
    """Malformed polynomial expression; ``column`` is 1-based."""

    def __init__(self, message, text, column):
        self.text = text
        self.column = column
        pointer = " " * (column - 1) + "^"
        super().__init__(f"{message} at column {column}\n  {text}\n  {pointer}")


class Polynomial:
    """Immutable polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms=None):
        self.nvars = int(nvars)
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise ValueError(f"exponent {exps} does not match {self.nvars} variables")
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            if c != 0:
                clean[exps] = clean.get(exps, 0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}
        self._hash = None

    # constructors
    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: _as_coeff(value)})

    @classmethod
    def variable(cls, nvars, index):
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): Fraction(1)})

    @classmethod
    def linear(cls, coeffs: Sequence):
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            if c != 0:
                exps = [0] * n
                exps[i] = 1
                terms[tuple(exps)] = _as_coeff(c)
        return cls(n, terms)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different variable sets")
            return other
        if isinstance(other, Number):
            return Polynomial.constant(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, Number):
            other = Polynomial.constant(self.nvars, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    # calculus
    def diff(self, i: int) -> Polynomial:
        terms = {}
        for e, c in self.terms.items():
            if e[i]:
                new = list(e)
                new[i] -= 1
                terms[tuple(new)] = c * e[i]
        return Polynomial(self.nvars, terms)

    def gradient(self):
        return [self.diff(i) for i in range(self.nvars)]

    def hessian(self):
        grad = self.gradient()
        return [[g.diff(j) for j in range(self.nvars)] for g in grad]

    # structure
    @property
    def is_zero(self):
        return not self.terms

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def weighted_degrees(self, weights):
        """Set of weighted degrees of the monomials present."""
        return {sum(w * a for w, a in zip(weights, e)) for e in self.terms}

    def is_exact(self):
        return all(isinstance(c, Rational) for c in self.terms.values())

    def cleaned(self, tol=1e-12, rationalize=True):
        """Drop tiny coefficients; snap floats to nearby small rationals."""
        terms = {}
        for e, c in self.terms.items():
            if isinstance(c, Rational):
                terms[e] = c
                continue
            c = float(c)
            if abs(c) <= tol:
                continue
            if rationalize:
                f = Fraction(c).limit_denominator(10**6)
                if abs(float(f) - c) <= tol * max(1.0, abs(c)):
                    terms[e] = f
                    continue
            terms[e] = c
        return Polynomial(self.nvars, terms)

    def max_abs_coeff(self):
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    def coefficient(self, exps):
        return self.terms.get(tuple(exps), 0)

    # evaluation and substitution
    def __call__(self, x):
        return evaluate_many([self], x)[..., 0]

    def compose(self, subs: Sequence[Polynomial]) -> Polynomial:
        """Substitute polynomial ``subs[i]`` for variable ``i``."""
        if len(subs) != self.nvars:
            raise ValueError("need one substitution per variable")
        if not subs:
            return self
        n = subs[0].nvars
        powers = [{0: Polynomial.constant(n, 1)} for _ in subs]

        def power(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = power(i, k - 1) * subs[i]
            return cache[k]

        out = Polynomial(n)
        for e, c in self.terms.items():
            term = Polynomial.constant(n, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            out = out + term
        return out

    # text
    def to_string(self, names=None):
        names = names or [f"x{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        pieces = []
        for e in sorted(self.terms, key=lambda e: (sum(e), tuple(-a for a in e))):
            c = self.terms[e]
            mono = "*".join(
                names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(e) if k
            )
            coeff = _format_coeff(c)
            neg = coeff.startswith("-")
            mag = coeff[1:] if neg else coeff
            if mono:
                body = mono if mag == "1" else f"{mag}*{mono}"
            else:
                body = mag
            pieces.append(("-" if neg else "+", body))
        first_sign, first = pieces[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"Polynomial({self.to_string()!r})"


def _as_coeff(value):
    if isinstance(value, (Fraction, int, np.integer)):
        return Fraction(int(value)) if not isinstance(value, Fraction) else value
    return float(value)


def _format_coeff(c):
    if isinstance(c, Rational):
        f = Fraction(c)
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    return repr(float(c))


def coefficient_to_json(c):
    """Exact rationals as ``"p/q"`` strings, floats as numbers."""
    if isinstance(c, Rational):
        return _format_coeff(c)
    return float(c)


# ---------------------------------------------------------------------------
# vectorized evaluation

class CompiledMap:
    """A list of polynomials sharing one monomial basis, evaluated as ``M @ C``."""

    def __init__(self, polys: Sequence[Polynomial]):
        if not polys:
            raise ValueError("empty polynomial map")
        self.nvars = polys[0].nvars
        monos = sorted({e for p in polys for e in p.terms})
        if not monos:
            monos = [(0,) * self.nvars]
        index = {e: i for i, e in enumerate(monos)}
        self.exponents = np.array(monos, dtype=int).reshape(len(monos), self.nvars)
        self.coeffs = np.zeros((len(monos), len(polys)))
        for j, p in enumerate(polys):
            for e, c in p.terms.items():
                self.coeffs[index[e], j] = float(c)
        self.max_exp = int(self.exponents.max(initial=0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, self.nvars)
        monos = np.ones((flat.shape[0], len(self.exponents)))
        # powers table: pw[k] = x**k
        pw = [np.ones_like(flat)]
        for _ in range(self.max_exp):
            pw.append(pw[-1] * flat)
        for v in range(self.nvars):
            col = self.exponents[:, v]
            for k in np.unique(col):
                if k:
                    monos[:, col == k] *= pw[k][:, v : v + 1]
        out = monos @ self.coeffs
        return out.reshape(x.shape[:-1] + (self.coeffs.shape[1],))


def evaluate_many(polys, x):
    return CompiledMap(polys)(x)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<var>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + 1 + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise PolynomialSyntaxError(f"unexpected character {text[col - 1]!r}", text, col)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := ('+'|'-') unary | power
    # power  := atom (('^'|'**') INT)?
    # atom   := NUMBER | VAR | '(' expr ')'
    def __init__(self, text, names):
        self.text = text
        self.names = {n: i for i, n in enumerate(names)}
        self.nvars = len(names)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise PolynomialSyntaxError(msg, self.text, tok[2])

    def parse(self):
        if self.peek()[0] == "end":
            self.fail("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op_tok = self.take()
            q = self.unary()
            if op_tok[1] == "*":
                p = p * q
            else:
                if q.degree != 0 or q.is_zero:
                    self.fail("division only by nonzero constants", op_tok)
                p = p * Polynomial.constant(self.nvars, 1 / Fraction(q.coefficient((0,) * self.nvars)))
        return p

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.take()
            p = self.unary()
            return -p if tok[1] == "-" else p
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.take()
            exp_tok = self.take()
            if exp_tok[0] != "num" or not exp_tok[1].isdigit():
                self.fail("exponent must be a non-negative integer", exp_tok)
            return base ** int(exp_tok[1])
        return base

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Polynomial.constant(self.nvars, Fraction(value))
        if kind == "var":
            if value not in self.names:
                self.fail(f"unknown variable {value!r}", tok)
            return Polynomial.variable(self.nvars, self.names[value])
        if kind == "op" and value == "(":
            p = self.expr()
            close = self.take()
            if close[1] != ")":
                self.fail("expected ')'", close)
            return p
        self.fail(f"unexpected token {value!r}" if value else "unexpected end of expression", tok)


def parse_polynomial(text: str, nvars: int, names: Iterable[str] | None = None) -> Polynomial:
    """Parse ``text`` in variables ``x1..xn`` (or ``names``)."""
    names = list(names) if names is not None else [f"x{i + 1}" for i in range(nvars)]
    if len(names) != nvars:
        raise ValueError("names must match nvars")
    return _Parser(text, names).parse()
