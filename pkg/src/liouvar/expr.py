"""Exact scalar-expression algebra: rationals plus sin/cos atoms.

Expressions are immutable trees built from rational constants, named
symbols, sums, products, positive integer powers, sine and cosine.  A
canonical sum-of-monomials normal form makes equality decidable for the
polynomial subring; expressions containing trigonometric atoms fall back
to a seeded probabilistic zero test whose parameters are fixed and
reported alongside every verdict.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

Rational = Fraction

EXACT = "exact"
PROBABILISTIC = "probabilistic"


class ExprError(Exception):
    """Base class for expression-level failures."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UndeclaredSymbolError(ParseError):
    def __init__(self, name: str, position: int):
        super().__init__(f"undeclared identifier '{name}'", position)
        self.name = name


class UnboundSymbolError(ExprError):
    pass


class DivisionError(ExprError):
    pass


# --------------------------------------------------------------------------
# Expression tree


class ScalarExpr:
    """Immutable expression node; arithmetic operators build new trees."""

    __slots__ = ()

    def __add__(self, other):
        other = _coerce_operand(other)
        return Sum((self, other)) if other is not None else NotImplemented

    def __radd__(self, other):
        other = _coerce_operand(other)
        return Sum((other, self)) if other is not None else NotImplemented

    def __sub__(self, other):
        other = _coerce_operand(other)
        return Sum((self, Neg(other))) if other is not None else NotImplemented

    def __rsub__(self, other):
        other = _coerce_operand(other)
        return Sum((other, Neg(self))) if other is not None else NotImplemented

    def __mul__(self, other):
        other = _coerce_operand(other)
        return Product((self, other)) if other is not None else NotImplemented

    def __rmul__(self, other):
        other = _coerce_operand(other)
        return Product((other, self)) if other is not None else NotImplemented

    def __neg__(self):
        return Neg(self)

    def __pow__(self, exponent: int):
        return Power(self, exponent)

    def free_symbols(self) -> frozenset[str]:
        raise NotImplementedError

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True, slots=True)
class Const(ScalarExpr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    def free_symbols(self):
        return frozenset()


@dataclass(frozen=True, slots=True)
class Symbol(ScalarExpr):
    name: str

    def free_symbols(self):
        return frozenset((self.name,))


@dataclass(frozen=True, slots=True)
class Sum(ScalarExpr):
    terms: tuple[ScalarExpr, ...]

    def free_symbols(self):
        return frozenset().union(*(t.free_symbols() for t in self.terms)) if self.terms else frozenset()


@dataclass(frozen=True, slots=True)
class Product(ScalarExpr):
    factors: tuple[ScalarExpr, ...]

    def free_symbols(self):
        return frozenset().union(*(f.free_symbols() for f in self.factors)) if self.factors else frozenset()


@dataclass(frozen=True, slots=True)
class Power(ScalarExpr):
    base: ScalarExpr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 1:
            raise ExprError(f"power exponent must be a positive integer, got {self.exponent!r}")

    def free_symbols(self):
        return self.base.free_symbols()


@dataclass(frozen=True, slots=True)
class Sin(ScalarExpr):
    arg: ScalarExpr

    def free_symbols(self):
        return self.arg.free_symbols()


@dataclass(frozen=True, slots=True)
class Cos(ScalarExpr):
    arg: ScalarExpr

    def free_symbols(self):
        return self.arg.free_symbols()


@dataclass(frozen=True, slots=True)
class Neg(ScalarExpr):
    arg: ScalarExpr

    def free_symbols(self):
        return self.arg.free_symbols()


def _coerce_operand(value) -> ScalarExpr | None:
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    return None


def as_expr(value) -> ScalarExpr:
    coerced = _coerce_operand(value)
    if coerced is None:
        raise ExprError(f"cannot interpret {value!r} as a scalar expression")
    return coerced


def add_all(terms: Iterable[ScalarExpr]) -> ScalarExpr:
    terms = tuple(as_expr(t) for t in terms)
    if not terms:
        return Const(Fraction(0))
    if len(terms) == 1:
        return terms[0]
    return Sum(terms)


def mul_all(factors: Iterable[ScalarExpr]) -> ScalarExpr:
    factors = tuple(as_expr(f) for f in factors)
    if not factors:
        return Const(Fraction(1))
    if len(factors) == 1:
        return factors[0]
    return Product(factors)


# --------------------------------------------------------------------------
# Normal form: sum of monomials over atoms (symbols, sin(.), cos(.))

_SYM, _SIN, _COS = 0, 1, 2

# Atom encodings: (_SYM, name) | (_SIN, terms) | (_COS, terms) where terms
# is the canonical terms-tuple of the normalized argument.  Monomials are
# sorted tuples of (atom, exponent); a NormalForm is a sorted tuple of
# (monomial, coefficient).


def _atom_sort_key(atom):
    kind, payload = atom
    if kind == _SYM:
        return (kind, payload)
    return (kind, _terms_sort_key(payload))


def _monomial_sort_key(monomial):
    degree = sum(e for _, e in monomial)
    return (-degree, tuple((_atom_sort_key(a), e) for a, e in monomial))


def _terms_sort_key(terms):
    return tuple((_monomial_sort_key(m), (c.numerator, c.denominator)) for m, c in terms)


@dataclass(frozen=True, slots=True)
class NormalForm:
    """Canonical representation: pairwise-distinct monomials, no zeros."""

    terms: tuple

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0] == ())

    def constant_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and self.terms[0][0] == ():
            return self.terms[0][1]
        raise ExprError("normal form is not constant")

    def has_trig(self) -> bool:
        return any(kind != _SYM for m, _ in self.terms for (kind, _p), _e in m)

    def free_symbols(self) -> frozenset[str]:
        out: set[str] = set()
        for m, _ in self.terms:
            for (kind, payload), _e in m:
                if kind == _SYM:
                    out.add(payload)
                else:
                    out |= NormalForm(payload).free_symbols()
        return frozenset(out)


def _freeze(acc: dict) -> NormalForm:
    items = [(m, c) for m, c in acc.items() if c != 0]
    items.sort(key=lambda t: _monomial_sort_key(t[0]))
    return NormalForm(tuple(items))


def _acc_add(acc: dict, monomial, coeff: Fraction) -> None:
    acc[monomial] = acc.get(monomial, Fraction(0)) + coeff


def _mono_mul(m1, m2):
    exps: dict = {}
    for atom, e in m1:
        exps[atom] = exps.get(atom, 0) + e
    for atom, e in m2:
        exps[atom] = exps.get(atom, 0) + e
    return tuple(sorted(exps.items(), key=lambda ae: _atom_sort_key(ae[0])))


def nf_add(a: NormalForm, b: NormalForm) -> NormalForm:
    acc = dict(a.terms)
    for m, c in b.terms:
        _acc_add(acc, m, c)
    return _freeze(acc)


def nf_neg(a: NormalForm) -> NormalForm:
    return NormalForm(tuple((m, -c) for m, c in a.terms))


def nf_scale(a: NormalForm, factor: Fraction) -> NormalForm:
    if factor == 0:
        return NormalForm(())
    return NormalForm(tuple((m, c * factor) for m, c in a.terms))


def nf_mul(a: NormalForm, b: NormalForm) -> NormalForm:
    acc: dict = {}
    for m1, c1 in a.terms:
        for m2, c2 in b.terms:
            _acc_add(acc, _mono_mul(m1, m2), c1 * c2)
    return _freeze(acc)


def nf_pow(a: NormalForm, exponent: int) -> NormalForm:
    result = NormalForm((((), Fraction(1)),))
    for _ in range(exponent):
        result = nf_mul(result, a)
    return result


_NF_ZERO = NormalForm(())
_NF_ONE = NormalForm((((), Fraction(1)),))


def normal_form(e: ScalarExpr) -> NormalForm:
    if isinstance(e, Const):
        return NormalForm((((), e.value),)) if e.value != 0 else _NF_ZERO
    if isinstance(e, Symbol):
        return NormalForm(((((( _SYM, e.name), 1),), Fraction(1)),))
    if isinstance(e, Sum):
        acc = _NF_ZERO
        for t in e.terms:
            acc = nf_add(acc, normal_form(t))
        return acc
    if isinstance(e, Product):
        acc = _NF_ONE
        for f in e.factors:
            acc = nf_mul(acc, normal_form(f))
        return acc
    if isinstance(e, Power):
        return nf_pow(normal_form(e.base), e.exponent)
    if isinstance(e, Neg):
        return nf_neg(normal_form(e.arg))
    if isinstance(e, Sin):
        arg = normal_form(e.arg)
        if arg.is_zero():
            return _NF_ZERO
        return NormalForm(((((( _SIN, arg.terms), 1),), Fraction(1)),))
    if isinstance(e, Cos):
        arg = normal_form(e.arg)
        if arg.is_zero():
            return _NF_ONE
        return NormalForm(((((( _COS, arg.terms), 1),), Fraction(1)),))
    raise ExprError(f"unknown expression node {type(e).__name__}")


def _atom_expr(atom) -> ScalarExpr:
    kind, payload = atom
    if kind == _SYM:
        return Symbol(payload)
    arg = from_normal(NormalForm(payload))
    return Sin(arg) if kind == _SIN else Cos(arg)


def from_normal(nf: NormalForm) -> ScalarExpr:
    if not nf.terms:
        return Const(Fraction(0))
    terms = []
    for m, c in nf.terms:
        factors: list[ScalarExpr] = []
        if c != 1 or not m:
            factors.append(Const(c))
        for atom, e in m:
            base = _atom_expr(atom)
            factors.append(base if e == 1 else Power(base, e))
        terms.append(mul_all(factors))
    return add_all(terms)


def normalize(e: ScalarExpr) -> ScalarExpr:
    """Canonical rebuild; normalize(normalize(e)) is structurally stable."""
    return from_normal(normal_form(e))


# --------------------------------------------------------------------------
# Differentiation (partial; any symbol other than the target is constant)


def _diff(e: ScalarExpr, v: str) -> ScalarExpr:
    if isinstance(e, Const):
        return Const(Fraction(0))
    if isinstance(e, Symbol):
        return Const(Fraction(1 if e.name == v else 0))
    if isinstance(e, Sum):
        return Sum(tuple(_diff(t, v) for t in e.terms))
    if isinstance(e, Product):
        terms = []
        for i, f in enumerate(e.factors):
            terms.append(Product(e.factors[:i] + (_diff(f, v),) + e.factors[i + 1:]))
        return add_all(terms)
    if isinstance(e, Power):
        inner = _diff(e.base, v)
        if e.exponent == 1:
            return inner
        return mul_all((Const(Fraction(e.exponent)), Power(e.base, e.exponent - 1), inner))
    if isinstance(e, Sin):
        return Product((Cos(e.arg), _diff(e.arg, v)))
    if isinstance(e, Cos):
        return Neg(Product((Sin(e.arg), _diff(e.arg, v))))
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, v))
    raise ExprError(f"unknown expression node {type(e).__name__}")


def differentiate(e: ScalarExpr, v: str) -> ScalarExpr:
    """Exact partial derivative with respect to the coordinate ``v``."""
    return normalize(_diff(e, v))


# --------------------------------------------------------------------------
# Evaluation and substitution


def evaluate(e: ScalarExpr, bindings: Mapping[str, float]) -> float:
    """IEEE-double evaluation, left-to-right association."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Symbol):
        try:
            return float(bindings[e.name])
        except KeyError:
            raise UnboundSymbolError(f"unbound symbol '{e.name}'") from None
    if isinstance(e, Sum):
        total = 0.0
        for t in e.terms:
            total += evaluate(t, bindings)
        return total
    if isinstance(e, Product):
        total = 1.0
        for f in e.factors:
            total *= evaluate(f, bindings)
        return total
    if isinstance(e, Power):
        return evaluate(e.base, bindings) ** e.exponent
    if isinstance(e, Sin):
        return math.sin(evaluate(e.arg, bindings))
    if isinstance(e, Cos):
        return math.cos(evaluate(e.arg, bindings))
    if isinstance(e, Neg):
        return -evaluate(e.arg, bindings)
    raise ExprError(f"unknown expression node {type(e).__name__}")


def substitute(e: ScalarExpr, mapping: Mapping[str, ScalarExpr]) -> ScalarExpr:
    """Simultaneous substitution of symbols by expressions."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Symbol):
        return mapping.get(e.name, e)
    if isinstance(e, Sum):
        return Sum(tuple(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Power):
        return Power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Sin):
        return Sin(substitute(e.arg, mapping))
    if isinstance(e, Cos):
        return Cos(substitute(e.arg, mapping))
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    raise ExprError(f"unknown expression node {type(e).__name__}")


# --------------------------------------------------------------------------
# Zero testing


@dataclass(frozen=True, slots=True)
class ZeroTestConfig:
    """Sampling parameters for the probabilistic zero test."""

    seed: int = 314159
    points: int = 32
    low: float = -2.0
    high: float = 2.0
    rel_tol: float = 1e-9

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "points": self.points,
            "range": [self.low, self.high],
            "rel_tol": self.rel_tol,
        }


DEFAULT_ZERO_TEST = ZeroTestConfig()


@dataclass(frozen=True, slots=True)
class ZeroResult:
    value: bool
    certainty: str


def _eval_terms(terms, bindings) -> float:
    total = 0.0
    for m, c in terms:
        v = float(c)
        for (kind, payload), e in m:
            if kind == _SYM:
                base = bindings[payload]
            elif kind == _SIN:
                base = math.sin(_eval_terms(payload, bindings))
            else:
                base = math.cos(_eval_terms(payload, bindings))
            v *= base ** e
        total += v
    return total


def is_zero(e: ScalarExpr, config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> ZeroResult:
    """Decide whether ``e`` vanishes identically.

    Exact verdicts come from the normal form alone.  Normal forms that
    contain trigonometric atoms are sampled at ``config.points`` points
    with every free symbol drawn uniformly from [low, high] using the
    fixed seed; the verdict is then tagged probabilistic.
    """
    nf = normal_form(e)
    if nf.is_zero():
        return ZeroResult(True, EXACT)
    if not nf.has_trig():
        return ZeroResult(False, EXACT)
    rng = random.Random(config.seed)
    symbols = sorted(nf.free_symbols())
    values = []
    for _ in range(config.points):
        bindings = {s: rng.uniform(config.low, config.high) for s in symbols}
        values.append(_eval_terms(nf.terms, bindings))
    scale = max(abs(v) for v in values) if values else 0.0
    tol = config.rel_tol * (1.0 + scale)
    return ZeroResult(all(abs(v) <= tol for v in values), PROBABILISTIC)


# --------------------------------------------------------------------------
# Exact division (used to normalize annihilator fields)


def _mono_to_vec(m, universe):
    exps = dict(m)
    return tuple(exps.get(a, 0) for a in universe)


def _vec_lead_key(vec):
    return (sum(vec), vec)


def nf_divide(num: NormalForm, den: NormalForm) -> NormalForm | None:
    """Exact division in the atom-polynomial ring; None when not divisible."""
    if den.is_zero():
        raise DivisionError("division by zero normal form")
    if num.is_zero():
        return _NF_ZERO
    if den.is_constant():
        return nf_scale(num, 1 / den.constant_value())
    universe = sorted(
        {a for m, _ in num.terms for a, _e in m} | {a for m, _ in den.terms for a, _e in m},
        key=_atom_sort_key,
    )
    den_vecs = [(_mono_to_vec(m, universe), c) for m, c in den.terms]
    den_lead_vec, den_lead_c = max(den_vecs, key=lambda t: _vec_lead_key(t[0]))
    rem = {_mono_to_vec(m, universe): c for m, c in num.terms}
    quotient: dict = {}
    while rem:
        lead_vec = max(rem, key=_vec_lead_key)
        lead_c = rem[lead_vec]
        ratio_vec = tuple(a - b for a, b in zip(lead_vec, den_lead_vec))
        if any(x < 0 for x in ratio_vec):
            return None
        ratio_c = lead_c / den_lead_c
        quotient[ratio_vec] = quotient.get(ratio_vec, Fraction(0)) + ratio_c
        for dv, dc in den_vecs:
            key = tuple(a + b for a, b in zip(ratio_vec, dv))
            value = rem.get(key, Fraction(0)) - ratio_c * dc
            if value == 0:
                rem.pop(key, None)
            else:
                rem[key] = value
    acc: dict = {}
    for vec, c in quotient.items():
        mono = tuple(
            sorted(((a, e) for a, e in zip(universe, vec) if e), key=lambda ae: _atom_sort_key(ae[0]))
        )
        _acc_add(acc, mono, c)
    return _freeze(acc)


# --------------------------------------------------------------------------
# Rendering (canonical, grammar-compatible)


def _frac_str(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _atom_str(atom) -> str:
    kind, payload = atom
    if kind == _SYM:
        return payload
    inner = _render_terms(payload)
    return ("sin(" if kind == _SIN else "cos(") + inner + ")"


def _mono_str(coeff_abs: Fraction, monomial, force_coeff: bool) -> str:
    pieces = []
    if force_coeff or coeff_abs != 1 or not monomial:
        pieces.append(_frac_str(coeff_abs))
    for atom, e in monomial:
        piece = _atom_str(atom)
        pieces.append(piece if e == 1 else f"{piece}^{e}")
    return "*".join(pieces)


def _render_terms(terms) -> str:
    if not terms:
        return "0"
    parts = []
    for i, (m, c) in enumerate(terms):
        if i == 0:
            if c < 0:
                # leading unary minus binds tighter than '^', so keep the
                # coefficient explicit: "-1*x^2" rather than "-x^2"
                parts.append("-" + _mono_str(-c, m, force_coeff=True))
            else:
                parts.append(_mono_str(c, m, force_coeff=False))
        else:
            sign = " - " if c < 0 else " + "
            parts.append(sign + _mono_str(abs(c), m, force_coeff=False))
    return "".join(parts)


def render(e: ScalarExpr) -> str:
    """Canonical textual form; re-parsing yields the same normal form."""
    return _render_terms(normal_form(e).terms)


# --------------------------------------------------------------------------
# Parsing


_RESERVED = {"sin", "cos"}


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._scan()
        self.index = 0

    def _scan(self):
        text = self.text
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch.isdigit():
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                self.tokens.append(("number", text[i:j], i))
                i = j
                continue
            if ch.isalpha():
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
                continue
            if ch in "+-*^()/":
                self.tokens.append((ch, ch, i))
                i += 1
                continue
            raise ParseError(f"unexpected character {ch!r}", i)
        self.tokens.append(("eof", "", len(text)))

    def peek(self):
        return self.tokens[self.index]

    def next(self):
        tok = self.tokens[self.index]
        self.index += 1
        return tok


class _Parser:
    def __init__(self, text: str, symbols):
        self.toks = _Tokenizer(text)
        self.symbols = frozenset(symbols)

    def parse(self) -> ScalarExpr:
        e = self._expr()
        kind, _val, pos = self.toks.peek()
        if kind != "eof":
            raise ParseError("unexpected trailing input", pos)
        return e

    def _expr(self) -> ScalarExpr:
        terms = [self._term()]
        while True:
            kind, _val, _pos = self.toks.peek()
            if kind == "+":
                self.toks.next()
                terms.append(self._term())
            elif kind == "-":
                self.toks.next()
                terms.append(Neg(self._term()))
            else:
                break
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def _term(self) -> ScalarExpr:
        factors = [self._factor()]
        while self.toks.peek()[0] == "*":
            self.toks.next()
            factors.append(self._factor())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def _factor(self) -> ScalarExpr:
        atom = self._atom()
        if self.toks.peek()[0] == "^":
            self.toks.next()
            kind, val, pos = self.toks.next()
            if kind != "number" or int(val) < 1:
                raise ParseError("exponent must be a positive integer", pos)
            return Power(atom, int(val))
        return atom

    def _atom(self) -> ScalarExpr:
        kind, val, pos = self.toks.next()
        if kind == "number":
            numerator = int(val)
            if self.toks.peek()[0] == "/":
                self.toks.next()
                dkind, dval, dpos = self.toks.next()
                if dkind != "number" or int(dval) == 0:
                    raise ParseError("denominator must be a positive integer", dpos)
                return Const(Fraction(numerator, int(dval)))
            return Const(Fraction(numerator))
        if kind == "ident":
            if val in _RESERVED:
                okind, _oval, opos = self.toks.next()
                if okind != "(":
                    raise ParseError(f"expected '(' after {val}", opos)
                arg = self._expr()
                ckind, _cval, cpos = self.toks.next()
                if ckind != ")":
                    raise ParseError("expected ')'", cpos)
                return Sin(arg) if val == "sin" else Cos(arg)
            if val not in self.symbols:
                raise UndeclaredSymbolError(val, pos)
            return Symbol(val)
        if kind == "(":
            e = self._expr()
            ckind, _cval, cpos = self.toks.next()
            if ckind != ")":
                raise ParseError("expected ')'", cpos)
            return e
        if kind == "-":
            return Neg(self._atom())
        raise ParseError(f"unexpected token {val!r}" if val else "unexpected end of input", pos)


def parse_expr(text: str, symbols: Iterable[str]) -> ScalarExpr:
    """Parse ``text`` against a symbol table of declared identifiers."""
    return _Parser(text, symbols).parse()


def parse_rational(text: str) -> Fraction:
    """Parse 'p' or 'p/q' (q > 0) into an exact rational."""
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        d = int(den)
        if d <= 0:
            raise ExprError(f"denominator must be positive in {text!r}")
        return Fraction(int(num), d)
    return Fraction(int(text))
