"""Exact sparse multivariate polynomials over the rationals.

Monomials are packed into a single Python integer: one 16-bit field per
variable, topped by a field holding the total degree.  With that layout the
integer order of two keys *is* the graded-lexicographic order, monomial
multiplication is integer addition, and a divisibility test is one
subtraction against a mask of guard bits.

Variables are :class:`ParamId` values.  The formal variable ``LAMBDA`` sorts
before every rate parameter, so it is the most significant variable under
graded-lex and characteristic-polynomial coefficients can be read off by
filtering on its exponent.

Coefficients are Python ``int`` whenever they are integral and
:class:`fractions.Fraction` otherwise.
"""

from __future__ import annotations

import heapq
import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple, Union

from .errors import MalformedInput, MissingVariable, NotDivisible

MODULUS = 2**61 - 1

_BITS = 16
_FIELD = (1 << _BITS) - 1
_MAX_DEG = 1 << (_BITS - 1)  # guard bit must stay clear


class ParamId(NamedTuple):
    """Rate parameter ``a_{target,source}``; ``target == 0`` is a leak."""

    target: int
    source: int

    @property
    def name(self) -> str:
        if self.target < 0:
            return "lam"
        return f"a{self.target}_{self.source}"

    @property
    def is_leak(self) -> bool:
        return self.target == 0

    def __str__(self) -> str:
        return self.name


#: Formal variable of characteristic polynomials.
LAMBDA = ParamId(-1, 0)

Number = Union[int, Fraction]


class _Layout:
    __slots__ = ("gens", "index", "shifts", "dshift", "high")

    def __init__(self, gens: tuple):
        n = len(gens)
        self.gens = gens
        self.index = {v: i for i, v in enumerate(gens)}
        self.shifts = tuple((n - 1 - i) * _BITS for i in range(n))
        self.dshift = n * _BITS
        guard = 1 << (_BITS - 1)
        self.high = sum(guard << s for s in self.shifts) | (guard << self.dshift)

    def pack(self, exps) -> int:
        key = sum(exps) << self.dshift
        for e, s in zip(exps, self.shifts):
            key |= e << s
        return key

    def unpack(self, key: int) -> tuple:
        return tuple((key >> s) & _FIELD for s in self.shifts)

    def degree(self, key: int) -> int:
        return key >> self.dshift


@lru_cache(maxsize=None)
def _layout(gens: tuple) -> _Layout:
    return _Layout(gens)


_EMPTY = _layout(())


def _norm(c):
    if c.__class__ is Fraction and c.denominator == 1:
        return c.numerator
    return c


def _div(a, b):
    if a.__class__ is int and b.__class__ is int:
        q, r = divmod(a, b)
        if not r:
            return q
    return _norm(Fraction(a) / b)


def _clean(terms: dict) -> dict:
    return {k: _norm(c) for k, c in terms.items() if c}


def _merged_layout(layouts) -> _Layout:
    gens = set()
    for lay in layouts:
        gens.update(lay.gens)
    return _layout(tuple(sorted(gens)))


def _remap(terms: dict, src: _Layout, dst: _Layout) -> dict:
    if src is dst or not src.gens:
        return terms
    pos = [dst.index[v] for v in src.gens]
    width = len(dst.gens)
    out = {}
    for key, c in terms.items():
        exps = [0] * width
        for p, e in zip(pos, src.unpack(key)):
            exps[p] += e
        out[dst.pack(exps)] = c
    return out


class SparsePoly:
    """Immutable multivariate polynomial with rational coefficients.

    Build polynomials from :meth:`var` and :meth:`const` (or :func:`parse_poly`)
    and combine them with the usual operators; ints and Fractions coerce.

    >>> x, y = SparsePoly.var(ParamId(1, 2)), SparsePoly.var(ParamId(1, 3))
    >>> str((x + y) * (x - y))
    'a1_2^2 - a1_3^2'
    """

    __slots__ = ("_lay", "_terms", "_hash")

    def __init__(self, terms: Mapping | None = None):
        # public form: {((var, exp), ...): coeff}
        self._hash = None
        if not terms:
            self._lay, self._terms = _EMPTY, {}
            return
        gens = sorted({v for mono in terms for v, e in mono if e})
        lay = _layout(tuple(gens))
        out: dict = {}
        for mono, c in terms.items():
            exps = [0] * len(gens)
            for v, e in mono:
                if e < 0:
                    raise ValueError("negative exponent")
                if e:
                    exps[lay.index[v]] += e
            if sum(exps) >= _MAX_DEG:
                raise OverflowError("total degree exceeds packed-monomial capacity")
            k = lay.pack(exps)
            out[k] = out.get(k, 0) + (c if isinstance(c, int) else Fraction(c))
        self._lay, self._terms = lay, _clean(out)

    @classmethod
    def _new(cls, lay: _Layout, terms: dict) -> "SparsePoly":
        p = object.__new__(cls)
        p._lay, p._terms, p._hash = lay, terms, None
        return p

    @classmethod
    def var(cls, v: ParamId) -> "SparsePoly":
        lay = _layout((v,))
        return cls._new(lay, {lay.pack((1,)): 1})

    @classmethod
    def const(cls, c: Number) -> "SparsePoly":
        c = _norm(c)
        return cls._new(_EMPTY, {0: c} if c else {})

    @classmethod
    def zero(cls) -> "SparsePoly":
        return cls._new(_EMPTY, {})

    @classmethod
    def one(cls) -> "SparsePoly":
        return cls._new(_EMPTY, {0: 1})

    # -- inspection -----------------------------------------------------------

    @property
    def gens(self) -> tuple:
        """Variable table (may include variables absent from every term)."""
        return self._lay.gens

    def variables(self) -> tuple:
        """Variables that actually occur, in canonical order."""
        lay = self._lay
        used = [False] * len(lay.gens)
        for key in self._terms:
            for i, e in enumerate(lay.unpack(key)):
                if e:
                    used[i] = True
        return tuple(v for v, u in zip(lay.gens, used) if u)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def is_constant(self) -> bool:
        return not self._terms or set(self._terms) == {0}

    def constant_value(self) -> Number:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self._terms.get(0, 0)

    def total_degree(self) -> int:
        if not self._terms:
            return -1
        return self._lay.degree(max(self._terms))

    def degree_in(self, v: ParamId) -> int:
        i = self._lay.index.get(v)
        if i is None or not self._terms:
            return 0
        s = self._lay.shifts[i]
        return max((k >> s) & _FIELD for k in self._terms)

    def terms(self) -> list:
        """``[(((var, exp), ...), coeff), ...]`` in descending graded-lex order."""
        lay = self._lay
        out = []
        for key in sorted(self._terms, reverse=True):
            mono = tuple((v, e) for v, e in zip(lay.gens, lay.unpack(key)) if e)
            out.append((mono, self._terms[key]))
        return out

    def as_dict(self) -> dict:
        return dict(self.terms())

    def leading_term(self):
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        return self.terms()[0]

    def leading_coefficient(self) -> Number:
        return self._terms[max(self._terms)] if self._terms else 0

    def coefficients(self) -> list:
        return list(self._terms.values())

    def is_multilinear(self) -> bool:
        return all(e <= 1 for key in self._terms for e in self._lay.unpack(key))

    # -- arithmetic -----------------------------------------------------------

    def _align(self, other: "SparsePoly"):
        a, b = self._lay, other._lay
        if a is b or not b.gens:
            return a, self._terms, other._terms
        if not a.gens:
            return b, self._terms, other._terms
        lay = _merged_layout((a, b))
        return lay, _remap(self._terms, a, lay), _remap(other._terms, b, lay)

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        lay, a, b = self._align(other)
        if len(a) < len(b):
            a, b = b, a
        out = dict(a)
        for k, c in b.items():
            s = out.get(k, 0) + c
            if s:
                out[k] = _norm(s)
            else:
                out.pop(k, None)
        return SparsePoly._new(lay, out)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly._new(self._lay, {k: -c for k, c in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return SparsePoly.zero()
        lay, a, b = self._align(other)
        if lay.degree(max(a)) + lay.degree(max(b)) >= _MAX_DEG:
            raise OverflowError("total degree exceeds packed-monomial capacity")
        out: dict = {}
        get = out.get
        for ka, ca in a.items():
            for kb, cb in b.items():
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
        return SparsePoly._new(lay, _clean(out))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            raise ValueError("exponent must be a non-negative integer")
        result, base = SparsePoly.one(), self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def scale(self, c: Number) -> "SparsePoly":
        c = _norm(c)
        if not c:
            return SparsePoly.zero()
        return SparsePoly._new(self._lay, _clean({k: v * c for k, v in self._terms.items()}))

    # -- comparison -----------------------------------------------------------

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if len(self._terms) != len(other._terms):
            return False
        _, a, b = self._align(other)
        return a == b

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms()))
        return self._hash

    def __repr__(self) -> str:
        return f"SparsePoly({str(self)!r})"

    def __str__(self) -> str:
        return to_text(self)


def _coerce(x):
    if isinstance(x, SparsePoly):
        return x
    if isinstance(x, (int, Fraction)):
        return SparsePoly.const(x)
    return NotImplemented


def var(v: ParamId) -> SparsePoly:
    return SparsePoly.var(v)


def const(c: Number) -> SparsePoly:
    return SparsePoly.const(c)


def arith(op: str, f: SparsePoly, g) -> SparsePoly:
    """Dispatch ``add``/``sub``/``mul``/``neg``/``pow`` by name."""
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    if op == "neg":
        return -f
    if op == "pow":
        return f**g
    raise ValueError(f"unknown operation {op!r}")


def poly_sum(polys: Iterable[SparsePoly]) -> SparsePoly:
    polys = [p for p in polys if p._terms]
    if not polys:
        return SparsePoly.zero()
    lay = _merged_layout(p._lay for p in polys)
    out: dict = {}
    get = out.get
    for p in polys:
        for k, c in _remap(p._terms, p._lay, lay).items():
            out[k] = get(k, 0) + c
    return SparsePoly._new(lay, _clean(out))


def dot(fs, gs) -> SparsePoly:
    """``sum(f * g)`` accumulated into one term map (zero pairs skipped)."""
    pairs = [(f, g) for f, g in zip(fs, gs) if f._terms and g._terms]
    if not pairs:
        return SparsePoly.zero()
    lay = pairs[0][0]._lay
    if any(f._lay is not lay or g._lay is not lay for f, g in pairs):
        lay = _merged_layout([f._lay for f, _ in pairs] + [g._lay for _, g in pairs])
    out: dict = {}
    get = out.get
    for f, g in pairs:
        a = _remap(f._terms, f._lay, lay)
        b = _remap(g._terms, g._lay, lay)
        if lay.degree(max(a)) + lay.degree(max(b)) >= _MAX_DEG:
            raise OverflowError("total degree exceeds packed-monomial capacity")
        for ka, ca in a.items():
            for kb, cb in b.items():
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
    return SparsePoly._new(lay, _clean(out))


def aligned(polys: Iterable[SparsePoly]) -> list:
    """Re-express polynomials over one shared variable table."""
    polys = list(polys)
    lay = _merged_layout(p._lay for p in polys)
    return [p if p._lay is lay or not p._terms else SparsePoly._new(lay, _remap(p._terms, p._lay, lay))
            for p in polys]


def product(polys: Iterable[SparsePoly]) -> SparsePoly:
    result = SparsePoly.one()
    for p in polys:
        result = result * p
    return result


# -- division -----------------------------------------------------------------


def exact_divide(f: SparsePoly, g: SparsePoly) -> SparsePoly:
    """Return ``q`` with ``f == q * g``; raise :class:`NotDivisible` otherwise.

    Long division against the graded-lex leading term of ``g``.  For a single
    divisor the remainder is zero exactly when ``g`` divides ``f``.
    """
    if not g._terms:
        raise ZeroDivisionError("division by the zero polynomial")
    if not f._terms:
        return SparsePoly.zero()
    lay, fa, ga = f._align(g)
    high = lay.high
    lead = max(ga)
    lead_c = ga[lead]
    rest = [(k, c) for k, c in ga.items() if k != lead]
    rem = dict(fa)
    heap = [-k for k in rem]
    heapq.heapify(heap)
    quot: dict = {}
    while heap:
        k = -heapq.heappop(heap)
        c = rem.pop(k, 0)
        if not c:
            continue
        d = (k | high) - lead
        if d & high != high:
            raise NotDivisible(f"{g} does not divide {f}")
        qk = d ^ high
        qc = _div(c, lead_c)
        quot[qk] = qc
        for kg, cg in rest:
            kk = qk + kg
            old = rem.get(kk)
            v = (old or 0) - qc * cg
            if v:
                if old is None:
                    heapq.heappush(heap, -kk)
                rem[kk] = v
            elif old is not None:
                del rem[kk]
    return SparsePoly._new(lay, _clean(quot))


def divides(g: SparsePoly, f: SparsePoly) -> bool:
    try:
        exact_divide(f, g)
    except NotDivisible:
        return False
    return True


def multiplicity(f: SparsePoly, factor: SparsePoly) -> float | int:
    """Largest ``p`` with ``factor**p | f``; ``math.inf`` when ``f`` is zero."""
    if factor.is_constant():
        raise ValueError("factor must be nonconstant")
    if f.is_zero():
        return math.inf
    p = 0
    while True:
        try:
            f = exact_divide(f, factor)
        except NotDivisible:
            return p
        p += 1


# -- calculus and substitution ------------------------------------------------


def partial_derivative(f: SparsePoly, v: ParamId) -> SparsePoly:
    lay = f._lay
    i = lay.index.get(v)
    if i is None:
        return SparsePoly.zero()
    s = lay.shifts[i]
    step = (1 << s) + (1 << lay.dshift)
    out = {}
    for k, c in f._terms.items():
        e = (k >> s) & _FIELD
        if e:
            out[k - step] = c * e
    return SparsePoly._new(lay, out)


def multilinear_partial(f: SparsePoly, v: ParamId) -> SparsePoly:
    """Keep the terms divisible by ``v`` and set ``v = 1`` in them.

    Equals the formal partial derivative whenever ``f`` has degree at most 1
    in ``v``.
    """
    lay = f._lay
    i = lay.index.get(v)
    if i is None:
        return SparsePoly.zero()
    s = lay.shifts[i]
    out = {}
    for k, c in f._terms.items():
        e = (k >> s) & _FIELD
        if e:
            out[k - e * ((1 << s) + (1 << lay.dshift))] = c
    return SparsePoly._new(lay, _clean(out))


def substitute_zero(f: SparsePoly, vs: Iterable[ParamId]) -> SparsePoly:
    lay = f._lay
    mask = 0
    for v in vs:
        i = lay.index.get(v)
        if i is not None:
            mask |= _FIELD << lay.shifts[i]
    if not mask:
        return f
    return SparsePoly._new(lay, {k: c for k, c in f._terms.items() if not k & mask})


def rename(f: SparsePoly, mapping: Mapping[ParamId, ParamId]) -> SparsePoly:
    """Simultaneously substitute variables for variables (e.g. ``a1_3 -> a1_2``)."""
    lay = f._lay
    new_gens = tuple(sorted({mapping.get(v, v) for v in lay.gens}))
    dst = _layout(new_gens)
    pos = [dst.index[mapping.get(v, v)] for v in lay.gens]
    out: dict = {}
    for key, c in f._terms.items():
        exps = [0] * len(new_gens)
        for p, e in zip(pos, lay.unpack(key)):
            exps[p] += e
        k = dst.pack(exps)
        out[k] = out.get(k, 0) + c
    return SparsePoly._new(dst, _clean(out))


def coefficient_of_power(f: SparsePoly, v: ParamId, k: int) -> SparsePoly:
    """Coefficient of ``v**k`` when ``f`` is viewed as a polynomial in ``v``."""
    lay = f._lay
    i = lay.index.get(v)
    if i is None:
        return f if k == 0 else SparsePoly.zero()
    s = lay.shifts[i]
    drop = k * ((1 << s) + (1 << lay.dshift))
    return SparsePoly._new(
        lay, {key - drop: c for key, c in f._terms.items() if (key >> s) & _FIELD == k}
    )


def primitive(f: SparsePoly) -> SparsePoly:
    """Integer coefficients, content 1, positive leading coefficient."""
    if f.is_zero():
        return f
    coeffs = [Fraction(c) for c in f._terms.values()]
    den = math.lcm(*(c.denominator for c in coeffs))
    nums = [int(c * den) for c in coeffs]
    g = math.gcd(*nums)
    if f.leading_coefficient() < 0:
        g = -g
    return f.scale(Fraction(den, g))


def same_up_to_scalar(f: SparsePoly, g: SparsePoly) -> bool:
    """True when ``f = c * g`` for a nonzero rational ``c`` (checked both ways)."""
    if f.is_zero() or g.is_zero():
        return f.is_zero() and g.is_zero()
    try:
        q1 = exact_divide(f, g)
        q2 = exact_divide(g, f)
    except NotDivisible:
        return False
    return q1.is_constant() and q2.is_constant()


def elementary_symmetric(xs) -> list:
    """``[E_0, E_1, ..., E_m]`` of the given polynomials."""
    es = [SparsePoly.one()]
    for x in xs:
        x = _coerce(x)
        es = [es[0]] + [es[j] + x * es[j - 1] for j in range(1, len(es))] + [x * es[-1]]
    return es


# -- evaluation -----------------------------------------------------------------


@dataclass(frozen=True)
class FieldPoint:
    """Assignment of variables to elements of the prime field ``Z/MODULUS``."""

    values: Mapping[ParamId, int]
    modulus: int = MODULUS

    def __post_init__(self):
        for v, x in self.values.items():
            if not 0 <= x < self.modulus:
                raise ValueError(f"value of {v} outside [0, modulus)")

    @classmethod
    def random(cls, variables: Iterable[ParamId], rng: random.Random, modulus: int = MODULUS):
        return cls({v: rng.randrange(modulus) for v in variables}, modulus)


def evaluate(f: SparsePoly, point, modulus: int | None = None):
    """Evaluate at a :class:`FieldPoint` or a plain ``{var: number}`` mapping.

    With a field point (or an explicit ``modulus``) the result is an integer in
    ``[0, modulus)``; otherwise arithmetic follows the assignment's number type.
    """
    if isinstance(point, FieldPoint):
        modulus = point.modulus
        point = point.values
    lay = f._lay
    vals = []
    for v in lay.gens:
        x = point.get(v)
        if x is None:
            if f.degree_in(v):
                raise MissingVariable(v.name)
            x = 0
        vals.append(x)
    if modulus is not None:
        p = modulus
        vals = [_to_field(x, p) for x in vals]
        total = 0
        for key, c in f._terms.items():
            t = _to_field(c, p)
            for x, e in zip(vals, lay.unpack(key)):
                if e:
                    t = t * pow(x, e, p) % p
            total += t
        return total % p
    total = 0
    for key, c in f._terms.items():
        t = c
        for x, e in zip(vals, lay.unpack(key)):
            if e:
                t = t * x**e
        total = total + t
    return _norm(total) if isinstance(total, Fraction) else total


def _to_field(x, p: int) -> int:
    if isinstance(x, Fraction):
        return x.numerator % p * pow(x.denominator, -1, p) % p
    return int(x) % p


# -- text form ----------------------------------------------------------------


def _coeff_text(c) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def to_text(f: SparsePoly) -> str:
    """Canonical text: descending graded-lex, e.g. ``a1_2^2 - 3*a0_1 + 1/2``."""
    if f.is_zero():
        return "0"
    parts = []
    for mono, c in f.terms():
        mono_txt = "*".join(v.name if e == 1 else f"{v.name}^{e}" for v, e in mono)
        mag = abs(c)
        if not mono_txt:
            body = _coeff_text(mag)
        elif mag == 1:
            body = mono_txt
        else:
            body = f"{_coeff_text(mag)}*{mono_txt}"
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)


_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|(a\d+_\d+|lam)|(\*\*|[-+*^()]))")
_NAME = re.compile(r"a(\d+)_(\d+)")


def parse_var(name: str) -> ParamId:
    if name == "lam":
        return LAMBDA
    m = _NAME.fullmatch(name)
    if not m:
        raise MalformedInput(f"not a variable name: {name!r}")
    return ParamId(int(m.group(1)), int(m.group(2)))


def parse_poly(text: str) -> SparsePoly:
    """Parse the canonical text form (and anything built from ``+ - * ^ ()``)."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise MalformedInput(f"unexpected character at position {pos} in {text!r}")
        num, name, op = m.groups()
        if num is not None:
            tokens.append(("num", Fraction(num)))
        elif name is not None:
            tokens.append(("var", parse_var(name)))
        else:
            tokens.append(("op", "^" if op == "**" else op))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    parser = _Parser(tokens, text)
    result = parser.expr()
    if parser.i != len(tokens):
        raise MalformedInput(f"trailing input in {text!r}")
    return result


class _Parser:
    def __init__(self, tokens, text):
        self.tokens, self.text, self.i = tokens, text, 0

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def _take(self):
        tok = self._peek()
        if tok[0] is None:
            raise MalformedInput(f"unexpected end of input in {self.text!r}")
        self.i += 1
        return tok

    def expr(self):
        sign = 1
        if self._peek() in (("op", "-"), ("op", "+")):
            sign = -1 if self._take()[1] == "-" else 1
        total = self.term().scale(sign)
        while self._peek() in (("op", "-"), ("op", "+")):
            op = self._take()[1]
            t = self.term()
            total = total - t if op == "-" else total + t
        return total

    def term(self):
        result = self.factor()
        while self._peek() == ("op", "*"):
            self._take()
            result = result * self.factor()
        return result

    def factor(self):
        kind, val = self._take()
        if kind == "num":
            base = SparsePoly.const(val)
        elif kind == "var":
            base = SparsePoly.var(val)
        elif val == "(":
            base = self.expr()
            if self._take() != ("op", ")"):
                raise MalformedInput(f"unbalanced parentheses in {self.text!r}")
        else:
            raise MalformedInput(f"unexpected {val!r} in {self.text!r}")
        if self._peek() == ("op", "^"):
            self._take()
            kind, e = self._take()
            if kind != "num" or Fraction(e).denominator != 1:
                raise MalformedInput(f"exponent must be an integer in {self.text!r}")
            base = base ** int(e)
        return base


def pairwise_differences(vs: Iterable[ParamId]) -> list:
    return [SparsePoly.var(a) - SparsePoly.var(b) for a, b in combinations(sorted(vs), 2)]
