"""Exact rational helpers and sign decisions for products of rational powers.

Every quantitative decision in the package that involves logarithms of
rewards is reduced to comparing two products ``prod b_i ** e_i`` of positive
integers.  Equality is decided exactly on a pairwise coprime basis; strict
order first tries a directed-rounding interval filter and only then falls
back to evaluating both sides as big integers.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

from mpmath.ctx_iv import MPIntervalContext

Rational = Fraction

DEFAULT_START_PREC = 64
DEFAULT_MAX_PREC = 512
DEFAULT_MAX_BITS = 1 << 24


@dataclass(frozen=True)
class Budget:
    """Precision range of the interval filter and bit cap of the exact fallback."""

    start_prec: int = DEFAULT_START_PREC
    max_prec: int = DEFAULT_MAX_PREC
    max_bits: int = DEFAULT_MAX_BITS


_budget: contextvars.ContextVar[Budget] = contextvars.ContextVar("budget", default=Budget())


def current_budget() -> Budget:
    return _budget.get()


@contextlib.contextmanager
def budget(**changes):
    """Temporarily change the comparison budget for everything called inside the block."""
    token = _budget.set(replace(_budget.get(), **changes))
    try:
        yield _budget.get()
    finally:
        _budget.reset(token)


class InvalidOperandError(ValueError):
    """An operand is outside the domain of the operation (zero base, non-positive value)."""


class ResourceError(RuntimeError):
    """A configured size budget (bits, enumeration count) was exceeded."""


class Sign(enum.IntEnum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1

    @classmethod
    def of(cls, x) -> "Sign":
        return cls((x > 0) - (x < 0))

    def __neg__(self) -> "Sign":
        return Sign(-int(self))


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction; floats are refused."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if any(c in text for c in ".eE") or not text:
            raise ValueError(f"not a decimal-free rational: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class SuccinctProduct:
    """The positive rational ``prod base ** exponent`` over ``factors``."""

    factors: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        fs = tuple((int(b), int(e)) for b, e in self.factors)
        for b, e in fs:
            if b < 0:
                raise InvalidOperandError(f"negative base {b}")
            if b == 0 and e != 0:
                raise InvalidOperandError("base 0 with nonzero exponent")
        object.__setattr__(self, "factors", fs)

    @classmethod
    def parse(cls, text: str) -> "SuccinctProduct":
        """Parse ``"b^e*b^e*..."``; a bare ``b`` means exponent 1, ``"1"`` is the empty product."""
        factors = []
        for chunk in text.replace(" ", "").split("*"):
            if not chunk:
                raise ValueError(f"empty factor in {text!r}")
            base, _, exp = chunk.partition("^")
            factors.append((int(base), int(exp) if exp else 1))
        return cls(tuple(factors))

    def normalized(self) -> "SuccinctProduct":
        merged: dict[int, int] = {}
        for b, e in self.factors:
            if b == 1 or e == 0:
                continue
            merged[b] = merged.get(b, 0) + e
        return SuccinctProduct(tuple(sorted((b, e) for b, e in merged.items() if e != 0)))

    def value(self) -> Fraction:
        """Direct evaluation; only sensible for small operands (tests, oracles)."""
        num, den = 1, 1
        for b, e in self.factors:
            if e >= 0:
                num *= b**e
            else:
                den *= b ** (-e)
        return Fraction(num, den)

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        return "*".join(f"{b}^{e}" for b, e in self.factors)


def coprime_basis(numbers: Iterable[int]) -> list[int]:
    """Pairwise coprime integers > 1 such that every input is a product of their powers."""
    basis: list[int] = []
    todo = [n for n in numbers if n > 1]
    while todo:
        x = todo.pop()
        if x == 1:
            continue
        for i, b in enumerate(basis):
            g = gcd(x, b)
            if g > 1:
                del basis[i]
                # the multiset product drops by g on every split, so this terminates
                todo.extend(v for v in (b // g, g, x // g) if v > 1)
                break
        else:
            basis.append(x)
    return sorted(basis)


def reduce_ratio(lhs: SuccinctProduct, rhs: SuccinctProduct) -> list[tuple[int, int]]:
    """Express ``lhs / rhs`` over a coprime basis, dropping zero exponents.

    The result is empty exactly when ``lhs == rhs``.
    """
    terms = [(b, e) for b, e in lhs.normalized().factors]
    terms += [(b, -e) for b, e in rhs.normalized().factors]
    basis = coprime_basis(b for b, _ in terms)
    exponents = dict.fromkeys(basis, 0)
    for b, e in terms:
        rest = b
        for p in basis:
            k = 0
            while rest % p == 0:
                rest //= p
                k += 1
            if k:
                exponents[p] += k * e
        assert rest == 1
    return [(p, e) for p, e in exponents.items() if e != 0]


def interval_log_sign(terms: Sequence[tuple[int, int]], prec: int) -> Sign | None:
    """Sign of ``sum e * log(b)`` when a rigorous interval at ``prec`` bits excludes 0."""
    if not terms:
        return Sign.ZERO
    ctx = MPIntervalContext()
    ctx.prec = prec
    total = ctx.mpf(0)
    for b, e in terms:
        total += ctx.log(ctx.mpf(b)) * e
    if total.a > 0:
        return Sign.POSITIVE
    if total.b < 0:
        return Sign.NEGATIVE
    return None


def exact_log_sign(terms: Sequence[tuple[int, int]], max_bits: int = DEFAULT_MAX_BITS) -> Sign:
    """Sign of ``sum e * log(b)`` by evaluating both sides as integers."""
    pos = [(b, e) for b, e in terms if e > 0]
    neg = [(b, -e) for b, e in terms if e < 0]
    for side in (pos, neg):
        bits = sum(e * b.bit_length() for b, e in side)
        if bits > max_bits:
            raise ResourceError(f"exact comparison needs ~{bits} bits (budget {max_bits})")
    left = 1
    for b, e in pos:
        left *= pow(b, e)
    right = 1
    for b, e in neg:
        right *= pow(b, e)
    return Sign.of(left - right)


def csri_compare(
    lhs: SuccinctProduct,
    rhs: SuccinctProduct,
    *,
    start_prec: int | None = None,
    max_prec: int | None = None,
    max_bits: int | None = None,
) -> Ordering:
    """Exact order of two succinctly represented positive rationals."""
    b = _budget.get()
    start_prec = b.start_prec if start_prec is None else start_prec
    max_prec = b.max_prec if max_prec is None else max_prec
    max_bits = b.max_bits if max_bits is None else max_bits
    terms = reduce_ratio(lhs, rhs)
    if not terms:
        return Ordering.EQUAL
    prec = start_prec
    while prec <= max_prec:
        sign = interval_log_sign(terms, prec)
        if sign is not None:
            return Ordering(int(sign))
        prec *= 2
    return Ordering(int(exact_log_sign(terms, max_bits)))


def weighted_log_sign(terms: Iterable[tuple[Fraction, Fraction]], **budget) -> Sign:
    """Exact sign of ``sum w * log(v)`` for rational weights and positive rational values."""
    terms = [(as_rational(w), as_rational(v)) for w, v in terms]
    for _, v in terms:
        if v <= 0:
            raise InvalidOperandError(f"logarithm of non-positive value {v}")
    terms = [(w, v) for w, v in terms if w != 0 and v != 1]
    if not terms:
        return Sign.ZERO
    d = lcm(*(w.denominator for w, _ in terms))
    lhs, rhs = [], []
    for w, v in terms:
        k = w.numerator * (d // w.denominator)
        # k*log(p/q) = k*log p - k*log q
        lhs.append((v.numerator, k))
        rhs.append((v.denominator, k))
    return Sign(int(csri_compare(SuccinctProduct(tuple(lhs)), SuccinctProduct(tuple(rhs)), **budget)))


@dataclass(frozen=True)
class SymbolicLogValue:
    """``sum coefficient * log(reward)``; only ever compared, never evaluated."""

    terms: tuple[tuple[Fraction, Fraction], ...] = ()

    def __add__(self, other: "SymbolicLogValue") -> "SymbolicLogValue":
        return SymbolicLogValue(self.terms + other.terms)

    def __neg__(self) -> "SymbolicLogValue":
        return SymbolicLogValue(tuple((-c, r) for c, r in self.terms))

    def __sub__(self, other: "SymbolicLogValue") -> "SymbolicLogValue":
        return self + (-other)

    def sign(self, **budget) -> Sign:
        return weighted_log_sign(self.terms, **budget)

    def compare(self, other: "SymbolicLogValue", **budget) -> Sign:
        return (self - other).sign(**budget)

    def approx(self) -> float:
        """Floating-point estimate for reports only."""
        return float(sum(float(c) * math.log(r) for c, r in self.terms))
