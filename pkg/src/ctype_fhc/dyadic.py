"""Exact dyadic rationals and finitely supported vectors over them.

Every coefficient produced by the operators in this package is of the form
``m * 2**e`` with integer ``m`` and ``e``, so a mantissa/exponent pair is an
exact and cheap representation.  Nothing here ever rounds.
"""
from __future__ import annotations

import math
import sys
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Tuple, Union

from .errors import DyadicOverflow

EXP_MAX = (1 << 63) - 1
EXP_MIN = -EXP_MAX

Number = Union["Dyadic", int, Fraction]


def _new(m: int, e: int) -> "Dyadic":
    # m is already odd (or zero with e == 0)
    if e > EXP_MAX or e < EXP_MIN:
        raise DyadicOverflow(f"exponent {e} outside the 64-bit range")
    d = object.__new__(Dyadic)
    d.m = m
    d.e = e
    return d


def _normalized(m: int, e: int) -> "Dyadic":
    if not m:
        return ZERO
    tz = (m & -m).bit_length() - 1
    if tz:
        m >>= tz
        e += tz
    return _new(m, e)


class Dyadic:
    """The exact number ``m * 2**e``.

    Instances are normalized: ``m`` is odd, or ``m == e == 0`` for zero.
    Treat them as immutable values.
    """

    __slots__ = ("m", "e")

    def __init__(self, m: int = 0, e: int = 0):
        if not isinstance(m, int) or not isinstance(e, int):
            raise TypeError("mantissa and exponent must be integers")
        n = _normalized(m, e)
        self.m = n.m
        self.e = n.e

    # construction -----------------------------------------------------
    @staticmethod
    def pow2(k: int) -> "Dyadic":
        """Return ``2**k``."""
        return _new(1, k)

    @classmethod
    def coerce(cls, value: Number) -> "Dyadic":
        if type(value) is Dyadic:
            return value
        if isinstance(value, bool):
            raise TypeError("bool is not a dyadic value")
        if isinstance(value, int):
            return _normalized(value, 0)
        if isinstance(value, Fraction):
            return cls.from_fraction(value)
        raise TypeError(f"cannot interpret {value!r} as a dyadic rational")

    @staticmethod
    def from_fraction(q: Fraction) -> "Dyadic":
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} does not have a power-of-two denominator")
        return _normalized(q.numerator, -(den.bit_length() - 1))

    def to_fraction(self) -> Fraction:
        if self.e >= 0:
            return Fraction(self.m << self.e)
        return Fraction(self.m, 1 << -self.e)

    def __float__(self) -> float:
        m, e = self.m, self.e
        extra = abs(m).bit_length() - 64
        if extra > 0:
            m, e = m >> extra, e + extra
        try:
            return math.ldexp(float(m), e)
        except OverflowError:
            return math.copysign(math.inf, m)

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if type(other) is not Dyadic:
            try:
                other = Dyadic.coerce(other)
            except TypeError:
                return NotImplemented
        am, ae, bm, be = self.m, self.e, other.m, other.e
        if not am:
            return other
        if not bm:
            return self
        if ae == be:
            return _normalized(am + bm, ae)
        if ae < be:
            return _new(am + (bm << (be - ae)), ae)
        return _new((am << (ae - be)) + bm, be)

    __radd__ = __add__

    def __neg__(self) -> "Dyadic":
        if not self.m:
            return self
        return _new(-self.m, self.e)

    def __pos__(self) -> "Dyadic":
        return self

    def __abs__(self) -> "Dyadic":
        return self if self.m >= 0 else _new(-self.m, self.e)

    def __sub__(self, other):
        if type(other) is not Dyadic:
            try:
                other = Dyadic.coerce(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Dyadic.coerce(other) - self

    def __mul__(self, other):
        if type(other) is not Dyadic:
            try:
                other = Dyadic.coerce(other)
            except TypeError:
                return NotImplemented
        if not self.m or not other.m:
            return ZERO
        return _new(self.m * other.m, self.e + other.e)

    __rmul__ = __mul__

    def scale2(self, k: int) -> "Dyadic":
        """Return ``self * 2**k``."""
        if not self.m:
            return self
        return _new(self.m, self.e + k)

    def is_signed_pow2(self) -> bool:
        return self.m in (1, -1)

    def inverse(self) -> "Dyadic":
        """Reciprocal; only defined for ``±2**k``."""
        if not self.is_signed_pow2():
            raise ZeroDivisionError(f"{self} has no dyadic reciprocal")
        return _new(self.m, -self.e)

    def __truediv__(self, other):
        other = Dyadic.coerce(other)
        return self * other.inverse()

    def __pow__(self, k: int) -> "Dyadic":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        if not self.m:
            return ONE if k == 0 else ZERO
        return _new(self.m ** k, self.e * k)

    # comparisons ------------------------------------------------------
    def _cmp(self, other) -> int:
        if type(other) is not Dyadic:
            if isinstance(other, Fraction) and other.denominator & (other.denominator - 1):
                # m 2^e against p/r without reducing anything
                a, b = self.m * other.denominator, other.numerator
                if self.e >= 0:
                    a <<= self.e
                else:
                    b <<= -self.e
                return (a > b) - (a < b)
            other = Dyadic.coerce(other)
        am, ae, bm, be = self.m, self.e, other.m, other.e
        if ae < be:
            bm <<= be - ae
        elif ae > be:
            am <<= ae - be
        return (am > bm) - (am < bm)

    def __eq__(self, other) -> bool:
        if type(other) is Dyadic:
            return self.m == other.m and self.e == other.e
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.m == other.m and self.e == other.e

    def __lt__(self, other) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other) -> bool:
        return self._cmp(other) >= 0

    def __hash__(self) -> int:
        # same value as hash(Fraction(self)) without building the fraction
        if self.e >= 0:
            return hash(self.m << self.e)
        P = sys.hash_info.modulus
        h = hash(abs(self.m)) * pow(pow(2, -self.e, P), P - 2, P) % P
        h = h if self.m >= 0 else -h
        return -2 if h == -1 else h

    def __bool__(self) -> bool:
        return self.m != 0

    def sign(self) -> int:
        return (self.m > 0) - (self.m < 0)

    # presentation -----------------------------------------------------
    def __repr__(self) -> str:
        return f"Dyadic({int_to_dec(self.m)}, {self.e})"

    def __str__(self) -> str:
        if self.m.bit_length() + abs(self.e) > 8000:
            return f"{int_to_dec(self.m)}*2^{self.e}"
        return str(self.to_fraction())

    def to_json(self) -> dict:
        return {"m": int_to_dec(self.m), "e": self.e}

    @staticmethod
    def from_json(obj: Mapping) -> "Dyadic":
        return Dyadic(dec_to_int(obj["m"]), int(obj["e"]))


def int_to_dec(n: int) -> str:
    """Decimal string of n, splitting large values to stay under the interpreter's digit limit."""
    if n < 0:
        return "-" + int_to_dec(-n)
    if n.bit_length() < 8000:
        return str(n)
    half = int(n.bit_length() * 0.30103) // 2
    hi, lo = divmod(n, 10 ** half)
    return int_to_dec(hi) + int_to_dec(lo).zfill(half)


def dec_to_int(s: str) -> int:
    s = str(s).strip()
    if s.startswith("-"):
        return -dec_to_int(s[1:])
    if len(s) < 2000:
        return int(s)
    half = len(s) // 2
    return dec_to_int(s[:half]) * 10 ** (len(s) - half) + dec_to_int(s[half:])


def frac_to_json(q) -> dict:
    """Exact rational as decimal strings (safe for any size)."""
    q = Fraction(q)
    return {"num": int_to_dec(q.numerator), "den": int_to_dec(q.denominator)}


def frac_from_json(obj: Mapping) -> Fraction:
    return Fraction(dec_to_int(obj["num"]), dec_to_int(obj["den"]))


ZERO = object.__new__(Dyadic)
ZERO.m = 0
ZERO.e = 0
ONE = _new(1, 0)
HALF = _new(1, -1)
TWO = _new(1, 1)


def dy_add(a: Dyadic, b: Dyadic) -> Dyadic:
    return a + b


def dy_mul(a: Dyadic, b: Dyadic) -> Dyadic:
    return a * b


def normalize(a: Dyadic) -> Dyadic:
    """Canonical form of ``a`` (a no-op for values built by this module)."""
    return _normalized(a.m, a.e)


class FinVec:
    """A finitely supported vector of ℓ¹(ℕ) with dyadic coefficients.

    Zero coefficients are never stored.  Instances are immutable.
    """

    __slots__ = ("_d", "_keys")

    def __init__(self, entries: Union[Mapping[int, Number], Iterable[Tuple[int, Number]], None] = None):
        d = {}
        if entries is not None:
            pairs = entries.items() if isinstance(entries, Mapping) else entries
            for i, c in pairs:
                if not isinstance(i, int) or i < 0:
                    raise ValueError(f"index {i!r} is not a natural number")
                c = Dyadic.coerce(c)
                if i in d:
                    c = d[i] + c
                if c:
                    d[i] = c
                else:
                    d.pop(i, None)
        self._d = d
        self._keys = None

    @classmethod
    def _wrap(cls, d: dict) -> "FinVec":
        # d must already be free of zero values
        v = object.__new__(cls)
        v._d = d
        v._keys = None
        return v

    @classmethod
    def basis(cls, k: int, coef: Number = 1) -> "FinVec":
        return cls({k: coef})

    @classmethod
    def zero(cls) -> "FinVec":
        return cls._wrap({})

    # read access ------------------------------------------------------
    def keys(self) -> Tuple[int, ...]:
        if self._keys is None:
            self._keys = tuple(sorted(self._d))
        return self._keys

    def items(self) -> Iterator[Tuple[int, Dyadic]]:
        d = self._d
        for k in self.keys():
            yield k, d[k]

    def as_dict(self) -> dict:
        return dict(self._d)

    def __getitem__(self, k: int) -> Dyadic:
        return self._d.get(k, ZERO)

    def __contains__(self, k: int) -> bool:
        return k in self._d

    def __len__(self) -> int:
        return len(self._d)

    def __iter__(self):
        return iter(self.keys())

    def __bool__(self) -> bool:
        return bool(self._d)

    def is_zero(self) -> bool:
        return not self._d

    @property
    def support_max(self) -> int:
        """Largest stored index, or -1 for the zero vector."""
        return max(self._d) if self._d else -1

    @property
    def support_min(self) -> int:
        return min(self._d) if self._d else -1

    # linear structure -------------------------------------------------
    def __add__(self, other: "FinVec") -> "FinVec":
        if not isinstance(other, FinVec):
            return NotImplemented
        a, b = (self._d, other._d) if len(self._d) >= len(other._d) else (other._d, self._d)
        out = dict(a)
        for k, c in b.items():
            if k in out:
                s = out[k] + c
                if s:
                    out[k] = s
                else:
                    del out[k]
            else:
                out[k] = c
        return FinVec._wrap(out)

    def __neg__(self) -> "FinVec":
        return FinVec._wrap({k: -c for k, c in self._d.items()})

    def __sub__(self, other: "FinVec") -> "FinVec":
        if not isinstance(other, FinVec):
            return NotImplemented
        out = dict(self._d)
        for k, c in other._d.items():
            if k in out:
                s = out[k] - c
                if s:
                    out[k] = s
                else:
                    del out[k]
            else:
                out[k] = -c
        return FinVec._wrap(out)

    def scale(self, c: Number) -> "FinVec":
        c = Dyadic.coerce(c)
        if not c:
            return FinVec._wrap({})
        return FinVec._wrap({k: c * v for k, v in self._d.items()})

    def __mul__(self, c):
        try:
            return self.scale(c)
        except TypeError:
            return NotImplemented

    __rmul__ = __mul__

    def restrict(self, lo: int, hi: int) -> "FinVec":
        """Coordinates with index in ``[lo, hi)``."""
        return FinVec._wrap({k: c for k, c in self._d.items() if lo <= k < hi})

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinVec):
            return NotImplemented
        return self._d == other._d

    def __hash__(self) -> int:
        return hash(tuple(self.items()))

    # norms ------------------------------------------------------------
    def norm(self) -> Dyadic:
        return norm_l1(self)

    def dist(self, other: "FinVec") -> Dyadic:
        return dist_l1(self, other)

    # presentation -----------------------------------------------------
    def __repr__(self) -> str:
        inner = ", ".join(f"{k}: {c}" for k, c in self.items())
        return f"FinVec({{{inner}}})"

    def to_json(self) -> list:
        return [{"i": k, "m": int_to_dec(c.m), "e": c.e} for k, c in self.items()]

    @staticmethod
    def from_json(obj: Iterable[Mapping]) -> "FinVec":
        return FinVec((int(t["i"]), Dyadic(dec_to_int(t["m"]), int(t["e"]))) for t in obj)


def _abs_sum(values: Iterable[Dyadic]) -> Dyadic:
    # align once on the smallest exponent instead of pairwise additions
    vals = [v for v in values if v.m]
    if not vals:
        return ZERO
    e0 = min(v.e for v in vals)
    total = 0
    for v in vals:
        total += abs(v.m) << (v.e - e0)
    return _normalized(total, e0)


def norm_l1(x: FinVec) -> Dyadic:
    """Exact ℓ¹ norm."""
    return _abs_sum(x._d.values())


def dist_l1(x: FinVec, y: FinVec) -> Dyadic:
    """Exact ℓ¹ distance ``‖x - y‖``."""
    dx, dy = x._d, y._d
    diffs = []
    for k, c in dx.items():
        other = dy.get(k)
        diffs.append(c if other is None else c - other)
    for k, c in dy.items():
        if k not in dx:
            diffs.append(c)
    return _abs_sum(diffs)


# rational powers of two ---------------------------------------------------

def iroot(n: int, k: int) -> int:
    """Floor of the real k-th root of the non-negative integer n."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    x = 1 << -(-n.bit_length() // k)  # an upper bound
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


def pow2_le(value: Union[Dyadic, Fraction, int], exponent: Union[Fraction, int]) -> bool:
    """Decide ``value <= 2**exponent`` exactly, for a rational exponent."""
    exponent = Fraction(exponent)
    if isinstance(value, Dyadic):
        num, den_exp = value.m, value.e
        if num <= 0:
            return True
        # value = num * 2**den_exp
        a, c = exponent.numerator, exponent.denominator
        x = a - den_exp * c  # compare num**c with 2**x
        return _int_pow_le_pow2(num, c, x)
    q = Fraction(value)
    if q <= 0:
        return True
    a, c = exponent.numerator, exponent.denominator
    # (p/r)**c <= 2**a  <=>  p**c <= r**c * 2**a
    p, r = q.numerator, q.denominator
    if a >= 0:
        return p ** c <= (r ** c) << a
    return p ** c << (-a) <= r ** c


def _int_pow_le_pow2(num: int, c: int, x: int) -> bool:
    """``num**c <= 2**x`` for a positive integer num."""
    bl = num.bit_length()
    if num & (num - 1) == 0:
        return c * (bl - 1) <= x
    # strictly between 2**(bl-1) and 2**bl
    if c * bl <= x:
        return True
    if c * (bl - 1) >= x:
        return False
    return num ** c <= (1 << x)


def pow2_bounds(exponent: Union[Fraction, int], bits: int = 64) -> Tuple[Fraction, Fraction]:
    """Rational ``(lo, hi)`` with ``lo <= 2**exponent <= hi``.

    The bracket has relative width about ``2**-bits``; it collapses to a point
    when the exponent is an integer.
    """
    exponent = Fraction(exponent)
    a, c = exponent.numerator, exponent.denominator
    if c == 1:
        v = Fraction(2) ** a
        return v, v
    p = bits + max(0, -(a // c)) + 1
    n = 1 << (a + p * c)
    r = iroot(n, c)
    scale = Fraction(1, 1 << p)
    if r ** c == n:
        return r * scale, r * scale
    return r * scale, (r + 1) * scale
