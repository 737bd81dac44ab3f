"""Outward-rounded interval arithmetic on IEEE double endpoints.

Every operation returns an interval guaranteed to enclose the exact real
result for all selections of the operands.  Exactly representable results
of +, -, x, / are widened by one unit in the last place per endpoint;
results of libm functions (sin, cos, arccos, sqrt, exp) are widened by two
ulps to cover the library's rounding slack.  Endpoints may be infinite;
NaN endpoints are rejected at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import IntervalDivisionByZero, IntervalDomainError, ValidationError

_INF = math.inf

# libm results are trusted to be faithful within one ulp; two ulps of
# outward widening leaves a full ulp of slack on top of that.
_LIBM_ULPS = 2


def _down(x: float) -> float:
    """Next float below x (lower-endpoint outward rounding); -inf fixed."""
    if x == -_INF:
        return x
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    """Next float above x (upper-endpoint outward rounding); +inf fixed."""
    if x == _INF:
        return x
    return math.nextafter(x, _INF)


def _down_n(x: float, n: int) -> float:
    for _ in range(n):
        x = _down(x)
    return x


def _up_n(x: float, n: int) -> float:
    for _ in range(n):
        x = _up(x)
    return x


def _mul_ep(a: float, b: float) -> float:
    """Endpoint product with the convention 0 * inf = 0 (valid for ranges)."""
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] of extended reals with lo <= hi, no NaN."""

    lo: float
    hi: float = None  # type: ignore[assignment]  # None means degenerate

    def __post_init__(self):
        lo = float(self.lo)
        hi = lo if self.hi is None else float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValidationError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValidationError(f"interval endpoints out of order: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    # -- constructors -------------------------------------------------------

    @classmethod
    def around(cls, center: float, radius: float) -> "Interval":
        """Outward-rounded enclosure of [center - radius, center + radius]."""
        if radius < 0:
            raise ValidationError("radius must be nonnegative")
        return cls(_down(center - radius), _up(center + radius))

    # -- structure ----------------------------------------------------------

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            raise ValidationError("midpoint of an unbounded interval")
        return 0.5 * (self.lo + self.hi)

    def contains(self, other) -> bool:
        if isinstance(other, Interval):
            return self.lo <= other.lo and other.hi <= self.hi
        return self.lo <= other <= self.hi

    def strictly_contains(self, other) -> bool:
        if isinstance(other, Interval):
            return self.lo < other.lo and other.hi < self.hi
        return self.lo < other < self.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return Interval(_down(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        # a zero factor gives the exact product {0}; underflowed products of
        # nonzero factors still receive the one-ulp outward widening below
        if (self.lo == 0.0 and self.hi == 0.0) or (o.lo == 0.0 and o.hi == 0.0):
            return Interval(0.0)
        cands = (_mul_ep(self.lo, o.lo), _mul_ep(self.lo, o.hi),
                 _mul_ep(self.hi, o.lo), _mul_ep(self.hi, o.hi))
        return Interval(_down(min(cands)), _up(max(cands)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        if o.lo <= 0.0 <= o.hi:
            raise IntervalDivisionByZero(f"denominator {o!r} contains zero")
        cands = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_down(min(cands)), _up(max(cands)))

    def __rtruediv__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o / self


def _coerce(x):
    if isinstance(x, Interval):
        return x
    if isinstance(x, (int, float)):
        return Interval(float(x))
    return None


def as_interval(x) -> Interval:
    iv = _coerce(x)
    if iv is None:
        raise ValidationError(f"cannot interpret {x!r} as an interval")
    return iv


# -- enclosures of mathematical constants -----------------------------------

I_PI = Interval(_down(math.pi), _up(math.pi))
I_TAU = Interval(_down(math.tau), _up(math.tau))
I_HALF_PI = Interval(_down(math.pi / 2.0), _up(math.pi / 2.0))


# -- elementary functions ----------------------------------------------------

def iabs(x) -> Interval:
    """Enclosure of |x|."""
    x = as_interval(x)
    if x.lo >= 0.0:
        return x
    if x.hi <= 0.0:
        return -x
    return Interval(0.0, max(-x.lo, x.hi))


def isqr(x) -> Interval:
    """Tight enclosure of x^2 (sharper than x * x through zero)."""
    x = as_interval(x)
    a = iabs(x)
    return Interval(max(0.0, _down(_mul_ep(a.lo, a.lo))), _up(_mul_ep(a.hi, a.hi)))


def isqrt(x) -> Interval:
    x = as_interval(x)
    if x.lo < 0.0:
        raise IntervalDomainError(f"sqrt argument {x!r} extends below zero")
    return Interval(max(0.0, _down(math.sqrt(x.lo))), _up(math.sqrt(x.hi)))


def _safe_exp(t: float) -> float:
    try:
        return math.exp(t)
    except OverflowError:
        return _INF


def iexp(x) -> Interval:
    x = as_interval(x)
    return Interval(max(0.0, _down_n(_safe_exp(x.lo), _LIBM_ULPS)),
                    _up_n(_safe_exp(x.hi), _LIBM_ULPS))


def iarccos(x) -> Interval:
    x = as_interval(x)
    if x.lo < -1.0 or x.hi > 1.0:
        raise IntervalDomainError(f"arccos argument {x!r} not within [-1, 1]")
    # decreasing on [-1, 1]; the range floor 0 is exact
    return Interval(max(0.0, _down_n(math.acos(x.hi), _LIBM_ULPS)),
                    _up_n(math.acos(x.lo), _LIBM_ULPS))


def _has_critical_point(x: Interval, offset: Interval) -> bool:
    """Conservatively: does offset + 2 pi k meet x for some integer k?

    Outward rounding means the answer may be a spurious yes (which only
    widens the trig range to the exact extremum, staying sound) but never
    a wrong no.
    """
    a = (Interval(x.lo) - offset) / I_TAU
    b = (Interval(x.hi) - offset) / I_TAU
    return math.ceil(a.lo) <= math.floor(b.hi)


def _libm_point(fn, t: float) -> Interval:
    v = fn(t)
    return Interval(_down_n(v, _LIBM_ULPS), _up_n(v, _LIBM_ULPS))


def _trig_range(x: Interval, fn, max_offset: Interval, min_offset: Interval) -> Interval:
    if math.isinf(x.lo) or math.isinf(x.hi) or x.width >= math.tau:
        return Interval(-1.0, 1.0)
    lo_v = _libm_point(fn, x.lo)
    hi_v = _libm_point(fn, x.hi)
    res = lo_v.hull(hi_v)
    res_lo, res_hi = res.lo, res.hi
    if _has_critical_point(x, max_offset):
        res_hi = 1.0
    if _has_critical_point(x, min_offset):
        res_lo = -1.0
    return Interval(max(res_lo, -1.0), min(res_hi, 1.0))


def isin(x) -> Interval:
    return _trig_range(as_interval(x), math.sin, I_HALF_PI, -I_HALF_PI)


def icos(x) -> Interval:
    return _trig_range(as_interval(x), math.cos, Interval(0.0), I_PI)


# -- 2 x 2 interval matrices -------------------------------------------------

@dataclass(frozen=True)
class IMat2:
    """2 x 2 matrix of intervals; trace/det/product enclose all selections."""

    a11: Interval
    a12: Interval
    a21: Interval
    a22: Interval

    @classmethod
    def identity(cls) -> "IMat2":
        one, zero = Interval(1.0), Interval(0.0)
        return cls(one, zero, zero, one)

    @classmethod
    def from_rows(cls, rows) -> "IMat2":
        (a, b), (c, d) = rows
        return cls(as_interval(a), as_interval(b), as_interval(c), as_interval(d))

    def entries(self):
        return ((self.a11, self.a12), (self.a21, self.a22))

    def __matmul__(self, other: "IMat2") -> "IMat2":
        return IMat2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def mul_vec(self, vec):
        v1, v2 = (as_interval(v) for v in vec)
        return (self.a11 * v1 + self.a12 * v2, self.a21 * v1 + self.a22 * v2)

    def trace(self) -> Interval:
        return self.a11 + self.a22

    def det(self) -> Interval:
        return self.a11 * self.a22 - self.a12 * self.a21

    def contains_matrix(self, M) -> bool:
        """Entrywise containment of a plain 2 x 2 float matrix."""
        (m11, m12), (m21, m22) = M
        return (self.a11.contains(float(m11)) and self.a12.contains(float(m12))
                and self.a21.contains(float(m21)) and self.a22.contains(float(m22)))
