"""
Numeric substrate shared by every module.

A scalar is either an exact ``Fraction`` (always in lowest terms) or an
``Enclosure``: a closed interval carried by an mpmath interval context at a
fixed precision. Arithmetic between the two promotes to ``Enclosure`` and
rounds outward, so every enclosure contains the true value.
"""
from __future__ import annotations

from fractions import Fraction

from mpmath.ctx_iv import MPIntervalContext

from src.errors import UndecidableSign

DEFAULT_BITS = 256

_contexts: dict[int, MPIntervalContext] = {}


def interval_context(bits: int) -> MPIntervalContext:
    ctx = _contexts.get(bits)
    if ctx is None:
        ctx = MPIntervalContext()
        ctx.prec = bits
        _contexts[bits] = ctx
    return ctx


def _raw_to_fraction(raw) -> Fraction:
    # raw mpf tuple: (sign, mantissa, exponent, bitcount)
    sign, man, exp, bc = raw
    if not man:
        if bc == 0 and exp == 0:
            return Fraction(0)
        raise ArithmeticError("non-finite interval endpoint")
    value = Fraction(int(man) * 2**exp) if exp >= 0 else Fraction(int(man), 2 ** (-exp))
    return -value if sign else value


class Enclosure:
    """Outward-rounded interval enclosing a real number."""

    __slots__ = ("iv", "bits")

    def __init__(self, iv, bits: int = DEFAULT_BITS):
        self.iv = iv
        self.bits = bits

    @classmethod
    def from_fraction(cls, q, bits: int = DEFAULT_BITS) -> "Enclosure":
        q = Fraction(q)
        ctx = interval_context(bits)
        return cls(ctx.mpf(q.numerator) / ctx.mpf(q.denominator), bits)

    @classmethod
    def from_bounds(cls, lo, hi, bits: int = DEFAULT_BITS) -> "Enclosure":
        ctx = interval_context(bits)
        a = cls.from_fraction(lo, bits).iv._mpi_[0]
        b = cls.from_fraction(hi, bits).iv._mpi_[1]
        return cls(ctx.make_mpf((a, b)), bits)

    @classmethod
    def from_decimal(cls, text: str, bits: int = DEFAULT_BITS) -> "Enclosure":
        return cls(interval_context(bits).mpf(str(text)), bits)

    def bounds(self) -> tuple[Fraction, Fraction]:
        lo, hi = self.iv._mpi_
        return _raw_to_fraction(lo), _raw_to_fraction(hi)

    @property
    def lower(self) -> Fraction:
        return self.bounds()[0]

    @property
    def upper(self) -> Fraction:
        return self.bounds()[1]

    def midpoint(self) -> Fraction:
        lo, hi = self.bounds()
        return (lo + hi) / 2

    def radius(self) -> Fraction:
        lo, hi = self.bounds()
        return (hi - lo) / 2

    def contains(self, value) -> bool:
        lo, hi = self.bounds()
        if isinstance(value, Enclosure):
            vlo, vhi = value.bounds()
            return lo <= vlo and vhi <= hi
        return lo <= Fraction(value) <= hi

    def _lift(self, other):
        if isinstance(other, Enclosure):
            if other.bits == self.bits:
                return other
            return Enclosure(interval_context(self.bits).make_mpf(other.iv._mpi_), self.bits)
        if isinstance(other, (int, Fraction)):
            return Enclosure.from_fraction(other, self.bits)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Enclosure(self.iv + o.iv, self.bits)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Enclosure(self.iv - o.iv, self.bits)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Enclosure(o.iv - self.iv, self.bits)

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return Enclosure(self.iv * o.iv, self.bits)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        if o.straddles_zero():
            raise UndecidableSign("division by an enclosure containing zero", value=o)
        return Enclosure(self.iv / o.iv, self.bits)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return Enclosure(-self.iv, self.bits)

    def __pos__(self):
        return self

    def __abs__(self):
        return Enclosure(abs(self.iv), self.bits)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return 1 / (self ** (-n))
        return Enclosure(self.iv**n, self.bits)

    def straddles_zero(self) -> bool:
        lo, hi = self.bounds()
        return lo <= 0 <= hi

    def _other_bounds(self, other):
        if isinstance(other, Enclosure):
            return other.bounds()
        q = Fraction(other)
        return q, q

    def same_bounds(self, other) -> bool:
        """Identical endpoints, i.e. both sides came out of the same evaluation."""
        return isinstance(other, Enclosure) and self.bounds() == other.bounds()

    def __lt__(self, other):
        if self.same_bounds(other):
            return False
        lo, hi = self.bounds()
        olo, ohi = self._other_bounds(other)
        if hi < olo:
            return True
        if lo >= ohi:
            return False
        raise UndecidableSign("comparison of overlapping enclosures", value=self, other=other)

    def __le__(self, other):
        if self.same_bounds(other):
            return True
        lo, hi = self.bounds()
        olo, ohi = self._other_bounds(other)
        if hi <= olo:
            return True
        if lo > ohi:
            return False
        raise UndecidableSign("comparison of overlapping enclosures", value=self, other=other)

    def __gt__(self, other):
        if self.same_bounds(other):
            return False
        lo, hi = self.bounds()
        olo, ohi = self._other_bounds(other)
        if lo > ohi:
            return True
        if hi <= olo:
            return False
        raise UndecidableSign("comparison of overlapping enclosures", value=self, other=other)

    def __ge__(self, other):
        if self.same_bounds(other):
            return True
        lo, hi = self.bounds()
        olo, ohi = self._other_bounds(other)
        if lo >= ohi:
            return True
        if hi < olo:
            return False
        raise UndecidableSign("comparison of overlapping enclosures", value=self, other=other)

    def __eq__(self, other):
        if not isinstance(other, (Enclosure, int, Fraction)):
            return NotImplemented
        if self.same_bounds(other):
            return True
        lo, hi = self.bounds()
        olo, ohi = self._other_bounds(other)
        if hi < olo or ohi < lo:
            return False
        if lo == hi == olo == ohi:
            return True
        raise UndecidableSign("equality of overlapping enclosures", value=self, other=other)

    def __hash__(self):
        return hash(self.bounds())

    def __float__(self):
        return float(self.midpoint())

    def __repr__(self):
        return f"Enclosure({float(self.midpoint()):.17g} ± {float(self.radius()):.3e})"


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def sign(x) -> int:
    if isinstance(x, Enclosure):
        lo, hi = x.bounds()
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if lo == hi == 0:
            return 0
        raise UndecidableSign("sign of an enclosure containing zero", value=x)
    return (x > 0) - (x < 0)


def radius(x) -> Fraction:
    if isinstance(x, Enclosure):
        return x.radius()
    return Fraction(0)


def to_fraction(x) -> Fraction:
    if isinstance(x, Enclosure):
        return x.midpoint()
    return Fraction(x)


def lower_bound(x) -> Fraction:
    return x.lower if isinstance(x, Enclosure) else Fraction(x)


def upper_bound(x) -> Fraction:
    return x.upper if isinstance(x, Enclosure) else Fraction(x)


def may_be_zero(x) -> bool:
    """Exactly zero, or an enclosure that cannot rule zero out."""
    if isinstance(x, Enclosure):
        return x.straddles_zero()
    return x == 0


def to_float(x) -> float:
    return float(x)


def certainly_distinct(a, b) -> bool:
    """True when a and b are provably different values."""
    if isinstance(a, Enclosure) or isinstance(b, Enclosure):
        alo, ahi = a.bounds() if isinstance(a, Enclosure) else (Fraction(a), Fraction(a))
        blo, bhi = b.bounds() if isinstance(b, Enclosure) else (Fraction(b), Fraction(b))
        return ahi < blo or bhi < alo
    return a != b


def parse_scalar(value, bits: int | None = None):
    """
    Parses a scalar literal: int, "p/q", decimal string, or a high-precision
    literal {"dec": "...", "bits": n}.
    """
    if isinstance(value, Enclosure):
        return value
    if isinstance(value, dict):
        if "dec" not in value:
            raise ValueError(f"high-precision literal needs a 'dec' field: {value}")
        return Enclosure.from_decimal(value["dec"], int(value.get("bits", bits or DEFAULT_BITS)))
    if isinstance(value, bool):
        raise ValueError(f"not a scalar: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"not a scalar: {value!r}")


def _iroot(a: int, n: int) -> int:
    if a < 2:
        return a
    x = 1 << ((a.bit_length() + n - 1) // n)
    while True:
        y = ((n - 1) * x + a // x ** (n - 1)) // n
        if y >= x:
            return x
        x = y


def nth_root(q, n: int, bits: int = DEFAULT_BITS):
    """
    Nonnegative n-th root. Exact when q is the n-th power of a rational,
    otherwise an enclosure (at q's precision, or ``bits`` for rationals).
    """
    if n == 1:
        return q
    if isinstance(q, Enclosure):
        if q.lower <= 0:
            raise UndecidableSign("n-th root of an enclosure reaching zero", value=q)
        ctx = interval_context(q.bits)
        return Enclosure(ctx.exp(ctx.log(q.iv) / n), q.bits)
    q = Fraction(q)
    if q < 0:
        raise ValueError("nth_root of a negative number")
    num, den = q.numerator, q.denominator
    rn, rd = _iroot(num, n), _iroot(den, n)
    if rn**n == num and rd**n == den:
        return Fraction(rn, rd)
    return nth_root(Enclosure.from_fraction(q, bits), n)


def format_scalar(x, digits: int = 12) -> str:
    """Renders a value with its enclosure width or the 'exact' tag."""
    if isinstance(x, Enclosure):
        return f"{float(x.midpoint()):.{digits}g} ± {float(x.radius()):.2e}"
    if isinstance(x, (int, Fraction)):
        q = Fraction(x)
        text = str(q)
        if max(len(str(abs(q.numerator))), len(str(q.denominator))) <= digits:
            return f"{text} (exact)"
        return f"{float(q):.{digits}g} (exact rational)"
    return f"{float(x):.{digits}g} (float)"
