"""
Polynomials and rational functions over exact or enclosed scalars.

Coefficients are stored lowest degree first. Sign certification and root
isolation use Bernstein coefficients on the interval of interest, refined
by bisection in exact rational arithmetic.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb

from src.errors import UndecidableSign
from src.numeric import Enclosure, is_exact, may_be_zero, sign, upper_bound

DEFAULT_TOLERANCE = Fraction(1, 2**200)


def is_zero(c) -> bool:
    if isinstance(c, Enclosure):
        lo, hi = c.bounds()
        return lo == hi == 0
    return c == 0


def _coerce(c):
    if isinstance(c, (Enclosure, Fraction)):
        return c
    return Fraction(c)


class Polynomial:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [_coerce(c) for c in coeffs]
        while len(cs) > 1 and is_zero(cs[-1]):
            cs.pop()
        if not cs:
            cs = [Fraction(0)]
        self.coeffs = tuple(cs)

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls([c])

    @classmethod
    def identity(cls) -> "Polynomial":
        return cls([0, 1])

    @classmethod
    def affine(cls, c0, c1) -> "Polynomial":
        return cls([c0, c1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and is_zero(self.coeffs[0])

    @property
    def may_be_zero(self) -> bool:
        return all(may_be_zero(c) for c in self.coeffs)

    @property
    def is_constant(self) -> bool:
        return len(self.coeffs) == 1

    @property
    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.coeffs)

    def __call__(self, x):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def _as_poly(self, other):
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, (int, Fraction, Enclosure)):
            return Polynomial.constant(other)
        return None

    def __add__(self, other):
        o = self._as_poly(other)
        if o is None:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = o.coeffs + (Fraction(0),) * (n - len(o.coeffs))
        return Polynomial([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs])

    def __sub__(self, other):
        o = self._as_poly(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._as_poly(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._as_poly(other)
        if o is None:
            return NotImplemented
        if o.is_constant:
            c = o.coeffs[0]
            return Polynomial([c * x for x in self.coeffs])
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if is_zero(a):
                continue
            for j, b in enumerate(o.coeffs):
                out[i + j] = out[i + j] + a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        result = Polynomial.constant(1)
        base = self
        while n > 0:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        o = self._as_poly(other)
        if o is None:
            return NotImplemented
        return (self - o).is_zero

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Polynomial({[str(c) for c in self.coeffs]})"

    def derivative(self, order: int = 1) -> "Polynomial":
        cs = list(self.coeffs)
        for _ in range(order):
            cs = [k * cs[k] for k in range(1, len(cs))]
            if not cs:
                return Polynomial()
        return Polynomial(cs)

    def antiderivative(self) -> "Polynomial":
        return Polynomial([Fraction(0)] + [c / (k + 1) for k, c in enumerate(self.coeffs)])

    def integrate(self, lo, hi):
        F = self.antiderivative()
        return F(hi) - F(lo)

    def compose(self, inner: "Polynomial") -> "Polynomial":
        acc = Polynomial()
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc

    def divmod(self, other: "Polynomial"):
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        quot = [Fraction(0)] * max(1, len(rem) - len(other.coeffs) + 1)
        lead = other.coeffs[-1]
        d = other.degree
        while len(rem) - 1 >= d and not (len(rem) == 1 and is_zero(rem[0])):
            shift = len(rem) - 1 - d
            factor = rem[-1] / lead
            quot[shift] = factor
            for i, c in enumerate(other.coeffs):
                rem[i + shift] = rem[i + shift] - factor * c
            rem.pop()
            if not rem:
                rem = [Fraction(0)]
                break
        return Polynomial(quot), Polynomial(rem)

    def rescaled(self, lo, hi) -> "Polynomial":
        """p(lo + (hi - lo) t) as a polynomial in t."""
        return self.compose(Polynomial.affine(lo, hi - lo))

    def bernstein(self, lo, hi) -> list:
        a = self.rescaled(lo, hi).coeffs
        n = len(a) - 1
        return [sum(Fraction(comb(i, k), comb(n, k)) * a[k] for k in range(i + 1)) for i in range(n + 1)]

    def sign_on(self, lo, hi, max_depth: int = 40) -> int:
        """
        Certified strict sign of p on the closed interval [lo, hi]; 0 when
        p vanishes somewhere on it or the sign cannot be certified.
        """
        signs = set()
        stack = [(lo, hi, 0)]
        while stack:
            a, b, depth = stack.pop()
            try:
                bs = [sign(c) for c in self.bernstein(a, b)]
            except UndecidableSign:
                return 0
            if all(s > 0 for s in bs):
                signs.add(1)
            elif all(s < 0 for s in bs):
                signs.add(-1)
            elif depth >= max_depth or bs[0] == 0 or bs[-1] == 0:
                return 0
            else:
                m = (a + b) / 2
                stack.append((a, m, depth + 1))
                stack.append((m, b, depth + 1))
            if len(signs) > 1:
                return 0
        return signs.pop() if signs else 0

    def real_roots(self, lo, hi, tol=DEFAULT_TOLERANCE) -> list:
        """
        Sign-change points of p in the open interval (lo, hi), sorted.
        Exact where a rational root is hit; otherwise within tol.
        """
        if self.is_zero or self.is_constant:
            return []
        if self.degree == 1:
            root = -self.coeffs[0] / self.coeffs[1]
            return [root] if lo < root < hi else []
        roots = []
        self._isolate(lo, hi, tol, roots)
        return sorted(set(roots))

    def _isolate(self, a, b, tol, roots):
        bs = self.bernstein(a, b)
        nonzero = [sign(c) for c in bs if sign(c) != 0]
        variations = sum(1 for s, t in zip(nonzero, nonzero[1:]) if s != t)
        if variations == 0:
            return
        fa, fb = self(a), self(b)
        if variations == 1 and sign(fa) != 0 and sign(fb) != 0:
            roots.append(self._bisect(a, b, tol))
            return
        if b - a <= tol:
            roots.append((a + b) / 2)
            return
        m = (a + b) / 2
        if sign(self(m)) == 0:
            roots.append(m)
        self._isolate(a, m, tol, roots)
        self._isolate(m, b, tol, roots)

    def _bisect(self, a, b, tol):
        sa = sign(self(a))
        while b - a > tol:
            m = (a + b) / 2
            sm = sign(self(m))
            if sm == 0:
                return m
            if sm == sa:
                a = m
            else:
                b = m
        return (a + b) / 2

    def solve_monotone(self, y, lo, hi, tol=DEFAULT_TOLERANCE):
        """The unique x in [lo, hi] with p(x) = y for p monotone there."""
        q = self - y
        if q.degree == 1:
            return -q.coeffs[0] / q.coeffs[1]
        if q.is_constant:
            return lo
        if sign(q(lo)) == 0:
            return lo
        if sign(q(hi)) == 0:
            return hi
        return q._bisect(lo, hi, tol)

    def integrate_abs(self, lo, hi, tol=DEFAULT_TOLERANCE):
        cuts = [lo] + self.real_roots(lo, hi, tol) + [hi]
        F = self.antiderivative()
        total = Fraction(0)
        for a, b in zip(cuts, cuts[1:]):
            total += abs(F(b) - F(a))
        return total

    def sup_abs(self, lo, hi, tol=DEFAULT_TOLERANCE):
        candidates = [lo, hi] + self.derivative().real_roots(lo, hi, tol)
        return max((abs(self(c)) for c in candidates), key=upper_bound)


class RationalFunction:
    """num / den with polynomial numerator and denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        self.num = num if isinstance(num, Polynomial) else Polynomial.constant(num)
        self.den = Polynomial.constant(1) if den is None else den
        if self.den.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")
        if self.den.is_constant and not is_zero(self.den.coeffs[0] - 1):
            c = self.den.coeffs[0]
            self.num = self.num * (1 / c)
            self.den = Polynomial.constant(1)

    @classmethod
    def of(cls, value) -> "RationalFunction":
        if isinstance(value, RationalFunction):
            return value
        if isinstance(value, Polynomial):
            return cls(value)
        return cls(Polynomial.constant(value))

    def __call__(self, x):
        return self.num(x) / self.den(x)

    def __add__(self, other):
        o = RationalFunction.of(other)
        if self.den == o.den:
            return RationalFunction(self.num + o.num, self.den)
        return RationalFunction(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        return self + (-RationalFunction.of(other))

    def __rsub__(self, other):
        return RationalFunction.of(other) - self

    def __mul__(self, other):
        o = RationalFunction.of(other)
        return RationalFunction(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = RationalFunction.of(other)
        return RationalFunction(self.num * o.den, self.den * o.num)

    def __pow__(self, n: int):
        if n < 0:
            return RationalFunction(self.den**-n, self.num**-n)
        return RationalFunction(self.num**n, self.den**n)

    def __eq__(self, other):
        o = RationalFunction.of(other)
        return (self.num * o.den - o.num * self.den).is_zero

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RationalFunction({self.num!r} / {self.den!r})"

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def may_be_zero(self) -> bool:
        return self.num.may_be_zero

    def derivative(self) -> "RationalFunction":
        return RationalFunction(
            self.num.derivative() * self.den - self.num * self.den.derivative(), self.den * self.den
        )

    def compose(self, inner: Polynomial) -> "RationalFunction":
        return RationalFunction(self.num.compose(inner), self.den.compose(inner))

    def as_polynomial(self) -> Polynomial | None:
        """The polynomial equal to this function, or None if there is none."""
        if self.den.is_constant:
            return self.num * (1 / self.den.coeffs[0])
        quotient, remainder = self.num.divmod(self.den)
        if remainder.is_zero:
            return quotient
        return None

    def sign_on(self, lo, hi) -> int:
        s_num = self.num.sign_on(lo, hi)
        s_den = self.den.sign_on(lo, hi)
        return s_num * s_den

    def sup_abs(self, lo, hi, samples: int = 64):
        poly = self.as_polynomial()
        if poly is not None:
            return poly.sup_abs(lo, hi)
        # no closed form for the extrema of a quotient; sample densely
        best = Fraction(0)
        for i in range(samples + 1):
            x = lo + (hi - lo) * Fraction(i, samples)
            best = max(best, abs(self(x)), key=upper_bound)
        return best
