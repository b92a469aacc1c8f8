from __future__ import annotations

from fractions import Fraction

import pytest

from src.numeric import Enclosure
from src.polynomial import Polynomial, RationalFunction

x = Polynomial.identity()


def test_evaluation_and_trimming():
    assert Polynomial([1, 2, 3])(2) == 17
    assert Polynomial([1, 0, 0]).degree == 0
    assert Polynomial().is_zero
    assert Polynomial.affine(1, 2) == Polynomial([1, 2])


def test_ring_operations():
    assert (x + 1) ** 2 == Polynomial([1, 2, 1])
    assert (x + 1) * (x - 1) == x ** 2 - 1
    assert 2 - x == Polynomial([2, -1])
    assert (x * Fraction(1, 2))(1) == Fraction(1, 2)


def test_calculus():
    p = Polynomial([1, 2, 3])
    assert p.derivative() == Polynomial([2, 6])
    assert p.derivative(3).is_zero
    assert Polynomial([0, 0, 3]).integrate(0, 1) == 1
    assert p.antiderivative().derivative() == p


def test_compose_and_rescale():
    assert (x ** 2).compose(2 * x + 1) == Polynomial([1, 4, 4])
    assert (x ** 2).rescaled(Fraction(1, 2), 1)(1) == 1


def test_divmod():
    q, r = (x ** 2 - 1).divmod(x - 1)
    assert q == x + 1
    assert r.is_zero
    q, r = (x ** 2 + 1).divmod(x)
    assert q == x
    assert r == Polynomial([1])
    with pytest.raises(ZeroDivisionError):
        x.divmod(Polynomial())


@pytest.mark.parametrize(
    "poly, lo, hi, expected",
    [
        (x ** 2 + 1, -1, 1, 1),
        (x - 2, 0, 1, -1),
        (x, -1, 1, 0),
        (x, 0, 1, 0),
        ((x - Fraction(1, 2)) ** 2 + Fraction(1, 1000), 0, 1, 1),
    ],
)
def test_sign_on(poly, lo, hi, expected):
    assert poly.sign_on(Fraction(lo), Fraction(hi)) == expected


def test_real_roots_exact_and_approximate():
    assert (x ** 2 - Fraction(1, 4)).real_roots(Fraction(0), Fraction(1)) == [Fraction(1, 2)]
    (root,) = (x ** 2 - 2).real_roots(Fraction(0), Fraction(2))
    assert float(root) == pytest.approx(2 ** 0.5, rel=1e-15)
    assert (x ** 2 + 1).real_roots(Fraction(-1), Fraction(1)) == []
    assert (2 * x - 1).real_roots(Fraction(0), Fraction(1)) == [Fraction(1, 2)]


def test_solve_monotone():
    assert (x ** 3).solve_monotone(Fraction(1, 8), Fraction(0), Fraction(1)) == Fraction(1, 2)
    assert (3 * x).solve_monotone(Fraction(1), Fraction(0), Fraction(1)) == Fraction(1, 3)


def test_integrate_abs_and_sup_abs():
    assert x.integrate_abs(Fraction(-1), Fraction(1)) == 1
    assert (x ** 2 - x).sup_abs(Fraction(0), Fraction(1)) == Fraction(1, 4)


def test_enclosed_coefficients():
    third = Enclosure.from_fraction(Fraction(1, 3))
    p = Polynomial([third, 1])
    assert not p.is_exact
    assert p(0).contains(Fraction(1, 3))
    assert p(1).contains(Fraction(4, 3))


def test_rational_function_basics():
    f = RationalFunction(x, x + 1)
    assert f(1) == Fraction(1, 2)
    assert f.derivative()(1) == Fraction(1, 4)
    assert (f + f)(1) == 1
    assert (f * (x + 1)).as_polynomial() == x


def test_rational_function_normalizes_constant_denominator():
    f = RationalFunction(Polynomial([2, 4]), Polynomial([2]))
    assert f.den == Polynomial([1])
    assert f.num == Polynomial([1, 2])


def test_rational_function_polynomial_detection():
    assert RationalFunction(x ** 2 - 1, x - 1).as_polynomial() == x + 1
    assert RationalFunction(Polynomial([1]), 2 * x).as_polynomial() is None
    with pytest.raises(ZeroDivisionError):
        RationalFunction(x, Polynomial())


def test_rational_function_sign_and_sup():
    f = RationalFunction(Polynomial([1]), x + 1)
    assert f.sign_on(Fraction(0), Fraction(1)) == 1
    assert f.sup_abs(Fraction(0), Fraction(1)) == 1
