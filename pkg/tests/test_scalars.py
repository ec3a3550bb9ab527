from fractions import Fraction

import pytest

from wholediff.scalars import I, ONE, QC, ZERO


def test_construction_and_equality():
    assert QC(2) == QC(Fraction(2), Fraction(0))
    assert QC(Fraction(1, 2)) + QC(Fraction(1, 2)) == ONE
    assert QC(0) == ZERO


def test_arithmetic():
    a = QC(Fraction(1, 2), Fraction(1, 3))
    b = QC(Fraction(2), Fraction(-1))
    assert a + b == QC(Fraction(5, 2), Fraction(-2, 3))
    assert a * b == QC(Fraction(1, 2) * 2 - Fraction(1, 3) * (-1),
                       Fraction(1, 2) * (-1) + Fraction(1, 3) * 2)
    assert (a / b) * b == a
    assert -a + a == ZERO


def test_imaginary_unit():
    assert I * I == QC(-1)
    assert I ** 4 == ONE


def test_int_powers():
    a = QC(Fraction(2, 3))
    assert a ** 3 == QC(Fraction(8, 27))
    assert a ** 0 == ONE
    assert a ** -1 == QC(Fraction(3, 2))


def test_sqrt_exact():
    assert QC(Fraction(9, 4)).sqrt_exact() == QC(Fraction(3, 2))
    assert QC(2).sqrt_exact() is None
    assert QC(-4).sqrt_exact() is None
    assert I.sqrt_exact() is None


def test_to_complex():
    z = QC(Fraction(1, 2), Fraction(3)).to_complex()
    assert z == complex(0.5, 3.0)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        ONE / ZERO
