from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedosov.scalars import GR_I, GR_ONE, GR_ZERO, GaussianRational, parse_rational, rational


def gr(re_n, re_d=1, im_n=0, im_d=1):
    return GaussianRational(rational(re_n, re_d), rational(im_n, im_d))


small = st.integers(min_value=-30, max_value=30)
nonzero = st.integers(min_value=1, max_value=12)
gaussians = st.builds(gr, small, nonzero, small, nonzero)


def test_constants():
    assert GR_ZERO == GaussianRational(0)
    assert GR_ONE == GaussianRational(1)
    assert GR_I * GR_I == -GR_ONE


def test_str_forms():
    assert str(gr(3, 4)) == "3/4"
    assert str(gr(0, 1, 1, 8)) == "1/8*i"
    assert str(gr(2, 1, -1, 1)) == "2-i"
    assert str(GR_ZERO) == "0"


def test_parse_rational():
    assert parse_rational("3/4") == rational(3, 4)
    assert parse_rational("-7") == rational(-7, 1)
    with pytest.raises(ValueError):
        parse_rational("0.5")


def test_division():
    a = gr(3, 4, 1, 2)
    b = gr(1, 1, -2, 1)
    assert (a / b) * b == a
    with pytest.raises(ZeroDivisionError):
        a / GR_ZERO


def test_conjugate_norm():
    z = gr(2, 3, -5, 7)
    nrm = z * z.conjugate()
    assert nrm.im == 0
    assert nrm.re == Fraction(2, 3) ** 2 + Fraction(5, 7) ** 2


@given(gaussians, gaussians, gaussians)
def test_field_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + GR_ZERO == a
    assert a * GR_ONE == a


@given(gaussians)
def test_inverse(z):
    if z != GR_ZERO:
        assert z * z.inverse() == GR_ONE
    assert -(-z) == z
    assert z - z == GR_ZERO
