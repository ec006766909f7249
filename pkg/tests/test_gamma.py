import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eeebundle.gamma import gamma_upper, gammaincc


@pytest.mark.parametrize("n", range(1, 21))
def test_upper_gamma_at_zero_is_factorial(n):
    assert gamma_upper(n, 0.0) == pytest.approx(math.factorial(n - 1), rel=1e-12)


@given(st.integers(1, 64), st.floats(0.0, 200.0))
def test_integer_order_matches_mpmath(n, x):
    ref = float(mpmath.gammainc(n, a=x, regularized=True))
    assert gammaincc(n, x) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@given(st.floats(0.1, 80.0), st.floats(0.0, 150.0))
def test_real_order_matches_mpmath(s, x):
    ref = float(mpmath.gammainc(s, a=x, regularized=True))
    assert gammaincc(s, x) == pytest.approx(ref, rel=1e-9, abs=1e-290)


def test_vector_input_matches_scalar_calls():
    xs = np.linspace(0.0, 40.0, 17)
    vec = gammaincc(20, xs)
    assert isinstance(vec, np.ndarray)
    assert np.allclose(vec, [gammaincc(20, x) for x in xs], rtol=0, atol=0)


def test_scalar_in_scalar_out():
    assert isinstance(gammaincc(3.5, 2.0), float)


def test_unregularized_non_integer():
    ref = float(mpmath.gammainc(2.5, a=1.3))
    assert gamma_upper(2.5, 1.3) == pytest.approx(ref, rel=1e-11)
