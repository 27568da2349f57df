import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from escapeset.errors import DomainError
from escapeset.expressions import CustomMap, Expression, ExpressionError


@pytest.mark.parametrize("src", ["__import__('os')", "x.real", "x if x else 1", "[x]", "open(x)", "x // 2",
                                 "y + 1", "'a'", "True", "sqrt(x, 2)", "f(x)", "lambda: 1"])
def test_grammar_rejects(src):
    with pytest.raises(ExpressionError):
        Expression(src, ("x",))


def test_batch_and_single_evaluation():
    m = CustomMap(["x/2 + y", "cbrt(y) - pi"], ["x", "y"])
    assert m([2.0, 8.0]).tolist() == [9.0, 2.0 - math.pi]
    assert m([[2.0, 8.0], [0.0, -1.0]]).shape == (2, 2)
    with pytest.raises(ValueError):
        m([1.0])


def test_constant_component_broadcasts():
    assert CustomMap(["1", "x"], ["x", "y"])([[3.0, 0.0], [4.0, 0.0]]).tolist() == [[1.0, 3.0], [1.0, 4.0]]


def test_domain_errors():
    with pytest.raises(DomainError):
        CustomMap(["sqrt(x)"])([-1.0])
    with pytest.raises(DomainError):
        CustomMap(["log(x)"]).step((-1.0,))
    assert CustomMap(["exp(x)"]).step((1e6,)) == (math.inf,)


def test_inverse_round_trip():
    m = CustomMap(["x**3"], ["x"], inverse=["cbrt(x)"])
    assert m.inverse(m([[-2.0], [0.5]])).ravel().tolist() == pytest.approx([-2.0, 0.5])
    assert m.inverted()([8.0]).tolist() == [2.0]
    with pytest.raises(ValueError):
        CustomMap(["x"]).inverse([1.0])


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_scalar_path_matches_array_path(x, y):
    m = CustomMap(["cos(x) * y - x/3", "abs(x) ** 0.5 + pow(y, 2) + cbrt(x)"], ["x", "y"])
    a = m.step((x, y))
    b = tuple(m(np.array([x, y])).tolist())
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
