import math

import numpy as np
import pytest

from escapeset.errors import Diverged, NonInvertible, VariantMismatch
from escapeset.expressions import CustomMap
from escapeset.flows import (
    CustomODE,
    ExpressionFlow,
    MapSystem,
    R3Saddle,
    Shift,
    Spiral,
    SpiralODE,
    Translation,
    group_law_residual,
    example_shift_points,
    spiral_blowup_time,
    spiral_radius,
    spiral_radius_rk4,
)
from escapeset.phase_space import SymbolicPoint, constant_sequence


def test_translation_evaluate():
    assert Translation([1.0, 0.0]).evaluate((0.0, 0.0), 1.0).coords == (1.0, 0.0)


def test_spiral_unit_circle_is_invariant():
    sp = Spiral()
    for t in (-40.0, -3.0, 0.0, 0.7, 25.0):
        assert math.hypot(*sp.evaluate(Spiral.point(1.0, 0.3), t).coords) == pytest.approx(1.0, abs=1e-12)


def test_spiral_blowup_r0_2():
    with pytest.raises(Diverged) as info:
        Spiral().evaluate(Spiral.point(2.0), -0.2)
    assert info.value.blowup_time == pytest.approx(0.5 * math.log(0.75), abs=1e-12)
    assert info.value.blowup_time == pytest.approx(-0.143841, abs=1e-6)


def test_spiral_blowup_time_only_outside_unit_circle():
    assert spiral_blowup_time(1.0) is None
    assert spiral_blowup_time(0.5) is None
    assert spiral_blowup_time(3.0) == pytest.approx(0.5 * math.log(1 - 1 / 9))


def test_spiral_closed_form_matches_textbook_form():
    r0, t = 0.5, 1.3
    textbook = math.exp(t) * r0 / math.sqrt(r0 * r0 * (math.exp(2 * t) - 1) + 1)
    assert float(spiral_radius(r0, t)) == pytest.approx(textbook, rel=1e-14)


def test_spiral_radius_stays_finite_far_backward_on_circle():
    assert float(spiral_radius(1.0, -800.0)) == 1.0


def test_r3saddle_axis_moves_at_unit_speed():
    z = R3Saddle().evaluate((0.0, 0.0, 0.0), 5.0).coords
    assert z == pytest.approx((0.0, 0.0, 5.0), abs=1e-9)


def test_shift_drops_first_symbol():
    s = SymbolicPoint(lambda i: i, horizon=100)
    assert Shift().evaluate(s, 1).prefix(3).tolist() == [2, 3, 4]


def test_shift_has_no_backward_time():
    with pytest.raises(NonInvertible):
        Shift().evaluate(constant_sequence(1), -1)


def test_shift_rejects_euclidean_points():
    with pytest.raises(VariantMismatch):
        Shift().evaluate((1.0, 2.0), 1)


def test_example_sequences_prefix():
    x, y = example_shift_points()
    assert x.value(8) == 8 and x.value(9) == 1
    assert y.value(9) == 7
    assert x.prefix(8).tolist() == [1, 2, 1, 4, 1, 1, 1, 8]
    assert y.prefix(10).tolist() == [1, 2, 1, 4, 3, 2, 1, 8, 7, 6]


def test_group_law_residuals():
    assert group_law_residual(Translation([1.0, 0.0]), (0.3, -2.0), 1.5, -0.25) == 0.0
    assert group_law_residual(Spiral(), Spiral.point(0.5), 1.0, 2.0) <= 1e-12
    assert group_law_residual(R3Saddle(), (0.5, 0.2, 0.1), 0.5, 0.5) <= 1e-6
    x, _ = example_shift_points(4096)
    assert group_law_residual(Shift(), x, 5, 7) == 0.0


@pytest.mark.parametrize("r0", [0.25, 0.5, 2.0])
def test_spiral_radius_rk4_matches_closed_form(r0):
    t, r = spiral_radius_rk4(r0, 5.0)
    assert np.abs(r - spiral_radius(r0, t)).max() <= 1e-6


def test_spiral_ode_matches_closed_form():
    x = Spiral.point(0.5, 0.4)
    a = SpiralODE().evaluate(x, 2.0).array
    b = Spiral().evaluate(x, 2.0).array
    assert np.abs(a - b).max() <= 1e-6


def test_orbit_sampling_stops_at_blowup():
    o = Spiral().orbit(Spiral.point(2.0), -1.0)
    assert o.blowup_time == pytest.approx(spiral_blowup_time(2.0))
    assert o.times.min() > o.blowup_time


def test_map_system_iterates():
    sys = MapSystem(CustomMap(["2*x"], ["x"], inverse=["x/2"]))
    assert sys.evaluate((3.0,), 4).coords == (48.0,)
    assert sys.evaluate((48.0,), -4).coords == (3.0,)
    with pytest.raises(ValueError):
        sys.evaluate((1.0,), 0.5)


def test_custom_ode_and_expression_flow_agree_with_translation():
    ode = CustomODE(CustomMap(["1", "0"], ["x", "y"]))
    assert ode.evaluate((0.0, 0.0), 2.0).array == pytest.approx([2.0, 0.0], abs=1e-9)
    ef = ExpressionFlow(["(cbrt(x) + t)**3"], ["x"])
    assert ef.evaluate((8.0,), 1.0).coords[0] == pytest.approx(27.0)
    assert ef.evaluate((27.0,), -1.0).coords[0] == pytest.approx(8.0)
