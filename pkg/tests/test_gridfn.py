import math

import numpy as np
import pytest

from conftest import make
from fracdegiorgi.gridfn import (
    Ball,
    ExteriorSpec,
    FracParams,
    SpecError,
    build_grid_function,
    level_measure,
    oscillation,
    truncate,
)


def test_constant_family_values():
    u = make("constant", 8, c=1.0)
    assert np.array_equal(u.values, np.ones(8))


def test_step_midpoints():
    u = make("step", 4)
    assert list(u.values) == [0, 0, 1, 1]


def test_power_midpoints():
    u = make("power", 4, beta=0.5)
    expected = [math.sqrt(0.75), math.sqrt(0.25), math.sqrt(0.25), math.sqrt(0.75)]
    assert np.allclose(u.values, expected, rtol=0, atol=1e-15)


def test_exterior_taken_verbatim():
    ext = {"pieces": [{"from": 1, "to": 3, "value": 2.0}], "at_infinity": -1.0}
    u = make("constant", 8, ext, c=0.0)
    assert u.exterior.pieces == ((1.0, 3.0, 2.0),)
    assert u.exterior.at_infinity == -1.0
    assert u.exterior.partition(-1, 1) == [(-math.inf, -1.0, -1.0), (1.0, 3.0, 2.0), (3.0, math.inf, -1.0)]


@pytest.mark.parametrize("doc", [
    {"family": "nope", "box": {"a": 0, "b": 1}, "cells": 4},
    {"family": "constant", "params": {"c": float("nan")}, "box": {"a": 0, "b": 1}, "cells": 4},
    {"family": "constant", "box": {"a": 0, "b": 1}, "cells": 1},
    {"family": "constant", "box": {"a": 0, "b": 1}},
])
def test_spec_errors(doc):
    with pytest.raises(SpecError):
        build_grid_function(doc)


def test_fracparams_validation():
    for s, p in ((0.0, 2), (1.0, 2), (0.5, 1.0)):
        with pytest.raises(ValueError):
            FracParams(1, s, p)
    assert FracParams(1, 0.25, 2).sp == 0.5


def test_overlapping_exterior_rejected():
    with pytest.raises(SpecError):
        ExteriorSpec(((1.0, 3.0, 1.0), (2.0, 4.0, 0.0)), 0.0)


def test_level_measure_examples():
    one = make("constant", 64, "extend", c=1.0)
    assert level_measure(one, 0.0, "+", Ball((0.0,), 1.0)) == pytest.approx(2.0, abs=1e-14)
    assert level_measure(one, 2.0, "+", Ball((0.0,), 0.3)) == 0.0
    step = make("step", 64, "extend")
    assert level_measure(step, 0.5, "-", Ball((0.0,), 0.5)) == pytest.approx(0.5, abs=1e-14)


def test_level_measure_counts_exterior_exactly():
    step = make("step", 64, "extend")
    # ball (-1.5, 0.5) overlaps the exterior on (-1.5, -1)
    assert level_measure(step, 0.5, "-", Ball((-0.5,), 1.0)) == pytest.approx(1.5, abs=1e-14)


def test_level_sets_at_level_count_in_neither():
    u = make("constant", 16, c=0.3)
    ball = Ball((0.0,), 0.5)
    assert level_measure(u, 0.3, "+", ball) == 0.0
    assert level_measure(u, 0.3, "-", ball) == 0.0


def test_truncate_examples():
    u = make("constant", 8, c=0.7)
    assert np.all(truncate(u, 0.7, "+").values == 0)
    step = make("step", 8, "extend")
    w = truncate(step, 0.25, "-")
    assert np.allclose(w.values, [0.25] * 4 + [0.0] * 4)
    assert w.exterior.value_at(-5.0) == 0.25
    assert w.exterior.value_at(5.0) == 0.0


def test_truncate_idempotent():
    u = make("ramp", 32, slope=2.0, intercept=0.1)
    t = truncate(u, 0.4, "+")
    assert np.array_equal(truncate(t, 0.0, "+").values, t.values)
    assert np.all(t.values >= 0)
    assert np.all((t.values == 0) == (u.values <= 0.4))


def test_oscillation_examples():
    assert oscillation(make("constant", 16, c=3.0), Ball((0.0,), 0.5)) == 0.0
    step = make("step", 64)
    for r in (0.01, 0.1, 0.5):
        assert oscillation(step, Ball((0.0,), r)) == 1.0
    N = 1024
    ramp = make("ramp", N, slope=1.0)
    h = 2 / N
    assert abs(oscillation(ramp, Ball((0.0,), 0.5)) - 1.0) <= h


def test_oscillation_rejects_ball_outside_box():
    with pytest.raises(ValueError):
        oscillation(make("step", 16), Ball((0.9,), 0.5))


def test_two_dimensional_grid():
    u = make("ramp", 8, dim=2, slope=1.0)
    assert u.values.shape == (8, 8)
    assert np.allclose(u.values[:, 0], u.midpoints)
