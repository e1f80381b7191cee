import math

import numpy as np
import pytest

from fracdegiorgi.gridfn import ExteriorSpec, GridFunction, build_grid_function


def make(family, cells=64, exterior=None, dim=1, a=-1.0, b=1.0, **params):
    doc = {"family": family, "params": params, "box": {"a": a, "b": b}, "cells": cells, "dim": dim}
    if exterior is not None:
        doc["exterior"] = exterior
    return build_grid_function(doc)


def nodal(values, exterior=None, a=-1.0, b=1.0):
    ext = exterior if exterior is not None else ExteriorSpec()
    return GridFunction(a, b, len(values), np.asarray(values, dtype=float), ext, 1, False, "nodal")


@pytest.fixture
def one():
    return make("constant", 64, "extend", c=1.0)


@pytest.fixture
def step():
    return make("step", 256, "extend")


def pytest_terminal_summary(terminalreporter):
    lines = getattr(terminalreporter.config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_lines(request):
    lines = []
    request.config._acceptance_lines = lines
    return lines


isclose = math.isclose
