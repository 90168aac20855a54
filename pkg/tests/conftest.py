import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from rmpst.refine.solver import Checker, find_solver, set_default_checker  # noqa: E402

HAVE_SOLVER = find_solver() is not None

needs_solver = pytest.mark.skipif(not HAVE_SOLVER, reason="no SMT solver on PATH")


@pytest.fixture(autouse=True)
def _reset_default_checker():
    yield
    set_default_checker(None)


@pytest.fixture(scope="session")
def solver():
    if not HAVE_SOLVER:
        pytest.skip("no SMT solver on PATH")
    return Checker(mode="solver")


@pytest.fixture(scope="session")
def enum64():
    return Checker(mode="enumerate", bound=64)


@pytest.fixture(scope="session")
def checker():
    """Solver mode when available, bounded enumeration otherwise."""
    return Checker(mode="solver") if HAVE_SOLVER else Checker(mode="enumerate")
