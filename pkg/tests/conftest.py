import sys
import random

import pytest

from feec.simplicial import book, flat_torus, simplex_mesh, sphere


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture(scope="session")
def torus33():
    return flat_torus(3, 3)


@pytest.fixture(scope="session")
def book_mesh():
    return book()


TEST_COMPLEXES = {
    "simplex3": lambda: simplex_mesh(3),
    "sphere2": lambda: sphere(2),
    "torus33": lambda: flat_torus(3, 3),
    "book": book,
}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
