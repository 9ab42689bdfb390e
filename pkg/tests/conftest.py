import numpy as np
import pytest
from hypothesis import settings

from fixpoint.operators import affine
from fixpoint.space import BoxDomain

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def halving():
    """Tx = x/2 on [0, 1]; unique fixed point 0."""
    return affine([[0.5]], [0.0], BoxDomain.cube(0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE: dict[int, str] = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
