from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import strategies as st

from wignerbox.amplitude import ExactReal
from wignerbox.engine import compile_schedule
from wignerbox.protocol import canonical_fr_schedule

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
exact_reals = st.builds(ExactReal, fractions, fractions, fractions, fractions)
nonzero_exact = exact_reals.filter(lambda x: x != 0)


@pytest.fixture(scope="session")
def fr():
    return canonical_fr_schedule()


@pytest.fixture(scope="session")
def compiled_fr(fr):
    return compile_schedule(fr)


def half() -> Fraction:
    return Fraction(1, 2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
