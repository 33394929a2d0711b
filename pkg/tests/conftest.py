import sys

import numpy as np
import pytest

from gainbin.data import load_fixture

MV_NAMES = ["TC-REBOIL-SP", "FC-REFLUX-SP", "PC-TOP-SP", "FC-DIST-SP", "FI-FEED-PV"]
CV_NAMES = ["AI-RVP-PV", "AI-DIST-C5", "TOP-PCT", "LI-ACCUM-PF",
            "DP-DEBUT-PV", "PC-TOP-OPT", "FC-REBOIL-OP", "FC-REFLUX-OP"]


@pytest.fixture(scope="session")
def raw_model():
    """Debutanizer gains in engineering units with their step-test move sizes."""
    return load_fixture("debutanizer")


@pytest.fixture(scope="session")
def scaled_model():
    """The printed scaled gains, carried as a model with unit move sizes."""
    return load_fixture("debutanizer_scaled")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(mod.format_line(n, *results[n]))
