import logging

import numpy as np
import pytest

from orliczps.corpus import build_corpus, cone
from orliczps.gridfn import BoxDomain, GridFunction


@pytest.fixture(autouse=True)
def _quiet_resampling_warnings():
    logging.getLogger("orliczps.rearrange").setLevel(logging.ERROR)
    yield


@pytest.fixture(scope="session")
def corpus():
    return {fx.name: fx for fx in build_corpus(seed=0, intervals=256)}


@pytest.fixture(scope="session")
def coarse_corpus():
    return {fx.name: fx for fx in build_corpus(seed=0, intervals=128)}


@pytest.fixture(scope="session")
def cone_512():
    return GridFunction.from_callable(BoxDomain.cube(1.0, 512), cone())


def radial_bump(domain, radius=0.5, center=None):
    c = np.zeros(domain.dim) if center is None else np.asarray(center, dtype=float)

    def fn(x):
        return np.maximum(0.0, 1.0 - np.sum((x - c) ** 2, axis=-1) / radius**2) ** 2

    return GridFunction.from_callable(domain, fn)


ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "run_last: run after every other test in the session")


def pytest_collection_modifyitems(config, items):
    items.sort(key=lambda item: item.get_closest_marker("run_last") is not None)


@pytest.fixture(scope="session", autouse=True)
def session_norm_audit():
    """Every directional norm computed anywhere in the session."""
    from orliczps.energy import audit_norms

    with audit_norms() as audit:
        yield audit


@pytest.fixture
def acceptance():
    def record(number, title, passed, detail, seconds):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE[number] = f"criterion {number} {status} ({seconds:.1f} s) {title}: {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
