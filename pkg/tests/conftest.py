import numpy as np
import pytest
from hypothesis import settings, strategies as st

from viscoprony.prony import PronyModel

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

# Reference models (b_i, r_i), N = 3, 4, 5, with published eigenvalues.
REFERENCE_MODELS = {
    3: ([1, 2, 3], [3, 6, 9]),
    4: ([1, 2, 3, 4], [4, 8, 12, 16]),
    5: ([1, 2, 3, 4, 5], [5, 10, 15, 20, 25]),
}


def random_normalized_model(rng, n_max=8, r_lo=0.1, r_hi=50.0):
    """Normalized model with N <= n_max and log-uniform rates in [r_lo, r_hi]."""
    n = int(rng.integers(1, n_max + 1))
    while True:
        r = np.exp(rng.uniform(np.log(r_lo), np.log(r_hi), n))
        if np.unique(r).size == n:
            break
    s = rng.dirichlet(np.ones(n))
    return PronyModel(tuple(s), tuple(r)).normalize()


@st.composite
def normalized_models(draw, n_max=6):
    n = draw(st.integers(1, n_max))
    r = draw(
        st.lists(st.floats(0.1, 50.0), min_size=n, max_size=n, unique=True)
    )
    s = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    return PronyModel(tuple(s), tuple(r)).normalize()


burgers_params = st.tuples(
    st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0)
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def reference_models():
    return {n: PronyModel.from_kernel(b, r) for n, (b, r) in REFERENCE_MODELS.items()}


# Acceptance summary: one pass/fail line per criterion ----------------------------------

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    _, ok, seconds = _ACCEPTANCE.get(number, (title, True, 0.0))
    _ACCEPTANCE[number] = (title, ok and rep.passed, seconds + rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, seconds = _ACCEPTANCE[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {title} ({seconds:.2f} s)")
