import numpy as np
import pytest

from dpcompress import build_neighbor_list, gen_config, gen_model
from dpcompress.compress import compress_model


@pytest.fixture(scope="session")
def tiny():
    return gen_model("tiny", seed=3)


@pytest.fixture(scope="session")
def copper():
    return gen_model("copper-like", seed=0)


@pytest.fixture(scope="session")
def water():
    return gen_model("water-like", seed=1)


@pytest.fixture(scope="session")
def tiny_tables(tiny):
    return compress_model(tiny, 0.001)


@pytest.fixture(scope="session")
def copper_tables(copper):
    return compress_model(copper, 0.001)


@pytest.fixture
def tiny_config():
    return gen_config("fcc", 3.634, (2, 2, 2), jitter=0.15, seed=11)


def neighbors_for(config, model):
    return build_neighbor_list(config, model.rcut)


def central_difference(f, x, step):
    """Gradient of scalar ``f`` at ``x`` by central differences."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += step
        xm[idx] -= step
        g[idx] = (f(xp) - f(xm)) / (2 * step)
    return g


# -- acceptance reporting ---------------------------------------------------

_CRITERIA = {}


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.details = number, title, []

    def note(self, text):
        self.details.append(text)

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        ok = kind is None
        detail = "; ".join(self.details)
        if not ok:
            reason = str(exc).splitlines()[0] if str(exc) else kind.__name__
            detail = f"{detail}; {reason}" if detail else reason
        line = f"criterion {self.number} {'PASS' if ok else 'FAIL'}: {self.title}"
        _CRITERIA[self.number] = f"{line} ({detail})" if detail else line
        print(_CRITERIA[self.number])
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
