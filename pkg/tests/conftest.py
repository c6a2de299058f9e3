import numpy as np
import pytest
from hypothesis import settings

from synsphere.potential import PotentialConfig

# first calls into scipy are slow; deadlines would make results timing-dependent
settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture
def cfg():
    return PotentialConfig(r=np.array([0.0, 0.0, 1.0]), k=1.0, gamma=-0.5, delta=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, dim=3, count=None):
    shape = (dim,) if count is None else (count, dim)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def record(request):
    """Collect one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def add(criterion: int, ok: bool, detail: str) -> None:
        line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
