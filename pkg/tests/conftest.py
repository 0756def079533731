import numpy as np
import pytest

from polargd._backend import KERNELS
from polargd.construction import CodeSpec

BACKENDS = sorted(KERNELS)


@pytest.fixture
def toy_code():
    # N=4, frozen {1, 3} static, information {2, 4}
    return CodeSpec(2, (2, 4), {1: (), 3: ()})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_code(rng, n, K, p_dynamic=0.7):
    """Random information set and random dynamic frozen rules."""
    N = 1 << n
    info = tuple(sorted(rng.choice(np.arange(1, N + 1), size=K, replace=False).tolist()))
    rules = {}
    for i in range(1, N + 1):
        if i in info:
            continue
        if i > 1 and rng.random() < p_dynamic:
            taps = rng.choice(np.arange(1, i), size=rng.integers(1, min(i - 1, 4) + 1), replace=False)
            rules[i] = tuple(sorted(taps.tolist()))
        else:
            rules[i] = ()
    return CodeSpec(n, info, rules)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
