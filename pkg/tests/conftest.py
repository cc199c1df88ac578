import numpy as np
import pytest

from lctl.model import Hyperparams, LctlModel, TransformModel


def make_model(T, M, mu=0.05, convention="exact", lam=0.1):
    T = np.atleast_2d(np.asarray(T, dtype=float))
    M = np.atleast_2d(np.asarray(M, dtype=float))
    hp = Hyperparams(atoms=T.shape[0], lam=lam, mu=mu, threshold_convention=convention)
    return LctlModel(
        transform=TransformModel(T, hp),
        M=M,
        class_names=[f"class {i + 1}" for i in range(M.shape[0])],
        feature_count=T.shape[1],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line, then fail the test if the check failed.

    ``ok=None`` records a SKIP line and skips the test.
    """
    lines = request.config.stash[_VERDICTS]

    def record(label, ok, detail):
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"{status}  {label}: {detail}"
        lines.append(line)
        print(line)
        if ok is None:
            pytest.skip(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
