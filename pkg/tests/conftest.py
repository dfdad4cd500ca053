import numpy as np
import pytest

from hesvm.bench.data import prepare_iris
from hesvm.ckks import CkksParams, gen_context, keygen
from hesvm.svm import TrainConfig, train_linear_ovr, train_poly_dual_ovr

# Small rings for fast unit tests carry no security claim.
SMALL = CkksParams(ring_dim=1024, mult_depth=3, scaling_bits=30, first_mod_bits=60, security_level=None,
                   batch_size=512)
BASE = CkksParams()
DEEP = CkksParams(mult_depth=3)


@pytest.fixture(scope="session")
def small_ctx():
    return gen_context(SMALL)


@pytest.fixture(scope="session")
def small_keys(small_ctx):
    return keygen(small_ctx, np.random.default_rng(1), rotations=[-1, -2, -4, -8, -16, -32, 3])


@pytest.fixture(scope="session")
def base_ctx():
    return gen_context(BASE)


@pytest.fixture(scope="session")
def base_keys(base_ctx):
    return keygen(base_ctx, np.random.default_rng(2), rotations=[-4, -8])


@pytest.fixture(scope="session")
def deep_ctx():
    return gen_context(DEEP)


@pytest.fixture(scope="session")
def deep_keys(deep_ctx):
    return keygen(deep_ctx, np.random.default_rng(3), rotations=[-4, -8])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def iris():
    return prepare_iris()


@pytest.fixture(scope="session")
def linear_model(iris):
    train, _ = iris
    return train_linear_ovr(train.x, train.y, TrainConfig())


@pytest.fixture(scope="session")
def dual_model(iris):
    train, _ = iris
    return train_poly_dual_ovr(train.x, train.y, TrainConfig())


# Acceptance verdicts, printed as one line per criterion after the run.
ACCEPTANCE: dict[str, str] = {}


class CriterionRecorder:
    """Context manager factory: ``with criterion("3", "p(2) = 33"): ...`` records PASS or FAIL."""

    def __call__(self, number: str, text: str):
        return _Verdict(number, text)


class _Verdict:
    def __init__(self, number, text):
        self.number, self.text = number, text

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        detail = "" if exc is None else f" ({str(exc).splitlines()[0][:120]})"
        ACCEPTANCE[self.number] = f"criterion {self.number}: {status} {self.text}{detail}"
        return False


@pytest.fixture(scope="session")
def criterion():
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
