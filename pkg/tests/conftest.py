import sys
import warnings

import pytest
from hypothesis import settings

from fracpearson.pearson import PearsonModel
from fracpearson.subordinator import StableMixture

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

OU = PearsonModel(0.0, -1.0, 1.0)
CIR = PearsonModel(1.0, -1.0, 0.0, 0.5)
JACOBI = PearsonModel(1.5, -3.0, 0.0, 1.0, -1.0)
MODELS = {"ou": OU, "cir": CIR, "jacobi": JACOBI}

TWO = StableMixture([0.3, 0.8], [0.5, 0.5])
THREE = StableMixture([0.2, 0.5, 0.8], [1 / 3, 1 / 3, 1 / 3])


def mixture(orders, weights):
    """Build a mixture without the weight-sum warning."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return StableMixture(orders, weights)


@pytest.fixture(params=sorted(MODELS))
def model(request):
    return MODELS[request.param]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES):
            terminalreporter.write_line(line)
