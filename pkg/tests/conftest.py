from __future__ import annotations

import numpy as np
import pytest

from frontstab.model import builtin_models, get_model


@pytest.fixture(scope="session")
def fisher():
    return get_model("fisher")


@pytest.fixture(scope="session")
def nagumo():
    return get_model("nagumo")


@pytest.fixture(scope="session")
def kpp2():
    return get_model("kpp2")


@pytest.fixture(scope="session")
def all_models():
    return builtin_models()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
