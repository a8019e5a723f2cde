import pytest

from wtf_lab import ThetaSequence, model_spec, validate_system


@pytest.fixture(scope="session")
def systems():
    return {name: validate_system(model_spec(name)) for name in ("M1", "M2", "M3", "M4", "M5")}


@pytest.fixture(scope="session")
def m1(systems):
    return systems["M1"]


@pytest.fixture(scope="session")
def m2(systems):
    return systems["M2"]


@pytest.fixture(scope="session")
def m3(systems):
    return systems["M3"]


@pytest.fixture(scope="session")
def m4(systems):
    return systems["M4"]


@pytest.fixture(scope="session")
def m5(systems):
    return systems["M5"]


@pytest.fixture(scope="session")
def zeros():
    return ThetaSequence.zeros()
