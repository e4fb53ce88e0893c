"""Shared model fixtures: one nonlocal front model and one local Cauchy model."""

import pytest

from shiftwave import HabitatProfile, Kernel, ModelParams, validate_model


def nonlocal_model(s=0.5, a=0.4, b=2.0, kernels=None, alpha_minus=-1.0, **rates):
    params = ModelParams(d1=rates.get("d1", 1.0), d2=rates.get("d2", 1.0), r1=rates.get("r1", 1.0),
                         r2=rates.get("r2", 1.0), a=a, b=b, s=s)
    kernels = kernels or (Kernel.raised_cosine(1.0), Kernel.raised_cosine(1.0))
    return validate_model(params, kernels, HabitatProfile.tanh(alpha_minus, 1.0))


def local_model(s=1.5, a=0.3, b=2.0, r2=0.25):
    params = ModelParams(1.0, 1.0, 1.0, r2, a, b, s, mode="local")
    return validate_model(params, None, HabitatProfile.tanh(-1.0, 1.0))


@pytest.fixture(scope="session")
def front_model():
    return nonlocal_model()


@pytest.fixture(scope="session")
def cauchy_model():
    return local_model()


@pytest.fixture(scope="session")
def uniform_model():
    return nonlocal_model(s=1.2, kernels=(Kernel.uniform(1.0), Kernel.uniform(1.0)))
