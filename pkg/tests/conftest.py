"""Shared fixtures: reference profiles are expensive, so build them once."""

import numpy as np
import pytest

from combust.hugoniot import WaveProblem, classify
from combust.model import default_params
from combust.profile import compute_profile
from combust.spectral import SpectralProblem

S_DEFAULT = 1.5
UM_STRONG = 1.5 + np.sqrt(1.5 ** 2 - 2.0 * 1.5 * 0.5)


def make_problem(params, u_minus, s=S_DEFAULT, u_plus=0.0):
    return WaveProblem(u_minus=u_minus, u_plus=u_plus, s=s,
                       wave_class=classify(params, u_minus, u_plus, s))


@pytest.fixture(scope="session")
def dc_profile():
    p = default_params()
    return compute_profile(make_problem(p, UM_STRONG), p)


@pytest.fixture(scope="session")
def q0_profile():
    p = default_params(q=0.0)
    return compute_profile(make_problem(p, 3.0), p)


@pytest.fixture(scope="session")
def dc_spectral(dc_profile):
    return SpectralProblem(dc_profile)
