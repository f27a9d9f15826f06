import math

import numpy as np
import pytest
from scipy import linalg

from tricolor.cascade_model import CascadeConfig
from tricolor.gaussian_core import CovarianceMatrix, ModeLabel, symplectic_form
from tricolor.nopo_model import NopoParams

OMEGA_2MHZ = 2.0 * math.pi * 2e6

_ACCEPTANCE_LINES = []


def nopo1_params(**kw):
    base = dict(
        pump_wavelength=398.0,
        signal_wavelength=746.64,
        idler_wavelength=852.35,
        cavity_length=101.5,
        finesse=195,
        t_out=0.03,
        p_threshold=75.0,
        p_pump=118.0,
        t_in_pump=0.30,
    )
    base.update(kw)
    return NopoParams(**base)


def nopo2_params(**kw):
    base = dict(
        pump_wavelength=746.64,
        signal_wavelength=1550.60,
        idler_wavelength=1440.06,
        cavity_length=101.9,
        finesse=149,
        t_out=0.04,
        p_threshold=4.5,
        p_pump=14.6,
        t_in_pump=0.10,
    )
    base.update(kw)
    return NopoParams(**base)


def operating_point(**kw):
    base = dict(nopo1=nopo1_params(), nopo2=nopo2_params(), omega=OMEGA_2MHZ)
    base.update(kw)
    return CascadeConfig(**base)


def random_symplectic(rng, n_modes, scale=0.6):
    """``expm(Ω H)`` with ``H`` symmetric is symplectic for the form Ω."""
    h = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
    h = 0.5 * (h + h.T)
    return linalg.expm(symplectic_form(n_modes) @ h)


def random_physical(rng, n_modes=3, scale=0.6, max_thermal=2.0):
    """``S diag(ν) S^T`` with symplectic ``S`` and thermal ``ν >= 1``."""
    s = random_symplectic(rng, n_modes, scale)
    nu = np.repeat(rng.uniform(1.0, max_thermal, n_modes), 2)
    v = s @ np.diag(nu) @ s.T
    return 0.5 * (v + v.T)


def modes_234():
    return (ModeLabel(2, 852.35), ModeLabel(3, 1550.60), ModeLabel(4, 1440.06))


def as_cov(matrix, modes=None):
    return CovarianceMatrix(modes or modes_234(), matrix)


@pytest.fixture
def op():
    return operating_point()


@pytest.fixture
def acceptance_line():
    def record(number, passed, detail):
        _ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
