import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tricolor.errors import ConfigError, PhysicsError
from tricolor.fiber_link import (
    AttenuationTable,
    degrade_db,
    load_attenuation,
    loss_budget_db,
    max_distance,
    parse_attenuation,
    sweep,
    transmission,
)


def test_shipped_table():
    t = load_attenuation()
    assert dict(t.entries) == {1550.0: 0.20, 1440.0: 0.25, 1064.0: 0.65}
    assert t.alpha(1550.6) == 0.20
    with pytest.raises(KeyError):
        t.alpha(1310.0)


@pytest.mark.parametrize("d, alpha, expected", [(20, 0.20, 0.398), (20, 0.65, 0.050), (0, 0.2, 1.0)])
def test_transmission(d, alpha, expected):
    assert transmission(d, alpha) == pytest.approx(expected, abs=1e-3)


def test_transmission_rejects_bad_input():
    with pytest.raises(ValueError):
        transmission(-1, 0.2)
    with pytest.raises(ValueError):
        transmission(1, 0.0)


def test_degrade_examples():
    assert degrade_db(-3.2, 0.0863) == pytest.approx(-0.2, abs=2e-3)
    assert degrade_db(-3.2, 1.0) == pytest.approx(-3.2, abs=1e-12)
    assert degrade_db(0.0, 0.3) == pytest.approx(0.0, abs=1e-12)
    for eta in (0.0, 1.1):
        with pytest.raises(ValueError):
            degrade_db(-3.2, eta)


def test_loss_budget_value():
    # -10 log10[(1 - 10^-0.02) / (1 - 10^-0.32)]
    expected = -10 * math.log10((1 - 10**-0.02) / (1 - 10**-0.32))
    assert loss_budget_db(-3.2, -0.2) == pytest.approx(expected, rel=1e-14)
    assert loss_budget_db(-3.2, -0.2) == pytest.approx(10.64, abs=0.01)


@pytest.mark.parametrize("alpha, km", [(0.20, 53.19), (0.25, 42.55), (0.65, 16.37)])
def test_max_distance(alpha, km):
    assert max_distance(-3.2, -0.2, alpha) == pytest.approx(km, abs=0.01)


def test_distance_times_alpha_constant():
    products = [max_distance(-3.2, -0.2, a) * a for a in (0.17, 0.2, 0.25, 0.65, 1.3)]
    assert max(products) - min(products) < 1e-9


def test_distance_reaches_cutoff():
    d = max_distance(-3.2, -0.2, 0.2)
    assert degrade_db(-3.2, transmission(d, 0.2)) == pytest.approx(-0.2, abs=1e-10)


def test_max_distance_errors():
    with pytest.raises(PhysicsError):
        max_distance(-0.1, -0.2, 0.2)
    with pytest.raises(PhysicsError):
        max_distance(-3.2, 0.5, 0.2)
    with pytest.raises(ValueError):
        max_distance(-3.2, -0.2, 0.0)


@settings(max_examples=100)
@given(v=st.floats(-15.0, -0.01), e1=st.floats(0.01, 1.0), e2=st.floats(0.01, 1.0))
def test_degrade_composes(v, e1, e2):
    assert degrade_db(v, e1 * e2) == pytest.approx(degrade_db(degrade_db(v, e1), e2), abs=1e-12)


@settings(max_examples=100)
@given(v=st.floats(-15.0, -0.01), e1=st.floats(0.01, 1.0), e2=st.floats(0.01, 1.0))
def test_degrade_monotone_and_below_qnl(v, e1, e2):
    lo, hi = sorted((e1, e2))
    assert degrade_db(v, lo) >= degrade_db(v, hi) - 1e-12
    assert degrade_db(v, lo) <= 0.0


def test_sweep_rows():
    rows = sweep(-3.2, 0.2, [0, 10, 20])
    assert rows.shape == (3, 2)
    assert rows[0, 1] == pytest.approx(-3.2)
    assert np.all(np.diff(rows[:, 1]) > 0)


def test_table_validation():
    with pytest.raises(ValueError):
        AttenuationTable(((1550, 0.2), (1550, 0.3)))
    with pytest.raises(ValueError):
        AttenuationTable(((1550, 0.0),))
    with pytest.raises(ConfigError, match=":2"):
        parse_attenuation("1550 0.2\n1440\n")
    with pytest.raises(ConfigError):
        parse_attenuation("1550 x\n")
    assert parse_attenuation("# c\n1550, 0.21\n").alpha(1550) == 0.21


def test_table_from_file(tmp_path):
    f = tmp_path / "att.txt"
    f.write_text("1310 0.33\n")
    assert load_attenuation(f).wavelengths == (1310.0,)
