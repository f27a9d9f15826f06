import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import as_cov, modes_234, random_physical
from tricolor.errors import PhysicsError, TricolorError
from tricolor.gaussian_core import CovarianceMatrix, VarianceDb
from tricolor.vlf_criteria import (
    ENTANGLED,
    NOT_DEMONSTRATED,
    QUANTITY_NAMES,
    REFERENCE_TABLE,
    MeasuredDbTable,
    criteria_from_measurements,
    evaluate,
    evaluate_optimal,
    format_measured_table,
    format_result_csv,
    format_result_text,
    inequality_combos,
    optimal_gains,
    parse_measured_table,
)

GRID = np.arange(-30000, 30001) * 1e-4


def grid_gains(v):
    """Brute-force minimizer of each phase-sum variance on a 1e-4 grid over [-3, 3]."""
    y = v[1::2, 1::2]
    out = []
    for k in range(3):
        w = np.ones((GRID.size, 3))
        w[:, k] = GRID
        var = np.einsum("ij,jk,ik->i", w, y, w)
        out.append(GRID[np.argmin(var)])
    return np.array(out)


def sample_matrices(n, seed=2024):
    rng = np.random.default_rng(seed)
    return [random_physical(rng, 3, scale=0.5) for _ in range(n)]


def test_vacuum_sits_on_the_boundary():
    res = evaluate_optimal(CovarianceMatrix.vacuum(modes_234()))
    assert res.deltas == (4.0, 4.0, 4.0)
    assert res.gains == (0.0, 0.0, 0.0)
    assert res.verdict == NOT_DEMONSTRATED
    assert not res.violated


def test_optimal_gains_match_grid_search():
    for v in sample_matrices(100):
        g = np.array(optimal_gains(as_cov(v)))
        assert np.all(np.abs(g) < 3)
        np.testing.assert_allclose(g, grid_gains(v), atol=1e-4)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), gains=st.tuples(*[st.floats(-3, 3)] * 3))
def test_optimal_gains_never_lose(seed, gains):
    cov = as_cov(random_physical(np.random.default_rng(seed)))
    best = evaluate_optimal(cov).deltas
    other = evaluate(cov, gains).deltas
    for b, o in zip(best, other):
        assert b <= o + 1e-9 * max(1.0, abs(o))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_product_states_never_violate(seed):
    # separable: independent single-mode physical states
    rng = np.random.default_rng(seed)
    v = np.zeros((6, 6))
    for k in range(3):
        v[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = random_physical(rng, 1, scale=0.8)
    res = evaluate_optimal(as_cov(v))
    assert min(res.deltas) >= 4 - 1e-9
    assert res.verdict == NOT_DEMONSTRATED


def test_zero_phase_variance_rejected():
    v = np.eye(6)
    v[1, 1] = 0.0
    with pytest.raises(PhysicsError):
        optimal_gains(as_cov(v))


def test_inequality_combos_layout():
    pairs = inequality_combos((0.9, 1.1, 1.2))
    assert [str(a) for a, _ in pairs] == ["X3-X4", "X2-X4", "X2-X3"]
    assert [str(b) for _, b in pairs] == ["0.9*Y2+Y3+Y4", "Y2+1.1*Y3+Y4", "Y2+Y3+1.2*Y4"]


def test_reference_table_arithmetic():
    res = criteria_from_measurements(REFERENCE_TABLE)
    # hand arithmetic: 2*10^(-0.41) + (0.95^2 + 2)*10^(-0.11)
    d1 = 2 * 10 ** -0.41 + (0.95**2 + 2) * 10 ** -0.11
    d2 = 2 * 10 ** -0.32 + 3 * 10 ** -0.05
    assert res.delta1 == pytest.approx(d1, abs=1e-12)
    assert res.delta2 == pytest.approx(d2, abs=1e-12)
    assert res.delta3 == pytest.approx(d2, abs=1e-12)
    assert res.delta1 == pytest.approx(3.031, abs=1e-3)
    assert res.delta2 == pytest.approx(3.631, abs=1e-3)
    assert res.uncertainties[0] == pytest.approx(0.06, abs=0.01)
    assert res.uncertainties[1] == pytest.approx(0.07, abs=0.01)
    assert res.verdict == ENTANGLED


def _table(dbs, gains=(1.0, 1.0, 1.0)):
    return MeasuredDbTable(tuple(VarianceDb(d) for d in dbs), gains)


def test_qnl_table_gives_five():
    res = criteria_from_measurements(_table([0.0] * 6))
    assert res.deltas == pytest.approx((5.0, 5.0, 5.0))
    assert res.verdict == NOT_DEMONSTRATED


def test_single_violation_is_not_enough():
    res = criteria_from_measurements(_table([-6.0, -6.0, 0.0, 0.0, 0.0, 0.0]))
    assert res.violated == frozenset({1})
    assert res.verdict == NOT_DEMONSTRATED
    assert "two are required" in res.note


def test_table_shape_checked():
    with pytest.raises(ValueError):
        MeasuredDbTable((VarianceDb(0.0),) * 5, (1.0, 1.0, 1.0))


def test_csv_round_trip():
    assert parse_measured_table(format_measured_table(REFERENCE_TABLE)) == REFERENCE_TABLE


def test_csv_without_header_and_reordered():
    rows = format_measured_table(REFERENCE_TABLE).splitlines()[1:]
    assert parse_measured_table("\n".join(reversed(rows))) == REFERENCE_TABLE


@pytest.mark.parametrize(
    "text, match",
    [
        ("X3-X4,-4.1,0.1,,\n", "six rows"),
        ("\n".join(f"X3-X4,-4.1,0.1,1,0" for _ in range(6)), "repeats"),
        ("\n".join(f"{q},-1,0.1,{'' if k % 2 == 0 else 'x'},0" for k, q in enumerate(QUANTITY_NAMES)), "non-numeric"),
        ("\n".join(f"{q},-1,0.1,,0" for q in QUANTITY_NAMES), "needs a gain"),
        ("\n".join(f"Q{k},-1,0.1,1,0" for k in range(6)), "unknown quantity"),
    ],
)
def test_csv_errors(text, match):
    with pytest.raises(TricolorError, match=match):
        parse_measured_table(text)


def test_report_formats():
    res = criteria_from_measurements(REFERENCE_TABLE)
    text = format_result_text(res)
    assert "Δ1 = 3.031 ± 0.06" in text
    assert "verdict: entangled" in text
    csv = format_result_csv(res).splitlines()
    assert csv[0] == "inequality,delta,uncertainty,gain,violated"
    assert csv[-1].startswith("verdict,entangled")


def test_uncertainty_grows_with_gain_error():
    loose = MeasuredDbTable(REFERENCE_TABLE.values, REFERENCE_TABLE.gains, (0.2, 0.2, 0.2))
    assert criteria_from_measurements(loose).uncertainties[0] > criteria_from_measurements(REFERENCE_TABLE).uncertainties[0]


def test_boundary_value_is_four_in_vacuum_units():
    # a coherent state has the same noise as vacuum
    res = evaluate(CovarianceMatrix.vacuum(modes_234()), (1.0, 1.0, 1.0))
    assert res.deltas == (5.0, 5.0, 5.0)
    assert math.isclose(evaluate_optimal(CovarianceMatrix.vacuum(modes_234())).delta1, 4.0)
