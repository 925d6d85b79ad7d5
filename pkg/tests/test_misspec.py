import math

import numpy as np
import pytest

from revcheck import misspec
from revcheck.core_stats import Series, StudentT, tail_prob
from revcheck.errors import DegenerateData, TooFewResiduals, Underdetermined
from revcheck.misspec import (
    FAIL,
    PASS,
    UNTESTED,
    BatteryConfig,
    auxiliary_trend_lag_test,
    corrected_correlation,
    dememorize,
    detrend,
    homoskedasticity_check,
    linearity_check,
    normality_check,
    ordering_shift_test,
    run_battery,
)
from revcheck.regression import Dataset, ModelSpec, OrderingVariable, fit


def classical_added_variable_f(y, base_cols, added_cols):
    """Textbook F for added regressors, from the original response.

    The implementation under test regresses residuals instead; the two
    routes are algebraically identical, which this oracle verifies.
    """
    n = len(y)
    X = np.column_stack([np.ones(n)] + list(base_cols))
    XZ = np.column_stack([X] + list(added_cols))

    def rss(A):
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = y - A @ coef
        return float(r @ r)

    rss_r, rss_f = rss(X), rss(XZ)
    q = XZ.shape[1] - X.shape[1]
    return ((rss_r - rss_f) / q) / (rss_f / (n - XZ.shape[1]))


def iid_dataset(seed, n=120, orderings="both"):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    y = 1.0 + 0.5 * x + rng.standard_normal(n)
    ords = {}
    if orderings in ("both", "time"):
        ords["t"] = OrderingVariable("t", "time", np.arange(1.0, n + 1.0))
    if orderings in ("both", "group"):
        ords["g"] = OrderingVariable("g", "binary_group", np.repeat([1.0, 0.0], n // 2))
    return Dataset(columns={"y": y, "x": x}, orderings=ords)


SPEC = ModelSpec(response="y", regressors=("x",))


def test_detrend_kills_polynomial_trend():
    n = 50
    s = np.arange(1.0, n + 1.0) / n
    series = Series(4.0 - 3.0 * s + 2.0 * s**2 - s**3, "trend")
    resid = detrend(series, degree=3)
    assert np.max(np.abs(resid.values)) < 1e-9


def test_detrend_residuals_orthogonal_to_trend_columns():
    rng = np.random.default_rng(8)
    n = 80
    series = Series(rng.standard_normal(n))
    resid = detrend(series, degree=2)
    s = np.arange(1.0, n + 1.0) / n
    for col in (np.ones(n), s, s**2):
        assert abs(col @ resid.values) < 1e-8


def test_dememorize_shape_and_orthogonality():
    rng = np.random.default_rng(9)
    n = 100
    series = Series(rng.standard_normal(n))
    out = dememorize(series, lags=2)
    assert len(out.values) == n - 2
    original = series.values
    for k in (1, 2):
        lagged = original[2 - k : n - k]
        assert abs(lagged @ out.values) < 1e-8


def test_dememorize_too_short():
    with pytest.raises(Underdetermined):
        dememorize(Series([1.0, 2.0, 3.0]), lags=2)


def test_corrected_correlation_deflates_spurious_pair():
    rng = np.random.default_rng(3)
    n = 60
    s = np.arange(1.0, n + 1.0) / n
    x = 10.0 + 5.0 * s + 0.3 * rng.standard_normal(n)
    y = -2.0 + 4.0 * s + 0.3 * rng.standard_normal(n)
    naive = np.corrcoef(x, y)[0, 1]
    assert naive > 0.9
    out = corrected_correlation(Series(x), Series(y), BatteryConfig())
    assert abs(out.rho) < 0.3
    assert out.n_effective == n - 2
    # p recomputed from the t transform it reports through
    df = out.n_effective - 2
    t = out.rho * math.sqrt(df / (1 - out.rho**2))
    assert math.isclose(out.p_value, tail_prob(StudentT(df), t, "two"), rel_tol=1e-12)


def test_corrected_correlation_keeps_genuine_link():
    rng = np.random.default_rng(4)
    n = 200
    x = rng.standard_normal(n)
    y = x + 0.1 * rng.standard_normal(n)
    out = corrected_correlation(Series(x), Series(y), BatteryConfig())
    assert out.rho > 0.9
    assert out.p_value < 1e-6


def test_normality_check_behavior():
    rng = np.random.default_rng(12)
    assert normality_check(rng.standard_normal(500)).passed
    assert not normality_check(rng.exponential(size=500)).passed
    with pytest.raises(TooFewResiduals):
        normality_check(np.arange(7.0))
    with pytest.raises(DegenerateData):
        normality_check(np.ones(50))


def test_linearity_check_behavior():
    rng = np.random.default_rng(21)
    n = 150
    x = rng.standard_normal(n)
    curved = Dataset(columns={"y": x**2 + 0.2 * rng.standard_normal(n), "x": x}, orderings={})
    base = fit(curved, SPEC)
    assert linearity_check(curved, base).joint_p < 1e-6

    straight = iid_dataset(24, orderings="none")
    assert linearity_check(straight, fit(straight, SPEC)).joint_p > 0.05


def test_homoskedasticity_grouped_behavior():
    rng = np.random.default_rng(31)
    n = 40
    x = rng.standard_normal(2 * n)
    scale = np.repeat([1.0, 4.0], n)
    y = 1.0 + 0.5 * x + scale * rng.standard_normal(2 * n)
    data = Dataset(
        columns={"y": y, "x": x},
        orderings={"g": OrderingVariable("g", "binary_group", np.repeat([1.0, 0.0], n))},
    )
    check = homoskedasticity_check(data, fit(data, SPEC), ordering="g")
    assert not check.passed

    calm = iid_dataset(32, orderings="group")
    assert homoskedasticity_check(calm, fit(calm, SPEC), ordering="g").passed


def test_homoskedasticity_regression_fallback():
    rng = np.random.default_rng(33)
    n = 300
    x = rng.standard_normal(n)
    y = 1.0 + 0.5 * x + np.sqrt(0.2 + x**2) * rng.standard_normal(n)
    data = Dataset(columns={"y": y, "x": x}, orderings={})
    assert not homoskedasticity_check(data, fit(data, SPEC)).passed

    calm = iid_dataset(34, orderings="none")
    assert homoskedasticity_check(calm, fit(calm, SPEC)).passed


def test_trend_lag_flags_serial_dependence():
    rng = np.random.default_rng(41)
    n = 200
    u = np.empty(n)
    u[0] = rng.standard_normal() / math.sqrt(1 - 0.8**2)
    for t in range(1, n):
        u[t] = 0.8 * u[t - 1] + rng.standard_normal()
    x = rng.standard_normal(n)
    data = Dataset(
        columns={"y": 1.0 + 0.5 * x + u, "x": x},
        orderings={"t": OrderingVariable("t", "time", np.arange(1.0, n + 1.0))},
    )
    aux = auxiliary_trend_lag_test(data, fit(data, SPEC), BatteryConfig())
    assert aux.joint_p < 1e-6

    calm = iid_dataset(42, orderings="time")
    calm_aux = auxiliary_trend_lag_test(calm, fit(calm, SPEC), BatteryConfig())
    assert calm_aux.joint_p > 0.05
    # trend powers 1..2 plus 2 lags of response and regressor
    assert len(calm_aux.added_terms) == 6


def test_ordering_shift_flags_intercept_jump():
    rng = np.random.default_rng(51)
    n = 50
    x = rng.standard_normal(2 * n)
    g = np.repeat([1.0, 0.0], n)
    y = 1.0 + 0.5 * x + 3.0 * (g == 0.0) + rng.standard_normal(2 * n)
    data = Dataset(
        columns={"y": y, "x": x},
        orderings={"g": OrderingVariable("g", "binary_group", g)},
    )
    aux = ordering_shift_test(data, fit(data, SPEC), "g")
    assert aux.joint_p < 1e-6


def test_shift_f_matches_classical_added_variable_oracle():
    data = iid_dataset(52, orderings="group")
    base = fit(data, SPEC)
    aux = ordering_shift_test(data, base, "g")
    dummy = (data.ordering("g").values == 1.0).astype(float)
    oracle = classical_added_variable_f(
        data.column("y"), [data.column("x")], [dummy]
    )
    assert math.isclose(aux.joint_f_stat, oracle, rel_tol=1e-9)


def test_linearity_f_matches_classical_added_variable_oracle():
    data = iid_dataset(53, orderings="none")
    base = fit(data, SPEC)
    aux = linearity_check(data, base)
    oracle = classical_added_variable_f(
        data.column("y"), [data.column("x")], [data.column("x") ** 2]
    )
    assert math.isclose(aux.joint_f_stat, oracle, rel_tol=1e-9)


def test_run_battery_clean_data_all_pass():
    data = iid_dataset(61)
    report = run_battery(data, fit(data, SPEC), BatteryConfig())
    assert set(report.per_assumption) == set(misspec.ASSUMPTIONS)
    assert all(status == PASS for status in report.per_assumption.values())
    assert report.overall_adequate
    assert not report.degenerate
    labels = [name for name, _ in report.evidence]
    assert "normality" in labels and "linearity" in labels
    assert "variance-ratio(g)" in labels
    assert "trend-lag" in labels and "ordering-shift(g)" in labels


def test_run_battery_marks_untested_without_orderings():
    data = iid_dataset(62, orderings="none")
    report = run_battery(data, fit(data, SPEC), BatteryConfig())
    statuses = report.per_assumption
    assert statuses["[4] independence"] == UNTESTED
    assert statuses["[5] parameter invariance"] == UNTESTED
    assert statuses["[1] normality"] == PASS
    assert report.p_values["[4] independence"] is None
    assert report.overall_adequate  # untested is not a failure


def test_run_battery_flags_shift_and_reports_min_p():
    rng = np.random.default_rng(63)
    n = 60
    x = rng.standard_normal(2 * n)
    g = np.repeat([1.0, 0.0], n)
    y = 1.0 + 0.5 * x + 4.0 * (g == 0.0) + rng.standard_normal(2 * n)
    data = Dataset(
        columns={"y": y, "x": x},
        orderings={"g": OrderingVariable("g", "binary_group", g)},
    )
    report = run_battery(data, fit(data, SPEC), BatteryConfig())
    assert report.per_assumption["[5] parameter invariance"] == FAIL
    assert report.p_values["[5] parameter invariance"] < 0.05
    assert not report.overall_adequate


def test_run_battery_degenerate_base():
    data = Dataset(
        columns={"y": np.arange(8.0), "x": np.arange(8.0)},
        orderings={},
    )
    report = run_battery(data, fit(data, SPEC), BatteryConfig())
    assert report.degenerate
    assert all(status == UNTESTED for status in report.per_assumption.values())


def test_run_battery_respects_alpha():
    data = iid_dataset(64)
    base = fit(data, SPEC)
    strict = run_battery(data, base, BatteryConfig(alpha=0.9999))
    assert not strict.overall_adequate  # nearly everything fails at alpha ~ 1
    lax = run_battery(data, base, BatteryConfig(alpha=1e-12))
    assert lax.overall_adequate
