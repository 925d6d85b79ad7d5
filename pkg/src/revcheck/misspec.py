"""Model-assumption diagnostics for linear regression fits.

The battery probes the five assumptions of the Normal linear regression
model behind a fit:

  [1] normality            residual skewness/kurtosis omnibus test
  [2] linearity            squared-regressor auxiliary regression
  [3] homoskedasticity     variance-ratio F across groups, or a
                           squared-residual auxiliary regression
  [4] independence         lag terms in the trend/lag auxiliary regression
  [5] parameter invariance trend terms in the same auxiliary regression,
                           and level-shift dummies across group orderings

Auxiliary regressions regress the base fit's residuals on the original
regressors plus the probe terms and F-test the probe block jointly; this
is numerically identical to the classical added-variable F-test. Each
assumption ends up marked pass, fail, or untested; a check that cannot run
is never reported as a pass.

The module also provides the detrend / dememorize transforms and the
corrected correlation used to screen trending, temporally dependent pairs
for spurious association.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .core_stats import FisherF, Series, StudentT, least_squares, sample_moments, tail_prob
from .errors import (
    DegenerateData,
    GroupTooSmall,
    InvalidSpec,
    MismatchedInputs,
    TooFewResiduals,
    Underdetermined,
)
from .regression import Dataset, FitResult, ModelSpec, Shift, fit, subset_fit

PASS = "pass"
FAIL = "fail"
UNTESTED = "untested"

ASSUMPTIONS = (
    "[1] normality",
    "[2] linearity",
    "[3] homoskedasticity",
    "[4] independence",
    "[5] parameter invariance",
)


@dataclass(frozen=True)
class BatteryConfig:
    """Settings shared by the battery's checks.

    trend_degree controls the detrending polynomial; the trend block of the
    auxiliary regression uses powers 1 .. trend_degree - 1. lag_count is
    the number of lags both for the auxiliary regression and dememorize.
    orderings_to_test names the dataset orderings to probe; empty means
    every declared ordering.
    """

    alpha: float = 0.05
    trend_degree: int = 3
    lag_count: int = 2
    orderings_to_test: tuple = ()

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidSpec(f"alpha must be in (0, 1), got {self.alpha!r}")
        if self.trend_degree < 1:
            raise InvalidSpec("trend_degree must be >= 1")
        if self.lag_count < 1:
            raise InvalidSpec("lag_count must be >= 1")
        object.__setattr__(self, "orderings_to_test", tuple(self.orderings_to_test))


@dataclass(frozen=True)
class CheckResult:
    """A scalar diagnostic: statistic, p-value, and the pass decision."""

    stat: float
    p: float
    passed: bool


@dataclass(frozen=True)
class AuxiliaryResult:
    """An auxiliary residual regression with a joint F-test of added terms."""

    aux_fit: FitResult
    added_terms: tuple
    joint_f_stat: float
    joint_p: float
    per_term_p: dict


@dataclass(frozen=True)
class CorrectedCorrelation:
    """Correlation after removing trends and own-lag memory from both series."""

    rho: float
    p_value: float
    n_effective: int


@dataclass(frozen=True)
class MisspecReport:
    """Battery outcome: one status per assumption plus the raw evidence.

    p_values holds the decisive p per assumption (the smallest across the
    checks that informed it), or None where untested. overall_adequate is
    true exactly when no assumption is marked fail; untested assumptions do
    not count as passes and are surfaced to the verdict layer separately.
    """

    per_assumption: dict
    p_values: dict
    evidence: tuple
    overall_adequate: bool
    degenerate: bool = False
    source: str = ""


def _require_live_fit(base: FitResult) -> None:
    if base.degenerate:
        raise DegenerateData("residuals are numerically zero-variance")


def _plain_regressors(base: FitResult) -> tuple:
    if base.spec.generic_terms:
        raise InvalidSpec("auxiliary diagnostics support base fits without generated terms")
    return base.spec.regressors


def _fresh_name(taken, stem: str) -> str:
    name = stem
    while name in taken:
        name = "_" + name
    return name


def _added_terms_f(columns: dict, resid_name: str, base_names: tuple, added_names: tuple) -> AuxiliaryResult:
    """F-test of `added_names` in a residual regression, via two nested fits."""
    aux_data = Dataset(columns=columns)
    full = fit(aux_data, ModelSpec(response=resid_name, regressors=base_names + added_names))
    if full.degenerate:
        raise DegenerateData("auxiliary regression is degenerate")
    restricted = fit(aux_data, ModelSpec(response=resid_name, regressors=base_names))
    q = len(added_names)
    df_den = full.n_used - len(full.coefficients)
    rss_f = float(full.residuals @ full.residuals)
    rss_r = float(restricted.residuals @ restricted.residuals)
    f_stat = ((rss_r - rss_f) / q) / (rss_f / df_den)
    f_stat = max(f_stat, 0.0)
    joint_p = tail_prob(FisherF(q, df_den), f_stat, "one")
    per_term_p = {name: float(full.p_values[full.index_of(name)]) for name in added_names}
    return AuxiliaryResult(
        aux_fit=full,
        added_terms=added_names,
        joint_f_stat=float(f_stat),
        joint_p=float(joint_p),
        per_term_p=per_term_p,
    )


def auxiliary_trend_lag_test(data: Dataset, base: FitResult, cfg: BatteryConfig = BatteryConfig()) -> AuxiliaryResult:
    """Probe the residuals for trend and memory left by the base fit.

    Regresses the residuals on the original regressors plus normalized time
    powers t, t^2, ..., t^(trend_degree - 1) and lags 1..lag_count of the
    response and of every regressor, then F-tests the added block jointly.
    A significant joint F indicts independence ([4]) and time invariance of
    the parameters ([5]) together.
    """
    _require_live_fit(base)
    regressors = _plain_regressors(base)
    window = base.row_index
    if window.size > 1 and not np.all(np.diff(window) == 1):
        raise InvalidSpec("trend/lag diagnostics need a contiguous fit window")
    lags = cfg.lag_count
    usable = window >= lags
    rows = window[usable]
    if rows.size == 0:
        raise Underdetermined("lag depth leaves no usable rows")
    u = base.residuals[usable]

    taken = set(regressors)
    resid_name = _fresh_name(taken, "resid")
    columns = {resid_name: u}
    base_names = []
    for name in regressors:
        columns[name] = data.column(name)[rows]
        base_names.append(name)
    added = []
    m = rows.size
    s = np.arange(1, m + 1) / m
    for power in range(1, cfg.trend_degree):
        tname = _fresh_name(set(columns), f"t^{power}")
        columns[tname] = s**power
        added.append(tname)
    for source in (base.spec.response, *regressors):
        series = data.column(source)
        for k in range(1, lags + 1):
            lname = _fresh_name(set(columns), f"{source}[-{k}]")
            columns[lname] = series[rows - k]
            added.append(lname)
    if not added:
        raise InvalidSpec("configuration adds no trend or lag terms")
    return _added_terms_f(columns, resid_name, tuple(base_names), tuple(added))


def ordering_shift_test(data: Dataset, base: FitResult, ordering: str) -> AuxiliaryResult:
    """Probe for level shifts of the residual mean across ordering groups.

    Regresses the residuals on the original regressors plus group dummies
    built from the ordering; the joint F of the dummy block tests whether
    the fit's parameters hold across groups (assumption [5] in the group
    direction).
    """
    _require_live_fit(base)
    regressors = _plain_regressors(base)
    ordering_var = data.ordering(ordering)
    if ordering_var.kind == "time":
        raise InvalidSpec("shift diagnostics need a group ordering")
    rows = base.row_index
    values = ordering_var.values[rows]
    if ordering_var.kind == "binary_group":
        dummy_levels = [1.0]
        dummies = [(values == 1.0).astype(float)]
    else:
        levels = sorted(set(values.tolist()))
        if len(levels) < 2:
            raise GroupTooSmall(f"ordering {ordering!r} has a single level in the fit window")
        dummy_levels = levels[1:]
        dummies = [(values == level).astype(float) for level in dummy_levels]
    for dummy in dummies:
        count = int(dummy.sum())
        if count == 0 or count == len(dummy):
            raise GroupTooSmall(f"ordering {ordering!r} has an empty group in the fit window")

    taken = set(regressors)
    resid_name = _fresh_name(taken, "resid")
    columns = {resid_name: base.residuals}
    for name in regressors:
        columns[name] = data.column(name)[rows]
    added = []
    for level, dummy in zip(dummy_levels, dummies):
        dname = _fresh_name(set(columns), f"shift({ordering}={level})")
        columns[dname] = dummy
        added.append(dname)
    return _added_terms_f(columns, resid_name, tuple(regressors), tuple(added))


def linearity_check(data: Dataset, base: FitResult, alpha: float = 0.05) -> AuxiliaryResult:
    """Probe for curvature: residuals on regressors plus squared regressors.

    Squares of two-valued (dummy) regressors are skipped since they carry
    no new information. Raises InvalidSpec when no square adds anything.
    """
    _require_live_fit(base)
    regressors = _plain_regressors(base)
    rows = base.row_index
    taken = set(regressors)
    resid_name = _fresh_name(taken, "resid")
    columns = {resid_name: base.residuals}
    added = []
    for name in regressors:
        values = data.column(name)[rows]
        columns[name] = values
        if len(np.unique(values)) <= 2:
            continue
        sq_name = _fresh_name(set(columns), f"{name}^2")
        columns[sq_name] = values**2
        added.append(sq_name)
    if not added:
        raise InvalidSpec("no regressor admits a meaningful squared term")
    return _added_terms_f(columns, resid_name, tuple(regressors), tuple(added))


def normality_check(residuals, alpha: float = 0.05) -> CheckResult:
    """Skewness/kurtosis omnibus test of residual normality (chi^2, 2 df).

    Raises:
        TooFewResiduals: if fewer than 8 residuals are supplied.
        DegenerateData: if the residuals are numerically constant.
    """
    u = np.asarray(residuals, dtype=float)
    if u.ndim != 1:
        raise MismatchedInputs("residuals must be one-dimensional")
    if u.size < 8:
        raise TooFewResiduals(f"normality check needs n >= 8, got {u.size}")
    if not np.all(np.isfinite(u)):
        raise DegenerateData("residuals contain non-finite values")
    if np.var(u) <= 1e-15 * max(1.0, float(np.mean(u**2))):
        raise DegenerateData("residuals are numerically constant")
    with warnings.catch_warnings():
        # scipy warns that the kurtosis approximation is rough below n=20;
        # the pass/fail contract already tolerates that regime.
        warnings.simplefilter("ignore")
        stat, p = scipy_stats.normaltest(u)
    return CheckResult(stat=float(stat), p=float(p), passed=bool(p >= alpha))


def _group_variance_ratio(data: Dataset, base: FitResult, ordering: str, alpha: float) -> CheckResult:
    ordering_var = data.ordering(ordering)
    if ordering_var.kind == "time":
        raise InvalidSpec("grouped variance check needs a group ordering")
    levels = sorted(set(ordering_var.values[base.row_index].tolist()))
    if len(levels) != 2:
        raise InvalidSpec(f"grouped variance check needs exactly two groups, found {len(levels)}")
    spec = base.spec
    fits = [subset_fit(data, spec, ordering, level) for level in levels]
    dfs = [f.n_used - len(f.coefficients) for f in fits]
    if min(dfs) < 1:
        raise GroupTooSmall("a group leaves no residual degrees of freedom")
    variances = [float(f.residuals @ f.residuals) / d for f, d in zip(fits, dfs)]
    if min(variances) <= 0:
        raise DegenerateData("a group has zero residual variance")
    f_stat = variances[0] / variances[1]
    p = tail_prob(FisherF(dfs[0], dfs[1]), f_stat, "two")
    return CheckResult(stat=float(f_stat), p=float(p), passed=bool(p >= alpha))


def _squared_residual_regression(data: Dataset, base: FitResult, alpha: float) -> CheckResult:
    rows = base.row_index
    regressors = _plain_regressors(base)
    taken = set(regressors)
    sq_resid_name = _fresh_name(taken, "resid_sq")
    columns = {sq_resid_name: base.residuals**2}
    added = []
    for name in regressors:
        values = data.column(name)[rows]
        columns[name] = values
        added.append(name)
        if len(np.unique(values)) > 2:
            sq_name = _fresh_name(set(columns), f"{name}^2")
            columns[sq_name] = values**2
            added.append(sq_name)
    if not added:
        raise InvalidSpec("no regressors available for the variance regression")
    aux = _added_terms_f(columns, sq_resid_name, (), tuple(added))
    return CheckResult(stat=aux.joint_f_stat, p=aux.joint_p, passed=bool(aux.joint_p >= alpha))


def homoskedasticity_check(
    data: Dataset, base: FitResult, ordering: str = None, alpha: float = 0.05
) -> CheckResult:
    """Probe for unequal residual variance.

    With a two-level group ordering: the model is refit inside each group
    and the ratio of residual variances is referred to an F distribution
    (two-sided), which is exactly sized under the Normal null. Without an
    ordering: squared residuals are regressed on the regressors and their
    squares and the block is F-tested.
    """
    _require_live_fit(base)
    if ordering is not None:
        return _group_variance_ratio(data, base, ordering, alpha)
    return _squared_residual_regression(data, base, alpha)


def detrend(series: Series, degree: int = 3) -> Series:
    """Residuals of a series on a normalized polynomial trend.

    The trend columns are (t/n)^1 .. (t/n)^degree with t = 1..n, plus an
    intercept. Applying detrend twice is the same as applying it once.
    """
    if degree < 1:
        raise InvalidSpec("degree must be >= 1")
    y = series.values
    n = len(y)
    if n <= degree + 1:
        raise Underdetermined(f"detrend of degree {degree} needs more than {degree + 1} points")
    s = np.arange(1, n + 1) / n
    design = np.column_stack([np.ones(n)] + [s**k for k in range(1, degree + 1)])
    solution = least_squares(design, y)
    return Series(values=solution.residuals, label=series.label)


def dememorize(series: Series, lags: int = 2) -> Series:
    """Residuals of a series on its own first `lags` lags (plus intercept).

    The first `lags` observations are consumed as initial conditions, so
    the output is shorter than the input by `lags`.

    Raises:
        Underdetermined: if the series is too short or has zero variance.
    """
    if lags < 1:
        raise InvalidSpec("lags must be >= 1")
    y = series.values
    n = len(y)
    if n <= lags + 2:
        raise Underdetermined(f"dememorize with {lags} lags needs more than {lags + 2} points")
    if np.var(y) <= 1e-15 * max(1.0, float(np.mean(y**2))):
        raise Underdetermined("series has zero variance")
    rows = np.arange(lags, n)
    design = np.column_stack([np.ones(len(rows))] + [y[rows - k] for k in range(1, lags + 1)])
    solution = least_squares(design, y[rows])
    return Series(values=solution.residuals, label=series.label)


def corrected_correlation(x: Series, y: Series, cfg: BatteryConfig = BatteryConfig()) -> CorrectedCorrelation:
    """Correlation between two series after detrending and dememorizing both.

    Both series are detrended with a degree-`trend_degree` polynomial, then
    each is replaced by the residuals of its own-lag regression with
    `lag_count` lags. The correlation of what remains is tested against
    zero with a Student-t statistic on n_effective - 2 degrees of freedom.
    """
    if len(x) != len(y):
        raise MismatchedInputs(f"series lengths differ: {len(x)} vs {len(y)}")
    if len(x) <= cfg.trend_degree + cfg.lag_count + 3:
        raise Underdetermined("too few observations for the configured trend degree and lags")
    x_clean = dememorize(detrend(x, cfg.trend_degree), cfg.lag_count)
    y_clean = dememorize(detrend(y, cfg.trend_degree), cfg.lag_count)
    n_eff = len(x_clean)
    df = n_eff - 2
    if df < 1:
        raise Underdetermined("not enough effective observations for a correlation test")
    moments = sample_moments(np.column_stack([x_clean.values, y_clean.values]))
    rho = float(moments.corr[0, 1])
    if not np.isfinite(rho):
        raise Underdetermined("a corrected series has zero variance")
    if abs(rho) >= 1.0:
        return CorrectedCorrelation(rho=rho, p_value=0.0, n_effective=n_eff)
    t = rho * np.sqrt(df / (1.0 - rho * rho))
    p = tail_prob(StudentT(df), t, "two")
    return CorrectedCorrelation(rho=rho, p_value=float(p), n_effective=n_eff)


def _untested_report(source: str, degenerate: bool) -> MisspecReport:
    return MisspecReport(
        per_assumption={a: UNTESTED for a in ASSUMPTIONS},
        p_values={a: None for a in ASSUMPTIONS},
        evidence=(),
        overall_adequate=True,
        degenerate=degenerate,
        source=source,
    )


def run_battery(data: Dataset, base: FitResult, cfg: BatteryConfig = BatteryConfig(), source: str = "") -> MisspecReport:
    """Run every applicable check against a fit and collect the verdict.

    Checks that cannot run on the given data (too few rows, missing
    orderings, degenerate groups) leave their assumption marked untested.
    A degenerate base fit short-circuits: every assumption is untested and
    the report carries the degenerate flag.
    """
    if base.degenerate:
        return _untested_report(source, degenerate=True)

    alpha = cfg.alpha
    statuses = {a: UNTESTED for a in ASSUMPTIONS}
    p_values = {a: None for a in ASSUMPTIONS}
    evidence = []

    def record(label: str, p: float) -> None:
        if p_values[label] is None or p < p_values[label]:
            p_values[label] = float(p)
        if p < alpha:
            statuses[label] = FAIL
        elif statuses[label] != FAIL:
            statuses[label] = PASS

    names = cfg.orderings_to_test or tuple(data.orderings)
    ordering_vars = []
    for name in names:
        ordering_vars.append(data.ordering(name))
    time_orderings = [o.name for o in ordering_vars if o.kind == "time"]
    group_orderings = [o.name for o in ordering_vars if o.kind != "time"]

    norm_label, lin_label, hom_label, indep_label, invar_label = ASSUMPTIONS

    try:
        check = normality_check(base.residuals, alpha=alpha)
        evidence.append(("normality", check))
        record(norm_label, check.p)
    except (TooFewResiduals, DegenerateData):
        pass

    try:
        aux = linearity_check(data, base, alpha=alpha)
        evidence.append(("linearity", aux))
        record(lin_label, aux.joint_p)
    except (InvalidSpec, Underdetermined, DegenerateData):
        pass

    ran_grouped_variance = False
    for name in group_orderings:
        try:
            check = homoskedasticity_check(data, base, ordering=name, alpha=alpha)
        except (InvalidSpec, GroupTooSmall, Underdetermined, DegenerateData):
            continue
        evidence.append((f"variance-ratio({name})", check))
        record(hom_label, check.p)
        ran_grouped_variance = True
    if not ran_grouped_variance:
        try:
            check = homoskedasticity_check(data, base, alpha=alpha)
            evidence.append(("variance-regression", check))
            record(hom_label, check.p)
        except (InvalidSpec, Underdetermined, DegenerateData):
            pass

    if time_orderings:
        try:
            aux = auxiliary_trend_lag_test(data, base, cfg)
            evidence.append(("trend-lag", aux))
            record(indep_label, aux.joint_p)
            record(invar_label, aux.joint_p)
        except (InvalidSpec, Underdetermined, DegenerateData):
            pass

    for name in group_orderings:
        try:
            aux = ordering_shift_test(data, base, name)
        except (InvalidSpec, GroupTooSmall, Underdetermined, DegenerateData):
            continue
        evidence.append((f"ordering-shift({name})", aux))
        record(invar_label, aux.joint_p)

    overall = all(status != FAIL for status in statuses.values())
    return MisspecReport(
        per_assumption=statuses,
        p_values=p_values,
        evidence=tuple(evidence),
        overall_adequate=overall,
        degenerate=False,
        source=source,
    )
