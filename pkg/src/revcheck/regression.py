"""Datasets, model specifications, and ordinary least-squares fits.

A Dataset carries named columns plus declared ordering variables (time
indexes, group labels) that diagnostics later exploit. A ModelSpec names a
response, regressors, and optional generated terms: polynomial trends in
normalized time, lags of existing columns, and level-shift dummies built
from an ordering. Fitting produces a FitResult with the usual inference
summaries, computed through the QR solver in core_stats.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import core_stats
from .core_stats import StudentT, least_squares, tail_prob
from .errors import (
    EmptyData,
    GroupTooSmall,
    IndexOutOfRange,
    InvalidSpec,
    MismatchedInputs,
    NonFiniteInput,
    UnknownColumn,
    UnknownOrdering,
)

ORDERING_KINDS = ("time", "binary_group", "categorical")

# Relative floor below which a residual vector is treated as exactly zero.
_DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class OrderingVariable:
    """A declared ordering of the rows: time index or group membership."""

    name: str
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ORDERING_KINDS:
            raise InvalidSpec(f"ordering kind must be one of {ORDERING_KINDS}, got {self.kind!r}")
        values = np.asarray(self.values)
        if values.ndim != 1 or values.size == 0:
            raise EmptyData("ordering values must be a non-empty vector")
        if self.kind == "time":
            values = values.astype(float)
            if not np.all(np.isfinite(values)):
                raise NonFiniteInput(f"time ordering {self.name!r} has non-finite values")
            if not np.all(np.diff(values) > 0):
                raise InvalidSpec(f"time ordering {self.name!r} must be strictly increasing")
        elif self.kind == "binary_group":
            values = values.astype(float)
            if not set(np.unique(values)) <= {0.0, 1.0}:
                raise InvalidSpec(f"binary ordering {self.name!r} must contain only 0 and 1")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def take(self, rows: np.ndarray) -> "OrderingVariable":
        return OrderingVariable(self.name, self.kind, self.values[rows])


@dataclass(frozen=True)
class Dataset:
    """Named columns of equal length plus declared orderings."""

    columns: dict
    orderings: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.columns:
            raise EmptyData("dataset has no columns")
        cols = {}
        n = None
        for name, values in self.columns.items():
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1:
                raise MismatchedInputs(f"column {name!r} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise NonFiniteInput(f"column {name!r} contains non-finite values")
            if n is None:
                n = len(arr)
                if n == 0:
                    raise EmptyData("dataset has zero rows")
            elif len(arr) != n:
                raise MismatchedInputs(f"column {name!r} has length {len(arr)}, expected {n}")
            cols[name] = arr
        for name, ordering in self.orderings.items():
            if not isinstance(ordering, OrderingVariable):
                raise InvalidSpec(f"ordering {name!r} must be an OrderingVariable")
            if len(ordering) != n:
                raise MismatchedInputs(f"ordering {name!r} has length {len(ordering)}, expected {n}")
            if name in cols:
                raise InvalidSpec(f"name {name!r} is both a column and an ordering")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "orderings", dict(self.orderings))

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise UnknownColumn(f"no column named {name!r}") from None

    def ordering(self, name: str) -> OrderingVariable:
        try:
            return self.orderings[name]
        except KeyError:
            raise UnknownOrdering(f"no ordering named {name!r}") from None

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset(
            columns={k: v[rows] for k, v in self.columns.items()},
            orderings={k: o.take(rows) for k, o in self.orderings.items()},
        )


@dataclass(frozen=True)
class TrendPoly:
    """Polynomial trend terms t/n, (t/n)^2, ..., (t/n)^degree.

    The time index is 1-based within the fitted window and scaled by the
    window length, so every trend column lives in (0, 1] regardless of n.
    """

    degree: int

    def __post_init__(self):
        if self.degree < 1:
            raise InvalidSpec("trend degree must be >= 1")


@dataclass(frozen=True)
class Lags:
    """Lagged copies col[t-1], ..., col[t-count] of an existing column."""

    count: int
    of: str

    def __post_init__(self):
        if self.count < 1:
            raise InvalidSpec("lag count must be >= 1")


@dataclass(frozen=True)
class Shift:
    """Level-shift dummies built from a group ordering."""

    ordering: str


@dataclass(frozen=True)
class ModelSpec:
    """Response, regressors, and generated terms for a linear fit."""

    response: str
    regressors: tuple = ()
    include_intercept: bool = True
    generic_terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple(self.regressors))
        object.__setattr__(self, "generic_terms", tuple(self.generic_terms))
        if self.response in self.regressors:
            raise InvalidSpec("response cannot also be a regressor")
        if len(set(self.regressors)) != len(self.regressors):
            raise InvalidSpec("duplicate regressor names")


@dataclass(frozen=True)
class DesignInfo:
    """Assembled design matrix with bookkeeping for downstream diagnostics."""

    matrix: np.ndarray
    response: np.ndarray
    term_names: tuple
    row_index: np.ndarray


def _shift_columns(data: Dataset, term: Shift, rows: np.ndarray):
    ordering = data.ordering(term.ordering)
    values = ordering.values[rows]
    if ordering.kind == "binary_group":
        return [values.astype(float)], [f"shift({term.ordering})"]
    if ordering.kind == "categorical":
        levels = sorted(set(values.tolist()))
        if len(levels) < 2:
            raise InvalidSpec(f"ordering {term.ordering!r} has fewer than two levels in the fit window")
        cols, names = [], []
        for level in levels[1:]:
            cols.append((values == level).astype(float))
            names.append(f"shift({term.ordering}={level})")
        return cols, names
    raise InvalidSpec(f"shift terms need a group ordering, not kind {ordering.kind!r}")


def design_matrix(data: Dataset, spec: ModelSpec) -> DesignInfo:
    """Assemble the design matrix for a spec, trimming rows lost to lags."""
    n = data.n
    max_lag = 0
    for term in spec.generic_terms:
        if isinstance(term, Lags):
            data.column(term.of)
            max_lag = max(max_lag, term.count)
    rows = np.arange(max_lag, n)
    if rows.size == 0:
        raise EmptyData("lag trimming removed every row")

    cols, names = [], []
    if spec.include_intercept:
        cols.append(np.ones(len(rows)))
        names.append("intercept")
    for name in spec.regressors:
        cols.append(data.column(name)[rows])
        names.append(name)
    m = len(rows)
    for term in spec.generic_terms:
        if isinstance(term, TrendPoly):
            s = np.arange(1, m + 1) / m
            for power in range(1, term.degree + 1):
                cols.append(s**power)
                names.append(f"t^{power}")
        elif isinstance(term, Lags):
            base = data.column(term.of)
            for k in range(1, term.count + 1):
                cols.append(base[rows - k])
                names.append(f"{term.of}[-{k}]")
        elif isinstance(term, Shift):
            shift_cols, shift_names = _shift_columns(data, term, rows)
            cols.extend(shift_cols)
            names.extend(shift_names)
        else:
            raise InvalidSpec(f"unknown generic term {term!r}")
    if not cols:
        raise InvalidSpec("model spec produces an empty design")
    return DesignInfo(
        matrix=np.column_stack(cols),
        response=data.column(spec.response)[rows],
        term_names=tuple(names),
        row_index=rows,
    )


@dataclass(frozen=True)
class FitResult:
    """An ordinary least-squares fit with inference summaries.

    p_values are two-sided Student-t tail probabilities with n_used - p
    degrees of freedom. r2 uses centered total variation when the model has
    an intercept, uncentered otherwise. degenerate marks fits whose
    residual vector is numerically zero-variance; such fits report s = 0
    and carry no usable inference.
    """

    spec: ModelSpec
    term_names: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_ratios: np.ndarray
    p_values: np.ndarray
    r2: float
    s: float
    n_used: int
    residuals: np.ndarray
    condition_estimate: float
    degenerate: bool
    row_index: np.ndarray

    def index_of(self, term_name: str) -> int:
        try:
            return self.term_names.index(term_name)
        except ValueError:
            raise UnknownColumn(f"no fitted term named {term_name!r}") from None


def _summarize(spec, info, solution) -> FitResult:
    X, y = info.matrix, info.response
    n, p = X.shape
    coef = solution.coefficients
    rss = solution.rss
    if spec.include_intercept:
        tss = float(np.sum((y - y.mean()) ** 2))
    else:
        tss = float(y @ y)
    scale = max(tss, float(y @ y), 1.0)
    degenerate = rss <= _DEGENERATE_RTOL * scale or np.var(solution.residuals) <= _DEGENERATE_RTOL * scale / max(n, 1)
    if degenerate:
        s = 0.0
        std_errors = np.zeros(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_ratios = np.where(coef == 0, 0.0, np.inf * np.sign(coef))
        p_values = np.where(coef == 0, 1.0, 0.0)
        r2 = 1.0
    else:
        s2 = rss / (n - p)
        s = float(np.sqrt(s2))
        std_errors = np.sqrt(s2 * np.diag(solution.xtx_inverse))
        t_ratios = coef / std_errors
        df = n - p
        p_values = np.array([tail_prob(StudentT(df), t, "two") for t in t_ratios])
        r2 = 1.0 - rss / tss if tss > 0 else 1.0
    return FitResult(
        spec=spec,
        term_names=info.term_names,
        coefficients=coef,
        std_errors=std_errors,
        t_ratios=np.asarray(t_ratios, dtype=float),
        p_values=np.asarray(p_values, dtype=float),
        r2=float(r2),
        s=s,
        n_used=n,
        residuals=solution.residuals,
        condition_estimate=solution.condition_estimate,
        degenerate=bool(degenerate),
        row_index=info.row_index,
    )


def fit(data: Dataset, spec: ModelSpec, cond_max: float = core_stats.COND_MAX) -> FitResult:
    """Fit the model by least squares and summarize the estimates."""
    info = design_matrix(data, spec)
    solution = least_squares(info.matrix, info.response, cond_max=cond_max)
    return _summarize(spec, info, solution)


def subset_fit(data: Dataset, spec: ModelSpec, ordering: str, group) -> FitResult:
    """Fit the model on the rows where an ordering equals a group value.

    Raises:
        GroupTooSmall: if the selected group cannot identify the model.
    """
    ordering_var = data.ordering(ordering)
    if ordering_var.kind == "time":
        raise InvalidSpec("subset fits need a group ordering, not a time ordering")
    mask = ordering_var.values == (float(group) if ordering_var.kind == "binary_group" else group)
    rows = np.flatnonzero(mask)
    p_lower_bound = len(spec.regressors) + int(spec.include_intercept)
    if rows.size < p_lower_bound + 1:
        raise GroupTooSmall(
            f"group {group!r} of ordering {ordering!r} has {rows.size} rows, "
            f"too few for {p_lower_bound} parameters"
        )
    try:
        result = fit(data.take(rows), spec)
    except EmptyData as exc:
        raise GroupTooSmall(str(exc)) from None
    return dataclasses.replace(result, row_index=rows[result.row_index])


@dataclass(frozen=True)
class CoefficientTest:
    """A two-sided t-test of one coefficient against a null value."""

    stat: float
    p_value: float
    df: int
    reject: bool


def coefficient_test(
    result: FitResult, index: int, null_value: float = 0.0, alpha: float = 0.05
) -> CoefficientTest:
    """Two-sided t-test that coefficient `index` equals `null_value`."""
    if not 0 < alpha < 1:
        raise InvalidSpec(f"alpha must be in (0, 1), got {alpha!r}")
    if not 0 <= index < len(result.coefficients):
        raise IndexOutOfRange(f"coefficient index {index} out of range")
    df = result.n_used - len(result.coefficients)
    diff = result.coefficients[index] - null_value
    se = result.std_errors[index]
    if se == 0:
        stat = 0.0 if diff == 0 else float(np.inf * np.sign(diff))
        p = 1.0 if diff == 0 else 0.0
    else:
        stat = float(diff / se)
        p = tail_prob(StudentT(df), stat, "two")
    return CoefficientTest(stat=stat, p_value=float(p), df=df, reject=bool(p < alpha))
