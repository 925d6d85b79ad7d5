"""Seeded data-generating processes and Monte Carlo error rates.

Reproducibility contract: every dataset is a pure function of (kind, seed),
and Monte Carlo replication r draws from a stream derived from the pair
(seed, r). Replications therefore never share state, which makes the
aggregate error rate independent of execution order and of how many worker
threads run the loop.

Four generators are provided:

  * NiidRegression     - a trivariate Normal (y, x1, x2) with given moments
  * TrendingPair       - two independent trending series with AR(1) noise,
                         sized and sloped like the classic spurious pairs
  * TwoGroupRegression - two groups with their own lines and noise levels
  * BernoulliIid       - an IID 0/1 sequence

plus a convenience wrapper that rebuilds the two-group income example with
opposite-signed pooled and per-group slopes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import misspec
from .core_stats import Series, StudentT, sample_moments, tail_prob
from .errors import GenerationFailed, InvalidSpec
from .parameterization import JointMoments
from .regression import Dataset, ModelSpec, OrderingVariable, fit
from .regression import coefficient_test as _coefficient_test

# Trend coefficients (constant first) and noise settings that mimic the
# classic marriage-ratio / mortality pair: both series drift downward over
# the window with smooth curvature, and the noise remembers its past.
_TRENDING_X = (76.0, -10.0, 0.0, -6.0)
_TRENDING_Y = (23.4, -5.0, 0.0, -4.0)

# Two-group income example: (first group, second group) intercepts, slopes,
# noise standard deviations, regressor means; the first group earns more on
# average yet has the lower regressor mean, which flips the pooled slope.
_EXAMPLE3_INTERCEPTS = (45.229, 35.106)
_EXAMPLE3_SLOPES = (0.409, 0.675)
_EXAMPLE3_NOISE_SDS = (2.371, 2.124)
_EXAMPLE3_X_MEANS = (13.0, 17.0)
_EXAMPLE3_X_SD = 2.0


def rng_for(seed: int, replication: int = None) -> np.random.Generator:
    """The generator for a seed, or for replication r of that seed."""
    entropy = [int(seed)] if replication is None else [int(seed), int(replication)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class NiidRegression:
    """NIID draws of (y, x1, x2) from a trivariate Normal."""

    joint: JointMoments
    n: int

    def __post_init__(self):
        if self.n < 4:
            raise InvalidSpec("NiidRegression needs n >= 4")


@dataclass(frozen=True)
class TrendingPair:
    """Two independent series sharing a trend shape, with AR(1) noise.

    Each series is polynomial(trend coefficients, t/n) plus an AR(1)
    process started from its stationary distribution. The two noise
    processes are independent, so the true cross-correlation is zero even
    though both series trend.
    """

    n: int = 46
    trend_x: tuple = _TRENDING_X
    trend_y: tuple = _TRENDING_Y
    ar_x: float = 0.8
    ar_y: float = 0.8
    innovation_sd_x: float = 0.6
    innovation_sd_y: float = 0.35

    def __post_init__(self):
        object.__setattr__(self, "trend_x", tuple(float(c) for c in self.trend_x))
        object.__setattr__(self, "trend_y", tuple(float(c) for c in self.trend_y))
        if self.n < 12:
            raise InvalidSpec("TrendingPair needs n >= 12")
        for name, ar in (("ar_x", self.ar_x), ("ar_y", self.ar_y)):
            if not abs(ar) < 1:
                raise InvalidSpec(f"{name} must satisfy |ar| < 1 for stationarity")
        if self.innovation_sd_x <= 0 or self.innovation_sd_y <= 0:
            raise InvalidSpec("innovation standard deviations must be positive")


@dataclass(frozen=True)
class TwoGroupRegression:
    """Two groups, each with its own line y = a + b*x and noise level."""

    intercepts: tuple
    slopes: tuple
    x_means: tuple
    x_sd: float
    noise_sds: tuple
    group_sizes: tuple

    def __post_init__(self):
        for name in ("intercepts", "slopes", "x_means", "noise_sds", "group_sizes"):
            value = tuple(getattr(self, name))
            if len(value) != 2:
                raise InvalidSpec(f"{name} must have exactly two entries")
            object.__setattr__(self, name, value)
        if self.x_sd <= 0 or any(sd <= 0 for sd in self.noise_sds):
            raise InvalidSpec("scale parameters must be positive")
        if any(int(n) != n or n < 3 for n in self.group_sizes):
            raise InvalidSpec("group sizes must be integers >= 3")
        object.__setattr__(self, "group_sizes", tuple(int(n) for n in self.group_sizes))


@dataclass(frozen=True)
class BernoulliIid:
    """IID Bernoulli(theta) draws as a 0/1 column."""

    theta: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise InvalidSpec(f"theta must lie in [0, 1], got {self.theta!r}")
        if self.n < 1:
            raise InvalidSpec("BernoulliIid needs n >= 1")


_KINDS = (NiidRegression, TrendingPair, TwoGroupRegression, BernoulliIid)


@dataclass(frozen=True)
class DgpSpec:
    """A generator kind plus the seed that makes it deterministic."""

    kind: object
    seed: int

    def __post_init__(self):
        if not isinstance(self.kind, _KINDS):
            raise InvalidSpec(f"unknown DGP kind {type(self.kind).__name__}")


def _time_ordering(n: int) -> dict:
    return {"t": OrderingVariable("t", "time", np.arange(1, n + 1, dtype=float))}


def _ar1(rng: np.random.Generator, n: int, ar: float, innovation_sd: float) -> np.ndarray:
    marginal_sd = innovation_sd / np.sqrt(1.0 - ar * ar)
    values = np.empty(n)
    state = marginal_sd * rng.standard_normal()
    innovations = innovation_sd * rng.standard_normal(n)
    for t in range(n):
        state = ar * state + innovations[t]
        values[t] = state
    return values


def _polynomial(coefficients: tuple, s: np.ndarray) -> np.ndarray:
    total = np.zeros_like(s)
    for power, coefficient in enumerate(coefficients):
        total += coefficient * s**power
    return total


def _generate_with_rng(kind, rng: np.random.Generator) -> Dataset:
    if isinstance(kind, NiidRegression):
        chol = np.linalg.cholesky(kind.joint.sigma)
        draws = kind.joint.mu + rng.standard_normal((kind.n, 3)) @ chol.T
        return Dataset(
            columns={"y": draws[:, 0], "x1": draws[:, 1], "x2": draws[:, 2]},
            orderings=_time_ordering(kind.n),
        )
    if isinstance(kind, TrendingPair):
        n = kind.n
        s = np.arange(1, n + 1) / n
        x = _polynomial(kind.trend_x, s) + _ar1(rng, n, kind.ar_x, kind.innovation_sd_x)
        y = _polynomial(kind.trend_y, s) + _ar1(rng, n, kind.ar_y, kind.innovation_sd_y)
        return Dataset(columns={"x": x, "y": y}, orderings=_time_ordering(n))
    if isinstance(kind, TwoGroupRegression):
        xs, ys = [], []
        for i in range(2):
            n_i = kind.group_sizes[i]
            x = kind.x_means[i] + kind.x_sd * rng.standard_normal(n_i)
            y = kind.intercepts[i] + kind.slopes[i] * x + kind.noise_sds[i] * rng.standard_normal(n_i)
            xs.append(x)
            ys.append(y)
        group = np.concatenate([np.ones(kind.group_sizes[0]), np.zeros(kind.group_sizes[1])])
        return Dataset(
            columns={"x": np.concatenate(xs), "y": np.concatenate(ys)},
            orderings={"group": OrderingVariable("group", "binary_group", group)},
        )
    if isinstance(kind, BernoulliIid):
        x = (rng.random(kind.n) < kind.theta).astype(float)
        return Dataset(columns={"x": x}, orderings=_time_ordering(kind.n))
    raise InvalidSpec(f"unknown DGP kind {type(kind).__name__}")


def generate(spec: DgpSpec) -> Dataset:
    """Generate the dataset determined by (kind, seed)."""
    return _generate_with_rng(spec.kind, rng_for(spec.seed))


def example3_generator(n_per_group: int = 50, seed: int = 0, max_attempts: int = 100) -> Dataset:
    """The two-group income example with a negative pooled slope.

    Draws from the fixed two-group constants (first group coded 1 in the
    `group` ordering, second group 0) and checks that the realized pooled
    slope of y on x is negative; if not, the draw is retried on a fresh
    sub-stream.

    Raises:
        GenerationFailed: if no attempt produces a negative pooled slope.
    """
    kind = TwoGroupRegression(
        intercepts=_EXAMPLE3_INTERCEPTS,
        slopes=_EXAMPLE3_SLOPES,
        x_means=_EXAMPLE3_X_MEANS,
        x_sd=_EXAMPLE3_X_SD,
        noise_sds=_EXAMPLE3_NOISE_SDS,
        group_sizes=(n_per_group, n_per_group),
    )
    return constrained_two_group(kind, seed=seed, max_attempts=max_attempts)


def constrained_two_group(kind: TwoGroupRegression, seed: int = 0, max_attempts: int = 100) -> Dataset:
    """Draw a TwoGroupRegression dataset whose pooled slope is negative."""
    for attempt in range(max_attempts):
        data = _generate_with_rng(kind, rng_for(seed, attempt))
        moments = sample_moments(np.column_stack([data.columns["x"], data.columns["y"]]))
        if moments.cov[0, 1] < 0:
            return data
    raise GenerationFailed(f"no negative pooled slope in {max_attempts} attempts (seed {seed})")


@dataclass(frozen=True)
class TestDescriptor:
    """Which test to run on each replication of a Monte Carlo study.

    kind "coefficient": fit response ~ regressors, t-test the named term
    against null_value. kind "naive_correlation": t-test the raw
    correlation of columns x and y against zero. kind
    "corrected_correlation": the same after detrending and dememorizing.
    """

    # Not a test case despite the Test- prefix; keeps pytest from collecting it.
    __test__ = False

    kind: str
    response: str = "y"
    regressors: tuple = ()
    target: str = ""
    null_value: float = 0.0
    x: str = "x"
    y: str = "y"
    trend_degree: int = 3
    lag_count: int = 2

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple(self.regressors))
        if self.kind not in ("coefficient", "naive_correlation", "corrected_correlation"):
            raise InvalidSpec(f"unknown test kind {self.kind!r}")
        if self.kind == "coefficient" and (not self.regressors or not self.target):
            raise InvalidSpec("coefficient tests need regressors and a target term")


@dataclass(frozen=True)
class MonteCarloResult:
    """Empirical rejection rate of a test across seeded replications."""

    replications: int
    rejections: int
    rejection_rate: float
    mc_se: float
    alpha: float


def naive_correlation_test(x: np.ndarray, y: np.ndarray) -> tuple:
    """Correlation of two raw columns and its two-sided t-test p-value."""
    moments = sample_moments(np.column_stack([x, y]))
    rho = float(moments.corr[0, 1])
    n = moments.n
    if not np.isfinite(rho):
        raise InvalidSpec("a column has zero variance")
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, tail_prob(StudentT(n - 2), t, "two")


def _run_test(data: Dataset, test: TestDescriptor, alpha: float) -> bool:
    if test.kind == "coefficient":
        result = fit(data, ModelSpec(response=test.response, regressors=test.regressors))
        outcome = _coefficient_test(result, result.index_of(test.target), test.null_value, alpha)
        return outcome.reject
    if test.kind == "naive_correlation":
        _, p = naive_correlation_test(data.column(test.x), data.column(test.y))
        return p < alpha
    cfg = misspec.BatteryConfig(alpha=alpha, trend_degree=test.trend_degree, lag_count=test.lag_count)
    corrected = misspec.corrected_correlation(
        Series(data.column(test.x), test.x), Series(data.column(test.y), test.y), cfg
    )
    return corrected.p_value < alpha


def mc_error_rate(
    dgp: DgpSpec,
    test: TestDescriptor,
    alpha: float = 0.05,
    replications: int = 10_000,
    threads: int = 1,
) -> MonteCarloResult:
    """Empirical rejection rate of a test under a data-generating process.

    Replication r consumes the stream derived from (dgp.seed, r), so the
    result is a pure function of the arguments regardless of `threads`.

    Raises:
        InvalidSpec: if replications < 1000 (the rate would be too noisy
            to interpret against a nominal level).
    """
    if replications < 1000:
        raise InvalidSpec("use at least 1000 replications")
    if not 0 < alpha < 1:
        raise InvalidSpec(f"alpha must be in (0, 1), got {alpha!r}")
    if threads < 1:
        raise InvalidSpec("threads must be >= 1")

    def one(replication: int) -> bool:
        data = _generate_with_rng(dgp.kind, rng_for(dgp.seed, replication))
        return _run_test(data, test, alpha)

    if threads == 1:
        rejections = sum(one(r) for r in range(replications))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rejections = sum(pool.map(one, range(replications), chunksize=256))
    rate = rejections / replications
    mc_se = float(np.sqrt(alpha * (1.0 - alpha) / replications))
    return MonteCarloResult(
        replications=replications,
        rejections=int(rejections),
        rejection_rate=rate,
        mc_se=mc_se,
        alpha=alpha,
    )
