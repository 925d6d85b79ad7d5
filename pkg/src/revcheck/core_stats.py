"""Numerical primitives: sample moments, least squares, tail probabilities.

Everything downstream (regression fits, diagnostic batteries, contingency
tests) is built on the three operations in this module, so their contracts
are kept deliberately narrow and strict: finite inputs only, explicit errors
instead of NaN propagation, and a documented divisor convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.linalg import solve_triangular

from .errors import (
    EmptyData,
    InvalidDegreesOfFreedom,
    MismatchedInputs,
    NonFiniteInput,
    RankDeficient,
    Underdetermined,
)

# Default ceiling on the design-matrix condition number before a fit is
# declared rank deficient.
COND_MAX = 1e10

# Absolute tolerance target for tail probabilities.
TAIL_PROB_ATOL = 1e-8


def _as_finite_array(values, name: str, min_len: int = 1) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or (arr.ndim >= 1 and arr.shape[0] < min_len):
        raise EmptyData(f"{name} must have at least {min_len} row(s)")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class Series:
    """A single labeled column of finite observations."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = _as_finite_array(self.values, f"series {self.label!r}")
        if arr.ndim != 1:
            raise MismatchedInputs("a Series must be one-dimensional")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SampleMoments:
    """First and second sample moments of an (n, k) data matrix.

    The covariance matrix uses the 1/n divisor, not 1/(n-1): these moments
    feed method-of-moments algebra where the raw average convention keeps
    the identities exact. Correlations for zero-variance columns are
    reported as NaN markers rather than numbers; the diagonal is exactly 1.
    """

    n: int
    means: np.ndarray
    cov: np.ndarray
    corr: np.ndarray


def sample_moments(data) -> SampleMoments:
    """Compute means, covariances (1/n divisor), and correlations.

    Args:
        data: array-like with shape (n, k) or (n,); rows are observations.

    Raises:
        EmptyData: on zero rows.
        NonFiniteInput: if any entry is NaN or infinite.
    """
    arr = _as_finite_array(data, "data")
    if arr.ndim == 1:
        arr = arr[:, None]
    n, k = arr.shape
    means = arr.mean(axis=0)
    centered = arr - means
    cov = (centered.T @ centered) / n
    sd = np.sqrt(np.diag(cov))
    corr = np.full((k, k), np.nan)
    nonzero = sd > 0
    if np.any(nonzero):
        idx = np.ix_(nonzero, nonzero)
        outer = np.outer(sd[nonzero], sd[nonzero])
        corr[idx] = cov[idx] / outer
    np.fill_diagonal(corr, 1.0)
    finite = np.isfinite(corr)
    corr[finite] = np.clip(corr[finite], -1.0, 1.0)
    return SampleMoments(n=n, means=means, cov=cov, corr=corr)


@dataclass(frozen=True)
class LeastSquaresSolution:
    """Result of an ordinary least-squares solve.

    Attributes:
        coefficients: length-p solution vector.
        residuals: response minus fitted values, length n.
        rss: residual sum of squares.
        xtx_inverse: (X'X)^{-1}, used downstream for standard errors.
        condition_estimate: 2-norm condition number of the design.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    rss: float
    xtx_inverse: np.ndarray
    condition_estimate: float


def least_squares(design, response, cond_max: float = COND_MAX) -> LeastSquaresSolution:
    """Solve min ||y - X b|| by orthogonal (QR) decomposition.

    Normal equations are never formed for the solve itself; (X'X)^{-1} is
    reconstructed from the triangular factor only for inference output.

    Args:
        design: (n, p) matrix, intercept column included by the caller.
        response: length-n vector.
        cond_max: condition-number ceiling before RankDeficient is raised.

    Raises:
        Underdetermined: if n <= p.
        RankDeficient: if the condition estimate exceeds cond_max.
        MismatchedInputs: if design and response lengths disagree.
    """
    X = _as_finite_array(design, "design")
    if X.ndim == 1:
        X = X[:, None]
    y = _as_finite_array(response, "response")
    if y.ndim != 1:
        raise MismatchedInputs("response must be one-dimensional")
    n, p = X.shape
    if len(y) != n:
        raise MismatchedInputs(f"design has {n} rows but response has {len(y)}")
    if n <= p:
        raise Underdetermined(f"{n} observations cannot identify {p} parameters")

    q, r = np.linalg.qr(X)
    sv = np.linalg.svd(r, compute_uv=False)
    if sv[-1] <= 0:
        raise RankDeficient("design matrix is exactly rank deficient")
    cond = float(sv[0] / sv[-1])
    if cond > cond_max:
        raise RankDeficient(f"design condition estimate {cond:.3e} exceeds {cond_max:.1e}")

    coef = solve_triangular(r, q.T @ y)
    residuals = y - X @ coef
    rss = float(residuals @ residuals)
    r_inv = solve_triangular(r, np.eye(p))
    xtx_inverse = r_inv @ r_inv.T
    return LeastSquaresSolution(
        coefficients=coef,
        residuals=residuals,
        rss=rss,
        xtx_inverse=xtx_inverse,
        condition_estimate=cond,
    )


@dataclass(frozen=True)
class StudentT:
    df: float


@dataclass(frozen=True)
class FisherF:
    df1: float
    df2: float


@dataclass(frozen=True)
class ChiSquare:
    df: float


@dataclass(frozen=True)
class Normal:
    pass


def _check_df(*dfs: float) -> None:
    for df in dfs:
        if not np.isfinite(df) or df < 1:
            raise InvalidDegreesOfFreedom(f"degrees of freedom {df!r} must be >= 1")


def _student_t_sf(t: float, df: float) -> float:
    # P(T > t) = I_{df/(df+t^2)}(df/2, 1/2) / 2 for t >= 0.
    if t < 0:
        return 1.0 - _student_t_sf(-t, df)
    x = df / (df + t * t)
    return 0.5 * float(special.betainc(df / 2.0, 0.5, x))


def _fisher_f_sf(f: float, df1: float, df2: float) -> float:
    if f <= 0:
        return 1.0
    x = df2 / (df2 + df1 * f)
    return float(special.betainc(df2 / 2.0, df1 / 2.0, x))


def _chi_square_sf(x: float, df: float) -> float:
    if x <= 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def _normal_sf(z: float) -> float:
    return 0.5 * float(special.erfc(z / np.sqrt(2.0)))


def tail_prob(dist, stat: float, sides: str = "two") -> float:
    """Tail probability of a test statistic.

    One-sided means the upper tail P(T > stat). Two-sided doubles the
    smaller tail, which for the symmetric distributions (Student t, Normal)
    equals 2 P(T > |stat|). All branches evaluate regularized incomplete
    beta/gamma integrals, accurate to about 1e-8 absolute or better.

    Raises:
        InvalidDegreesOfFreedom: if any df argument is below 1.
        NonFiniteInput: if stat is NaN or infinite.
        MismatchedInputs: if sides is not "one" or "two".
    """
    if sides not in ("one", "two"):
        raise MismatchedInputs(f"sides must be 'one' or 'two', got {sides!r}")
    if not np.isfinite(stat):
        raise NonFiniteInput("test statistic must be finite")
    stat = float(stat)

    if isinstance(dist, StudentT):
        _check_df(dist.df)
        upper = _student_t_sf(stat, dist.df)
        symmetric = True
    elif isinstance(dist, Normal):
        upper = _normal_sf(stat)
        symmetric = True
    elif isinstance(dist, FisherF):
        _check_df(dist.df1, dist.df2)
        upper = _fisher_f_sf(stat, dist.df1, dist.df2)
        symmetric = False
    elif isinstance(dist, ChiSquare):
        _check_df(dist.df)
        upper = _chi_square_sf(stat, dist.df)
        symmetric = False
    else:
        raise MismatchedInputs(f"unknown distribution spec {dist!r}")

    if sides == "one":
        return min(max(upper, 0.0), 1.0)
    if symmetric:
        p = 2.0 * (upper if stat >= 0 else 1.0 - upper)
    else:
        p = 2.0 * min(upper, 1.0 - upper)
    return min(max(p, 0.0), 1.0)
