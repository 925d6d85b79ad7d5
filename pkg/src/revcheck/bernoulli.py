"""Bernoulli rates, two-proportion comparisons, and stratified tables.

Count data arrive as 2 x 2 tables: rows are the outcome (success on top,
failure below), columns are the two groups being compared. A stratified
family couples an aggregate table with named stratum tables over the same
groups; `complete` records whether the strata exhaust the aggregate or are
only a partial stratification.

The aggregate comparison of two group rates is trustworthy only if the
success rate is constant across strata inside each group; the chi-square
homogeneity test here checks exactly that, and `aggregate_verdict` folds
the result together with the per-stratum rate orderings into a narrative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_stats import ChiSquare, Normal, tail_prob
from .errors import (
    DegeneratePool,
    InvalidCounts,
    InvalidSpec,
    MismatchedInputs,
    TooFewStrata,
)


def _check_count(value, name: str) -> int:
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise InvalidCounts(f"{name} must be a number, got {value!r}") from None
    if not np.isfinite(as_float) or as_float < 0 or as_float != int(as_float):
        raise InvalidCounts(f"{name} must be a non-negative integer, got {value!r}")
    return int(as_float)


@dataclass(frozen=True)
class ContingencyTable:
    """A 2 x 2 count table: outcome rows (success, failure) by two groups."""

    row_labels: tuple
    col_labels: tuple
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.shape != (2, 2):
            raise InvalidCounts(f"counts must be 2 x 2, got shape {counts.shape}")
        checked = np.array(
            [[_check_count(counts[i, j], f"counts[{i}][{j}]") for j in range(2)] for i in range(2)]
        )
        if np.any(checked.sum(axis=0) < 1):
            raise InvalidCounts("each group column needs at least one observation")
        object.__setattr__(self, "counts", checked)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        if len(self.row_labels) != 2 or len(self.col_labels) != 2:
            raise MismatchedInputs("need exactly two row labels and two column labels")

    def successes(self, col: int) -> int:
        return int(self.counts[0, col])

    def total(self, col: int) -> int:
        return int(self.counts[:, col].sum())

    def rate(self, col: int) -> float:
        return self.successes(col) / self.total(col)


@dataclass(frozen=True)
class StratifiedTables:
    """An aggregate table plus named stratum tables over the same groups."""

    aggregate: ContingencyTable
    strata: tuple
    complete: bool

    def __post_init__(self):
        strata = tuple(self.strata)
        if not strata:
            raise TooFewStrata("at least one stratum table is required")
        names = [name for name, _ in strata]
        if len(set(names)) != len(names):
            raise InvalidSpec("stratum names must be unique")
        total = np.zeros((2, 2), dtype=int)
        for name, table in strata:
            if table.col_labels != self.aggregate.col_labels:
                raise MismatchedInputs(f"stratum {name!r} has different group labels than the aggregate")
            if table.row_labels != self.aggregate.row_labels:
                raise MismatchedInputs(f"stratum {name!r} has different outcome labels than the aggregate")
            total += table.counts
        if self.complete:
            if not np.array_equal(total, self.aggregate.counts):
                raise InvalidCounts("complete stratification must sum exactly to the aggregate")
        elif np.any(total > self.aggregate.counts):
            raise InvalidCounts("stratum counts exceed the aggregate")
        object.__setattr__(self, "strata", strata)


@dataclass(frozen=True)
class BernoulliEstimate:
    """A success-rate estimate with its binomial standard error."""

    theta_hat: float
    n: int
    se: float


def estimate_theta(successes: int, total: int) -> BernoulliEstimate:
    """Estimate a Bernoulli rate: theta_hat = successes / total.

    The standard error is sqrt(theta_hat * (1 - theta_hat) / total), which
    is 0 at the boundaries theta_hat in {0, 1}.
    """
    successes = _check_count(successes, "successes")
    total = _check_count(total, "total")
    if total < 1:
        raise InvalidCounts("total must be at least 1")
    if successes > total:
        raise InvalidCounts(f"successes {successes} exceed total {total}")
    theta = successes / total
    se = float(np.sqrt(theta * (1.0 - theta) / total))
    return BernoulliEstimate(theta_hat=theta, n=total, se=se)


@dataclass(frozen=True)
class ProportionComparison:
    """A pooled two-proportion z-test."""

    diff: float
    z: float
    p_value: float
    reject: bool
    pooled_theta: float


def two_proportion_test(
    successes_a: int, total_a: int, successes_b: int, total_b: int, alpha: float = 0.05
) -> ProportionComparison:
    """Pooled z-test of equal success rates in two independent groups.

    z = (theta_a - theta_b) / sqrt(pool * (1 - pool) * (1/n_a + 1/n_b))
    with pool the combined success rate; the p-value is two-sided Normal.

    Raises:
        DegeneratePool: if the pooled rate is exactly 0 or 1.
    """
    if not 0 < alpha < 1:
        raise InvalidSpec(f"alpha must be in (0, 1), got {alpha!r}")
    a = estimate_theta(successes_a, total_a)
    b = estimate_theta(successes_b, total_b)
    pooled = (successes_a + successes_b) / (total_a + total_b)
    if pooled in (0.0, 1.0):
        raise DegeneratePool("pooled rate is 0 or 1; the z statistic is undefined")
    se = np.sqrt(pooled * (1.0 - pooled) * (1.0 / total_a + 1.0 / total_b))
    z = (a.theta_hat - b.theta_hat) / se
    p = tail_prob(Normal(), float(z), "two")
    return ProportionComparison(
        diff=a.theta_hat - b.theta_hat,
        z=float(z),
        p_value=float(p),
        reject=bool(p < alpha),
        pooled_theta=float(pooled),
    )


@dataclass(frozen=True)
class HomogeneityResult:
    """Chi-square test that one group's rate is constant across strata."""

    chi2: float
    df: int
    p_value: float
    id_holds: bool
    small_sample_warning: bool


def _resolve_column(tables: StratifiedTables, column) -> int:
    if isinstance(column, str):
        try:
            return tables.aggregate.col_labels.index(column)
        except ValueError:
            raise InvalidSpec(f"no group labeled {column!r}") from None
    column = int(column)
    if column not in (0, 1):
        raise InvalidSpec("column index must be 0 or 1")
    return column


def homogeneity_test(tables: StratifiedTables, column, alpha: float = 0.05) -> HomogeneityResult:
    """Pearson chi-square test of a constant success rate across strata.

    Tests, for the given group column, whether every stratum shares one
    success rate; df = (number of strata) - 1. id_holds is true when the
    test does not reject at alpha. Expected cell counts below 5 set
    small_sample_warning but the statistic is still computed.

    Raises:
        TooFewStrata: with fewer than two strata.
        DegeneratePool: if the pooled rate over strata is 0 or 1.
    """
    if not 0 < alpha < 1:
        raise InvalidSpec(f"alpha must be in (0, 1), got {alpha!r}")
    col = _resolve_column(tables, column)
    k = len(tables.strata)
    if k < 2:
        raise TooFewStrata("homogeneity needs at least two strata")
    successes = np.array([table.successes(col) for _, table in tables.strata], dtype=float)
    totals = np.array([table.total(col) for _, table in tables.strata], dtype=float)
    pooled = successes.sum() / totals.sum()
    if pooled in (0.0, 1.0):
        raise DegeneratePool("pooled rate over strata is 0 or 1")
    expected_success = totals * pooled
    expected_failure = totals * (1.0 - pooled)
    failures = totals - successes
    chi2 = float(
        np.sum((successes - expected_success) ** 2 / expected_success)
        + np.sum((failures - expected_failure) ** 2 / expected_failure)
    )
    df = k - 1
    p = tail_prob(ChiSquare(df), chi2, "one")
    warning = bool(np.any(expected_success < 5) or np.any(expected_failure < 5))
    return HomogeneityResult(
        chi2=chi2, df=df, p_value=float(p), id_holds=bool(p >= alpha), small_sample_warning=warning
    )


@dataclass(frozen=True)
class AggregateVerdict:
    """Trustworthiness of an aggregate two-group comparison."""

    aggregate_rates: tuple
    aggregate_direction: int
    per_stratum: tuple
    flipped_strata: tuple
    reversal_present: bool
    homogeneity: dict
    aggregate_trustworthy: bool
    narrative: str
    alpha: float


def _fmt_rate(value: float) -> str:
    text = f"{value:.2f}"
    return text[1:] if text.startswith("0.") else text


def aggregate_verdict(tables: StratifiedTables, alpha: float = 0.05) -> AggregateVerdict:
    """Judge whether the aggregate rate comparison can be taken at face value.

    The aggregate ordering of the two group rates is compared with each
    stratum's ordering; a reversal is present when the majority of strata
    order the groups the other way. The aggregate comparison itself is
    trustworthy only when the homogeneity test holds for both groups, i.e.
    the pooled rates are not mixtures of unequal stratum rates.
    """
    if not 0 < alpha < 1:
        raise InvalidSpec(f"alpha must be in (0, 1), got {alpha!r}")
    agg = tables.aggregate
    labels = agg.col_labels
    rate0, rate1 = agg.rate(0), agg.rate(1)
    agg_dir = int(np.sign(rate0 - rate1))

    per_stratum = []
    flipped = []
    for name, table in tables.strata:
        r0, r1 = table.rate(0), table.rate(1)
        direction = int(np.sign(r0 - r1))
        per_stratum.append((name, r0, r1))
        if direction != 0 and agg_dir != 0 and direction != agg_dir:
            flipped.append(name)
    reversal = len(flipped) > len(tables.strata) / 2

    homogeneity = {}
    trustworthy = True
    if len(tables.strata) >= 2:
        for col, label in enumerate(labels):
            result = homogeneity_test(tables, col, alpha=alpha)
            homogeneity[label] = result
            trustworthy = trustworthy and result.id_holds

    lines = []
    winner = labels[0] if agg_dir > 0 else labels[1] if agg_dir < 0 else "neither group"
    lines.append(
        f"Aggregate: {labels[0]} {_fmt_rate(rate0)} vs {labels[1]} {_fmt_rate(rate1)}, favoring {winner}."
    )
    if flipped:
        parts = []
        for name, r0, r1 in per_stratum:
            if name in flipped:
                note = "; margin below display precision" if abs(r0 - r1) < 0.005 or round(r0, 2) == round(r1, 2) else ""
                parts.append(f"{name} ({_fmt_rate(r0)} vs {_fmt_rate(r1)}{note})")
        lines.append("Strata ordering the groups the other way: " + ", ".join(parts) + ".")
    agreeing = [
        f"{name} ({_fmt_rate(r0)} vs {_fmt_rate(r1)})"
        for name, r0, r1 in per_stratum
        if name not in flipped and int(np.sign(r0 - r1)) == agg_dir
    ]
    if agreeing and flipped:
        lines.append("Strata agreeing with the aggregate: " + ", ".join(agreeing) + ".")
    if not tables.complete:
        lines.append("Stratification is partial: the strata do not account for the whole aggregate.")
    if homogeneity:
        verdicts = []
        for label, result in homogeneity.items():
            word = "holds" if result.id_holds else "fails"
            verdicts.append(f"{label} {word} (p {_fmt_p(result.p_value)})")
        lines.append("Constant-rate check across strata: " + ", ".join(verdicts) + ".")
    else:
        lines.append("A single stratum gives the constancy check nothing to compare.")
    if trustworthy:
        lines.append("The aggregate comparison pools homogeneous rates and may be taken at face value.")
    else:
        lines.append(
            "The aggregate comparison pools heterogeneous stratum rates and is not trustworthy; "
            "only the per-stratum comparisons are interpretable."
        )

    return AggregateVerdict(
        aggregate_rates=(rate0, rate1),
        aggregate_direction=agg_dir,
        per_stratum=tuple(per_stratum),
        flipped_strata=tuple(flipped),
        reversal_present=bool(reversal),
        homogeneity=homogeneity,
        aggregate_trustworthy=bool(trustworthy),
        narrative="\n".join(lines),
        alpha=alpha,
    )


def _fmt_p(p: float) -> str:
    if p < 0.0005:
        return "< .001"
    return "= " + f"{p:.3f}"[1:]


@dataclass(frozen=True)
class EventProbabilityTriple:
    """Conditional success probabilities marginally and inside two strata.

    Records P(A | B) and P(A | not B) along with the same pair inside
    stratum C and inside its complement.
    """

    p_a_given_b: float
    p_a_given_notb: float
    p_a_given_b_c: float
    p_a_given_notb_c: float
    p_a_given_b_notc: float
    p_a_given_notb_notc: float

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (np.isfinite(value) and 0.0 <= value <= 1.0):
                raise InvalidSpec(f"{name}={value!r} is not a probability")


@dataclass(frozen=True)
class EventReversalResult:
    """Whether the marginal ordering flips inside both strata."""

    pattern_holds: bool
    mirrored: bool


def check_event_reversal(triple: EventProbabilityTriple) -> EventReversalResult:
    """Check the strict event-probability reversal pattern.

    The canonical pattern: P(A|B) < P(A|notB) while inside both strata the
    inequality runs the other way. The mirrored pattern flips every
    inequality. Any equality breaks the pattern.
    """
    canonical = (
        triple.p_a_given_b < triple.p_a_given_notb
        and triple.p_a_given_b_c > triple.p_a_given_notb_c
        and triple.p_a_given_b_notc > triple.p_a_given_notb_notc
    )
    mirrored = (
        triple.p_a_given_b > triple.p_a_given_notb
        and triple.p_a_given_b_c < triple.p_a_given_notb_c
        and triple.p_a_given_b_notc < triple.p_a_given_notb_notc
    )
    return EventReversalResult(pattern_holds=bool(canonical or mirrored), mirrored=bool(mirrored))


def triple_from_tables(tables: StratifiedTables) -> EventProbabilityTriple:
    """Build an event-probability triple from a two-stratum family.

    Group column 0 plays the role of B, column 1 of not-B; the first
    stratum is C, the second its complement.
    """
    if len(tables.strata) != 2:
        raise InvalidSpec("an event triple needs exactly two strata")
    (_, first), (_, second) = tables.strata
    agg = tables.aggregate
    return EventProbabilityTriple(
        p_a_given_b=agg.rate(0),
        p_a_given_notb=agg.rate(1),
        p_a_given_b_c=first.rate(0),
        p_a_given_notb_c=first.rate(1),
        p_a_given_b_notc=second.rate(0),
        p_a_given_notb_notc=second.rate(1),
    )


def stratified_tables_from_json(obj: dict) -> StratifiedTables:
    """Parse the on-disk JSON layout into StratifiedTables.

    Expected shape:
        {"aggregate": {"labels": {"rows": [...], "cols": [...]},
                       "counts": [[..., ...], [..., ...]]},
         "strata": [{"name": ..., "counts": [[..., ...], [..., ...]]}],
         "complete": true | false}
    """
    try:
        labels = obj["aggregate"]["labels"]
        rows = tuple(labels["rows"])
        cols = tuple(labels["cols"])
        aggregate = ContingencyTable(row_labels=rows, col_labels=cols, counts=obj["aggregate"]["counts"])
        strata = tuple(
            (entry["name"], ContingencyTable(row_labels=rows, col_labels=cols, counts=entry["counts"]))
            for entry in obj["strata"]
        )
        complete = bool(obj["complete"])
    except (KeyError, TypeError) as exc:
        raise InvalidSpec(f"malformed stratified-tables JSON: {exc}") from None
    return StratifiedTables(aggregate=aggregate, strata=strata, complete=complete)
