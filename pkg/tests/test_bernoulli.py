import json
import math

import numpy as np
import pytest

from revcheck.bernoulli import (
    ContingencyTable,
    EventProbabilityTriple,
    StratifiedTables,
    aggregate_verdict,
    check_event_reversal,
    estimate_theta,
    homogeneity_test,
    stratified_tables_from_json,
    triple_from_tables,
    two_proportion_test,
)
from revcheck.errors import (
    DegeneratePool,
    InvalidCounts,
    InvalidSpec,
    MismatchedInputs,
    TooFewStrata,
)
from revcheck.fixtures import load_json


def admissions_tables():
    return stratified_tables_from_json(load_json("berkeley.json"))


def plots_tables():
    return stratified_tables_from_json(load_json("lindley_novick.json"))


def test_estimate_theta():
    est = estimate_theta(30, 100)
    assert est.theta_hat == pytest.approx(0.3)
    assert est.se == pytest.approx(math.sqrt(0.3 * 0.7 / 100))
    with pytest.raises(InvalidCounts):
        estimate_theta(5, 0)
    with pytest.raises(InvalidCounts):
        estimate_theta(7, 5)


def test_two_proportion_admissions_oracle():
    # Explicit arithmetic from the aggregate counts: pooled rate, pooled
    # standard error, and the z statistic, reproduced digit for digit.
    s0, n0, s1, n1 = 3738, 8442, 1494, 4321
    pooled = (s0 + s1) / (n0 + n1)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n0 + 1 / n1))
    z_oracle = (s0 / n0 - s1 / n1) / se
    comp = two_proportion_test(s0, n0, s1, n1)
    assert math.isclose(comp.z, z_oracle, rel_tol=1e-12)
    assert round(comp.z, 3) == 10.547
    assert comp.reject
    assert comp.pooled_theta == pytest.approx(pooled)
    assert round(s0 / n0, 2) == 0.44 and round(s1 / n1, 2) == 0.35


def test_two_proportion_plots_oracle():
    # 20/40 vs 16/40: pooled .45, se sqrt(.45*.55*.05), z = .1/se = .8989...
    comp = two_proportion_test(20, 40, 16, 40)
    se = math.sqrt(0.45 * 0.55 * (1 / 40 + 1 / 40))
    assert math.isclose(comp.z, 0.1 / se, rel_tol=1e-12)
    assert round(comp.z, 3) == 0.899
    assert not comp.reject


def test_two_proportion_degenerate_pool():
    with pytest.raises(DegeneratePool):
        two_proportion_test(0, 10, 0, 10)
    with pytest.raises(DegeneratePool):
        two_proportion_test(10, 10, 10, 10)


def test_homogeneity_oracle_plots():
    # First column (2/10 and 18/30 pooled at .5): expected successes 5 and 15,
    # chi2 = 9/5 + 9/15 + 9/5 + 9/15 = 4.8 over success and failure cells.
    # Second column (9/30 and 7/10 pooled at .4): expected 12 and 4,
    # chi2 = 9/12 + 9/4 + 9/18 + 9/6 = 5.0.
    tables = plots_tables()
    first = homogeneity_test(tables, 0)
    second = homogeneity_test(tables, 1)
    assert math.isclose(first.chi2, 4.8, rel_tol=1e-12)
    assert math.isclose(second.chi2, 5.0, rel_tol=1e-12)
    assert first.df == 1 and second.df == 1
    assert round(first.p_value, 4) == 0.0285
    assert round(second.p_value, 4) == 0.0253
    assert not first.id_holds and not second.id_holds
    # Smallest expected cell is 10 * .4 = 4 on the second column.
    assert second.small_sample_warning
    assert not first.small_sample_warning


def test_homogeneity_large_admissions_column():
    tables = admissions_tables()
    male = homogeneity_test(tables, 0)
    assert male.df == 5
    assert male.chi2 > 400
    assert male.p_value < 1e-10
    assert not male.small_sample_warning


def test_homogeneity_needs_strata():
    agg = ContingencyTable(("a", "b"), ("l", "r"), ((5, 5), (5, 5)))
    single = StratifiedTables(aggregate=agg, strata=(("only", agg),), complete=True)
    with pytest.raises(TooFewStrata):
        homogeneity_test(single, 0)


def test_aggregate_verdict_admissions():
    v = aggregate_verdict(admissions_tables())
    assert v.aggregate_rates[0] == pytest.approx(3738 / 8442)
    assert v.aggregate_rates[1] == pytest.approx(1494 / 4321)
    assert v.aggregate_direction == 1
    assert v.reversal_present
    assert not v.aggregate_trustworthy
    assert sorted(v.flipped_strata) == ["A", "B", "D", "E", "F"]
    assert "not trustworthy" in v.narrative
    # Table of per-stratum rates, rounded to two decimals as displayed.
    rounded = {name: (round(r0, 2), round(r1, 2)) for name, r0, r1 in v.per_stratum}
    assert rounded == {
        "A": (0.62, 0.82),
        "B": (0.63, 0.68),
        "C": (0.37, 0.34),
        "D": (0.33, 0.35),
        "E": (0.28, 0.32),
        "F": (0.06, 0.07),
    }


def test_aggregate_verdict_plots():
    v = aggregate_verdict(plots_tables())
    assert v.aggregate_rates == (pytest.approx(0.5), pytest.approx(0.4))
    assert [(round(r0, 1), round(r1, 1)) for _, r0, r1 in v.per_stratum] == [
        (0.2, 0.3),
        (0.6, 0.7),
    ]
    assert v.reversal_present
    assert not v.aggregate_trustworthy


def test_event_reversal_plots_pattern():
    triple = triple_from_tables(plots_tables())
    assert triple.p_a_given_b == pytest.approx(0.5)
    assert triple.p_a_given_notb == pytest.approx(0.4)
    result = check_event_reversal(triple)
    assert result.pattern_holds


def test_event_reversal_mirror_symmetry():
    canonical = EventProbabilityTriple(
        p_a_given_b=0.4,
        p_a_given_notb=0.5,
        p_a_given_b_c=0.3,
        p_a_given_notb_c=0.2,
        p_a_given_b_notc=0.7,
        p_a_given_notb_notc=0.6,
    )
    res = check_event_reversal(canonical)
    assert res.pattern_holds and not res.mirrored
    mirrored = EventProbabilityTriple(
        p_a_given_b=0.5,
        p_a_given_notb=0.4,
        p_a_given_b_c=0.2,
        p_a_given_notb_c=0.3,
        p_a_given_b_notc=0.6,
        p_a_given_notb_notc=0.7,
    )
    res2 = check_event_reversal(mirrored)
    assert res2.pattern_holds and res2.mirrored
    broken = EventProbabilityTriple(
        p_a_given_b=0.5,
        p_a_given_notb=0.4,
        p_a_given_b_c=0.3,
        p_a_given_notb_c=0.2,
        p_a_given_b_notc=0.6,
        p_a_given_notb_notc=0.7,
    )
    assert not check_event_reversal(broken).pattern_holds


def test_event_triple_validation():
    with pytest.raises(InvalidSpec):
        EventProbabilityTriple(1.2, 0.5, 0.5, 0.5, 0.5, 0.5)


def test_triple_needs_exactly_two_strata():
    with pytest.raises(InvalidSpec):
        triple_from_tables(admissions_tables())


def test_contingency_table_validation():
    with pytest.raises(InvalidCounts):
        ContingencyTable(("a", "b"), ("l", "r"), ((1, -2), (3, 4)))
    with pytest.raises(InvalidCounts):
        ContingencyTable(("a", "b"), ("l", "r"), ((0, 1), (0, 1)))  # empty column
    with pytest.raises(MismatchedInputs):
        ContingencyTable(("a",), ("l", "r"), ((1, 2), (3, 4)))


def test_stratified_tables_consistency():
    agg = ContingencyTable(("a", "b"), ("l", "r"), ((5, 5), (5, 5)))
    s1 = ContingencyTable(("a", "b"), ("l", "r"), ((5, 5), (5, 5)))
    s2 = ContingencyTable(("a", "b"), ("l", "r"), ((1, 1), (1, 1)))
    with pytest.raises(InvalidCounts):
        StratifiedTables(aggregate=agg, strata=(("one", s1), ("two", s2)), complete=True)
    partial = StratifiedTables(aggregate=agg, strata=(("one", s2),), complete=False)
    assert not partial.complete


def test_json_loader_roundtrip_and_errors():
    obj = load_json("lindley_novick.json")
    tables = stratified_tables_from_json(obj)
    assert tables.complete
    assert [name for name, _ in tables.strata] == ["short", "tall"]
    with pytest.raises(InvalidSpec):
        stratified_tables_from_json({"strata": []})
    bad = json.loads(json.dumps(obj))
    bad["strata"][0]["counts"] = [[1, 2]]
    with pytest.raises(InvalidCounts):
        stratified_tables_from_json(bad)


def test_bundled_fixture_copies_match_repo_root():
    # The repo root fixtures/ directory mirrors the bundled package data.
    import pathlib

    from revcheck.fixtures import fixture_path

    for name in ("berkeley.json", "lindley_novick.json"):
        bundled = json.loads(fixture_path(name).read_text())
        root_copy = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / name
        assert json.loads(root_copy.read_text()) == bundled
