"""Command-line interface.

Commands:
  analyze-regression  classify a reversal between a marginal fit and a
                      conditional one (second regressor, per-group fits,
                      or a trend/memory-corrected correlation)
  analyze-table       classify a reversal in stratified 2x2 count tables
  simulate            write seeded synthetic datasets, or estimate a
                      Monte Carlo error rate (mc-size)
  reverse-conditions  evaluate the three-correlation reversal conditions

Exit codes: 0 success, 2 invalid input, 3 degenerate data. All output is
deterministic for fixed flags and seed; JSON is rendered with sorted keys.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import secrets
import sys

import numpy as np

from . import bernoulli, misspec, simulate, verdict
from .core_stats import Series, sample_moments
from .errors import (
    DegenerateData,
    DegeneratePool,
    InvalidSpec,
    RevcheckError,
    UnknownColumn,
)
from .parameterization import (
    check_reversal_conditions,
    corr_from_slope,
    derive_full_params,
    joint_moments_from_correlations,
)
from .regression import Dataset, ModelSpec, OrderingVariable, fit


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revcheck",
        description="Decide whether an observed association reversal is statistically trustworthy.",
    )
    parser.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    parser.add_argument("--trend-degree", type=int, default=3, help="detrending polynomial degree")
    parser.add_argument("--lags", type=int, default=2, help="lag depth for memory diagnostics")
    parser.add_argument("--output", choices=("text", "json"), default="text", help="report format")
    parser.add_argument("--seed", type=int, default=None, help="seed for anything random")
    parser.add_argument("--timestamp", action="store_true", help="stamp text output with the UTC time")
    sub = parser.add_subparsers(dest="command", required=True)

    reg = sub.add_parser("analyze-regression", help="classify a regression-based reversal")
    reg.add_argument("csv_path", help="input CSV with a header row")
    reg.add_argument("--response", required=True, help="response column")
    reg.add_argument("--regressors", nargs="+", required=True, help="one or two regressor columns")
    reg.add_argument(
        "--ordering",
        action="append",
        default=[],
        metavar="NAME[:KIND]",
        help="declare a column as an ordering (kind: time, binary_group, categorical)",
    )
    reg.add_argument("--by-group", default=None, metavar="ORDERING", help="condition on a group ordering")

    tab = sub.add_parser("analyze-table", help="classify a reversal in stratified 2x2 tables")
    tab.add_argument("json_path", help="stratified-tables JSON file")

    sim = sub.add_parser("simulate", help="generate seeded data or Monte Carlo error rates")
    simsub = sim.add_subparsers(dest="dgp_command", required=True)

    sim_bern = simsub.add_parser("bernoulli", help="IID 0/1 draws")
    sim_bern.add_argument("--theta", type=float, required=True)
    sim_bern.add_argument("--n", type=int, required=True)
    sim_bern.add_argument("--out", default="-", help="output CSV path (default stdout)")

    sim_e3 = simsub.add_parser("example3", help="two-group data with a negative pooled slope")
    sim_e3.add_argument("--n-per-group", type=int, default=50)
    sim_e3.add_argument("--out", default="-")

    sim_niid = simsub.add_parser("niid", help="trivariate Normal (y, x1, x2) draws")
    sim_niid.add_argument("--rho12", type=float, required=True)
    sim_niid.add_argument("--rho13", type=float, required=True)
    sim_niid.add_argument("--rho23", type=float, required=True)
    sim_niid.add_argument("--n", type=int, default=1000)
    sim_niid.add_argument("--out", default="-")

    sim_tr = simsub.add_parser("trending", help="independent trending pair with AR(1) noise")
    sim_tr.add_argument("--n", type=int, default=46)
    sim_tr.add_argument("--out", default="-")

    sim_mc = simsub.add_parser("mc-size", help="Monte Carlo rejection rate of a test under a DGP")
    sim_mc.add_argument("--dgp", choices=("trending", "niid"), required=True)
    sim_mc.add_argument(
        "--test",
        choices=("naive-correlation", "corrected-correlation", "coefficient"),
        default=None,
        help="defaults: naive-correlation for trending, coefficient for niid",
    )
    sim_mc.add_argument("--reps", type=int, default=10000)
    sim_mc.add_argument("--threads", type=int, default=1)
    sim_mc.add_argument("--n", type=int, default=None, help="sample size per replication")
    sim_mc.add_argument("--rho12", type=float, default=0.5)
    sim_mc.add_argument("--rho13", type=float, default=0.7)
    sim_mc.add_argument("--rho23", type=float, default=0.8)

    rev = sub.add_parser("reverse-conditions", help="evaluate the three-correlation reversal conditions")
    rev.add_argument("rho12", type=float)
    rev.add_argument("rho13", type=float)
    rev.add_argument("rho23", type=float)

    return parser


def _stamp(args, text: str) -> str:
    if args.timestamp and args.output == "text":
        now = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        return f"# generated {now}\n{text}"
    return text


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(32)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _direction(sign_value: float) -> int:
    return int(np.sign(sign_value))


def _fmt3(value: float) -> str:
    return verdict._fmt(value)


# ---------------------------------------------------------------- regression


def _read_csv_columns(path: str) -> dict:
    try:
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise InvalidSpec(f"{path} is empty") from None
            rows = list(reader)
    except OSError as exc:
        raise InvalidSpec(f"cannot read {path}: {exc}") from None
    if len(set(header)) != len(header):
        raise InvalidSpec("duplicate column names in CSV header")
    columns = {name: [] for name in header}
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise InvalidSpec(f"row {i} has {len(row)} fields, expected {len(header)}")
        for name, cell in zip(header, row):
            if cell.strip() == "":
                raise InvalidSpec(f"blank value in column {name!r}, row {i}")
            columns[name].append(cell.strip())
    if not rows:
        raise InvalidSpec(f"{path} has a header but no rows")
    return columns


def _infer_ordering_kind(values: list) -> str:
    try:
        numeric = np.array([float(v) for v in values])
    except ValueError:
        return "categorical"
    if set(np.unique(numeric)) <= {0.0, 1.0}:
        return "binary_group"
    if np.all(np.diff(numeric) > 0):
        return "time"
    return "categorical"


def _build_dataset(raw: dict, ordering_specs: list) -> Dataset:
    declared = {}
    for spec_text in ordering_specs:
        name, _, kind = spec_text.partition(":")
        if name not in raw:
            raise UnknownColumn(f"ordering column {name!r} not in the CSV")
        values = raw[name]
        kind = kind or _infer_ordering_kind(values)
        if kind in ("time", "binary_group"):
            try:
                parsed = np.array([float(v) for v in values])
            except ValueError:
                raise InvalidSpec(f"ordering {name!r} declared {kind} but is not numeric") from None
        else:
            parsed = np.array(values, dtype=object)
        declared[name] = OrderingVariable(name, kind, parsed)
    columns = {}
    for name, values in raw.items():
        if name in declared:
            continue
        try:
            columns[name] = np.array([float(v) for v in values])
        except ValueError as exc:
            raise InvalidSpec(f"column {name!r} is not numeric: {exc}") from None
    return Dataset(columns=columns, orderings=declared)


def _merge_reports(reports: list, source: str) -> misspec.MisspecReport:
    """Combine per-group battery reports: a failure anywhere is a failure."""
    statuses = {}
    p_values = {}
    evidence = []
    for report in reports:
        evidence.extend(report.evidence)
        for label, status in report.per_assumption.items():
            current = statuses.get(label)
            if status == misspec.FAIL or current == misspec.FAIL:
                statuses[label] = misspec.FAIL
            elif status == misspec.UNTESTED or current == misspec.UNTESTED:
                statuses[label] = misspec.UNTESTED
            else:
                statuses[label] = misspec.PASS
            p = report.p_values.get(label)
            if p is not None and (p_values.get(label) is None or p < p_values[label]):
                p_values[label] = p
            p_values.setdefault(label, None)
    overall = all(status != misspec.FAIL for status in statuses.values())
    return misspec.MisspecReport(
        per_assumption=statuses,
        p_values=p_values,
        evidence=tuple(evidence),
        overall_adequate=overall,
        degenerate=any(r.degenerate for r in reports),
        source=source,
    )


def _corrected_conditional(data: Dataset, response: str, regressor: str, cfg: misspec.BatteryConfig):
    """Conditional side for a lone trending pair: the corrected correlation."""
    x = Series(data.column(regressor), regressor)
    y = Series(data.column(response), response)
    corrected = misspec.corrected_correlation(x, y, cfg)
    source = "corrected correlation"
    x_clean = misspec.dememorize(misspec.detrend(x, cfg.trend_degree), cfg.lag_count)
    y_clean = misspec.dememorize(misspec.detrend(y, cfg.trend_degree), cfg.lag_count)
    n_eff = len(x_clean)
    clean = Dataset(
        columns={regressor: x_clean.values, response: y_clean.values},
        orderings={"t": OrderingVariable("t", "time", np.arange(1, n_eff + 1, dtype=float))},
    )
    clean_fit = fit(clean, ModelSpec(response=response, regressors=(regressor,)))
    report = misspec.run_battery(clean, clean_fit, cfg, source=source)
    return corrected, report, source


def cmd_analyze_regression(args) -> str:
    raw = _read_csv_columns(args.csv_path)
    data = _build_dataset(raw, args.ordering)
    if len(args.regressors) not in (1, 2):
        raise InvalidSpec("give one or two regressor columns")
    response = args.response
    x1 = args.regressors[0]
    alpha = args.alpha
    cfg = misspec.BatteryConfig(
        alpha=alpha,
        trend_degree=args.trend_degree,
        lag_count=args.lags,
        orderings_to_test=tuple(data.orderings),
    )

    marginal_source = f"fit {response} ~ {x1}"
    marginal_fit = fit(data, ModelSpec(response=response, regressors=(x1,)))
    if marginal_fit.degenerate:
        raise DegenerateData(f"{marginal_source} has a numerically exact fit")
    slope_idx = marginal_fit.index_of(x1)
    slope = float(marginal_fit.coefficients[slope_idx])
    slope_p = float(marginal_fit.p_values[slope_idx])
    marginal_report = misspec.run_battery(data, marginal_fit, cfg, source=marginal_source)
    marginal_side = verdict.AssociationSide(
        source=marginal_source, direction=_direction(slope), p_value=slope_p
    )

    moments = sample_moments(np.column_stack([data.column(response), data.column(x1)]))
    naive_rho = float(moments.corr[0, 1])
    slope_implied_rho = corr_from_slope(slope, moments.cov[0, 0], moments.cov[1, 1])

    narrative = [f"Marginal: {verdict.format_fit(marginal_fit)}"]
    narrative.append(
        f"Naive correlation of ({x1}, {response}): {_fmt3(naive_rho)}"
        f" (slope-implied {_fmt3(slope_implied_rho)})"
    )

    corrected = None
    if len(args.regressors) == 2:
        x2 = args.regressors[1]
        cond_source = f"fit {response} ~ {x1} + {x2}"
        cond_fit = fit(data, ModelSpec(response=response, regressors=(x1, x2)))
        if cond_fit.degenerate:
            raise DegenerateData(f"{cond_source} has a numerically exact fit")
        idx = cond_fit.index_of(x1)
        cond_sign = float(cond_fit.coefficients[idx])
        cond_p = float(cond_fit.p_values[idx])
        conditional_report = misspec.run_battery(data, cond_fit, cfg, source=cond_source)
        conditional_side = verdict.AssociationSide(
            source=cond_source, direction=_direction(cond_sign), p_value=cond_p
        )
        conditioning = f"conditioning on {x2}"
        narrative.append(f"Conditional: {verdict.format_fit(cond_fit)}")
    elif args.by_group is not None:
        ordering = data.ordering(args.by_group)
        if ordering.kind == "time":
            raise InvalidSpec("--by-group needs a group ordering, not a time ordering")
        levels = sorted(set(ordering.values.tolist()))
        if len(levels) < 2:
            raise InvalidSpec(f"ordering {args.by_group!r} has fewer than two levels")
        cond_source = f"per-group fits of {response} ~ {x1} within {args.by_group}"
        group_fits, group_reports, signs, ps = [], [], [], []
        for level in levels:
            g_data = data.take(np.flatnonzero(ordering.values == level))
            g_fit = fit(g_data, ModelSpec(response=response, regressors=(x1,)))
            if g_fit.degenerate:
                raise DegenerateData(f"group {level!r} has a numerically exact fit")
            g_report = misspec.run_battery(g_data, g_fit, cfg, source=cond_source)
            idx = g_fit.index_of(x1)
            signs.append(float(np.sign(g_fit.coefficients[idx])))
            ps.append(float(g_fit.p_values[idx]))
            group_fits.append((level, g_fit))
            group_reports.append(g_report)
        conditional_report = _merge_reports(group_reports, cond_source)
        if all(s == signs[0] for s in signs) and signs[0] != 0:
            raw_sign = signs[0]
        else:
            raw_sign = 0.0
        cond_p = max(ps)
        conditional_side = verdict.AssociationSide(
            source=cond_source, direction=_direction(raw_sign), p_value=cond_p
        )
        conditioning = f"within levels of {args.by_group}"
        for level, g_fit in group_fits:
            narrative.append(f"Group {level}: {verdict.format_fit(g_fit)}")
    else:
        has_time = any(o.kind == "time" for o in data.orderings.values())
        if not has_time:
            raise InvalidSpec(
                "nothing to condition on: give a second regressor, --by-group, or a time ordering"
            )
        corrected, conditional_report, cond_source = _corrected_conditional(data, response, x1, cfg)
        conditional_side = verdict.AssociationSide(
            source=cond_source,
            direction=_direction(corrected.rho),
            p_value=corrected.p_value,
        )
        conditioning = (
            f"detrended (degree {cfg.trend_degree}) and dememorized ({cfg.lag_count} lags) both series"
        )
        narrative.append(
            f"Corrected correlation: {_fmt3(corrected.rho)} "
            f"(p {verdict.format_p(corrected.p_value)}, n_eff = {corrected.n_effective})"
        )

    pair = verdict.AssociationPair(marginal=marginal_side, conditional=conditional_side, conditioning=conditioning)
    result = verdict.classify(pair, marginal_report, conditional_report, alpha=alpha)
    return verdict.render(result, args.output, narrative="\n".join(narrative))


# --------------------------------------------------------------------- table


def cmd_analyze_table(args) -> str:
    try:
        with open(args.json_path) as handle:
            obj = json.load(handle)
    except OSError as exc:
        raise InvalidSpec(f"cannot read {args.json_path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{args.json_path} is not valid JSON: {exc}") from None
    tables = bernoulli.stratified_tables_from_json(obj)
    alpha = args.alpha
    agg_verdict = bernoulli.aggregate_verdict(tables, alpha=alpha)

    agg = tables.aggregate
    comparison = bernoulli.two_proportion_test(
        agg.successes(0), agg.total(0), agg.successes(1), agg.total(1), alpha=alpha
    )
    marginal_source = "aggregate rate comparison"
    marginal_side = verdict.AssociationSide(
        source=marginal_source,
        direction=int(np.sign(comparison.diff)),
        p_value=comparison.p_value,
    )
    marginal_report = verdict.adequacy_from_homogeneity(agg_verdict.homogeneity, source=marginal_source)

    stratum_signs = [int(np.sign(r0 - r1)) for _, r0, r1 in agg_verdict.per_stratum]
    nonzero = [s for s in stratum_signs if s != 0]
    majority = 0
    if nonzero:
        positives = sum(1 for s in nonzero if s > 0)
        negatives = len(nonzero) - positives
        majority = 1 if positives > negatives else -1 if negatives > positives else 0
    stratum_ps = []
    for _, table in tables.strata:
        try:
            stratum_ps.append(
                bernoulli.two_proportion_test(
                    table.successes(0), table.total(0), table.successes(1), table.total(1), alpha=alpha
                ).p_value
            )
        except DegeneratePool:
            stratum_ps.append(1.0)
    cond_source = "per-stratum rate comparisons"
    conditional_side = verdict.AssociationSide(
        source=cond_source, direction=majority, p_value=min(stratum_ps)
    )
    conditional_report = verdict.untested_adequacy(source=cond_source)

    narrative = [agg_verdict.narrative]
    if len(tables.strata) == 2:
        pattern = bernoulli.check_event_reversal(bernoulli.triple_from_tables(tables))
        if pattern.pattern_holds:
            orientation = "mirrored" if pattern.mirrored else "canonical"
            narrative.append(
                f"Strict event-probability reversal pattern holds ({orientation} orientation)."
            )
        else:
            narrative.append("Strict event-probability reversal pattern does not hold.")
    narrative.append(
        f"Aggregate two-proportion z = {_fmt3(comparison.z)} (p {verdict.format_p(comparison.p_value)})."
    )

    pair = verdict.AssociationPair(
        marginal=marginal_side,
        conditional=conditional_side,
        conditioning="within the declared strata",
    )
    result = verdict.classify(pair, marginal_report, conditional_report, alpha=alpha)
    return verdict.render(result, args.output, narrative="\n".join(narrative))


# ------------------------------------------------------------------ simulate


def _write_csv(data: Dataset, out: str, column_order: list) -> str:
    rows = []
    header = []
    series = []
    for name in column_order:
        header.append(name)
        if name in data.orderings:
            series.append(data.orderings[name].values)
        else:
            series.append(data.column(name))
    n = data.n
    lines = [",".join(header)]
    for i in range(n):
        cells = []
        for values in series:
            value = values[i]
            try:
                cells.append(repr(float(value)))
            except (TypeError, ValueError):
                cells.append(str(value))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if out == "-":
        return text
    with open(out, "w") as handle:
        handle.write(text)
    return f"wrote {n} rows to {out}\n"


def _mc_test_descriptor(args, kind) -> simulate.TestDescriptor:
    choice = args.test
    if choice is None:
        choice = "naive-correlation" if args.dgp == "trending" else "coefficient"
    if choice == "naive-correlation":
        return simulate.TestDescriptor(kind="naive_correlation", x="x", y="y")
    if choice == "corrected-correlation":
        return simulate.TestDescriptor(
            kind="corrected_correlation", x="x", y="y", trend_degree=args.trend_degree, lag_count=args.lags
        )
    if args.dgp != "niid":
        raise InvalidSpec("coefficient tests need the niid DGP")
    params = derive_full_params(kind.joint)
    return simulate.TestDescriptor(
        kind="coefficient", response="y", regressors=("x1", "x2"), target="x1", null_value=params.beta1
    )


def cmd_simulate(args) -> str:
    seed = _resolve_seed(args)
    if args.dgp_command == "bernoulli":
        data = simulate.generate(simulate.DgpSpec(simulate.BernoulliIid(args.theta, args.n), seed))
        return _write_csv(data, args.out, ["t", "x"])
    if args.dgp_command == "example3":
        data = simulate.example3_generator(n_per_group=args.n_per_group, seed=seed)
        return _write_csv(data, args.out, ["group", "x", "y"])
    if args.dgp_command == "niid":
        joint = joint_moments_from_correlations(args.rho12, args.rho13, args.rho23)
        data = simulate.generate(simulate.DgpSpec(simulate.NiidRegression(joint, args.n), seed))
        return _write_csv(data, args.out, ["t", "y", "x1", "x2"])
    if args.dgp_command == "trending":
        data = simulate.generate(simulate.DgpSpec(simulate.TrendingPair(n=args.n), seed))
        return _write_csv(data, args.out, ["t", "x", "y"])
    if args.dgp_command == "mc-size":
        if args.dgp == "trending":
            kind = simulate.TrendingPair(n=args.n or 46)
        else:
            joint = joint_moments_from_correlations(args.rho12, args.rho13, args.rho23)
            kind = simulate.NiidRegression(joint, args.n or 100)
        descriptor = _mc_test_descriptor(args, kind)
        result = simulate.mc_error_rate(
            simulate.DgpSpec(kind, seed),
            descriptor,
            alpha=args.alpha,
            replications=args.reps,
            threads=args.threads,
        )
        if args.output == "json":
            payload = {
                "dgp": args.dgp,
                "test": descriptor.kind,
                "seed": seed,
                "replications": result.replications,
                "rejections": result.rejections,
                "rejection_rate": result.rejection_rate,
                "mc_se": result.mc_se,
                "alpha": result.alpha,
            }
            return json.dumps(payload, sort_keys=True, indent=2) + "\n"
        return (
            f"dgp: {args.dgp}\ntest: {descriptor.kind}\nseed: {seed}\n"
            f"replications: {result.replications}\nrejections: {result.rejections}\n"
            f"rejection rate: {result.rejection_rate:.4f} (mc se {result.mc_se:.4f}, "
            f"nominal {result.alpha:g})\n"
        )
    raise InvalidSpec(f"unknown simulate subcommand {args.dgp_command!r}")


# --------------------------------------------------------- reverse-conditions


def cmd_reverse_conditions(args) -> str:
    conditions = check_reversal_conditions(args.rho12, args.rho13, args.rho23)
    params = None
    if conditions.det_positive and max(abs(args.rho12), abs(args.rho13), abs(args.rho23)) < 1.0:
        joint = joint_moments_from_correlations(args.rho12, args.rho13, args.rho23)
        params = derive_full_params(joint)
    if args.output == "json":
        payload = {
            "rho12": conditions.rho12,
            "rho13": conditions.rho13,
            "rho23": conditions.rho23,
            "same_sign": conditions.same_sign,
            "product_exceeds": conditions.product_exceeds,
            "corr_det": conditions.corr_det,
            "det_positive": conditions.det_positive,
            "reversal_predicted": conditions.reversal_predicted,
            "unit_variance_params": None
            if params is None
            else {
                "beta0": params.beta0,
                "beta1": params.beta1,
                "beta2": params.beta2,
                "sigma_u2": params.sigma_u2,
                "alpha1": conditions.rho12,
            },
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    mark = {True: "yes", False: "no"}
    lines = [
        f"rho12 = {_fmt3(conditions.rho12)}, rho13 = {_fmt3(conditions.rho13)}, "
        f"rho23 = {_fmt3(conditions.rho23)}",
        f"(i)   product carries the sign of rho12: {mark[conditions.same_sign]}",
        f"(ii)  |rho13 * rho23| > |rho12|:         {mark[conditions.product_exceeds]}"
        f"  ({_fmt3(abs(conditions.rho13 * conditions.rho23))} vs {_fmt3(abs(conditions.rho12))})",
        f"(iii) correlation determinant > 0:       {mark[conditions.det_positive]}"
        f"  (det = {_fmt3(conditions.corr_det)})",
        f"reversal predicted: {mark[conditions.reversal_predicted]}",
    ]
    if params is not None:
        lines.append(
            "unit-variance params: "
            f"beta1 = {_fmt3(params.beta1)}, beta2 = {_fmt3(params.beta2)}, "
            f"sigma_u2 = {_fmt3(params.sigma_u2)}, marginal slope alpha1 = {_fmt3(conditions.rho12)}"
        )
    else:
        lines.append("unit-variance params: undefined (not a positive-definite correlation matrix)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- main


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze-regression":
            out = cmd_analyze_regression(args)
        elif args.command == "analyze-table":
            out = cmd_analyze_table(args)
        elif args.command == "simulate":
            out = cmd_simulate(args)
        elif args.command == "reverse-conditions":
            out = cmd_reverse_conditions(args)
        else:
            parser.error(f"unknown command {args.command!r}")
    except (DegenerateData, DegeneratePool) as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return 3
    except RevcheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(_stamp(args, out))
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
