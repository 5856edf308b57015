import argparse
import math
import os
import sys

from source.configuration import load_config, logging, setup_logging, OutputSection
from source.configuration_checker import check_configuration
from source.epredict import AlternativeQ, oracle_region, region, region_size_ratio
from source.errors import CausalEConfError, MissingField
from source.estimator import Regularization, estimate_F_vector, fit_counts
from source.experiments import (
    AGREEMENT_ROUNDING,
    ALPHA_GRID,
    MARKOV_ALPHAS,
    adversarial_lemma2,
    conditional_bound_check,
    exact_lemma1,
    exact_mc_agreement,
    mc_lemma1,
    model_id,
    regularization_sweep,
    slack_experiment,
    validity_integral,
)
from source.model import interventional_py
from source.plotting import PLOT_KINDS, load_report, plot_reports
from source.report_handler import ReportHandler
from source.sampling import STRATEGY_NAMES, RngSpec, sample_iid, strategy_from_name
from source.utils import read_dataset_csv, read_model_file, write_dataset_csv

CHECKS = ("lemma1", "validity", "lemma2", "conditional", "slack", "sweep", "exact")


def read_version():
    try:
        with open(os.path.join(os.path.dirname(os.path.abspath(__file__)), "VERSION"), "r") as version_file:
            return version_file.read().strip()
    except OSError:
        return "unknown version"


def _number(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")


def _number_list(text):
    return [_number(value) for value in text.split(",") if value.strip()]


def build_parser():
    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--config", help="YAML run configuration. Defaults to ./config/config.yml when present. Flags override it.")
    run_flags.add_argument("--debug", action="store_true", default=None, help="Log at DEBUG level.")
    run_flags.add_argument("--model", help="Model JSON file: x_labels, y_labels, z_labels and the flat (x, y, z) probability table.")
    run_flags.add_argument("--x", help="Intervention: label or index of the value X is set to (default 0).")
    run_flags.add_argument("--dataset", help="Observed dataset, CSV with header x,y,z. Without it a dataset of size --n is sampled from the model.")
    run_flags.add_argument("--n", type=int, help="Number of observations N in each dataset (default 50). Every bound holds for each finite N.")
    run_flags.add_argument("--c", type=_number, help="Additive smoothing constant c in F_y = sum_z (n_z + c)/(N + c) * (n_xyz + c)/(n_xz + c) (default 1). E[p_y/F_y] <= 1 is guaranteed at c = 1; other values are exploratory.")
    run_flags.add_argument("--trials", type=int, help="Monte Carlo trials, at least 1000 (default 100000). stderr in the pass rule estimate <= bound + sigma * stderr shrinks as 1/sqrt(trials).")
    run_flags.add_argument("--seed", type=int, help="Unsigned 64-bit master seed. Falls back to the config, then to the CAUSAL_ECONF_SEED environment variable, then 0.")
    run_flags.add_argument("--alpha", type=float, action="append", help="Level of the e-prediction region {y : Q(y)/F_y < alpha}; the true outcome falls outside it with probability at most 1/alpha. Repeatable (default 10).")
    run_flags.add_argument("--alternative", action="append", help="Alternative Q on the labels: uniform, point:<label> or a comma-separated vector. The e-value of label y is Q(y)/F_y, with E[Q(Y)/F_Y] <= 1. Repeatable.")
    run_flags.add_argument("--strategy", action="append", help=f"Strategy choosing X without seeing Y: {', '.join(STRATEGY_NAMES)}. E[p_y/F_y] <= 1 still holds when X_n depends only on past (X, Z) pairs and the current Z. Repeatable.")
    run_flags.add_argument("--strict-past", action="store_true", default=None, help="Hide the current Z from the strategy; it only sees past (X, Z) pairs.")
    run_flags.add_argument("--y", help="Label or index of Y for single-label checks: slack, where X is always x and F_y = (k + |Z|)/(N + 1), and conditional.")
    run_flags.add_argument("--z", help="Label or index of Z for the conditional check: E[(N + 1)/(n_z + 1)] <= 1/P(Z=z) and E[(n_xz + 1)/(n_xyz + 1)] <= 1/P(Y=y | X=x, Z=z).")
    run_flags.add_argument("--c-list", type=_number_list, help="Comma-separated smoothing constants c for the sweep of E[p_y/F_y] (default 0.25,0.5,1).")
    run_flags.add_argument("--mode", choices=("auto", "exact", "mc"), help="Conditional check: exact enumeration, Monte Carlo, or exact when N <= 3 on a rational model.")
    run_flags.add_argument("--sigma", type=float, help="A Monte Carlo check passes when estimate <= bound + sigma * stderr (default 4).")
    run_flags.add_argument("--budget", type=int, help="Largest number of datasets the exact enumeration may visit (default 10^7).")
    run_flags.add_argument("--output", help="Directory receiving region.json, report.json, report.csv and plots (default ./reports/).")

    parser = argparse.ArgumentParser(prog="causal-econf", description="Conformal e-prediction of the effect of an intervention under observed confounding.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("region", parents=[run_flags], help="Compute F_y, the e-values Q(y)/F_y and the e-prediction regions; writes region.json.")
    check = subparsers.add_parser("check", parents=[run_flags], help="Verify a finite-sample guarantee; writes report.json and report.csv.")
    check.add_argument("which", choices=CHECKS, help="lemma1: E[p_y/F_y] <= 1 on IID data. "
                                                     "validity: E[Q(Y)/F_Y] <= 1, error rates P(Y not in region) <= 1/alpha, and the integral over alpha of the error rate, which equals the mean e-value. "
                                                     "lemma2: E[p_y/F_y] <= 1 when X is chosen by a Y-oblivious strategy. "
                                                     "conditional: E[(N + 1)/(n_z + 1)] <= 1/P(Z=z), E[(n_xz + 1)/(n_xyz + 1)] <= 1/P(Y=y | X=x, Z=z) and their product. "
                                                     "slack: X always x, F_y = (k + |Z|)/(N + 1) against the simple conformal (k + 1)/(N + 1). "
                                                     "sweep: E[p_y/F_y] for several c, exploratory below c = 1. "
                                                     "exact: E[p_y/F_y] in rational arithmetic over every dataset of size N, with a Monte Carlo cross-check.")
    plot = subparsers.add_parser("plot", help="Draw an SVG figure from saved reports.")
    plot.add_argument("kind", choices=PLOT_KINDS, help="error-vs-alpha (validity report), region-size (region.json) or sweep (sweep report).")
    plot.add_argument("reports", nargs="+", help="Report files produced by region or check.")
    plot.add_argument("--out", help="SVG file to write. Defaults to <output>/<kind>.svg.")
    plot.add_argument("--output", help="Directory for the default SVG path (default ./reports/).")
    plot.add_argument("--debug", action="store_true", default=None, help="Log at DEBUG level.")
    return parser


def overrides_from_args(args):
    return {
        "debug": args.debug,
        "model": {"path": args.model, "intervention": args.x},
        "dataset": {"path": args.dataset},
        "run": {
            "alternative": args.alternative,
            "n": args.n,
            "c": args.c,
            "trials": args.trials,
            "seed": args.seed,
            "alpha": args.alpha,
            "strategy": args.strategy,
            "strict_past": args.strict_past,
            "y": args.y,
            "z": args.z,
            "c_list": args.c_list,
            "mode": args.mode,
            "sigma": args.sigma,
            "budget": args.budget,
        },
        "output": {"directory": args.output},
    }


def _alternative_name(spec):
    return spec if isinstance(spec, str) else ",".join(str(v) for v in spec)


def _load_model(conf, require_probs=True):
    labels, model = read_model_file(conf.model.path)
    if model is None and require_probs:
        raise MissingField(f"Model file {conf.model.path} has no probs; this command needs the true model.")
    x = labels.resolve("x", conf.model.intervention)
    return labels, model, x


def _meta(conf, command, labels, model, x, **extra):
    meta = {
        "command": command,
        "version": read_version(),
        "model": conf.model.path,
        "model_id": model_id(model) if model is not None else None,
        "x": labels.name("x", x),
        "N": conf.run.n,
        "c": conf.run.c,
        "seed": conf.run.seed,
    }
    meta.update(extra)
    return meta


def cmd_region(conf, handler):
    """
    Fit the counts of one dataset, compute F_y for the intervention, and for each alternative Q the
    e-values Q(y)/F_y, the regions at every requested alpha and, when the model has probabilities,
    the oracle regions. Writes region.json (and dataset.csv when the dataset was sampled).
    """
    labels, model, x = _load_model(conf, require_probs=False)
    run = conf.run
    if conf.dataset.path is not None:
        dataset = read_dataset_csv(conf.dataset.path, labels)
        sampled = False
    else:
        if model is None:
            raise MissingField(f"Model file {conf.model.path} has no probs and no dataset was given; nothing to sample from.")
        dataset = sample_iid(model, run.n, RngSpec(run.seed))
        write_dataset_csv(handler.path("dataset.csv"), dataset)
        sampled = True

    counts = fit_counts(dataset, labels.sizes)
    reg = Regularization(run.c)
    F = estimate_F_vector(counts, x, reg)
    p = interventional_py(model, x) if model is not None else None
    y_names = list(labels.y_labels)

    alternatives = []
    for spec in run.alternatives:
        q = AlternativeQ.parse(spec, y_names)
        per_label = []
        for y, name in enumerate(y_names):
            entry = {"y": name, "q": float(q[y]), "F": float(F[y]), "ratio": float(q[y] / F[y])}
            if p is not None:
                entry["p"] = float(p[y])
            per_label.append(entry)

        regions = []
        for alpha in run.alphas:
            estimated = region(q, F, alpha)
            entry = {"alpha": float(alpha), "members": [y_names[y] for y in sorted(estimated.members)]}
            if p is not None:
                oracle = oracle_region(q, p, alpha)
                entry["oracle_members"] = [y_names[y] for y in sorted(oracle.members)]
                ratio = region_size_ratio(estimated, oracle)
                # An empty oracle region next to a non-empty estimate has no finite ratio
                entry["size_ratio"] = ratio if math.isfinite(ratio) else None
            regions.append(entry)

        size_curve = []
        for alpha in ALPHA_GRID:
            point = {"alpha": float(alpha), "estimated": len(region(q, F, alpha))}
            point["oracle"] = len(oracle_region(q, p, alpha)) if p is not None else None
            size_curve.append(point)

        alternatives.append({"alternative": _alternative_name(spec), "labels": per_label,
                             "regions": regions, "size_curve": size_curve})
        logging.info(f"Q={_alternative_name(spec)}: " + ", ".join(f"alpha={r['alpha']:g} -> {r['members']}" for r in regions))

    payload = {
        "meta": _meta(conf, "region", labels, model, x, N=dataset.N, sampled=sampled,
                      dataset=conf.dataset.path if not sampled else "dataset.csv"),
        "alternatives": alternatives,
    }
    handler.save_json("region.json", payload)
    return 0


def _check_lemma1(conf, labels, model, x, reg):
    run = conf.run
    reports = mc_lemma1(model, x, run.n, reg, run.trials, run.seed, run.sigma)
    rows = [row for r in reports for row in r.rows()]
    return [r.to_dict() for r in reports], rows, all(r.passed for r in reports)


def _check_validity(conf, labels, model, x, reg):
    run = conf.run
    alphas = sorted(set(MARKOV_ALPHAS) | {float(a) for a in run.alphas})
    results, rows, passed = [], [], True
    for spec in run.alternatives:
        q = AlternativeQ.parse(spec, list(labels.y_labels))
        report = validity_integral(model, x, q, run.n, run.trials, run.seed, reg, alphas=alphas, sigma=run.sigma)
        name = _alternative_name(spec)
        results.append({"alternative": name, **report.to_dict()})
        rows += [{**row, "quantity": f"{row['quantity']}[{name}]"} for row in report.rows()]
        passed = passed and report.passed
    return results, rows, passed


def _check_lemma2(conf, labels, model, x, reg):
    run = conf.run
    results, rows, passed = [], [], True
    for name in run.strategies:
        strategy = strategy_from_name(name, model.x_size, list(labels.x_labels))
        reports = adversarial_lemma2(model, strategy, x, run.n, reg, run.trials, run.seed, run.strict_past, run.sigma)
        results.append({"strategy": name, "strict_past": run.strict_past, "reports": [r.to_dict() for r in reports]})
        rows += [{**row, "quantity": f"{row['quantity']}[{name}]"} for r in reports for row in r.rows()]
        passed = passed and all(r.passed for r in reports)
    return results, rows, passed


def _check_conditional(conf, labels, model, x, reg):
    run = conf.run
    y = labels.resolve("y", run.y)
    z = labels.resolve("z", run.z)
    report = conditional_bound_check(model, x, y, z, run.n, run.mode, run.trials, run.seed, run.budget, run.sigma)
    return [report.to_dict()], report.rows(), report.passed


def _check_slack(conf, labels, model, x, reg):
    run = conf.run
    y = labels.resolve("y", run.y)
    report = slack_experiment(model, x, y, run.n, run.trials, run.seed, sigma=run.sigma)
    return [{"z_size": model.z_size, **report.to_dict()}], report.rows(), report.passed


def _check_sweep(conf, labels, model, x, reg):
    run = conf.run
    sweep = regularization_sweep(model, x, run.n, run.c_list, run.trials, run.seed, run.sigma)
    results = [{"c": row.c, "violated": row.violated, "reports": [r.to_dict() for r in row.reports]} for row in sweep]
    rows = [r for row in sweep for report in row.reports for r in report.rows()]
    unit_rows = [row for row in sweep if row.c == 1.0]
    if any(row.violated for row in unit_rows):
        logging.warning("The sweep found a violation at c=1.")
    # Exploratory: findings go to the table, the exit code stays 0.
    return results, rows, True


def _check_exact(conf, labels, model, x, reg):
    run = conf.run
    exact = exact_lemma1(model, x, run.n, reg, run.budget)
    mc = mc_lemma1(model, x, run.n, reg, run.trials, run.seed, run.sigma)
    agreement = exact_mc_agreement(exact, mc, run.sigma)
    if not all(agreement):
        logging.warning(f"Monte Carlo estimates disagree with the exact values: {agreement}")
    results = [{"exact": exact.to_dict(), "mc": [r.to_dict() for r in mc], "agreement": agreement,
                "agreement_rule": {"sigma": run.sigma, "rounding": AGREEMENT_ROUNDING}}]
    rows = exact.rows() + [row for r in mc for row in r.rows()]
    return results, rows, exact.passed and all(agreement) and all(r.passed for r in mc)


CHECK_RUNNERS = {
    "lemma1": _check_lemma1,
    "validity": _check_validity,
    "lemma2": _check_lemma2,
    "conditional": _check_conditional,
    "slack": _check_slack,
    "sweep": _check_sweep,
    "exact": _check_exact,
}


def cmd_check(conf, which, handler):
    """Run one verification and write report.json and report.csv. Exit code 0 iff every pass flag is true."""
    labels, model, x = _load_model(conf)
    reg = Regularization(conf.run.c)
    logging.info(f"Running check {which} on {conf.model.path} (x={labels.name('x', x)}, N={conf.run.n}, c={conf.run.c}, seed={conf.run.seed})")
    results, rows, passed = CHECK_RUNNERS[which](conf, labels, model, x, reg)
    meta = _meta(conf, "check", labels, model, x, which=which, trials=conf.run.trials, sigma=conf.run.sigma, **{"pass": passed})
    if which == "sweep":
        meta["exploratory"] = True
    handler.save_report({"meta": meta, "results": results}, rows)
    logging.info(f"Check {which}: {'PASSED' if passed else 'FAILED'}")
    return 0 if passed else 1


def cmd_plot(args):
    output = OutputSection({"directory": args.output} if args.output else {})
    path = args.out
    if path is None:
        path = ReportHandler(output).path(f"{args.kind}.svg")
    reports = [(report_path, load_report(report_path)) for report_path in args.reports]
    plot_reports(reports, args.kind, path)
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    setup_logging(bool(args.debug))
    logging.info(f"causal-econf {read_version()} is starting ....")

    try:
        if args.command == "plot":
            return cmd_plot(args)

        logging.info("Checking configuration ...")
        conf = load_config(args.config, overrides_from_args(args))
        setup_logging(bool(conf.debug))
        check_configuration(conf)
        logging.info("Configuration check passed.")

        handler = ReportHandler(conf.output)
        if args.command == "region":
            return cmd_region(conf, handler)
        return cmd_check(conf, args.which, handler)
    except AssertionError as e:
        logging.error(f"Configuration check failed: {e}")
        return 2
    except CausalEConfError as e:
        logging.error(f"[FATAL] {type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logging.error(f"[FATAL] I/O error: {e}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
