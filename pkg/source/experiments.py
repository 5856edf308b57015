"""
Verification harness for the finite-sample guarantees of causal e-prediction.

Two kinds of checks:
- exact: enumerate every dataset of size N (as multisets with multinomial weights) and compute the
  expectation in Fraction arithmetic. Only models with rational entries are accepted.
- Monte Carlo: `trials` independent datasets, trial t drawn from RngSpec(seed, t). Means use numpy's
  pairwise summation over ascending trial index. A check passes when estimate <= bound + sigma * stderr
  (sigma defaults to 4).
"""

import hashlib
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from source.configuration import logging
from source.epredict import (
    conditional_conformal_ratio,
    evariable,
    object_pair_counts,
    oracle_region,
    simple_conformal_phat,
)
from source.errors import BudgetExceeded, InsufficientTrials, NotDegenerate, check_index
from source.estimator import (
    CountTable,
    Regularization,
    estimate_F,
    estimate_F_vector,
    estimate_F_z,
    fit_counts,
)
from source.model import conditional_y_given_xz, interventional_py, marginal_z, p_yz
from source.sampling import ConstantStrategy, RngSpec, sample_iid, sample_mutilated_y, sample_oblivious

MIN_TRIALS = 1000
DEFAULT_SIGMA = 4.0
DEFAULT_BUDGET = 10 ** 7
EXACT_CONDITIONAL_MAX_N = 3
MARKOV_ALPHAS = (2.0, 10.0, 100.0)
ALPHA_GRID = np.logspace(-2, 3, 50)
GRID_TOLERANCE = 0.02
# Allowance for the rounding of an exact rational to a double when the Monte Carlo stderr is 0
AGREEMENT_ROUNDING = 1e-12


def rational_json(value):
    return {"rational": str(value), "value": float(value)}


def model_id(model):
    """Short stable identifier of a model's probability table."""
    if model.is_exact:
        text = ",".join(str(v) for v in model.rational.flat)
    else:
        text = ",".join(repr(float(v)) for v in model.probs.flat)
    digest = hashlib.sha256(f"{model.sizes}:{text}".encode("utf-8")).hexdigest()
    return digest[:12]


@dataclass(frozen=True)
class MCReport:
    quantity: str
    estimate: float
    stderr: float
    trials: int
    seed: int
    bound: float
    passed: bool
    y: int = None
    N: int = None
    c: float = None

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "y": self.y,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "trials": self.trials,
            "seed": self.seed,
            "c": self.c,
            "N": self.N,
            "bound": self.bound,
            "pass": self.passed,
        }

    def rows(self):
        row = self.to_dict()
        del row["bound"]
        return [row]


def summarize(values, quantity, bound, seed, sigma=DEFAULT_SIGMA, y=None, N=None, c=None):
    """Reduce per-trial values to an MCReport. Constant samples report their value with stderr 0."""
    values = np.asarray(values, dtype=float)
    trials = values.size
    if trials < MIN_TRIALS:
        raise InsufficientTrials(f"{quantity}: a pass/fail claim needs at least {MIN_TRIALS} trials, got {trials}")
    if np.all(values == values[0]):
        estimate, stderr = float(values[0]), 0.0
    else:
        estimate = float(np.sum(values) / trials)
        stderr = float(np.std(values, ddof=1) / math.sqrt(trials))
    passed = bool(estimate <= bound + sigma * stderr)
    if not passed:
        logging.warning(f"{quantity} (y={y}, N={N}, c={c}) failed: estimate {estimate:.6f} > {bound:.6f} + {sigma} * {stderr:.6f}")
    return MCReport(quantity=quantity, estimate=estimate, stderr=stderr, trials=trials, seed=seed,
                    bound=float(bound), passed=passed, y=y, N=N, c=None if c is None else float(c))


def _require_trials(trials):
    if trials < MIN_TRIALS:
        raise InsufficientTrials(f"At least {MIN_TRIALS} trials are required for a pass/fail claim, got {trials}")


# Exact enumeration

def enumerate_datasets(model, N, budget=DEFAULT_BUDGET):
    """
    Yield (CountTable, probability) for every multiset of N cells, weighted by its exact
    multinomial probability. Weights sum to 1.
    """
    table = model.table(exact=True)
    cells = table.size
    if cells ** N > budget:
        raise BudgetExceeded(f"Enumerating ({cells} cells)^{N} = {cells ** N} datasets exceeds the budget of {budget}")
    flat = list(table.flat)
    n_factorial = math.factorial(N)
    for combo in itertools.combinations_with_replacement(range(cells), N):
        multiplicities = Counter(combo)
        weight = Fraction(n_factorial)
        cell_counts = np.zeros(cells, dtype=np.int64)
        for cell, k in multiplicities.items():
            weight = weight / math.factorial(k) * flat[cell] ** k
            cell_counts[cell] = k
        yield CountTable.from_cell_counts(cell_counts.reshape(model.sizes)), weight


@dataclass(frozen=True)
class ExactReport:
    model_id: str
    x: int
    N: int
    c: Fraction
    values: tuple

    @property
    def passed(self):
        return all(v <= 1 for v in self.values)

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "x": self.x,
            "N": self.N,
            "c": rational_json(self.c),
            "expectations": [rational_json(v) for v in self.values],
            "pass": self.passed,
        }

    def rows(self):
        return [{"quantity": "exact_lemma1", "y": y, "estimate": float(v), "stderr": 0.0, "trials": 0,
                 "seed": None, "c": float(self.c), "N": self.N, "pass": v <= 1}
                for y, v in enumerate(self.values)]


def exact_lemma1(model, x, N, reg=Regularization(), budget=DEFAULT_BUDGET):
    """E[p_y / F_y] for every y, in exact rational arithmetic."""
    check_index("x", x, model.x_size)
    p = interventional_py(model, x, exact=True).p
    exact_reg = reg.exact()
    totals = [Fraction(0)] * model.y_size
    for counts, weight in enumerate_datasets(model, N, budget):
        F = estimate_F_vector(counts, x, exact_reg)
        for y in range(model.y_size):
            totals[y] += weight * p[y] / F[y]
    report = ExactReport(model_id=model_id(model), x=x, N=N, c=exact_reg.c, values=tuple(totals))
    logging.info(f"Exact check for model {report.model_id}, x={x}, N={N}, c={exact_reg.c}: {[str(v) for v in totals]}")
    return report


def exact_mc_agreement(exact_report, mc_reports, sigma=DEFAULT_SIGMA, rounding=AGREEMENT_ROUNDING):
    """For each y, whether the Monte Carlo estimate lies within sigma * stderr + rounding of the exact value."""
    return [abs(mc.estimate - float(exact)) <= sigma * mc.stderr + rounding
            for exact, mc in zip(exact_report.values, mc_reports)]


# Monte Carlo

def _ratio_trials(model, x, reg, trials, seed, draw):
    p = interventional_py(model, x).p
    ratios = np.empty((trials, model.y_size))
    for t in range(trials):
        counts = fit_counts(draw(RngSpec(seed, t)), model.sizes)
        ratios[t] = p / estimate_F_vector(counts, x, reg)
    return ratios


def mc_lemma1(model, x, N, reg=Regularization(), trials=100_000, seed=0, sigma=DEFAULT_SIGMA):
    check_index("x", x, model.x_size)
    _require_trials(trials)
    logging.info(f"Monte Carlo check of E[p_y/F_y] <= 1 with IID data: x={x}, N={N}, c={reg.c}, trials={trials}, seed={seed}")
    ratios = _ratio_trials(model, x, reg, trials, seed, lambda rng: sample_iid(model, N, rng))
    return [summarize(ratios[:, y], "lemma1", 1.0, seed, sigma, y=y, N=N, c=reg.c) for y in range(model.y_size)]


def adversarial_lemma2(model, strategy, x, N, reg=Regularization(), trials=100_000, seed=0, strict_past=False, sigma=DEFAULT_SIGMA):
    """Same check as mc_lemma1 but X_n is chosen by a Y-oblivious strategy."""
    check_index("x", x, model.x_size)
    _require_trials(trials)
    logging.info(f"Monte Carlo check of E[p_y/F_y] <= 1 under strategy {strategy!r}: x={x}, N={N}, c={reg.c}, trials={trials}, seed={seed}")
    ratios = _ratio_trials(model, x, reg, trials, seed,
                           lambda rng: sample_oblivious(model, strategy, N, rng, strict_past=strict_past))
    return [summarize(ratios[:, y], "lemma2", 1.0, seed, sigma, y=y, N=N, c=reg.c) for y in range(model.y_size)]


def miss_indicators(e_values, alphas):
    """
    1 where the realized label falls outside the region at level alpha.
    The label y is outside {y : q[y]/F[y] < alpha} exactly when its e-value is >= alpha.
    """
    return np.asarray(e_values, dtype=float)[:, None] >= np.asarray(alphas, dtype=float)[None, :]


@dataclass(frozen=True)
class ValidityReport:
    mean_e: MCReport
    error_rates: tuple
    region_sizes: tuple
    grid_alphas: tuple
    error_curve: tuple
    grid_integral: float
    truncated_mean: float
    head_bound: float
    tail_mass: float
    e_max: float
    grid_agrees: bool

    @property
    def passed(self):
        return self.mean_e.passed and self.grid_agrees and all(r.passed for r in self.error_rates)

    def to_dict(self):
        return {
            "mean_e": self.mean_e.to_dict(),
            "error_rates": [r.to_dict() for r in self.error_rates],
            "region_sizes": list(self.region_sizes),
            "error_curve": {"alpha": list(self.grid_alphas), "rate": list(self.error_curve)},
            "grid_integral": self.grid_integral,
            "truncated_mean": self.truncated_mean,
            "head_bound": self.head_bound,
            "tail_mass": self.tail_mass,
            "e_max": self.e_max,
            "grid_agrees": self.grid_agrees,
            "pass": self.passed,
        }

    def rows(self):
        rows = self.mean_e.rows()
        for report in self.error_rates:
            rows += report.rows()
        rows.append({"quantity": "grid_integral", "y": None, "estimate": self.grid_integral, "stderr": None,
                     "trials": self.mean_e.trials, "seed": self.mean_e.seed, "c": self.mean_e.c,
                     "N": self.mean_e.N, "pass": self.grid_agrees})
        return rows


def validity_integral(model, x, q, N, trials=100_000, seed=0, reg=Regularization(), alphas=MARKOV_ALPHAS,
                      grid=ALPHA_GRID, tolerance=GRID_TOLERANCE, sigma=DEFAULT_SIGMA):
    """
    Monte Carlo estimate of E = q[Y]/F_Y with Y drawn after setting X to x, independent of the data.
    The integral over alpha of P(Y outside the region) equals E[E]; it is cross-checked by the
    trapezoidal rule over `grid` against the expectation truncated to the grid's range.
    Also reports error rates against the 1/alpha Markov envelope and mean region sizes.
    """
    check_index("x", x, model.x_size)
    _require_trials(trials)
    logging.info(f"Monte Carlo validity check: x={x}, q={np.asarray(q.q).tolist()}, N={N}, c={reg.c}, trials={trials}, seed={seed}")
    alphas = np.asarray(alphas, dtype=float)
    grid = np.asarray(grid, dtype=float)
    p = interventional_py(model, x)

    e_values = np.empty(trials)
    region_sizes = np.zeros(alphas.size)
    for t in range(trials):
        rng = RngSpec(seed, t)
        F = estimate_F_vector(fit_counts(sample_iid(model, N, rng), model.sizes), x, reg)
        e_values[t] = evariable(q, F, sample_mutilated_y(model, x, rng.for_labels()))
        ratios = np.asarray(q.q, dtype=float) / F
        region_sizes += (ratios[None, :] < alphas[:, None]).sum(axis=1)
    region_sizes /= trials

    mean_e = summarize(e_values, "validity_mean_e", 1.0, seed, sigma, N=N, c=reg.c)
    misses = miss_indicators(e_values, alphas)
    error_rates = tuple(summarize(misses[:, i], f"error_rate@{alpha:g}", 1.0 / alpha, seed, sigma, N=N, c=reg.c)
                        for i, alpha in enumerate(alphas))
    sizes = tuple({"alpha": float(alpha), "estimated_mean_size": float(region_sizes[i]),
                   "oracle_size": len(oracle_region(q, p, alpha))}
                  for i, alpha in enumerate(alphas))

    curve = miss_indicators(e_values, grid).mean(axis=0)
    grid_integral = float(np.trapezoid(curve, grid))
    truncated_mean = float(np.mean(np.clip(e_values - grid[0], 0.0, grid[-1] - grid[0])))
    tail_mass = float(np.mean(np.maximum(e_values - grid[-1], 0.0)))
    # Smallest possible F_y: every z-term is at least (c/(N+c))^2.
    f_min = model.z_size * (float(reg.c) / (N + float(reg.c))) ** 2
    e_max = float(np.max(q.q)) / f_min
    grid_agrees = bool(abs(grid_integral - truncated_mean) <= tolerance * truncated_mean)
    if not grid_agrees:
        logging.warning(f"Grid integral {grid_integral:.6f} and truncated mean {truncated_mean:.6f} differ by more than {tolerance:.0%}")
    return ValidityReport(mean_e=mean_e, error_rates=error_rates, region_sizes=sizes,
                          grid_alphas=tuple(float(a) for a in grid), error_curve=tuple(float(r) for r in curve),
                          grid_integral=grid_integral, truncated_mean=truncated_mean, head_bound=float(grid[0]),
                          tail_mass=tail_mass, e_max=e_max, grid_agrees=grid_agrees)


@dataclass(frozen=True)
class SlackReport:
    lemma: MCReport
    conformal: MCReport
    closed_form_mismatches: int
    ordered: bool
    slack_factor: float

    @property
    def passed(self):
        return self.ordered and self.closed_form_mismatches == 0 and self.conformal.passed

    def to_dict(self):
        return {
            "lemma": self.lemma.to_dict(),
            "conformal": self.conformal.to_dict(),
            "closed_form_mismatches": self.closed_form_mismatches,
            "ordered": self.ordered,
            "slack_factor": self.slack_factor,
            "pass": self.passed,
        }

    def rows(self):
        return self.lemma.rows() + self.conformal.rows()


def slack_experiment(model, x, y, N, trials=100_000, seed=0, strategy=None, sigma=DEFAULT_SIGMA):
    """
    With X always equal to x (constant strategy), F_y collapses to (k + |Z|)/(N + 1) where k counts y.
    Compares E[p_y/F_y] with the simple conformal quantity E[p_y/p_hat(y)], p_hat(y) = (k + 1)/(N + 1),
    and checks lemma <= conformal <= 1 + sigma * stderr.
    """
    check_index("x", x, model.x_size)
    check_index("y", y, model.y_size)
    strategy = ConstantStrategy(x) if strategy is None else strategy
    if not isinstance(strategy, ConstantStrategy) or strategy.value != x:
        raise NotDegenerate(f"The slack experiment needs X fixed to x={x}, got strategy {strategy!r}")
    _require_trials(trials)
    logging.info(f"Slack experiment: x={x}, y={y}, |Z|={model.z_size}, N={N}, trials={trials}, seed={seed}")

    p_y = float(interventional_py(model, x).p[y])
    closed_form_reg = Regularization(Fraction(1))
    lemma = np.empty(trials)
    conformal = np.empty(trials)
    mismatches = 0
    for t in range(trials):
        counts = fit_counts(sample_oblivious(model, strategy, N, RngSpec(seed, t)), model.sizes)
        k = int(counts.y_counts(x)[y])
        if estimate_F(counts, x, y, closed_form_reg) != Fraction(k + model.z_size, N + 1):
            mismatches += 1
        lemma[t] = p_y / estimate_F(counts, x, y)
        conformal[t] = p_y / simple_conformal_phat(counts.y_counts(x), N)[y]
    if mismatches:
        logging.warning(f"{mismatches} datasets did not match the closed form (k + |Z|)/(N + 1)")

    lemma_report = summarize(lemma, "slack_lemma", 1.0, seed, sigma, y=y, N=N, c=1)
    conformal_report = summarize(conformal, "slack_conformal", 1.0, seed, sigma, y=y, N=N, c=1)
    return SlackReport(lemma=lemma_report, conformal=conformal_report, closed_form_mismatches=mismatches,
                       ordered=lemma_report.estimate <= conformal_report.estimate,
                       slack_factor=conformal_report.estimate / lemma_report.estimate)


@dataclass(frozen=True)
class SweepRow:
    c: float
    reports: tuple

    @property
    def violated(self):
        return not all(r.passed for r in self.reports)


def regularization_sweep(model, x, N, c_list, trials=100_000, seed=0, sigma=DEFAULT_SIGMA):
    """mc_lemma1 at each c. Exploratory: violations for c < 1 are reported, not asserted."""
    regs = [Regularization(c) for c in c_list]
    rows = []
    for reg in regs:
        reports = tuple(mc_lemma1(model, x, N, reg, trials, seed, sigma))
        rows.append(SweepRow(c=float(reg.c), reports=reports))
        logging.info(f"Sweep c={reg.c}: estimates {[round(r.estimate, 6) for r in reports]}{' (violation)' if rows[-1].violated else ''}")
    return rows


@dataclass(frozen=True)
class BoundCheck:
    quantity: str
    bound: float
    passed: bool
    exact_value: Fraction = None
    exact_bound: Fraction = None
    mc: MCReport = None

    def to_dict(self):
        out = {"quantity": self.quantity, "bound": self.bound, "pass": self.passed}
        if self.exact_value is not None:
            out["exact_value"] = rational_json(self.exact_value)
            out["exact_bound"] = rational_json(self.exact_bound)
        if self.mc is not None:
            out["mc"] = self.mc.to_dict()
        return out


@dataclass(frozen=True)
class ConditionalBoundReport:
    mode: str
    x: int
    y: int
    z: int
    N: int
    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def to_dict(self):
        return {"mode": self.mode, "x": self.x, "y": self.y, "z": self.z, "N": self.N,
                "checks": [check.to_dict() for check in self.checks], "pass": self.passed}

    def rows(self):
        rows = []
        for check in self.checks:
            if check.mc is not None:
                rows += check.mc.rows()
            else:
                rows.append({"quantity": check.quantity, "y": self.y, "estimate": float(check.exact_value),
                             "stderr": 0.0, "trials": 0, "seed": None, "c": 1.0, "N": self.N, "pass": check.passed})
        return rows


CONDITIONAL_QUANTITIES = ("z_marginal", "conditional", "product")


def _conditional_terms(counts, x, y, z, exact):
    """(N+1)/(n_z+1), (n_xz+1)/(n_xyz+1) with (X, Z) as the object, and their product."""
    z_size = counts.sizes[2]
    if exact:
        z_term = Fraction(counts.N + 1, int(counts.n_z[z]) + 1)
    else:
        z_term = (counts.N + 1) / (int(counts.n_z[z]) + 1)
    cond_term = conditional_conformal_ratio(object_pair_counts(counts), x * z_size + z, y, exact=exact)
    return z_term, cond_term, z_term * cond_term


def conditional_bound_check(model, x, y, z, N, mode="auto", trials=100_000, seed=0, budget=DEFAULT_BUDGET, sigma=DEFAULT_SIGMA):
    """
    Checks the two conformal bounds the causal estimator is built from, and their product:
      E[(N+1)/(n_z+1)] <= 1/P(Z=z)
      E[(n_xz+1)/(n_xyz+1)] <= 1/P(Y=y | X=x, Z=z)
      E[product] <= 1/(P(Z=z) P(Y=y | X=x, Z=z))
    mode "auto" enumerates exactly when N <= 3 and the model is rational, otherwise uses Monte Carlo.
    """
    check_index("x", x, model.x_size)
    check_index("y", y, model.y_size)
    check_index("z", z, model.z_size)
    if mode == "auto":
        mode = "exact" if N <= EXACT_CONDITIONAL_MAX_N and model.is_exact else "mc"

    if mode == "exact":
        pz = marginal_z(model, exact=True)[z]
        py = conditional_y_given_xz(model, x, z, exact=True)[y]
        bounds = (1 / pz, 1 / py, 1 / (pz * py))
        totals = [Fraction(0)] * 3
        for counts, weight in enumerate_datasets(model, N, budget):
            for i, term in enumerate(_conditional_terms(counts, x, y, z, exact=True)):
                totals[i] += weight * term
        checks = tuple(BoundCheck(quantity=name, bound=float(bound), passed=value <= bound,
                                  exact_value=value, exact_bound=bound)
                       for name, value, bound in zip(CONDITIONAL_QUANTITIES, totals, bounds))
    else:
        _require_trials(trials)
        pz = float(marginal_z(model)[z])
        py = float(conditional_y_given_xz(model, x, z)[y])
        bounds = (1 / pz, 1 / py, 1 / (pz * py))
        values = np.empty((trials, 3))
        for t in range(trials):
            counts = fit_counts(sample_iid(model, N, RngSpec(seed, t)), model.sizes)
            values[t] = _conditional_terms(counts, x, y, z, exact=False)
        checks = []
        for i, (name, bound) in enumerate(zip(CONDITIONAL_QUANTITIES, bounds)):
            report = summarize(values[:, i], name, bound, seed, sigma, y=y, N=N, c=1)
            checks.append(BoundCheck(quantity=name, bound=bound, passed=report.passed, mc=report))
        checks = tuple(checks)
    logging.info(f"Conditional bound check ({mode}) x={x}, y={y}, z={z}, N={N}: {'passed' if all(c.passed for c in checks) else 'FAILED'}")
    return ConditionalBoundReport(mode=mode, x=x, y=y, z=z, N=N, checks=checks)


def harmonic_mean_identity(model, counts, x, y, reg=Regularization(), exact=False):
    """
    p_y/F_y written as the weighted harmonic mean over z of p_{y,z}/F_{y,z} (weights p_{y,z}/p_y),
    together with the matching weighted arithmetic mean, which bounds it from above.
    """
    if exact:
        reg = reg.exact()
    p_y = interventional_py(model, x, exact=exact).p[y]
    F_y = estimate_F(counts, x, y, reg)
    inverse = 0
    arithmetic = 0
    for z in range(model.z_size):
        p_z = p_yz(model, x, y, z, exact=exact)
        F_z = estimate_F_z(counts, x, y, z, reg)
        weight = p_z / p_y
        inverse += weight * (F_z / p_z)
        arithmetic += weight * (p_z / F_z)
    return {"direct": p_y / F_y, "harmonic": 1 / inverse, "arithmetic": arithmetic}
