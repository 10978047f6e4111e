"""Monte-Carlo harness: type I error, power, and order-statistic checks.

Replicates are drawn in fixed-size chunks, each chunk from its own
generator seeded by (seed, n, chunk index).  Results are therefore
deterministic regardless of scheduling or chunk parallelism, and the
rate at a given n does not depend on which other n values share the
grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .estimators import estimate_mean, estimate_sd_s1
from .meta import cohen_d
from .model import QuantileSummary, Scenario
from .normal import critical_value
from .symmetry import DEFAULT_KAPPA_C, coeff_kappa, coeff_phi, coeff_tau

__all__ = [
    "DistSpec",
    "ExperimentResult",
    "MidrangeVarianceCheck",
    "CovRatioCheck",
    "DemoResult",
    "DEFAULT_N_GRID",
    "POWER_ALTERNATIVES",
    "DEMO_PAIRS",
    "sample",
    "summarize",
    "type1_curve",
    "power_curve",
    "midrange_variance_check",
    "cov_ratio_check",
    "skew_distortion_demo",
    "isotonic_fit_r2",
    "write_experiment_csv",
]

DEFAULT_N_GRID = (10, 25, 50, 100, 200, 300, 400, 500, 750, 1000)

# Fixed chunk height keeps memory bounded without breaking determinism.
_CHUNK_ROWS = 20000

_FAMILY_ARITY = {
    "normal": 2,       # mu, sigma
    "lognormal": 2,    # mu, sigma of the underlying normal
    "chisquare": 1,    # degrees of freedom
    "exponential": 1,  # rate lambda
    "beta": 2,         # alpha, beta
    "weibull": 2,      # shape k, scale lambda
}


@dataclass(frozen=True)
class DistSpec:
    """A sampling distribution with its family-specific parameters."""

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.family not in _FAMILY_ARITY:
            raise ValueError(
                f"unknown family {self.family!r}; choose from "
                f"{sorted(_FAMILY_ARITY)}")
        if len(self.params) != _FAMILY_ARITY[self.family]:
            raise ValueError(
                f"{self.family} takes {_FAMILY_ARITY[self.family]} "
                f"parameter(s), got {self.params}")
        p = self.params
        if self.family in ("normal", "lognormal"):
            ok = p[1] > 0
        elif self.family in ("chisquare", "exponential"):
            ok = p[0] > 0
        else:  # beta, weibull: both parameters strictly positive
            ok = p[0] > 0 and p[1] > 0
        if not ok:
            raise ValueError(f"invalid parameters {p} for family {self.family!r}")

    @staticmethod
    def parse(text: str) -> "DistSpec":
        """Build a spec from CLI syntax like ``lognormal:0,1``."""
        family, _, rest = text.partition(":")
        if not rest:
            raise ValueError(
                f"distribution {text!r} must look like 'family:p1[,p2]'")
        try:
            params = tuple(float(tok) for tok in rest.split(","))
        except ValueError:
            raise ValueError(f"non-numeric parameters in {text!r}") from None
        return DistSpec(family=family.strip().lower(), params=params)

    def label(self) -> str:
        inner = ",".join(f"{p:g}" for p in self.params)
        return f"{self.family}({inner})"


def _draw(dist: DistSpec, rng: np.random.Generator, shape) -> np.ndarray:
    p = dist.params
    if dist.family == "normal":
        return rng.normal(p[0], p[1], shape)
    if dist.family == "lognormal":
        return rng.lognormal(p[0], p[1], shape)
    if dist.family == "chisquare":
        return rng.chisquare(p[0], shape)
    if dist.family == "exponential":
        return rng.exponential(1.0 / p[0], shape)
    if dist.family == "beta":
        return rng.beta(p[0], p[1], shape)
    return p[1] * rng.weibull(p[0], shape)


def _generator(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([seed, *stream])))


def sample(dist: DistSpec, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` independent values, sorted ascending.

    Deterministic in (dist, n, seed).
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got n={n}")
    values = _draw(dist, _generator(seed), n)
    values.sort()
    return values


def _order_indices(n: int) -> tuple[int, int, int]:
    # 0-based positions of the [0.25n], [0.5n], [0.75n] order statistics,
    # with the 1-based index clamped to at least 1.
    return (max(1, int(0.25 * n)) - 1,
            max(1, int(0.5 * n)) - 1,
            max(1, int(0.75 * n)) - 1)


def summarize(sorted_sample: np.ndarray) -> QuantileSummary:
    """Five-number summary using the [np]-th order-statistic convention."""
    x = np.asarray(sorted_sample)
    n = x.shape[-1]
    if n < 4:
        raise ValueError(f"summarize needs n >= 4, got n={n}")
    i1, i2, i3 = _order_indices(n)
    return QuantileSummary(n=n, min=float(x[0]), q1=float(x[i1]),
                           median=float(x[i2]), q3=float(x[i3]),
                           max=float(x[n - 1]))


def _summary_matrix(dist: DistSpec, n: int, replicates: int,
                    seed: int) -> np.ndarray:
    """(replicates, 5) matrix of [min, q1, median, q3, max] rows."""
    i1, i2, i3 = _order_indices(n)
    pivot = sorted({0, i1, i2, i3, n - 1})
    blocks = []
    done = 0
    chunk_index = 0
    while done < replicates:
        rows = min(_CHUNK_ROWS, replicates - done)
        rng = _generator(seed, n, chunk_index)
        x = _draw(dist, rng, (rows, n))
        part = np.partition(x, pivot, axis=1)
        blocks.append(np.column_stack([part[:, 0], part[:, i1], part[:, i2],
                                       part[:, i3], part[:, n - 1]]))
        done += rows
        chunk_index += 1
    return np.concatenate(blocks)


def _statistics(scenario: Scenario, summaries: np.ndarray, n: int,
                kappa_c: float) -> np.ndarray:
    a, q1, m, q3, b = summaries.T
    if scenario is Scenario.S1:
        return coeff_tau(n) * (a + b - 2.0 * m) / (b - a)
    if scenario is Scenario.S2:
        return coeff_phi(n) * (q1 + q3 - 2.0 * m) / (q3 - q1)
    if scenario is Scenario.S3:
        return (coeff_kappa(n, kappa_c)
                * (a + b + q1 + q3 - 4.0 * m) / ((b - a) + (q3 - q1)))
    raise ValueError(f"no test statistic for scenario {scenario}")


@dataclass(frozen=True)
class ExperimentResult:
    """Rejection-rate curve of one scenario against one distribution."""

    scenario: Scenario
    dist: DistSpec
    n_grid: tuple[int, ...]
    rates: tuple[float, ...]
    ses: tuple[float, ...]  # Monte-Carlo standard error per point
    replicates: int
    alpha: float
    seed: int
    kappa_c: float = DEFAULT_KAPPA_C


def _scenario_min_n(scenario: Scenario) -> int:
    return 2 if scenario is Scenario.S1 else 4


def _rejection_curve(scenario: Scenario, dist: DistSpec,
                     n_grid: Sequence[int], replicates: int, alpha: float,
                     seed: int, kappa_c: float) -> ExperimentResult:
    if replicates < 1:
        raise ValueError("replicates must be positive")
    min_n = max(_scenario_min_n(scenario), 4)  # summaries need quartiles
    for n in n_grid:
        if n < min_n:
            raise ValueError(
                f"n={n} is below the scenario minimum {min_n}")
    crit = critical_value(alpha)
    rates = []
    ses = []
    for n in n_grid:
        summaries = _summary_matrix(dist, n, replicates, seed)
        stats = _statistics(scenario, summaries, n, kappa_c)
        rate = float(np.mean(np.abs(stats) > crit))
        rates.append(rate)
        ses.append(math.sqrt(rate * (1.0 - rate) / replicates))
    return ExperimentResult(scenario=scenario, dist=dist,
                            n_grid=tuple(int(n) for n in n_grid),
                            rates=tuple(rates), ses=tuple(ses),
                            replicates=replicates, alpha=alpha, seed=seed,
                            kappa_c=kappa_c)


def type1_curve(scenario: Scenario, n_grid: Sequence[int] = DEFAULT_N_GRID,
                replicates: int = 100_000, alpha: float = 0.05,
                seed: int = 0,
                kappa_c: float = DEFAULT_KAPPA_C) -> ExperimentResult:
    """Rejection rate under the standard-normal null, per grid point."""
    return _rejection_curve(scenario, DistSpec("normal", (0.0, 1.0)),
                            n_grid, replicates, alpha, seed, kappa_c)


def power_curve(scenario: Scenario, dist: DistSpec,
                n_grid: Sequence[int] = DEFAULT_N_GRID,
                replicates: int = 10_000, alpha: float = 0.05,
                seed: int = 0,
                kappa_c: float = DEFAULT_KAPPA_C) -> ExperimentResult:
    """Rejection rate under a (typically skewed) alternative."""
    return _rejection_curve(scenario, dist, n_grid, replicates, alpha,
                            seed, kappa_c)


POWER_ALTERNATIVES = (
    DistSpec("lognormal", (0.0, 1.0)),
    DistSpec("exponential", (1.0,)),
    DistSpec("beta", (1.0, 5.0)),
    DistSpec("chisquare", (1.0,)),
    DistSpec("weibull", (2.0, 1.0)),
)


@dataclass(frozen=True)
class MidrangeVarianceCheck:
    """Empirical vs asymptotic variance of the midrange contrast."""

    n: int
    replicates: int
    empirical: float       # Var(a + b - 2m) on N(0,1) samples
    theoretical: float     # pi^2 / (6 ln n) + pi / n
    ratio: float
    median_variance_scaled: float  # n * Var(m)
    median_variance_limit: float   # pi / 2


def midrange_variance_check(n: int, replicates: int = 100_000,
                            seed: int = 0) -> MidrangeVarianceCheck:
    """Compare Var(a + b - 2m) on normal samples with its asymptote."""
    if n < 10:
        raise ValueError(f"variance check needs n >= 10, got n={n}")
    summaries = _summary_matrix(DistSpec("normal", (0.0, 1.0)), n,
                                replicates, seed)
    a, _, m, _, b = summaries.T
    empirical = float(np.var(a + b - 2.0 * m))
    theoretical = math.pi ** 2 / (6.0 * math.log(n)) + math.pi / n
    return MidrangeVarianceCheck(
        n=n, replicates=replicates, empirical=empirical,
        theoretical=theoretical, ratio=empirical / theoretical,
        median_variance_scaled=float(n * np.var(m)),
        median_variance_limit=math.pi / 2.0)


@dataclass(frozen=True)
class CovRatioCheck:
    """Covariance ratios linking the extremes to median and quartile."""

    n: int
    replicates: int
    extremes_median_ratio: float  # Cov(a+b, m) / Var(m), limit 0.5
    extremes_q1_ratio: float      # Cov(a+b, q1) / Var(q1), limit 0.45


def cov_ratio_check(n: int, replicates: int = 100_000, seed: int = 0,
                    sigma: float = 1.0) -> CovRatioCheck:
    """Estimate the extreme/median and extreme/quartile covariance ratios.

    Both ratios are scale-free; ``sigma`` exists to demonstrate that.
    """
    if n < 50:
        raise ValueError(f"covariance check needs n >= 50, got n={n}")
    summaries = _summary_matrix(DistSpec("normal", (0.0, sigma)), n,
                                replicates, seed)
    a, q1, m, _, b = summaries.T
    ab = a + b
    cov_m = float(np.cov(ab, m)[0, 1])
    cov_q1 = float(np.cov(ab, q1)[0, 1])
    return CovRatioCheck(
        n=n, replicates=replicates,
        extremes_median_ratio=cov_m / float(np.var(m, ddof=1)),
        extremes_q1_ratio=cov_q1 / float(np.var(q1, ddof=1)))


@dataclass(frozen=True)
class DemoResult:
    """True vs summary-estimated effect size for one simulated pair."""

    case_dist: DistSpec
    control_dist: DistSpec
    n: int
    d_true: float
    d_estimated: float
    gap: float  # d_true - d_estimated


def skew_distortion_demo(case_dist: DistSpec, control_dist: DistSpec,
                         n: int, seed: int) -> DemoResult:
    """Show how summary-based estimation distorts a skewed effect size.

    Draws one sample per arm, computes Cohen's d once from the actual
    sample moments and once from moments estimated out of the
    min/median/max summary, and reports both with their gap.
    """
    case_rng = _generator(seed, 0)
    control_rng = _generator(seed, 1)
    case = np.sort(_draw(case_dist, case_rng, n))
    control = np.sort(_draw(control_dist, control_rng, n))

    d_true = cohen_d(n, float(case.mean()), float(case.std(ddof=1)),
                     n, float(control.mean()), float(control.std(ddof=1))).smd

    def s1_moments(x: np.ndarray) -> tuple[float, float]:
        i_med = _order_indices(n)[1]
        summary = QuantileSummary(n=n, median=float(x[i_med]),
                                  min=float(x[0]), max=float(x[-1]))
        return (estimate_mean(summary, Scenario.S1),
                estimate_sd_s1(summary.min, summary.max, n))

    case_mean, case_sd = s1_moments(case)
    control_mean, control_sd = s1_moments(control)
    d_est = cohen_d(n, case_mean, case_sd, n, control_mean, control_sd).smd
    return DemoResult(case_dist=case_dist, control_dist=control_dist, n=n,
                      d_true=d_true, d_estimated=d_est,
                      gap=d_true - d_est)


DEMO_PAIRS = {
    "lognormal": (DistSpec("lognormal", (0.0, 1.0)),
                  DistSpec("lognormal", (1.0, 1.0)), 350),
    "chisquare": (DistSpec("chisquare", (3.0,)),
                  DistSpec("chisquare", (4.0,)), 200),
    "exponential": (DistSpec("exponential", (1.0,)),
                    DistSpec("exponential", (1.5,)), 150),
    "beta": (DistSpec("beta", (2.0, 5.0)),
             DistSpec("beta", (2.0, 7.0)), 300),
    "weibull": (DistSpec("weibull", (1.5, 1.0)),
                DistSpec("weibull", (3.0, 1.0)), 400),
    "normal": (DistSpec("normal", (0.0, 1.0)),
               DistSpec("normal", (1.0, 1.0)), 350),
}


def isotonic_fit_r2(rates: Sequence[float]) -> float:
    """R-squared of the best nondecreasing (isotonic) fit to ``rates``.

    Pool-adjacent-violators with equal weights.  A curve that is already
    nondecreasing scores exactly 1; a flat curve scores 1 by convention
    (zero total variance).
    """
    y = list(float(r) for r in rates)
    if not y:
        raise ValueError("rates must be nonempty")
    values = []
    counts = []
    for v in y:
        values.append(v)
        counts.append(1)
        while len(values) > 1 and values[-2] > values[-1]:
            merged = (values[-1] * counts[-1] + values[-2] * counts[-2]) \
                / (counts[-1] + counts[-2])
            counts[-2] += counts[-1]
            values[-2] = merged
            values.pop()
            counts.pop()
    fitted = []
    for v, c in zip(values, counts):
        fitted.extend([v] * c)
    mean_y = sum(y) / len(y)
    ss_tot = sum((v - mean_y) ** 2 for v in y)
    if ss_tot == 0.0:
        return 1.0
    ss_res = sum((v - f) ** 2 for v, f in zip(y, fitted))
    return 1.0 - ss_res / ss_tot


def write_experiment_csv(result: ExperimentResult, path: str | Path) -> None:
    """Write a curve as ``n,rate,se,replicates,scenario,family,params,seed``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "rate", "se", "replicates", "scenario",
                         "family", "params", "seed"])
        params = ",".join(f"{p:g}" for p in result.dist.params)
        for n, rate, se in zip(result.n_grid, result.rates, result.ses):
            writer.writerow([n, f"{rate:.6f}", f"{se:.6f}",
                             result.replicates, result.scenario.value,
                             result.dist.family, params, result.seed])
