"""Symmetry tests for quantile-summarized data.

Each statistic contrasts a symmetric midpoint against the median and is
scaled by a sample-size coefficient so that under normality it is
approximately standard normal:

* T1 = tau(n) * (a + b - 2m) / (b - a)          from min/median/max
* T2 = phi(n) * (q1 + q3 - 2m) / (q3 - q1)      from the quartiles
* T3 = kappa(n) * (a + b + q1 + q3 - 4m) / (b - a + q3 - q1)

The kappa denominator carries a small-sample correction constant whose
published value is ambiguous (10.14 from the derivation, 10.5 in the
summary table); it is configurable and defaults to the derived 10.14.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import GroupRecord, QuantileSummary, Scenario, classify_scenario
from .normal import critical_value, std_normal_quantile, two_sided_p

__all__ = [
    "DEFAULT_KAPPA_C",
    "KAPPA_C_CHOICES",
    "DegenerateSummaryError",
    "TestResult",
    "coeff_tau",
    "coeff_phi",
    "coeff_kappa",
    "test_s1",
    "test_s2",
    "test_s3",
    "run_test",
    "format_statistic",
    "format_p_value",
]

DEFAULT_KAPPA_C = 10.14
KAPPA_C_CHOICES = (10.14, 10.5)

_PI2_6 = math.pi ** 2 / 6.0


class DegenerateSummaryError(ValueError):
    """The statistic is 0/0 because the relevant range collapsed."""


@dataclass(frozen=True)
class TestResult:
    """Outcome of one symmetry test."""

    scenario: Scenario
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    n: int


def coeff_tau(n: int) -> float:
    """Scaling coefficient for the min/median/max statistic, n >= 2."""
    if n < 2:
        raise ValueError(f"tau(n) needs n >= 2, got n={n}")
    num = 2.0 * std_normal_quantile((n - 0.375) / (n + 0.25))
    return num / math.sqrt(_PI2_6 / math.log(n) + math.pi / n)


def coeff_phi(n: int) -> float:
    """Scaling coefficient for the quartile statistic, n >= 4."""
    if n < 4:
        raise ValueError(f"phi(n) needs n >= 4, got n={n}")
    return 1.09 * math.sqrt(n) * std_normal_quantile(
        (0.75 * n - 0.125) / (n + 0.25))


def coeff_kappa(n: int, c: float = DEFAULT_KAPPA_C) -> float:
    """Scaling coefficient for the five-number statistic, n >= 4.

    ``c`` is the small-sample correction constant in the denominator;
    both published readings (10.14 and 10.5) are accepted.
    """
    if n < 4:
        raise ValueError(f"kappa(n) needs n >= 4, got n={n}")
    num = (2.0 * std_normal_quantile((n - 0.375) / (n + 0.25))
           + 2.0 * std_normal_quantile((0.75 * n - 0.125) / (n + 0.25)))
    return num / math.sqrt(_PI2_6 / math.log(n) + c / n)


def _result(scenario: Scenario, statistic: float, n: int, alpha: float) -> TestResult:
    reject = abs(statistic) > critical_value(alpha)
    return TestResult(scenario=scenario, statistic=statistic,
                      p_value=two_sided_p(statistic), reject=reject,
                      alpha=alpha, n=n)


def test_s1(a: float, m: float, b: float, n: int, alpha: float = 0.05) -> TestResult:
    """Symmetry test from minimum, median, maximum.

    Raises
    ------
    DegenerateSummaryError
        If b == a; the statistic is undefined and the group should be
        flagged rather than silently accepted.
    """
    if not a <= m <= b:
        raise ValueError(f"need a <= m <= b, got ({a}, {m}, {b})")
    if b == a:
        raise DegenerateSummaryError(
            f"degenerate range b - a = 0 (a = b = {a}); statistic undefined")
    statistic = coeff_tau(n) * (a + b - 2.0 * m) / (b - a)
    return _result(Scenario.S1, statistic, n, alpha)


def test_s2(q1: float, m: float, q3: float, n: int, alpha: float = 0.05) -> TestResult:
    """Symmetry test from first quartile, median, third quartile."""
    if not q1 <= m <= q3:
        raise ValueError(f"need q1 <= m <= q3, got ({q1}, {m}, {q3})")
    if q3 == q1:
        raise DegenerateSummaryError(
            f"degenerate IQR q3 - q1 = 0 (q1 = q3 = {q1}); statistic undefined")
    statistic = coeff_phi(n) * (q1 + q3 - 2.0 * m) / (q3 - q1)
    return _result(Scenario.S2, statistic, n, alpha)


def test_s3(a: float, q1: float, m: float, q3: float, b: float, n: int,
            alpha: float = 0.05, kappa_c: float = DEFAULT_KAPPA_C) -> TestResult:
    """Symmetry test from the full five-number summary."""
    if not (a <= q1 <= m <= q3 <= b):
        raise ValueError(
            f"need a <= q1 <= m <= q3 <= b, got ({a}, {q1}, {m}, {q3}, {b})")
    spread = (b - a) + (q3 - q1)
    if spread == 0.0:
        raise DegenerateSummaryError(
            "degenerate summary: range and IQR are both zero")
    statistic = (coeff_kappa(n, kappa_c)
                 * (a + b + q1 + q3 - 4.0 * m) / spread)
    return _result(Scenario.S3, statistic, n, alpha)


def run_test(group: GroupRecord, alpha: float = 0.05,
             kappa_c: float = DEFAULT_KAPPA_C) -> TestResult | None:
    """Dispatch the matching symmetry test for ``group``.

    Returns None for groups that report mean and SD directly; those need
    no symmetry screening.
    """
    scenario = classify_scenario(group)
    if scenario is Scenario.DIRECT:
        return None
    s = group.summary
    if scenario is Scenario.S1:
        return test_s1(s.min, s.median, s.max, s.n, alpha)
    if scenario is Scenario.S2:
        return test_s2(s.q1, s.median, s.q3, s.n, alpha)
    return test_s3(s.min, s.q1, s.median, s.q3, s.max, s.n, alpha, kappa_c)


def format_statistic(t: float) -> str:
    """Render a statistic the way the result tables print it.

    Three decimals normally; tiny nonzero values (|t| < 1e-6, float
    artifacts of symmetric inputs) keep scientific notation.
    """
    if t != 0.0 and abs(t) < 1e-6:
        return f"{t:.3e}"
    return f"{t:.3f}"


def format_p_value(p: float) -> str:
    """Render a p-value with three decimals and a '<0.001' floor."""
    if p < 0.001:
        return "<0.001"
    return f"{p:.3f}"
