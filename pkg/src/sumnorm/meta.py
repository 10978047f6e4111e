"""Effect sizes, meta-analytic pooling, and the screening pipeline.

The pipeline mirrors the recommended workflow for quantile-summarized
studies: symmetry-test every group that reports quantiles, exclude a
study from an outcome when any of its groups rejects, estimate moments
for the survivors, combine multi-arm subgroups, compute standardized
mean differences, and pool them (fixed-effect or DerSimonian-Laird
random-effects).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .estimators import EstimatedMoments, estimate_moments
from .model import GroupRecord, Study, pooled_moments
from .symmetry import (DEFAULT_KAPPA_C, DegenerateSummaryError, TestResult,
                       run_test)

__all__ = [
    "EffectSize",
    "PooledResult",
    "GroupTest",
    "StudyEntry",
    "PipelineReport",
    "cohen_d",
    "pool",
    "run_pipeline",
    "chi_square_sf",
    "report_to_dict",
]

_Z95 = 1.96  # the screening procedure's literal 95% multiplier


@dataclass(frozen=True)
class EffectSize:
    """Standardized mean difference of one case/control comparison."""

    smd: float
    se: float
    ci_low: float
    ci_high: float
    n_case: int
    n_control: int


@dataclass(frozen=True)
class PooledResult:
    """Pooled effect with heterogeneity statistics."""

    smd: float
    ci_low: float
    ci_high: float
    q_stat: float
    q_p: float
    i_squared: float
    tau_squared: float
    weights: tuple[float, ...]  # normalized to sum 1, study order
    model: str


@dataclass(frozen=True)
class GroupTest:
    """Symmetry-test outcome for one group of a study."""

    group_label: str
    arm: str
    n: int
    result: TestResult | None  # None when moments were reported directly
    error: str | None = None   # degenerate summary, statistic undefined


@dataclass(frozen=True)
class StudyEntry:
    """Everything the pipeline decided about one study for one outcome."""

    study_id: str
    tests: tuple[GroupTest, ...]
    included: bool
    exclusion_reasons: tuple[str, ...]
    n_case: int | None = None
    case_moments: EstimatedMoments | None = None
    n_control: int | None = None
    control_moments: EstimatedMoments | None = None
    effect: EffectSize | None = None


@dataclass(frozen=True)
class PipelineReport:
    """Per-outcome screening decisions, estimates, and pooled effect."""

    outcome_label: str
    alpha: float
    model: str
    studies: tuple[StudyEntry, ...]
    pooled: PooledResult | None
    pooled_omitted_reason: str | None = None

    @property
    def excluded_ids(self) -> tuple[str, ...]:
        return tuple(s.study_id for s in self.studies if not s.included)

    @property
    def included_ids(self) -> tuple[str, ...]:
        return tuple(s.study_id for s in self.studies if s.included)


def _regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) = Gamma(a, x)/Gamma(a).

    Series expansion below a + 1, Lentz continued fraction above; both
    converge to machine precision for the chi-square arguments used here.
    """
    if a <= 0.0 or x < 0.0:
        raise ValueError(f"need a > 0 and x >= 0, got a={a}, x={x}")
    if x == 0.0:
        return 1.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(1000):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return 1.0 - total * math.exp(log_prefactor)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(log_prefactor)


def chi_square_sf(x: float, df: int) -> float:
    """Survival function of the chi-square distribution with ``df`` dof."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    return _regularized_gamma_q(df / 2.0, x / 2.0)


def cohen_d(n_case: int, mean_case: float, sd_case: float,
            n_control: int, mean_control: float, sd_control: float,
            hedges: bool = False) -> EffectSize:
    """Standardized mean difference with large-sample standard error.

    d = (mean_case - mean_control) / s_pooled, where s_pooled is the
    usual bias-weighted pooled SD.  With ``hedges`` the small-sample
    factor 1 - 3/(4(n1 + n2) - 9) multiplies d before the SE and CI are
    formed; the default leaves d uncorrected.

    Raises
    ------
    ValueError
        On n below 2, negative SDs, or a zero pooled SD (degenerate).
    """
    if n_case < 2 or n_control < 2:
        raise ValueError(
            f"both groups need n >= 2, got n_case={n_case}, "
            f"n_control={n_control}")
    if sd_case < 0 or sd_control < 0:
        raise ValueError("SDs must be nonnegative")
    pooled_var = (((n_case - 1) * sd_case ** 2
                   + (n_control - 1) * sd_control ** 2)
                  / (n_case + n_control - 2))
    if pooled_var == 0.0:
        raise ValueError("pooled SD is zero; effect size undefined")
    d = (mean_case - mean_control) / math.sqrt(pooled_var)
    if hedges:
        d *= 1.0 - 3.0 / (4.0 * (n_case + n_control) - 9.0)
    total = n_case + n_control
    se = math.sqrt(total / (n_case * n_control) + d * d / (2.0 * total))
    return EffectSize(smd=d, se=se, ci_low=d - _Z95 * se,
                      ci_high=d + _Z95 * se,
                      n_case=n_case, n_control=n_control)


def pool(effects: list[EffectSize], model: str = "random") -> PooledResult:
    """Pool standardized mean differences across studies.

    Fixed-effect weights are inverse variances; the random-effects model
    adds the DerSimonian-Laird between-study variance tau^2 estimated
    from the fixed-effect Q statistic.

    Raises
    ------
    ValueError
        On an empty list or unknown model.
    """
    if not effects:
        raise ValueError("pool requires at least one effect size")
    if model not in ("fixed", "random"):
        raise ValueError(f"model must be 'fixed' or 'random', got {model!r}")
    d = [e.smd for e in effects]
    w = [1.0 / (e.se ** 2) for e in effects]
    sum_w = sum(w)
    d_fixed = sum(wi * di for wi, di in zip(w, d)) / sum_w
    q_stat = sum(wi * (di - d_fixed) ** 2 for wi, di in zip(w, d))
    df = len(effects) - 1
    if df > 0:
        tau_squared = max(0.0, (q_stat - df)
                          / (sum_w - sum(wi * wi for wi in w) / sum_w))
        i_squared = max(0.0, (q_stat - df) / q_stat) * 100.0 if q_stat > 0 else 0.0
        q_p = chi_square_sf(q_stat, df)
    else:
        tau_squared = 0.0
        i_squared = 0.0
        q_p = 1.0
    if model == "random":
        w_star = [1.0 / (e.se ** 2 + tau_squared) for e in effects]
    else:
        w_star = w
    sum_w_star = sum(w_star)
    pooled_smd = sum(wi * di for wi, di in zip(w_star, d)) / sum_w_star
    pooled_se = 1.0 / math.sqrt(sum_w_star)
    return PooledResult(
        smd=pooled_smd,
        ci_low=pooled_smd - _Z95 * pooled_se,
        ci_high=pooled_smd + _Z95 * pooled_se,
        q_stat=q_stat, q_p=q_p, i_squared=i_squared,
        tau_squared=tau_squared,
        weights=tuple(wi / sum_w_star for wi in w_star),
        model=model)


def _moments_for_arm(groups: tuple[GroupRecord, ...]) -> tuple[int, EstimatedMoments]:
    """Estimate (and if multi-arm, combine) the moments of one arm."""
    per_group = [(g, estimate_moments(g)) for g in groups]
    if len(per_group) == 1:
        g, m = per_group[0]
        return g.n, m
    n, mean, sd = pooled_moments([(g.n, m.mean, m.sd) for g, m in per_group])
    return n, EstimatedMoments(mean=mean, sd=sd, source="combined")


def _screen_study(study: Study, alpha: float, kappa_c: float) -> tuple[tuple[GroupTest, ...], tuple[str, ...]]:
    tests = []
    reasons = []
    for group in study.groups:
        try:
            result = run_test(group, alpha=alpha, kappa_c=kappa_c)
        except DegenerateSummaryError as exc:
            tests.append(GroupTest(group_label=group.group_label,
                                   arm=group.arm, n=group.n,
                                   result=None, error=str(exc)))
            reasons.append(f"group {group.group_label}: {exc}")
            continue
        tests.append(GroupTest(group_label=group.group_label, arm=group.arm,
                               n=group.n, result=result))
        if result is not None and result.reject:
            reasons.append(
                f"group {group.group_label}: symmetry rejected "
                f"(|{result.statistic:.3f}| > critical at alpha={alpha:g})")
    return tuple(tests), tuple(reasons)


def run_pipeline(studies: list[Study], alpha: float = 0.05,
                 model: str = "random", kappa_c: float = DEFAULT_KAPPA_C,
                 hedges: bool = False) -> list[PipelineReport]:
    """Screen, estimate, and pool every outcome present in ``studies``.

    Exclusion is per (study, outcome): a study skewed for one outcome
    may still pool for another.  Case subgroups of an included study are
    combined into a single arm before the effect size is computed;
    control groups are combined within a study only, never across
    studies.

    Returns one report per distinct outcome, in order of first
    appearance.  An outcome whose studies are all excluded yields a
    report with ``pooled`` set to None and a reason, not an error.
    """
    outcomes: dict[str, list[Study]] = {}
    for study in studies:
        outcomes.setdefault(study.outcome_label, []).append(study)

    reports = []
    for outcome_label, outcome_studies in outcomes.items():
        entries = []
        effects = []
        for study in outcome_studies:
            tests, reasons = _screen_study(study, alpha, kappa_c)
            if reasons:
                entries.append(StudyEntry(study_id=study.study_id,
                                          tests=tests, included=False,
                                          exclusion_reasons=reasons))
                continue
            n_case, case_moments = _moments_for_arm(study.case_groups)
            n_control, control_moments = _moments_for_arm(study.control_groups)
            effect = cohen_d(n_case, case_moments.mean, case_moments.sd,
                             n_control, control_moments.mean,
                             control_moments.sd, hedges=hedges)
            entries.append(StudyEntry(
                study_id=study.study_id, tests=tests, included=True,
                exclusion_reasons=(),
                n_case=n_case, case_moments=case_moments,
                n_control=n_control, control_moments=control_moments,
                effect=effect))
            effects.append(effect)
        if effects:
            pooled = pool(effects, model=model)
            reason = None
        else:
            pooled = None
            reason = "all studies excluded by the symmetry screen"
        reports.append(PipelineReport(outcome_label=outcome_label,
                                      alpha=alpha, model=model,
                                      studies=tuple(entries), pooled=pooled,
                                      pooled_omitted_reason=reason))
    return reports


def _test_to_dict(t: GroupTest) -> dict:
    out: dict = {"group_label": t.group_label, "arm": t.arm, "n": t.n}
    if t.error is not None:
        out["error"] = t.error
    elif t.result is None:
        out["tested"] = False
    else:
        out.update(tested=True, scenario=t.result.scenario.value,
                   statistic=t.result.statistic, p_value=t.result.p_value,
                   reject=t.result.reject)
    return out


def _moments_to_dict(n: int | None, m: EstimatedMoments | None) -> dict | None:
    if m is None:
        return None
    out = {"n": n, "mean": m.mean, "sd": m.sd, "source": m.source}
    if m.scenario is not None:
        out["scenario"] = m.scenario.value
    return out


def report_to_dict(report: PipelineReport) -> dict:
    """JSON-ready mirror of a pipeline report."""
    studies = []
    for entry in report.studies:
        d: dict = {
            "study_id": entry.study_id,
            "included": entry.included,
            "tests": [_test_to_dict(t) for t in entry.tests],
        }
        if entry.exclusion_reasons:
            d["exclusion_reasons"] = list(entry.exclusion_reasons)
        if entry.included:
            d["case"] = _moments_to_dict(entry.n_case, entry.case_moments)
            d["control"] = _moments_to_dict(entry.n_control, entry.control_moments)
            e = entry.effect
            d["effect"] = {"smd": e.smd, "se": e.se, "ci_low": e.ci_low,
                           "ci_high": e.ci_high}
        studies.append(d)
    out: dict = {
        "outcome": report.outcome_label,
        "alpha": report.alpha,
        "model": report.model,
        "studies": studies,
    }
    if report.pooled is None:
        out["pooled"] = None
        out["pooled_omitted_reason"] = report.pooled_omitted_reason
    else:
        p = report.pooled
        out["pooled"] = {
            "smd": p.smd, "ci_low": p.ci_low, "ci_high": p.ci_high,
            "q_stat": p.q_stat, "q_p": p.q_p, "i_squared": p.i_squared,
            "tau_squared": p.tau_squared, "model": p.model,
            "weights": list(p.weights),
        }
    return out
