import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chi2

from sumnorm.meta import (EffectSize, GroupTest, PipelineReport, PooledResult,
                          StudyEntry, chi_square_sf, cohen_d, pool,
                          report_to_dict, run_pipeline)
from sumnorm.model import GroupRecord, QuantileSummary, Study
from sumnorm.plots import curve_svg, forest_svg


class TestChiSquareSf:
    @pytest.mark.parametrize("df", list(range(1, 31)))
    def test_matches_scipy_grid(self, df):
        for x in (0.05, 0.5, 1.0, 2.3, 5.0, 7.7, 10.0, 20.0, 35.41, 50.0,
                  89.76, 120.0):
            want = chi2.sf(x, df)
            assert chi_square_sf(x, df) == pytest.approx(want, rel=1e-10)

    def test_at_zero(self):
        assert chi_square_sf(0.0, 5) == 1.0

    def test_deep_tail(self):
        # the series/continued-fraction split must stay accurate far out
        assert chi_square_sf(200.0, 3) == pytest.approx(
            chi2.sf(200.0, 3), rel=1e-8)

    def test_bad_df(self):
        with pytest.raises(ValueError, match="df"):
            chi_square_sf(1.0, 0)

    def test_negative_x(self):
        with pytest.raises(ValueError):
            chi_square_sf(-1.0, 3)

    @given(x=st.floats(0.001, 300), df=st.integers(1, 60))
    def test_is_probability_and_decreasing(self, x, df):
        p = chi_square_sf(x, df)
        assert 0.0 <= p <= 1.0
        assert chi_square_sf(x + 1.0, df) <= p + 1e-12


class TestCohenD:
    def test_frozen_example(self):
        # equal arms of 10 with pooled variance 5 and mean gap 6
        e = cohen_d(10, 6.0, math.sqrt(5), 10, 0.0, math.sqrt(5))
        assert e.smd == pytest.approx(6 / math.sqrt(5), rel=1e-12)
        assert e.se == pytest.approx(math.sqrt(0.38), rel=1e-12)
        assert e.ci_low == pytest.approx(e.smd - 1.96 * e.se, rel=1e-12)
        assert e.ci_high == pytest.approx(e.smd + 1.96 * e.se, rel=1e-12)
        assert (e.n_case, e.n_control) == (10, 10)

    def test_unequal_arm_se(self):
        e = cohen_d(40, 1.0, 1.0, 10, 0.0, 1.0)
        want_se = math.sqrt(50 / 400 + e.smd ** 2 / 100)
        assert e.se == pytest.approx(want_se, rel=1e-12)

    def test_antisymmetry(self):
        a = cohen_d(12, 3.0, 1.5, 18, 1.0, 2.0)
        b = cohen_d(18, 1.0, 2.0, 12, 3.0, 1.5)
        assert b.smd == pytest.approx(-a.smd, rel=1e-12)
        assert b.se == pytest.approx(a.se, rel=1e-12)

    def test_hedges_shrinks(self):
        plain = cohen_d(10, 2.0, 1.0, 10, 0.0, 1.0)
        small = cohen_d(10, 2.0, 1.0, 10, 0.0, 1.0, hedges=True)
        assert small.smd == pytest.approx(plain.smd * (1 - 3 / 71), rel=1e-12)
        assert abs(small.smd) < abs(plain.smd)

    def test_zero_difference(self):
        e = cohen_d(10, 5.0, 2.0, 10, 5.0, 2.0)
        assert e.smd == 0.0

    def test_tiny_groups_rejected(self):
        with pytest.raises(ValueError, match="n >= 2"):
            cohen_d(1, 1.0, 1.0, 10, 0.0, 1.0)
        with pytest.raises(ValueError, match="n >= 2"):
            cohen_d(10, 1.0, 1.0, 1, 0.0, 1.0)

    def test_negative_sd_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            cohen_d(10, 1.0, -1.0, 10, 0.0, 1.0)

    def test_zero_pooled_sd_rejected(self):
        with pytest.raises(ValueError, match="pooled SD is zero"):
            cohen_d(10, 1.0, 0.0, 10, 0.0, 0.0)


def _effect(smd: float, se: float) -> EffectSize:
    return EffectSize(smd=smd, se=se, ci_low=smd - 1.96 * se,
                      ci_high=smd + 1.96 * se, n_case=10, n_control=10)


def _effects_strategy():
    return st.lists(
        st.builds(_effect, st.floats(-3, 3), st.floats(0.05, 1.0)),
        min_size=1, max_size=12)


class TestPool:
    def test_frozen_two_study_example(self):
        effects = [_effect(0.5, 0.2), _effect(1.0, 0.25)]
        fixed = pool(effects, model="fixed")
        assert fixed.smd == pytest.approx(0.6951219512195121, rel=1e-12)
        assert fixed.q_stat == pytest.approx(2.4390243902439024, rel=1e-12)
        assert fixed.q_p == pytest.approx(0.11834981273562842, rel=1e-10)
        assert fixed.i_squared == pytest.approx(59.0, rel=1e-12)
        random = pool(effects, model="random")
        assert random.tau_squared == pytest.approx(0.07375, rel=1e-10)
        assert random.smd == pytest.approx(0.7275, rel=1e-10)
        assert random.weights == pytest.approx((0.545, 0.455), rel=1e-10)
        assert random.ci_low == pytest.approx(
            0.7275 - 1.96 * 0.24898544134145673, rel=1e-9)

    def test_single_effect(self):
        (e,) = [_effect(0.8, 0.3)]
        p = pool([e])
        assert p.smd == pytest.approx(0.8, rel=1e-12)
        assert p.q_stat == 0.0
        assert p.q_p == 1.0
        assert p.i_squared == 0.0
        assert p.tau_squared == 0.0
        assert p.weights == (1.0,)

    def test_identical_effects_have_no_heterogeneity(self):
        p = pool([_effect(0.5, 0.2)] * 4)
        assert p.q_stat == pytest.approx(0.0, abs=1e-12)
        assert p.tau_squared == 0.0
        assert p.i_squared == 0.0
        assert p.smd == pytest.approx(0.5, rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            pool([])

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError, match="model"):
            pool([_effect(0.5, 0.2)], model="bayes")

    @given(effects=_effects_strategy())
    def test_weights_sum_to_one(self, effects):
        for model in ("fixed", "random"):
            p = pool(effects, model=model)
            assert sum(p.weights) == pytest.approx(1.0, rel=1e-9)
            assert all(w > 0 for w in p.weights)

    @given(effects=_effects_strategy())
    def test_pooled_contained_in_observed_range(self, effects):
        for model in ("fixed", "random"):
            p = pool(effects, model=model)
            lo = min(e.smd for e in effects) - 1e-9
            hi = max(e.smd for e in effects) + 1e-9
            assert lo <= p.smd <= hi

    @given(effects=_effects_strategy())
    def test_random_ci_at_least_as_wide(self, effects):
        fixed = pool(effects, model="fixed")
        random = pool(effects, model="random")
        fixed_width = fixed.ci_high - fixed.ci_low
        random_width = random.ci_high - random.ci_low
        assert random_width >= fixed_width - 1e-12

    @given(effects=_effects_strategy())
    def test_i_squared_range_and_q_p(self, effects):
        p = pool(effects)
        assert 0.0 <= p.i_squared < 100.0
        assert 0.0 <= p.q_p <= 1.0
        assert p.tau_squared >= 0.0


def _direct_study(study_id, outcome, n1, m1, s1, n2, m2, s2):
    case = GroupRecord(study_id=study_id, group_label="case", arm="case",
                       n=n1, reported_mean=m1, reported_sd=s1)
    control = GroupRecord(study_id=study_id, group_label="control",
                          arm="control", n=n2, reported_mean=m2,
                          reported_sd=s2)
    return Study(study_id=study_id, outcome_label=outcome,
                 case_groups=(case,), control_groups=(control,))


def _summary_study(study_id, outcome, case_summary, control_summary):
    case = GroupRecord(study_id=study_id, group_label="case", arm="case",
                       n=case_summary.n, summary=case_summary)
    control = GroupRecord(study_id=study_id, group_label="control",
                          arm="control", n=control_summary.n,
                          summary=control_summary)
    return Study(study_id=study_id, outcome_label=outcome,
                 case_groups=(case,), control_groups=(control,))


_SYMMETRIC = QuantileSummary(n=40, median=5.0, q1=4.0, q3=6.0)
_SKEWED = QuantileSummary(n=100, median=9.6, q1=7.6, q3=16.25)


class TestRunPipeline:
    def test_direct_studies_pool(self):
        studies = [_direct_study("a", "o", 20, 5.0, 2.0, 20, 4.0, 2.0),
                   _direct_study("b", "o", 30, 5.5, 2.0, 30, 4.0, 2.0)]
        (report,) = run_pipeline(studies)
        assert report.included_ids == ("a", "b")
        assert report.excluded_ids == ()
        assert report.pooled is not None
        # direct groups are never symmetry-tested
        for entry in report.studies:
            assert all(t.result is None and t.error is None
                       for t in entry.tests)

    def test_skewed_study_excluded(self):
        studies = [_direct_study("a", "o", 20, 5.0, 2.0, 20, 4.0, 2.0),
                   _summary_study("skew", "o", _SKEWED, _SYMMETRIC)]
        (report,) = run_pipeline(studies)
        assert report.excluded_ids == ("skew",)
        (entry,) = [s for s in report.studies if s.study_id == "skew"]
        assert entry.effect is None
        assert any("symmetry rejected" in r for r in entry.exclusion_reasons)

    def test_degenerate_summary_excluded_with_error(self):
        flat = QuantileSummary(n=40, median=2.0, q1=2.0, q3=2.0)
        studies = [_summary_study("flat", "o", flat, _SYMMETRIC),
                   _direct_study("a", "o", 20, 5.0, 2.0, 20, 4.0, 2.0)]
        (report,) = run_pipeline(studies)
        assert report.excluded_ids == ("flat",)
        (entry,) = [s for s in report.studies if s.study_id == "flat"]
        flagged = [t for t in entry.tests if t.error is not None]
        assert len(flagged) == 1
        assert "statistic undefined" in flagged[0].error

    def test_all_excluded_outcome(self):
        studies = [_summary_study("skew", "o", _SKEWED, _SYMMETRIC)]
        (report,) = run_pipeline(studies)
        assert report.pooled is None
        assert report.pooled_omitted_reason == (
            "all studies excluded by the symmetry screen")

    def test_multi_arm_case_combined(self):
        a = GroupRecord(study_id="m", group_label="sub1", arm="case", n=40,
                        reported_mean=11.8, reported_sd=7.9)
        b = GroupRecord(study_id="m", group_label="sub2", arm="case", n=51,
                        reported_mean=5.3, reported_sd=6.8)
        control = GroupRecord(study_id="m", group_label="control",
                              arm="control", n=20, reported_mean=2.1,
                              reported_sd=2.4)
        study = Study(study_id="m", outcome_label="o", case_groups=(a, b),
                      control_groups=(control,))
        (report,) = run_pipeline([study])
        (entry,) = report.studies
        assert entry.n_case == 91
        assert entry.case_moments.source == "combined"
        assert entry.case_moments.sd == pytest.approx(
            7.953428930092463, abs=1e-9)
        assert entry.effect.n_case == 91

    def test_exclusion_is_per_outcome(self):
        # the same study id can pool for one outcome and fail another
        ok = _summary_study("dual", "one", _SYMMETRIC, _SYMMETRIC)
        bad = _summary_study("dual", "two", _SKEWED, _SYMMETRIC)
        other_one = _direct_study("x", "one", 20, 5.0, 2.0, 20, 4.0, 2.0)
        other_two = _direct_study("x", "two", 20, 5.0, 2.0, 20, 4.0, 2.0)
        reports = {r.outcome_label: r
                   for r in run_pipeline([ok, bad, other_one, other_two])}
        assert "dual" in reports["one"].included_ids
        assert "dual" in reports["two"].excluded_ids

    def test_outcome_order_is_first_appearance(self):
        studies = [_direct_study("a", "beta", 20, 5.0, 2.0, 20, 4.0, 2.0),
                   _direct_study("a", "alpha", 20, 5.0, 2.0, 20, 4.0, 2.0),
                   _direct_study("b", "beta", 20, 5.0, 2.0, 20, 4.0, 2.0)]
        reports = run_pipeline(studies)
        assert [r.outcome_label for r in reports] == ["beta", "alpha"]

    def test_alpha_and_model_recorded(self):
        studies = [_direct_study("a", "o", 20, 5.0, 2.0, 20, 4.0, 2.0)]
        (report,) = run_pipeline(studies, alpha=0.01, model="fixed")
        assert report.alpha == 0.01
        assert report.model == "fixed"
        assert report.pooled.model == "fixed"

    def test_stricter_alpha_can_rescue_a_study(self):
        # the skewed summary rejects at 0.05 but survives a harsher cutoff
        studies = [_summary_study("skew", "o", _SKEWED, _SYMMETRIC)]
        (at_05,) = run_pipeline(studies, alpha=0.05)
        (at_1e5,) = run_pipeline(studies, alpha=1e-5)
        assert at_05.excluded_ids == ("skew",)
        assert at_1e5.included_ids == ("skew",)

    def test_hedges_passthrough(self):
        studies = [_direct_study("a", "o", 10, 2.0, 1.0, 10, 0.0, 1.0)]
        (plain,) = run_pipeline(studies)
        (adjusted,) = run_pipeline(studies, hedges=True)
        want = plain.studies[0].effect.smd * (1 - 3 / 71)
        assert adjusted.studies[0].effect.smd == pytest.approx(want, rel=1e-12)


class TestReportToDict:
    def _report(self):
        studies = [_direct_study("a", "o", 20, 5.0, 2.0, 20, 4.0, 2.0),
                   _summary_study("skew", "o", _SKEWED, _SYMMETRIC)]
        (report,) = run_pipeline(studies)
        return report

    def test_json_serializable(self):
        d = report_to_dict(self._report())
        text = json.dumps(d)
        assert json.loads(text) == d

    def test_structure(self):
        d = report_to_dict(self._report())
        assert d["outcome"] == "o"
        assert d["alpha"] == 0.05
        assert d["model"] == "random"
        by_id = {s["study_id"]: s for s in d["studies"]}
        assert by_id["a"]["included"] is True
        assert by_id["a"]["effect"]["smd"] == pytest.approx(0.5, rel=1e-12)
        assert by_id["a"]["case"]["source"] == "reported"
        assert by_id["skew"]["included"] is False
        assert by_id["skew"]["exclusion_reasons"]
        tested = [t for t in by_id["skew"]["tests"] if t.get("tested")]
        assert tested and tested[0]["scenario"] == "S2"
        assert d["pooled"]["model"] == "random"

    def test_pooled_none(self):
        studies = [_summary_study("skew", "o", _SKEWED, _SYMMETRIC)]
        (report,) = run_pipeline(studies)
        d = report_to_dict(report)
        assert d["pooled"] is None
        assert "excluded" in d["pooled_omitted_reason"]


class TestForestSvg:
    def _report(self):
        studies = [_direct_study("alpha", "leptin", 20, 5.0, 2.0, 20, 4.0, 2.0),
                   _direct_study("beta", "leptin", 30, 5.5, 2.0, 30, 4.0, 2.0)]
        (report,) = run_pipeline(studies)
        return report

    def test_deterministic(self):
        report = self._report()
        assert forest_svg(report) == forest_svg(report)

    def test_contains_rows_and_pooled(self):
        svg = forest_svg(self._report())
        assert svg.startswith('<?xml version="1.0"')
        assert "<svg" in svg and svg.rstrip().endswith("</svg>")
        assert "alpha" in svg and "beta" in svg
        assert "Pooled (random)" in svg
        assert "Q=" in svg

    def test_escapes_markup(self):
        studies = [_direct_study("a<b>", "x & y", 20, 5.0, 2.0, 20, 4.0, 2.0)]
        (report,) = run_pipeline(studies)
        svg = forest_svg(report)
        assert "a&lt;b&gt;" in svg
        assert "x &amp; y" in svg

    def test_no_included_studies_rejected(self):
        studies = [_summary_study("skew", "o", _SKEWED, _SYMMETRIC)]
        (report,) = run_pipeline(studies)
        with pytest.raises(ValueError, match="no included studies"):
            forest_svg(report)


class TestCurveSvg:
    def test_deterministic(self):
        args = ([50, 100, 200], [0.2, 0.5, 0.9], "power, S1")
        assert curve_svg(*args) == curve_svg(*args)

    def test_reference_line_only_when_asked(self):
        with_ref = curve_svg([50, 100], [0.04, 0.05], "t", reference=0.05)
        without = curve_svg([50, 100], [0.04, 0.05], "t")
        assert with_ref.count("#cc0000") == 1
        assert "#cc0000" not in without

    def test_bad_lengths_rejected(self):
        with pytest.raises(ValueError, match="equal-length"):
            curve_svg([1, 2], [0.5], "t")
        with pytest.raises(ValueError, match="nonempty"):
            curve_svg([], [], "t")
