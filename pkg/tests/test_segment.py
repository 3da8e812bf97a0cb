import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pseudoperiodic.clustering import feature_vectors, sweep_k
from pseudoperiodic.compress import CompressedSeries, dp_compress
from pseudoperiodic.errors import ContractError, InsufficientPeriodsError, NoLabelsError
from pseudoperiodic.keypoints import correct_series
from pseudoperiodic.segment import (
    Period,
    PeriodSummary,
    annotate_period,
    load_periods,
    logical_multiply,
    save_periods,
    segment_and_annotate,
    split_periods,
    summarize_period,
)
from pseudoperiodic.series import LabelTrack, SynthConfig, synth_pts


def cts_of(t, v):
    return CompressedSeries(np.asarray(t, float), np.asarray(v, float), np.arange(len(t)), 0.0)


def period(t, v):
    return Period(np.asarray(t, float), np.asarray(v, float), 0)


class TestSplit:
    def test_three_points_two_periods(self):
        cts = cts_of(range(10), np.zeros(10))
        ps = split_periods(cts, [1, 4, 8])
        assert len(ps) == 2
        assert (ps[0].start, ps[0].end, ps[1].start, ps[1].end) == (1, 4, 4, 8)
        assert ps[0].t.tolist() == [1, 2, 3, 4]

    def test_endpoints_give_one_period(self):
        cts = cts_of(range(5), range(5))
        ps = split_periods(cts, [0, 4])
        assert len(ps) == 1 and ps[0].t.tolist() == [0, 1, 2, 3, 4]

    def test_fewer_than_two_points(self):
        with pytest.raises(InsufficientPeriodsError):
            split_periods(cts_of(range(5), range(5)), [2])

    def test_unordered_points(self):
        with pytest.raises(ContractError):
            split_periods(cts_of(range(5), range(5)), [3, 1])

    def test_synthetic_spans_match_boundaries(self):
        res = synth_pts(SynthConfig(n_periods=50, dropout_rate=0.2, seed=7))
        cts = dp_compress(correct_series(res.series, 1.0), 10)
        _, sel = sweep_k(feature_vectors(cts), amplitudes=cts.v[1:-1], seed=7)
        ps = split_periods(cts, sel.period_point_indices)
        assert [(p.start, p.end) for p in ps] == list(zip(res.boundaries[:-1], res.boundaries[1:]))


class TestSummary:
    def test_constant_period(self):
        s = summarize_period(period(range(5), [5] * 5))
        assert s == PeriodSummary(5, 0, 5, 0, 5, 0, 4)

    def test_scan_example(self):
        s = summarize_period(period(range(5), [1, 9, 2, 0, 1]))
        assert s == PeriodSummary(0, 3, 9, 1, 2.6, 2, 4)

    def test_first_maximum_wins(self):
        s = summarize_period(period(range(5), [0, 7, 1, 7, 0]))
        assert s.t_max == 1 and s.t_min == 0

    @given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=30), st.integers(0, 100))
    def test_equals_single_pass_scan(self, vs, t0):
        t = [t0 + 2 * i for i in range(len(vs))]
        lo = hi = 0
        for i, x in enumerate(vs):
            if x < vs[lo]:
                lo = i
            if x > vs[hi]:
                hi = i
        s = summarize_period(period(t, vs))
        assert (s.h_min, s.t_min, s.h_max, s.t_max) == (vs[lo], t[lo], vs[hi], t[hi])
        assert s.h_mean == np.mean(np.asarray(vs, float))
        assert s.p_minmax == abs(t[hi] - t[lo]) and s.p_l == t[-1] - t[0]
        assert s.h_min <= s.h_mean <= s.h_max and s.p_minmax <= s.p_l


class TestLabels:
    def test_logical_multiply(self):
        assert logical_multiply(["Ab", "N"]) == "Ab"
        assert logical_multiply(["N", "N"]) == "N"
        assert logical_multiply(["N", "N", "Ab", "N"]) == "Ab"
        with pytest.raises(ContractError):
            logical_multiply([])

    def test_event_inside(self):
        assert annotate_period(period([0, 10], [0, 0]), LabelTrack([5], ["Ab"])) == "Ab"

    def test_only_later_event(self):
        assert annotate_period(period([0, 10], [0, 0]), LabelTrack([12], ["N"])) == "N"
        assert annotate_period(period([0, 10], [0, 0]), LabelTrack([12], ["Ab"])) == "Ab"

    def test_mixed_events_inside(self):
        assert annotate_period(period([0, 10], [0, 0]), LabelTrack([3, 7], ["N", "Ab"])) == "Ab"

    def test_state_in_force(self):
        track = LabelTrack([-5, 20], ["Ab", "N"])
        assert annotate_period(period([0, 10], [0, 0]), track) == "Ab"

    def test_closed_span(self):
        track = LabelTrack([10], ["Ab"])
        assert annotate_period(period([0, 10], [0, 0]), track) == "Ab"
        assert annotate_period(period([10, 20], [0, 0]), track) == "Ab"

    def test_empty_track(self):
        with pytest.raises(NoLabelsError):
            annotate_period(period([0, 1], [0, 0]), LabelTrack([], []))

    @given(
        st.lists(st.tuples(st.integers(-20, 30), st.sampled_from(["N", "Ab"])), min_size=1, max_size=8,
                 unique_by=lambda e: e[0]),
        st.integers(0, 10),
    )
    def test_adding_abnormal_inside_never_clears(self, events, t_new):
        events = sorted(events)
        pd = period([0, 10], [0, 0])
        before = annotate_period(pd, LabelTrack(*zip(*events)))
        if any(t == t_new for t, _ in events):
            return
        after = annotate_period(pd, LabelTrack(*zip(*sorted(events + [(t_new, "Ab")]))))
        assert after == "Ab"
        if before == "Ab":
            assert after == "Ab"


def test_counts_and_file_round_trip(tmp_path):
    res = synth_pts(SynthConfig(n_periods=30, anomaly_rate=0.2, seed=11))
    cts = dp_compress(correct_series(res.series, 1.0), 10)
    _, sel = sweep_k(feature_vectors(cts), amplitudes=cts.v[1:-1], seed=11)
    rows = segment_and_annotate(cts, sel.period_point_indices, res.labels)
    assert len(rows) == sel.period_point_indices.size - 1
    assert [r.label for r in rows] == list(res.labels.labels)
    save_periods(rows, tmp_path / "p.csv")
    assert load_periods(tmp_path / "p.csv") == rows
