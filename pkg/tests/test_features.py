import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bimbehavior.features import (
    FEATURE_INDEX, FEATURE_NAMES, EmptyWindowError, PauseBand, classify_pause,
    extract_features, feature_matrix, read_matrix, record_time, window_stats, write_matrix,
)
from bimbehavior.ingest import Method
from bimbehavior.sessionize import Category, EventArray, SessionEvent, Source

F = FEATURE_INDEX


def loop_features(events):
    """Plain-Python reading of the feature definitions, used as the oracle."""
    L = len(events)
    rt = [0] + [max(events[i].tick - events[i - 1].tick, 0) for i in range(1, L)]
    T = sum(rt)
    d = dict.fromkeys(FEATURE_NAMES, 0.0)
    num_d = dict.fromkeys(FEATURE_NAMES, 0)
    num_t = dict.fromkeys(FEATURE_NAMES, 0)

    def hit(stem, e, i, amount=1):
        num_d[stem + "_d"] += amount
        num_t[stem + "_t"] += rt[i]

    for i, e in enumerate(events):
        c = e.category
        if c == Category.TRANSACTION_SUCCESS:
            hit("transsuccess", e, i)
        if c == Category.ELEMENTS_ADDED:
            hit("add", e, i, e.count)
            hit("add_times", e, i)
        if c == Category.ELEMENTS_DELETED:
            hit("delete", e, i, e.count)
            hit("delete_times", e, i)
        if c == Category.ELEMENTS_MODIFIED:
            hit("modify_times", e, i)
        if c == Category.COMMAND:
            hit("command", e, i)
            if e.undo:
                hit("undo", e, i)
            if e.method == Method.RIBBON:
                hit("ribbon", e, i)
            if e.method == Method.ACCEL_KEY:
                hit("accelkey", e, i)
        if c == Category.PUSH_BUTTON:
            hit("pushbutton", e, i)
        if i > 0:
            if 60_000 <= rt[i] < 120_000:
                num_d["idle1_2_d"] += 1
                num_t["idle1_2_t"] += rt[i]
            elif 120_000 <= rt[i] < 300_000:
                num_d["idle2_5_d"] += 1
                num_t["idle2_5_t"] += rt[i]
            elif rt[i] >= 300_000:
                num_d["idle_gt5_d"] += 1
                num_t["idle_gt5_t"] += rt[i]
    for name in FEATURE_NAMES:
        if name.endswith("_d"):
            d[name] = num_d[name] / L
        elif name != "effect_t":
            d[name] = num_t[name] / T if T > 0 else 0.0
    d["effect_t"] = (T - num_t["idle_gt5_t"]) / T if T > 0 else 1.0
    return np.array([d[n] for n in FEATURE_NAMES])


CATS = list(Category)
JOURNAL_CATS = [c for c in CATS if c not in (Category.ELEMENTS_ADDED, Category.ELEMENTS_DELETED,
                                             Category.ELEMENTS_MODIFIED, Category.KEY_PRESS)]


@st.composite
def event_lists(draw, min_size=1, max_size=60):
    n = draw(st.integers(min_size, max_size))
    gaps = draw(st.lists(st.sampled_from([0, 1, 500, 59_999, 60_000, 119_999, 120_000,
                                          299_999, 300_000, 1_000_000, 7_000]),
                         min_size=n, max_size=n))
    ticks = np.cumsum(gaps) + 10**12
    events = []
    for t in ticks:
        cat = draw(st.sampled_from(CATS))
        src = Source.JOURNAL if cat in JOURNAL_CATS else Source.TRACKER
        method = draw(st.sampled_from([Method.RIBBON, Method.ACCEL_KEY, Method.INTERNAL])) \
            if cat == Category.COMMAND else Method.NONE
        count = draw(st.integers(1, 9)) if cat in (Category.ELEMENTS_ADDED,
                                                   Category.ELEMENTS_DELETED,
                                                   Category.ELEMENTS_MODIFIED) else 1
        undo = draw(st.booleans()) if cat == Category.COMMAND else False
        events.append(SessionEvent(int(t), src, cat, method, count, undo))
    return events


def test_names():
    assert len(FEATURE_NAMES) == 29
    assert FEATURE_NAMES[0] == "transsuccess_d" and FEATURE_NAMES[-1] == "effect_t"
    assert FEATURE_NAMES[13] == "idle_gt5_d" and FEATURE_NAMES[14] == "transsuccess_t"


class TestPrimitives:
    def test_record_time(self):
        assert record_time([100, 250], 1) == 150
        assert record_time([100, 250], 0) == 0
        assert record_time([7, 7], 1) == 0

    @pytest.mark.parametrize("gap, band", [
        (0, PauseBand.NOT_A_PAUSE), (59_999, PauseBand.NOT_A_PAUSE),
        (60_000, PauseBand.BAND_1_2), (119_999, PauseBand.BAND_1_2),
        (120_000, PauseBand.BAND_2_5), (299_999, PauseBand.BAND_2_5),
        (300_000, PauseBand.BAND_OVER_5), (10**9, PauseBand.BAND_OVER_5),
    ])
    def test_bands(self, gap, band):
        assert classify_pause(gap) is band


def _cmds(n_cmd, n_total, tick=0, step=1000):
    evs = [SessionEvent(tick + i * step, Source.JOURNAL, Category.COMMAND, Method.RIBBON)
           for i in range(n_cmd)]
    evs += [SessionEvent(tick + i * step, Source.TRACKER, Category.KEY_PRESS)
            for i in range(n_cmd, n_total)]
    return EventArray.from_events(evs)


class TestExtract:
    def test_command_density(self):
        x = extract_features(_cmds(7, 100))
        assert x[F["command_d"]] == pytest.approx(0.07, abs=1e-15)

    def test_zero_span(self):
        x = extract_features(_cmds(3, 10, step=0))
        assert all(x[F[n]] == 0 for n in FEATURE_NAMES if n.endswith("_t") and n != "effect_t")
        assert x[F["effect_t"]] == 1.0

    def test_single_long_gap(self):
        ev = EventArray.from_events([
            SessionEvent(0, Source.TRACKER, Category.KEY_PRESS),
            SessionEvent(100_000, Source.TRACKER, Category.KEY_PRESS),
            SessionEvent(500_000, Source.TRACKER, Category.KEY_PRESS),
            SessionEvent(600_000, Source.TRACKER, Category.KEY_PRESS),
        ])
        x = extract_features(ev)
        assert x[F["idle_gt5_t"]] == pytest.approx(2 / 3, abs=1e-15)
        assert x[F["effect_t"]] == pytest.approx(1 / 3, abs=1e-15)
        assert x[F["idle1_2_d"]] == 0.5  # two 100 s gaps
        assert x[F["idle_gt5_d"]] == 0.25

    def test_empty(self):
        with pytest.raises(EmptyWindowError):
            extract_features(EventArray.empty())

    @settings(max_examples=200)
    @given(event_lists())
    def test_matches_loop_oracle(self, events):
        x = extract_features(EventArray.from_events(events))
        np.testing.assert_allclose(x, loop_features(events), rtol=0, atol=1e-15)

    @settings(max_examples=200)
    @given(event_lists())
    def test_identities(self, events):
        ev = EventArray.from_events(events)
        stats = window_stats(ev)
        x = stats.features()
        assert np.all(np.isfinite(x))
        if stats.span > 0:
            assert abs(x[F["effect_t"]] + x[F["idle_gt5_t"]] - 1) <= 1e-12
        assert x[F["idle1_2_t"]] + x[F["idle2_5_t"]] + x[F["idle_gt5_t"]] <= 1 + 1e-12
        n_cmd = stats.counts[6]
        assert stats.counts[8] + stats.counts[9] + stats.internal_commands == n_cmd
        assert x[F["add_t"]] == x[F["add_times_t"]]
        assert x[F["delete_t"]] == x[F["delete_times_t"]]
        for name in FEATURE_NAMES:
            if name not in ("add_d", "delete_d"):
                assert 0 <= x[F[name]] <= 1

    @given(event_lists())
    def test_doubling_keeps_data_densities(self, events):
        doubled = [e for e in events for _ in range(2)]
        a = extract_features(EventArray.from_events(events))
        b = extract_features(EventArray.from_events(doubled))
        d_cols = [F[n] for n in FEATURE_NAMES if n.endswith("_d") and not n.startswith("idle")]
        np.testing.assert_allclose(a[d_cols], b[d_cols], rtol=1e-14)

    @given(event_lists(min_size=2), st.data())
    def test_batch_equals_direct(self, events, data):
        ev = EventArray.from_events(events)
        n = len(events)
        windows = data.draw(st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(1, n)).filter(lambda w: w[0] < w[1]),
            min_size=1, max_size=8))
        M = feature_matrix(ev, windows)
        for row, (a, b) in zip(M, windows):
            assert np.array_equal(row, extract_features(ev[a:b]))


def test_matrix_roundtrip():
    rng = np.random.default_rng(0)
    X = rng.random((3, 29))
    buf = io.StringIO()
    write_matrix([("d1", 0, 70, X[0]), ("d1", 5, 70, X[1]), ("d2", 0, 68.5, X[2])], buf)
    ids, starts, labels, X2 = read_matrix(io.StringIO(buf.getvalue()))
    assert ids == ["d1", "d1", "d2"] and starts.tolist() == [0, 5, 0]
    assert labels.tolist() == [70.0, 70.0, 68.5]
    assert np.array_equal(X, X2)
