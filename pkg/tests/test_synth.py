import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bimbehavior.features import FEATURE_INDEX, extract_features
from bimbehavior.ingest import parse_journal, parse_tracker
from bimbehavior.quality import read_sheet
from bimbehavior.sessionize import CleaningPolicy, ParsedFile, clean, concat_sessions, integrate
from bimbehavior.synth import (
    KIND_NAMES, MINUTE, DesignerProfile, GenConfig, InvalidProfileError, draw_profile, gen_corpus,
    gen_designer, kind_weights, load_ground_truth, score_moments, true_score,
)

TINY = dict(events_per_designer=(1500, 2500))


def rebuild(corpus, did="D001"):
    """Parse every generated file and integrate, as the pipeline would."""
    sessions, malformed = [], 0
    for k, (jtext, ttext) in enumerate(zip(corpus.journals, corpus.trackers), start=1):
        jrec, jrep = parse_journal(io.StringIO(jtext))
        trec, trep = parse_tracker(io.StringIO(ttext))
        malformed += jrep.lines_malformed + trep.lines_malformed
        sessions.append(integrate(jrec, trec, f"session_{k}", did))
    return concat_sessions(sessions).events, malformed


# score model

def test_true_score_examples():
    assert true_score(DesignerProfile(0.5, 0.5, 0.5)) == 71
    assert true_score(DesignerProfile(0.0, 0.0, 0.0)) == 44
    assert true_score(DesignerProfile(1.0, 1.0, 1.0)) == 94  # 97.9 before clamping
    assert true_score(DesignerProfile(0.0, 0.0, 0.0), noise=-100) == 38


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.5))
def test_true_score_monotone_in_every_trait(s, b, g, bump):
    lo = true_score(DesignerProfile(s, b, g))
    for hi in (DesignerProfile(min(1, s + bump), b, g), DesignerProfile(s, min(1, b + bump), g),
               DesignerProfile(s, b, min(1, g + bump))):
        assert true_score(hi) >= lo


def test_score_moments_match_calibration_targets():
    mean, sd = score_moments(n=20_000, seed=1)
    assert abs(mean - 70.9) < 0.3
    assert abs(sd - 7.61) < 0.3


def test_invalid_profile():
    with pytest.raises(InvalidProfileError):
        DesignerProfile(1.2, 0.5, 0.5)
    with pytest.raises(InvalidProfileError):
        DesignerProfile(0.5, -0.1, 0.5)


def test_bad_config():
    with pytest.raises(ValueError):
        GenConfig(preset="huge")
    with pytest.raises(ValueError):
        GenConfig(n_designers=0)
    with pytest.raises(ValueError):
        GenConfig.small(sessions_per_designer=(3, 2))


def test_presets_fill_ranges():
    assert GenConfig().events_per_designer == (35_000, 85_000)
    small = GenConfig.small()
    assert small.events_per_designer == (4_000, 8_000)
    assert GenConfig.small(events_per_designer=(10, 20)).events_per_designer == (10, 20)


# planted links

def test_kind_weights_follow_planted_directions():
    lo, hi = kind_weights(DesignerProfile(0.1, 0.1, 0.5)), kind_weights(DesignerProfile(0.9, 0.9, 0.5))
    k = KIND_NAMES.index
    assert hi[k("accelkey")] > 5 * lo[k("accelkey")]  # shortcut use rises with skill
    assert hi[k("pushbutton")] < lo[k("pushbutton")]  # dialog clicks fall with skill
    assert hi[k("deleted")] < lo[k("deleted")]  # deletions fall with intent stability


def planted_pairs(trait, n=20):
    rng = np.random.default_rng(7)
    out = []
    for i in range(n):
        base = rng.uniform(0.2, 0.8, 3)
        lo, hi = base.copy(), base.copy()
        lo[trait], hi[trait] = 0.1, 0.9
        seed = int(rng.integers(2**32))
        cfg = GenConfig.small(n_designers=1, **TINY)
        out.append(tuple(extract_features(gen_designer(DesignerProfile(*v, seed), cfg).events)
                         for v in (lo, hi)))
    return out


@pytest.mark.parametrize("trait,feature,sign", [
    (0, "accelkey_d", +1), (0, "pushbutton_d", -1), (1, "delete_times_d", -1),
    (2, "idle_gt5_t", -1),
])
def test_planted_monotonicity(trait, feature, sign):
    j = FEATURE_INDEX[feature]
    agree = sum(sign * (hi[j] - lo[j]) > 0 for lo, hi in planted_pairs(trait))
    assert agree >= 18, f"{feature}: {agree}/20 pairs in the planted direction"


def test_full_engagement_has_no_pauses():
    c = gen_designer(DesignerProfile(0.5, 0.5, 1.0, seed=3), GenConfig.small(**TINY))
    ticks = c.events.ticks
    # within sessions every gap is an active gap; breaks between sessions are >= 30 min
    gaps = np.diff(ticks)
    inside = gaps[gaps < 30 * MINUTE]
    assert inside.max() <= 50_000
    assert np.sum(gaps >= 30 * MINUTE) == len(c.truth.session_sizes) - 1


# files and round trip

def test_designer_round_trip_is_exact():
    c = gen_designer(draw_profile(0, 0), GenConfig.small(**TINY))
    events, malformed = rebuild(c)
    assert malformed == 0
    assert events == c.events
    assert len(c.events) == c.truth.n_events


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_any_seed(seed):
    c = gen_designer(DesignerProfile(0.3, 0.7, 0.4, seed), GenConfig.small(events_per_designer=(50, 300)))
    events, malformed = rebuild(c)
    assert malformed == 0 and events == c.events


def test_gen_designer_is_pure():
    p, cfg = draw_profile(3, 5), GenConfig.small(**TINY)
    a, b = gen_designer(p, cfg, "D006"), gen_designer(p, cfg, "D006")
    assert a.journals == b.journals and a.trackers == b.trackers


def test_draw_profile_independent_of_other_designers():
    assert draw_profile(0, 4) == draw_profile(0, 4)
    assert draw_profile(0, 4) != draw_profile(0, 5)
    assert draw_profile(0, 4) != draw_profile(1, 4)


def test_sessions_chronological_and_disjoint():
    c = gen_designer(draw_profile(0, 1), GenConfig.small(sessions_per_designer=(4, 4), **TINY))
    bounds = np.cumsum([0] + c.truth.session_sizes)
    spans = [(c.events.ticks[a], c.events.ticks[b - 1]) for a, b in zip(bounds, bounds[1:])]
    assert len(spans) == 4
    assert all(prev[1] < cur[0] for prev, cur in zip(spans, spans[1:]))
    assert np.all(np.diff(c.events.ticks) > 0)


def test_small_preset_sizes():
    cfg = GenConfig.small()
    for i in range(4):
        t = gen_designer(draw_profile(0, i), cfg).truth
        assert 2 <= len(t.session_sizes) <= 4
        assert 4_000 <= t.n_events <= 8_000


def corpus_files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_corpus_layout_and_cleaning(tmp_path):
    cfg = GenConfig.small(n_designers=2)
    truths = gen_corpus(cfg, 0, tmp_path)
    assert [t.designer_id for t in truths] == ["D001", "D002"]
    for t in truths:
        folder = tmp_path / t.designer_id
        for k in range(1, len(t.session_sizes) + 1):
            jpath, tpath = folder / f"session_{k}.journal.txt", folder / f"session_{k}.tracker.csv"
            jrec, jrep = parse_journal(jpath.open(encoding="utf-8"))
            trec, trep = parse_tracker(tpath.open(encoding="utf-8"))
            assert jrep.lines_malformed == trep.lines_malformed == 0
            assert jpath.stat().st_size >= 100 * 1024
            decision = clean(ParsedFile(str(jpath), jpath.stat().st_size, jrec, jrep),
                             ParsedFile(str(tpath), tpath.stat().st_size, trec, trep),
                             CleaningPolicy())
            assert decision.accepted, decision.reasons
    with open(tmp_path / "scores.csv", encoding="utf-8") as fh:
        sheet = read_sheet(fh)
    assert sheet == {t.designer_id: t.true_score for t in truths}
    manifest, loaded = load_ground_truth(tmp_path / "ground_truth.json")
    assert loaded == truths
    assert manifest["master_seed"] == 0


def test_corpus_deterministic_and_worker_invariant(tmp_path):
    cfg = GenConfig.small(n_designers=3, **TINY)
    gen_corpus(cfg, 11, tmp_path / "a")
    gen_corpus(cfg, 11, tmp_path / "b")
    gen_corpus(cfg, 11, tmp_path / "c", workers=2)
    a = corpus_files(tmp_path / "a")
    assert a == corpus_files(tmp_path / "b") == corpus_files(tmp_path / "c")


def test_single_designer_corpus(tmp_path):
    truths = gen_corpus(GenConfig.small(n_designers=1, **TINY), 0, tmp_path)
    assert len(truths) == 1
    manifest = json.loads((tmp_path / "ground_truth.json").read_text())
    assert len(manifest["designers"]) == 1


def test_prefix_of_corpus_is_stable(tmp_path):
    # designer i does not depend on how many designers are generated
    gen_corpus(GenConfig.small(n_designers=1, **TINY), 5, tmp_path / "one")
    gen_corpus(GenConfig.small(n_designers=3, **TINY), 5, tmp_path / "three")
    one, three = corpus_files(tmp_path / "one"), corpus_files(tmp_path / "three")
    assert all(three[k] == v for k, v in one.items() if k.startswith("D001/"))
