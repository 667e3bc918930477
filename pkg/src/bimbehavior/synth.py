"""Synthetic designer corpora with planted behaviour-to-quality links.

Each designer has three traits in [0, 1]. Skill shifts command invocation
from the ribbon and dialog buttons to keyboard shortcuts, low intent
stability produces more deletions and undos, and low engagement produces
more and longer idle pauses. The quality score is a fixed linear function of
the same traits plus Gaussian noise, so a model has something real to find.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .ingest import (
    JournalKind, JournalRecord, Method, TrackerKind, TrackerRecord, format_journal_time,
    format_journal_record, format_tracker, to_ticks,
)
from .quality import TOTAL_RANGE, assessment_for_total, score, write_assessments, write_sheet
from .sessionize import METHOD_CODES, Category, EventArray, Source

GENERATOR_VERSION = 1

# frozen after a 200k-draw Monte Carlo: Beta(2,2) traits and noise sd 2 give
# mean 70.9 and sd 7.58
SCORE_INTERCEPT = 43.9
SCORE_WEIGHTS = (25.0, 18.0, 11.0)  # skill, intent stability, engagement

PRESETS = {
    "full": {"sessions_per_designer": (8, 14), "events_per_designer": (35_000, 85_000)},
    "small": {"sessions_per_designer": (2, 4), "events_per_designer": (4_000, 8_000)},
}

# event kinds in generation order
RIBBON, ACCEL, INTERNAL, PUSH, TRANS_OK, TRANS_OTHER, OTHER_JRN, ADDED, DELETED, MODIFIED, KEY = range(11)
KIND_NAMES = ("ribbon", "accelkey", "internal", "pushbutton", "transaction_ok",
              "transaction_other", "other_jrn", "added", "deleted", "modified", "keypress")
# median active gap before each kind, milliseconds
GAP_MEDIAN = np.array([3200, 900, 300, 2200, 500, 600, 700, 150, 150, 150, 350], dtype=float)
GAP_SIGMA = 0.7
MAX_ACTIVE_GAP = 50_000
MINUTE = 60_000
# system chatter after each behavioural journal line; keeps session journals
# well above the 100 KB cleaning floor at the small preset
SYSTEM_LINES_PER_EVENT = 2.0

_CATEGORY = np.array([Category.COMMAND, Category.COMMAND, Category.COMMAND, Category.PUSH_BUTTON,
                      Category.TRANSACTION_SUCCESS, Category.OTHER_TRANSACTION, Category.OTHER_JRN,
                      Category.ELEMENTS_ADDED, Category.ELEMENTS_DELETED,
                      Category.ELEMENTS_MODIFIED, Category.KEY_PRESS], dtype=np.int8)
_METHOD = np.array([METHOD_CODES[Method.RIBBON], METHOD_CODES[Method.ACCEL_KEY],
                    METHOD_CODES[Method.INTERNAL]] + [METHOD_CODES[Method.NONE]] * 8, dtype=np.int8)
JITTER = np.array([0.08, 0.08, 0.25, 0.08, 0.25, 0.25, 0.25, 0.25, 0.08, 0.25, 0.25])
_TRACKER = np.array([k >= ADDED for k in range(11)])

COMMANDS = (
    ("Create a wall", "ID_OBJECTS_WALL"), ("Place a door", "ID_OBJECTS_DOOR"),
    ("Place a window", "ID_OBJECTS_WINDOW"), ("Create a floor", "ID_OBJECTS_FLOOR"),
    ("Create a roof by footprint", "ID_OBJECTS_ROOF_FOOTPRINT"),
    ("Place a structural column", "ID_OBJECTS_STRUCTURAL_COLUMN"),
    ("Create a beam", "ID_OBJECTS_BEAM"), ("Align elements", "ID_ALIGN"),
    ("Move selected elements", "ID_EDIT_MOVE"), ("Copy selected elements", "ID_EDIT_COPY"),
    ("Trim or extend to corner", "ID_TRIM_EXTEND_CORNER"), ("Create a grid line", "ID_OBJECTS_GRID"),
    ("Create a level", "ID_OBJECTS_LEVEL"), ("Mirror by axis", "ID_EDIT_MIRROR"),
    ("Open a 3D view", "ID_VIEW_DEFAULT_3DVIEW"), ("Place a dimension", "ID_ANNOTATIONS_DIMENSION"),
    ("Zoom to fit", "ID_ZOOM_FIT"), ("Modify selection", "ID_BUTTON_SELECT"),
    ("Create a stair", "ID_OBJECTS_STAIRS"), ("Load a family", "ID_FAMILY_LOAD"),
)
UNDO_COMMANDS = (("Undo the last action", "ID_EDIT_UNDO"),
                 ("Cancel the current operation", "ID_CANCEL_EDITOR"))
INTERNAL_COMMANDS = (("Regenerate the model", "ID_REGEN"), ("Autosave the project", "ID_AUTOSAVE"),
                     ("Refresh the view", "ID_VIEW_REFRESH"))
DIALOGS = ("Modal , Revit , Dialog_Revit_DocWarnDialog", "Modal , Type Properties , Dialog_Revit_TypeProperties",
           "Modal , Load Family , Dialog_Revit_LoadFamily", "Modeless , Properties , Dialog_Revit_Properties")
BUTTONS = ("OK, IDOK", "Apply, IDAPPLY", "Close, IDCLOSE", "Yes, IDYES")
TRANSACTION_FAILED = ("Transaction Cancelled", "Transaction Rolled Back")
ELEMENT_TYPES = ("Walls", "Doors", "Windows", "Floors", "Roofs", "Structural Columns",
                 "Structural Framing", "Grids", "Levels", "Dimensions", "Stairs", "Furniture")
KEYS = ("Escape", "Delete", "Enter", "Tab", "Space", "WA", "DR", "WN", "MV", "CO", "AL", "TR")
OTHER_JRN_LINES = (("Jrn.MouseMove", "0 , {a} , {b}"), ("Jrn.Wheel", "{a}"),
                   ("Jrn.Activate", "[Project{a}.rvt]"), ("jrn.Data", "Selection , {a}"))
SYSTEM_LINES = (
    "' 0:< ::{a}:: Delta VM: Avail -{b} -> {c} MB, Used +{a} -> {d} MB",
    "' 0:< DBG_INFO: Idle processing time {b} ms: {{{c}}}",
    "' 0:< GUI Resource Usage GDI: Avail {c}, Used {b}, User: Used {a}",
    "'C {t};   0:< TaskDialog was shown with id {c}",
    "'H {t}; ",
)
HEADER_LINES = (
    "' Build: 20230105_1515(x64)",
    "' Branch: RELEASE",
    "' Release: 2023",
    "' Journal file for session of designer {designer}",
    "' [Jrn.Init] configured language: English_USA",
)


class InvalidProfileError(ValueError):
    pass


@dataclass(frozen=True)
class DesignerProfile:
    skill: float
    intent_stability: float
    engagement: float
    seed: int = 0

    def __post_init__(self):
        for name in ("skill", "intent_stability", "engagement"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidProfileError(f"{name} must lie in [0, 1], got {v}")

    @property
    def traits(self) -> np.ndarray:
        return np.array([self.skill, self.intent_stability, self.engagement])


@dataclass(frozen=True)
class GenConfig:
    n_designers: int = 68
    preset: str = "full"
    sessions_per_designer: tuple[int, int] | None = None
    events_per_designer: tuple[int, int] | None = None
    noise_sd: float = 2.0
    start_date: tuple[int, int, int] = (2023, 1, 9)

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        for name, default in PRESETS[self.preset].items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, default)
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        lo_s, hi_s = self.sessions_per_designer
        lo_e, hi_e = self.events_per_designer
        if self.n_designers < 1:
            raise ValueError("n_designers must be >= 1")
        if not 1 <= lo_s <= hi_s:
            raise ValueError(f"bad sessions range {self.sessions_per_designer}")
        if not 1 <= lo_e <= hi_e:
            raise ValueError(f"bad events range {self.events_per_designer}")
        if lo_e < hi_s:
            raise ValueError("every session needs at least one event")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")

    @classmethod
    def small(cls, **kw) -> "GenConfig":
        return cls(preset="small", **kw)


@dataclass
class GroundTruth:
    designer_id: str
    profile: DesignerProfile
    noise: float
    true_score: int
    kind_weights: dict
    undo_share: float
    pause_rate: float
    pause_mix: tuple[float, float, float]
    gap_scale: float
    session_sizes: list[int] = field(default_factory=list)

    @property
    def n_events(self) -> int:
        return sum(self.session_sizes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_events"] = self.n_events
        return d


@dataclass
class DesignerCorpus:
    truth: GroundTruth
    journals: list[str]
    trackers: list[str]
    events: EventArray  # the stream integration is expected to rebuild


def true_score(profile: DesignerProfile, noise: float = 0.0) -> int:
    raw = SCORE_INTERCEPT + float(np.dot(SCORE_WEIGHTS, profile.traits)) + noise
    return int(min(TOTAL_RANGE[1], max(TOTAL_RANGE[0], round(raw))))


def score_moments(n: int = 20_000, noise_sd: float = 2.0, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo mean and sd of the score under the Beta(2,2) trait prior."""
    rng = np.random.default_rng(seed)
    traits = rng.beta(2, 2, size=(n, 3))
    raw = SCORE_INTERCEPT + traits @ np.array(SCORE_WEIGHTS) + rng.normal(0, noise_sd, n)
    s = np.clip(np.round(raw), *TOTAL_RANGE)
    return float(s.mean()), float(s.std())


def kind_weights(profile: DesignerProfile) -> np.ndarray:
    """Unnormalised per-event kind weights before any jitter.

    The links are monotone but not linear: shortcut use switches on around
    mid skill, and deletions and dialog clicks pile up at the low ends.
    """
    s, b, g = profile.traits
    command = 0.22
    accel = 0.05 + 0.80 / (1.0 + math.exp(-9.0 * (s - 0.5)))
    internal = 0.08
    w = np.empty(11)
    w[RIBBON] = command * (1 - accel - internal)
    w[ACCEL] = command * accel
    w[INTERNAL] = command * internal
    w[PUSH] = 0.04 + 0.10 * (1 - s) ** 2
    w[TRANS_OK] = 0.11
    w[TRANS_OTHER] = 0.01
    w[OTHER_JRN] = 0.12
    w[ADDED] = 0.07 * (0.9 + 0.2 * s)
    w[DELETED] = 0.012 + 0.10 * (1 - b) ** 3
    w[MODIFIED] = 0.09 * (0.9 + 0.2 * s)
    w[KEY] = 0.10
    return w


def _draw_truth(designer_id: str, profile: DesignerProfile, config: GenConfig,
                rng: np.random.Generator) -> GroundTruth:
    noise = float(rng.normal(0.0, config.noise_sd)) if config.noise_sd > 0 else 0.0
    s, b, g = profile.traits
    # personal habits: small jitter on the planted kinds, more on the rest
    w = kind_weights(profile) * np.exp(rng.normal(0.0, 1.0, 11) * JITTER)
    w /= w.sum()
    n_sessions = int(rng.integers(config.sessions_per_designer[0], config.sessions_per_designer[1] + 1))
    n_events = int(rng.integers(config.events_per_designer[0], config.events_per_designer[1] + 1))
    n_sessions = min(n_sessions, n_events)
    # sessions get a guaranteed share so none is tiny, the rest is spread randomly
    floor = int(0.6 * n_events / n_sessions)
    sizes = floor + rng.multinomial(n_events - floor * n_sessions, np.full(n_sessions, 1 / n_sessions))
    over_5 = 0.15 + 0.35 * (1 - g)
    mix = (0.55 * (1 - over_5), 0.45 * (1 - over_5), over_5)
    return GroundTruth(
        designer_id=designer_id, profile=profile, noise=noise,
        true_score=true_score(profile, noise),
        kind_weights={KIND_NAMES[k]: float(w[k]) for k in range(11)},
        undo_share=float(0.02 + 0.12 * (1 - b) ** 2),
        pause_rate=float(0.02 * (1 - g) ** 2),
        pause_mix=tuple(float(v) for v in mix),
        gap_scale=float((1.3 - 0.5 * s) * math.exp(rng.normal(0.0, 0.05))),
        session_sizes=[int(v) for v in sizes],
    )


def _session_gaps(kinds: np.ndarray, truth: GroundTruth, rng: np.random.Generator) -> np.ndarray:
    n = len(kinds)
    active = GAP_MEDIAN[kinds] * truth.gap_scale * np.exp(rng.normal(0.0, GAP_SIGMA, n))
    gaps = np.clip(np.rint(active), 1, MAX_ACTIVE_GAP).astype(np.int64)
    paused = rng.random(n) < truth.pause_rate
    k = int(paused.sum())
    if k:
        band = rng.choice(3, size=k, p=truth.pause_mix)
        lo = np.array([MINUTE, 2 * MINUTE, 5 * MINUTE])[band]
        width = np.array([MINUTE, 3 * MINUTE, 0])[band]
        length = lo + rng.random(k) * width
        long = band == 2
        length[long] += np.minimum(rng.exponential(15 * MINUTE, long.sum()), 115 * MINUTE)
        gaps[paused] = np.floor(length).astype(np.int64)
    return gaps


def _journal_line(kind: int, tick: int, undo: bool, rng: np.random.Generator) -> str:
    if kind in (RIBBON, ACCEL, INTERNAL):
        pool = INTERNAL_COMMANDS if kind == INTERNAL else (UNDO_COMMANDS if undo else COMMANDS)
        desc, ident = pool[int(rng.integers(len(pool)))]
        method = (Method.RIBBON, Method.ACCEL_KEY, Method.INTERNAL)[kind]
        rec = JournalRecord(tick, JournalKind.COMMAND, method, (f"{desc} , {ident}",))
    elif kind == PUSH:
        rec = JournalRecord(tick, JournalKind.PUSH_BUTTON, Method.NONE,
                            (DIALOGS[int(rng.integers(len(DIALOGS)))],
                             BUTTONS[int(rng.integers(len(BUTTONS)))]))
    elif kind == TRANS_OK:
        rec = JournalRecord(tick, JournalKind.TRANSACTION, Method.NONE, ("Transaction Successful",))
    elif kind == TRANS_OTHER:
        rec = JournalRecord(tick, JournalKind.TRANSACTION, Method.NONE,
                            (TRANSACTION_FAILED[int(rng.integers(2))],))
    else:
        name, detail = OTHER_JRN_LINES[int(rng.integers(len(OTHER_JRN_LINES)))]
        a, b = rng.integers(1, 2000, size=2)
        rec = JournalRecord(tick, JournalKind.OTHER_JRN, Method.NONE,
                            (detail.format(a=a, b=b),), name)
    return format_journal_record(rec)


def _system_line(tick: int, rng: np.random.Generator) -> str:
    a, b, c, d = rng.integers(1, 9999, size=4)
    template = SYSTEM_LINES[int(rng.integers(len(SYSTEM_LINES)))]
    return template.format(a=a, b=b, c=c * 13421, d=d, t=format_journal_time(tick))


def _tracker_record(kind: int, tick: int, rng: np.random.Generator, unstable: float) -> TrackerRecord:
    if kind == KEY:
        return TrackerRecord(tick, TrackerKind.KEY_PRESS, 1, KEYS[int(rng.integers(len(KEYS)))])
    payload = ELEMENT_TYPES[int(rng.integers(len(ELEMENT_TYPES)))]
    if kind == ADDED:
        return TrackerRecord(tick, TrackerKind.ELEMENTS_ADDED, int(rng.geometric(0.55)), payload)
    if kind == DELETED:
        # unstable designers tear out larger batches
        return TrackerRecord(tick, TrackerKind.ELEMENTS_DELETED,
                             int(rng.geometric(0.6 - 0.25 * unstable)), payload)
    return TrackerRecord(tick, TrackerKind.ELEMENTS_MODIFIED, int(rng.geometric(0.7)), payload)


def gen_designer(profile: DesignerProfile, config: GenConfig,
                 designer_id: str = "D001") -> DesignerCorpus:
    """Generate every session of one designer. Pure in (profile, config, id)."""
    rng = np.random.default_rng(profile.seed)
    truth = _draw_truth(designer_id, profile, config, rng)
    base_w = np.array([truth.kind_weights[k] for k in KIND_NAMES])
    g = profile.engagement
    tick = to_ticks(*config.start_date, hour=8) + int(rng.integers(0, 4 * 60)) * MINUTE
    journals, trackers, parts = [], [], []
    for size in truth.session_sizes:
        w = base_w * np.exp(rng.normal(0.0, 0.12, 11))
        kinds = rng.choice(11, size=size, p=w / w.sum())
        gaps = _session_gaps(kinds, truth, rng)
        gaps[0] = 0
        ticks = tick + np.cumsum(gaps)
        undo = (kinds <= ACCEL) & (rng.random(size) < truth.undo_share)

        lines = [line.format(designer=designer_id) for line in HEADER_LINES]
        records = []
        counts = np.ones(size, dtype=np.int64)
        for i in range(size):
            k, t = int(kinds[i]), int(ticks[i])
            if _TRACKER[k]:
                rec = _tracker_record(k, t, rng, 1.0 - profile.intent_stability)
                counts[i] = rec.count
                records.append(rec)
            else:
                lines.append(_journal_line(k, t, bool(undo[i]), rng))
                for _ in range(int(rng.poisson(SYSTEM_LINES_PER_EVENT))):
                    lines.append(_system_line(t, rng))
        journals.append("\n".join(lines) + "\n")
        trackers.append(format_tracker(records))
        parts.append(EventArray(ticks, np.where(_TRACKER[kinds], Source.TRACKER, Source.JOURNAL),
                                _CATEGORY[kinds], _METHOD[kinds], counts, undo))
        # next session starts after a break that grows as engagement falls
        tick = int(ticks[-1]) + 30 * MINUTE + int(rng.exponential((2 + 12 * (1 - g)) * 60 * MINUTE))
    return DesignerCorpus(truth, journals, trackers, EventArray.concat(parts))


def designer_id(index: int) -> str:
    return f"D{index + 1:03d}"


def draw_profile(master_seed: int, index: int) -> DesignerProfile:
    """Traits and event seed of designer ``index``, independent of all others."""
    trait_rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index, 0)))
    s, b, g = trait_rng.beta(2.0, 2.0, size=3)
    seed = int(np.random.SeedSequence(master_seed, spawn_key=(index, 1)).generate_state(1, np.uint64)[0])
    return DesignerProfile(float(s), float(b), float(g), seed)


def _write_designer(args) -> dict:
    root, index, config, master_seed = args
    did = designer_id(index)
    corpus = gen_designer(draw_profile(master_seed, index), config, did)
    folder = Path(root) / did
    folder.mkdir(parents=True, exist_ok=True)
    for k, (journal, tracker) in enumerate(zip(corpus.journals, corpus.trackers), start=1):
        (folder / f"session_{k}.journal.txt").write_text(journal, encoding="utf-8", newline="\n")
        (folder / f"session_{k}.tracker.csv").write_text(tracker, encoding="utf-8", newline="\n")
    return corpus.truth.to_dict()


def gen_corpus(config: GenConfig, master_seed: int, out_dir, workers: int = 1) -> list[GroundTruth]:
    """Write a corpus directory, its score sheet and the ground-truth manifest.

    Layout: ``<designer>/session_<k>.journal.txt`` and ``.tracker.csv`` per
    designer, plus ``scores.csv``, ``assessments.csv`` and ``ground_truth.json``.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    if not os.access(root, os.W_OK):
        raise PermissionError(f"cannot write to {root}")
    jobs = [(str(root), i, config, master_seed) for i in range(config.n_designers)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            truths = list(pool.map(_write_designer, jobs))
    else:
        truths = [_write_designer(job) for job in jobs]

    assessments = [(t["designer_id"], assessment_for_total(t["true_score"])) for t in truths]
    with open(root / "assessments.csv", "w", encoding="utf-8", newline="") as fh:
        write_assessments(assessments, fh)
    with open(root / "scores.csv", "w", encoding="utf-8", newline="") as fh:
        write_sheet([(d, score(a)) for d, a in assessments], fh)
    manifest = {
        "generator_version": GENERATOR_VERSION,
        "master_seed": master_seed,
        "config": asdict(config),
        "score_model": {"intercept": SCORE_INTERCEPT, "skill": SCORE_WEIGHTS[0],
                        "intent_stability": SCORE_WEIGHTS[1], "engagement": SCORE_WEIGHTS[2],
                        "noise_sd": config.noise_sd, "trait_prior": "Beta(2,2)"},
        "gap_median_ms": dict(zip(KIND_NAMES, GAP_MEDIAN.tolist())),
        "designers": truths,
    }
    with open(root / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return [_truth_from_dict(t) for t in truths]


def _truth_from_dict(d: dict) -> GroundTruth:
    d = dict(d)
    d.pop("n_events", None)
    d["profile"] = DesignerProfile(**d["profile"])
    d["pause_mix"] = tuple(d["pause_mix"])
    return GroundTruth(**d)


def load_ground_truth(path) -> tuple[dict, list[GroundTruth]]:
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    return manifest, [_truth_from_dict(t) for t in manifest["designers"]]
