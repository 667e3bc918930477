"""Density features of one window of session events.

Every record is charged the time since the previous record in the window
(the first record costs nothing). A data density is a count over the window
length ``L``; a time density is a charged-time sum over the window span ``T``.
Gaps of one minute or more are pauses, banded at 1-2, 2-5 and >5 minutes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .sessionize import METHOD_CODES, Category, EventArray
from .ingest import Method

STEMS = ("transsuccess", "add", "add_times", "delete", "delete_times", "modify_times",
         "command", "undo", "ribbon", "accelkey", "pushbutton",
         "idle1_2", "idle2_5", "idle_gt5")
FEATURE_NAMES = tuple(f"{s}_d" for s in STEMS) + tuple(f"{s}_t" for s in STEMS) + ("effect_t",)
N_FEATURES = len(FEATURE_NAMES)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}
MATRIX_PREFIX = ("designer_id", "window_start", "label")

MINUTE = 60_000
N_EVENT_STEMS = 11


class EmptyWindowError(ValueError):
    pass


class PauseBand(IntEnum):
    NOT_A_PAUSE = 0
    BAND_1_2 = 1
    BAND_2_5 = 2
    BAND_OVER_5 = 3


def classify_pause(gap: int) -> PauseBand:
    if gap < 0:
        raise ValueError(f"gap must be >= 0, got {gap}")
    if gap < MINUTE:
        return PauseBand.NOT_A_PAUSE
    if gap < 2 * MINUTE:
        return PauseBand.BAND_1_2
    if gap < 5 * MINUTE:
        return PauseBand.BAND_2_5
    return PauseBand.BAND_OVER_5


def record_time(ticks: Sequence[int], i: int) -> int:
    if not 0 <= i < len(ticks):
        raise IndexError(i)
    return 0 if i == 0 else int(ticks[i]) - int(ticks[i - 1])


def _record_times(ticks: np.ndarray) -> np.ndarray:
    rt = np.zeros(len(ticks), dtype=np.int64)
    # overlapping sessions can step backwards; such steps cost nothing
    rt[1:] = np.maximum(np.diff(ticks), 0)
    return rt


def _bands(rt: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.array([MINUTE, 2 * MINUTE, 5 * MINUTE]), rt, side="right")


def _indicators(events: EventArray) -> tuple[np.ndarray, np.ndarray]:
    """Per-event (count weight, presence) columns for the 11 event stems."""
    cat, meth = events.category, events.method
    is_cmd = cat == Category.COMMAND
    added = cat == Category.ELEMENTS_ADDED
    deleted = cat == Category.ELEMENTS_DELETED
    presence = np.stack([
        cat == Category.TRANSACTION_SUCCESS,
        added, added,
        deleted, deleted,
        cat == Category.ELEMENTS_MODIFIED,
        is_cmd,
        is_cmd & events.undo,
        is_cmd & (meth == METHOD_CODES[Method.RIBBON]),
        is_cmd & (meth == METHOD_CODES[Method.ACCEL_KEY]),
        cat == Category.PUSH_BUTTON,
    ], axis=1).astype(np.int64)
    weight = presence.copy()
    weight[:, 1] *= events.count
    weight[:, 3] *= events.count
    return weight, presence


@dataclass(frozen=True)
class WindowStats:
    length: int
    span: int
    counts: np.ndarray        # 11 event stems; add/delete hold component sums
    time_sums: np.ndarray     # 11 event stems
    pause_counts: np.ndarray  # bands 1-2, 2-5, >5
    pause_sums: np.ndarray
    internal_commands: int

    def features(self) -> np.ndarray:
        out = np.zeros(N_FEATURES)
        out[:N_EVENT_STEMS] = self.counts / self.length
        out[N_EVENT_STEMS:14] = self.pause_counts / self.length
        if self.span > 0:
            out[14:14 + N_EVENT_STEMS] = self.time_sums / self.span
            out[14 + N_EVENT_STEMS:28] = self.pause_sums / self.span
            out[28] = (self.span - self.pause_sums[2]) / self.span
        else:
            out[28] = 1.0
        return out


def window_stats(events: EventArray) -> WindowStats:
    if len(events) == 0:
        raise EmptyWindowError("cannot extract features from an empty window")
    rt = _record_times(events.ticks)
    weight, presence = _indicators(events)
    bands = _bands(rt)
    pause_counts = np.array([(bands == b).sum() for b in (1, 2, 3)], dtype=np.int64)
    pause_sums = np.array([rt[bands == b].sum() for b in (1, 2, 3)], dtype=np.int64)
    internal = int(((events.category == Category.COMMAND)
                    & (events.method == METHOD_CODES[Method.INTERNAL])).sum())
    return WindowStats(len(events), int(rt.sum()), weight.sum(axis=0), rt @ presence,
                       pause_counts, pause_sums, internal)


def extract_features(events: EventArray) -> np.ndarray:
    """The 29 density features of one window, in ``FEATURE_NAMES`` order."""
    return window_stats(events).features()


def feature_matrix(events: EventArray, windows: Iterable[tuple[int, int]]) -> np.ndarray:
    """Features for many windows of one sequence via int64 prefix sums.

    Sums are exact integers, so each row equals ``extract_features`` on the
    corresponding slice.
    """
    bounds = np.array([(w[0], w[1]) for w in windows], dtype=np.int64).reshape(-1, 2)
    if len(bounds) == 0:
        return np.zeros((0, N_FEATURES))
    starts, ends = bounds[:, 0], bounds[:, 1]
    if np.any(ends <= starts) or starts.min() < 0 or ends.max() > len(events):
        raise EmptyWindowError("windows must be non-empty and inside the sequence")
    rt = _record_times(events.ticks)
    weight, presence = _indicators(events)
    bands = _bands(rt)
    band_ind = np.stack([bands == b for b in (1, 2, 3)], axis=1).astype(np.int64)

    def prefix(a: np.ndarray) -> np.ndarray:
        return np.concatenate([np.zeros((1,) + a.shape[1:], np.int64), np.cumsum(a, axis=0)])

    # charged time of each window's first record is dropped by starting at start+1
    cw, ct = prefix(weight), prefix(presence * rt[:, None])
    cb, cbt, crt = prefix(band_ind), prefix(band_ind * rt[:, None]), prefix(rt)
    lo = starts + 1
    L = (ends - starts).astype(float)
    T = crt[ends] - crt[lo]
    out = np.zeros((len(bounds), N_FEATURES))
    out[:, :N_EVENT_STEMS] = (cw[ends] - cw[starts]) / L[:, None]
    out[:, N_EVENT_STEMS:14] = (cb[ends] - cb[lo]) / L[:, None]
    pos = T > 0
    Tp = T[pos].astype(float)[:, None]
    out[pos, 14:14 + N_EVENT_STEMS] = (ct[ends] - ct[lo])[pos] / Tp
    band_sums = (cbt[ends] - cbt[lo])[pos]
    out[pos, 14 + N_EVENT_STEMS:28] = band_sums / Tp
    out[pos, 28] = (T[pos] - band_sums[:, 2]) / Tp[:, 0]
    out[~pos, 28] = 1.0
    return out


# --------------------------------------------------------------------------
# feature matrix files


def write_matrix(rows: Iterable[tuple[str, int, float, np.ndarray]], out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MATRIX_PREFIX + FEATURE_NAMES)
    for designer, start, label, x in rows:
        writer.writerow((designer, int(start), repr(float(label)),
                         *(repr(float(v)) for v in x)))


def read_matrix(stream) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray]:
    """Return (designer ids, window starts, labels, X)."""
    reader = csv.reader(stream)
    header = tuple(next(reader, ()))
    if header != MATRIX_PREFIX + FEATURE_NAMES:
        raise ValueError("not a feature matrix: header mismatch")
    ids, starts, labels, X = [], [], [], []
    for row in reader:
        if not row:
            continue
        ids.append(row[0])
        starts.append(int(row[1]))
        labels.append(float(row[2]))
        X.append([float(v) for v in row[3:]])
    return (ids, np.array(starts, dtype=np.int64), np.array(labels),
            np.array(X).reshape(-1, N_FEATURES))
