"""Cleaning of paired journal/tracker files and their merge into sessions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Sequence

import numpy as np

from .ingest import JournalKind, JournalRecord, Method, ParseReport, TrackerKind, TrackerRecord

SESSION_HEADER = ("ticks", "source", "category", "method", "count", "undo")


class Source(IntEnum):
    JOURNAL = 0
    TRACKER = 1


class Category(IntEnum):
    COMMAND = 0
    PUSH_BUTTON = 1
    TRANSACTION_SUCCESS = 2
    OTHER_TRANSACTION = 3
    ELEMENTS_ADDED = 4
    ELEMENTS_DELETED = 5
    ELEMENTS_MODIFIED = 6
    KEY_PRESS = 7
    OTHER_JRN = 8


CATEGORY_NAMES = {
    Category.COMMAND: "Command",
    Category.PUSH_BUTTON: "PushButton",
    Category.TRANSACTION_SUCCESS: "TransactionSuccess",
    Category.OTHER_TRANSACTION: "OtherTransaction",
    Category.ELEMENTS_ADDED: "ElementsAdded",
    Category.ELEMENTS_DELETED: "ElementsDeleted",
    Category.ELEMENTS_MODIFIED: "ElementsModified",
    Category.KEY_PRESS: "KeyPress",
    Category.OTHER_JRN: "OtherJrn",
}
_CATEGORY_BY_NAME = {v: k for k, v in CATEGORY_NAMES.items()}
SOURCE_NAMES = {Source.JOURNAL: "Journal", Source.TRACKER: "Tracker"}
_SOURCE_BY_NAME = {v: k for k, v in SOURCE_NAMES.items()}
TRACKER_CATEGORIES = frozenset({Category.ELEMENTS_ADDED, Category.ELEMENTS_DELETED,
                                Category.ELEMENTS_MODIFIED, Category.KEY_PRESS})

METHOD_CODES = {Method.RIBBON: 0, Method.ACCEL_KEY: 1, Method.INTERNAL: 2, Method.NONE: 3}
METHODS_BY_CODE = {v: k for k, v in METHOD_CODES.items()}

_TRACKER_CATEGORY = {
    TrackerKind.ELEMENTS_ADDED: Category.ELEMENTS_ADDED,
    TrackerKind.ELEMENTS_DELETED: Category.ELEMENTS_DELETED,
    TrackerKind.ELEMENTS_MODIFIED: Category.ELEMENTS_MODIFIED,
    TrackerKind.KEY_PRESS: Category.KEY_PRESS,
}
TRANSACTION_SUCCESS = "Transaction Successful"


class EmptySessionError(ValueError):
    pass


class NonMonotoneError(ValueError):
    pass


class SessionsNotChronologicalError(ValueError):
    pass


class SessionOverlapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SessionEvent:
    tick: int
    source: Source
    category: Category
    method: Method = Method.NONE
    count: int = 1
    undo: bool = False


def is_undo(details: Sequence[str]) -> bool:
    """Commands whose first detail mentions cancel/undo count as undo commands."""
    if not details:
        return False
    first = details[0].lower()
    return "cancel" in first or "undo" in first


def journal_event(rec: JournalRecord) -> SessionEvent:
    if rec.kind is JournalKind.COMMAND:
        return SessionEvent(rec.tick, Source.JOURNAL, Category.COMMAND, rec.method, 1,
                            is_undo(rec.details))
    if rec.kind is JournalKind.PUSH_BUTTON:
        cat = Category.PUSH_BUTTON
    elif rec.kind is JournalKind.TRANSACTION:
        ok = rec.details and rec.details[0] == TRANSACTION_SUCCESS
        cat = Category.TRANSACTION_SUCCESS if ok else Category.OTHER_TRANSACTION
    else:
        cat = Category.OTHER_JRN
    return SessionEvent(rec.tick, Source.JOURNAL, cat)


def tracker_event(rec: TrackerRecord) -> SessionEvent:
    return SessionEvent(rec.tick, Source.TRACKER, _TRACKER_CATEGORY[rec.kind],
                        Method.NONE, rec.count)


class EventArray:
    """Column store of session events; one numpy array per field."""

    __slots__ = ("ticks", "source", "category", "method", "count", "undo")

    def __init__(self, ticks, source, category, method, count, undo):
        self.ticks = np.asarray(ticks, dtype=np.int64)
        self.source = np.asarray(source, dtype=np.int8)
        self.category = np.asarray(category, dtype=np.int8)
        self.method = np.asarray(method, dtype=np.int8)
        self.count = np.asarray(count, dtype=np.int64)
        self.undo = np.asarray(undo, dtype=bool)
        n = len(self.ticks)
        if any(len(getattr(self, f)) != n for f in self.__slots__):
            raise ValueError("event columns must have equal length")

    @classmethod
    def empty(cls) -> "EventArray":
        return cls([], [], [], [], [], [])

    @classmethod
    def from_events(cls, events: Iterable[SessionEvent]) -> "EventArray":
        events = list(events)
        return cls([e.tick for e in events], [e.source for e in events],
                   [e.category for e in events], [METHOD_CODES[e.method] for e in events],
                   [e.count for e in events], [e.undo for e in events])

    @classmethod
    def concat(cls, parts: Sequence["EventArray"]) -> "EventArray":
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.__slots__))

    def __len__(self) -> int:
        return len(self.ticks)

    def take(self, index) -> "EventArray":
        return EventArray(*(getattr(self, f)[index] for f in self.__slots__))

    def __getitem__(self, index):
        if isinstance(index, (int, np.integer)):
            return SessionEvent(int(self.ticks[index]), Source(int(self.source[index])),
                                Category(int(self.category[index])),
                                METHODS_BY_CODE[int(self.method[index])],
                                int(self.count[index]), bool(self.undo[index]))
        return self.take(index)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventArray):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in self.__slots__)

    def __repr__(self) -> str:
        return f"EventArray(n={len(self)})"


@dataclass
class Session:
    session_id: str
    designer_id: str
    events: EventArray

    @property
    def first_tick(self) -> int:
        return int(self.events.ticks[0])

    @property
    def last_tick(self) -> int:
        return int(self.events.ticks[-1])


@dataclass
class DesignerSequence:
    """All sessions of one designer laid end to end."""

    designer_id: str
    events: EventArray
    boundaries: tuple[int, ...] = ()
    session_ids: tuple[str, ...] = ()


# --------------------------------------------------------------------------
# cleaning


class RejectReason(str, Enum):
    BELOW_SIZE_THRESHOLD = "BelowSizeThreshold"
    BELOW_ROW_THRESHOLD = "BelowRowThreshold"
    TRACKER_COVERAGE_DEFICIT = "TrackerCoverageDeficit"


@dataclass(frozen=True)
class CleaningPolicy:
    min_journal_bytes: int = 102_400
    min_rows: int = 0
    max_tracker_coverage_deficit: float = 0.5

    def __post_init__(self):
        if self.min_journal_bytes < 0 or self.min_rows < 0:
            raise ValueError("cleaning thresholds must be >= 0")
        if not 0 <= self.max_tracker_coverage_deficit <= 1:
            raise ValueError("max_tracker_coverage_deficit must lie in [0, 1]")


@dataclass
class ParsedFile:
    path: str
    n_bytes: int
    records: list
    report: ParseReport = field(default_factory=ParseReport)


@dataclass(frozen=True)
class CleaningDecision:
    accepted: bool
    reasons: tuple[RejectReason, ...] = ()
    journal_span: int = 0
    tracker_span: int = 0


def _span(records) -> int:
    return records[-1].tick - records[0].tick if records else 0


def clean(journal: ParsedFile, tracker: ParsedFile,
          policy: CleaningPolicy = CleaningPolicy()) -> CleaningDecision:
    """Accept or reject one journal/tracker pair. Never raises on content."""
    reasons = []
    if journal.n_bytes < policy.min_journal_bytes:
        reasons.append(RejectReason.BELOW_SIZE_THRESHOLD)
    if len(journal.records) + len(tracker.records) < policy.min_rows:
        reasons.append(RejectReason.BELOW_ROW_THRESHOLD)
    j_span, t_span = _span(journal.records), _span(tracker.records)
    if t_span < (1.0 - policy.max_tracker_coverage_deficit) * j_span:
        reasons.append(RejectReason.TRACKER_COVERAGE_DEFICIT)
    return CleaningDecision(not reasons, tuple(reasons), j_span, t_span)


# --------------------------------------------------------------------------
# integration


def _check_monotone(ticks: np.ndarray, what: str) -> None:
    bad = np.flatnonzero(np.diff(ticks) < 0)
    if len(bad):
        i = int(bad[0]) + 1
        raise NonMonotoneError(
            f"{what} record {i} has tick {int(ticks[i])} < previous {int(ticks[i - 1])}")


def integrate(journal: Sequence[JournalRecord], tracker: Sequence[TrackerRecord],
              session_id: str = "", designer_id: str = "") -> Session:
    """Stable merge of both sources by tick; journal events win ties."""
    if not journal and not tracker:
        raise EmptySessionError(f"session {session_id!r} has no records")
    j = EventArray.from_events(journal_event(r) for r in journal)
    t = EventArray.from_events(tracker_event(r) for r in tracker)
    _check_monotone(j.ticks, "journal")
    _check_monotone(t.ticks, "tracker")
    both = EventArray.concat([j, t])
    # lexsort is stable; last key is primary
    order = np.lexsort((both.source, both.ticks))
    return Session(session_id, designer_id, both.take(order))


def concat_sessions(sessions: Sequence[Session]) -> DesignerSequence:
    """Concatenate one designer's sessions, keeping boundary offsets."""
    if not sessions:
        raise EmptySessionError("no sessions to concatenate")
    designers = {s.designer_id for s in sessions}
    if len(designers) != 1:
        raise ValueError(f"sessions belong to several designers: {sorted(designers)}")
    for prev, cur in zip(sessions, sessions[1:]):
        if cur.first_tick < prev.first_tick:
            raise SessionsNotChronologicalError(
                f"session {cur.session_id!r} starts before {prev.session_id!r}")
        if cur.first_tick < prev.last_tick:
            warnings.warn(f"session {cur.session_id!r} overlaps {prev.session_id!r}",
                          SessionOverlapWarning, stacklevel=2)
    boundaries = tuple(np.cumsum([len(s.events) for s in sessions[:-1]]).tolist())
    return DesignerSequence(sessions[0].designer_id,
                            EventArray.concat([s.events for s in sessions]),
                            boundaries, tuple(s.session_id for s in sessions))


# --------------------------------------------------------------------------
# integrated session files


def write_session(events: EventArray, out) -> None:
    out.write(",".join(SESSION_HEADER) + "\n")
    cats = [CATEGORY_NAMES[Category(c)] for c in range(len(Category))]
    srcs = [SOURCE_NAMES[Source(s)] for s in range(len(Source))]
    meths = [METHODS_BY_CODE[m].value for m in range(len(METHOD_CODES))]
    lines = [
        f"{t},{srcs[s]},{cats[c]},{meths[m]},{n},{int(u)}\n"
        for t, s, c, m, n, u in zip(events.ticks.tolist(), events.source.tolist(),
                                    events.category.tolist(), events.method.tolist(),
                                    events.count.tolist(), events.undo.tolist())
    ]
    out.writelines(lines)


def read_session(stream) -> EventArray:
    """Read an integrated session file; the trailing ``undo`` column is optional."""
    lines = iter(stream)
    header = tuple(next(lines, "").strip().split(","))
    if header not in (SESSION_HEADER, SESSION_HEADER[:5]):
        raise ValueError(f"not an integrated session file, header was {header!r}")
    method_by_name = {m.value: c for m, c in METHOD_CODES.items()}
    cols = ([], [], [], [], [], [])
    for lineno, line in enumerate(lines, start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields")
        try:
            src = _SOURCE_BY_NAME[parts[1]]
            cat = _CATEGORY_BY_NAME[parts[2]]
            values = (int(parts[0]), src, cat, method_by_name[parts[3]], int(parts[4]),
                      parts[5] == "1" if len(parts) > 5 else False)
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: bad field {exc}") from None
        if (cat in TRACKER_CATEGORIES) != (src is Source.TRACKER):
            raise ValueError(f"line {lineno}: category {parts[2]} inconsistent with {parts[1]}")
        for col, v in zip(cols, values):
            col.append(v)
    return EventArray(*cols)
