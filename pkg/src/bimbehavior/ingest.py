"""Parsers for the two raw behaviour sources: journal logs and tracker records.

Both parsers put every record on a common integer timeline measured in
milliseconds since 0001-01-01T00:00:00 (proleptic Gregorian, no timezone).
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Iterable

MS_PER_DAY = 86_400_000
MAX_SAMPLES = 20

MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_MONTH_INDEX = {name: i + 1 for i, name in enumerate(MONTHS)}
_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)

TRACKER_HEADER = ("ticks", "timestamp", "record_type", "count", "payload")


class JournalKind(str, Enum):
    COMMAND = "Command"
    PUSH_BUTTON = "PushButton"
    TRANSACTION = "Transaction"
    OTHER_JRN = "OtherJrn"


class Method(str, Enum):
    RIBBON = "Ribbon"
    ACCEL_KEY = "AccelKey"
    INTERNAL = "Internal"
    NONE = "None"


class TrackerKind(str, Enum):
    ELEMENTS_ADDED = "ElementsAdded"
    ELEMENTS_DELETED = "ElementsDeleted"
    ELEMENTS_MODIFIED = "ElementsModified"
    KEY_PRESS = "KeyPress"


class TrackerFormatError(ValueError):
    """The stream is not a tracker file at all (wrong or missing header)."""


@dataclass(frozen=True)
class JournalRecord:
    tick: int
    kind: JournalKind
    method: Method = Method.NONE
    details: tuple[str, ...] = ()
    # original data-type name, kept so OtherJrn lines can be re-serialized
    type_name: str = ""


@dataclass(frozen=True)
class TrackerRecord:
    tick: int
    kind: TrackerKind
    count: int = 1
    payload: str = ""


@dataclass
class ParseReport:
    lines_total: int = 0
    lines_kept: int = 0
    lines_skipped_irrelevant: int = 0
    lines_malformed: int = 0
    malformed_samples: list[tuple[int, str]] = field(default_factory=list)
    notes: list[tuple[int, str]] = field(default_factory=list)

    @property
    def relevance(self) -> float:
        """Fraction of input lines that carried behavioural records."""
        return self.lines_kept / self.lines_total if self.lines_total else 0.0

    def _malformed(self, lineno: int, reason: str) -> None:
        self.lines_malformed += 1
        if len(self.malformed_samples) < MAX_SAMPLES:
            self.malformed_samples.append((lineno, reason))

    def _note(self, lineno: int, text: str) -> None:
        if len(self.notes) < MAX_SAMPLES:
            self.notes.append((lineno, text))

    def to_dict(self) -> dict:
        return {
            "lines_total": self.lines_total,
            "lines_kept": self.lines_kept,
            "lines_skipped_irrelevant": self.lines_skipped_irrelevant,
            "lines_malformed": self.lines_malformed,
            "relevance": self.relevance,
            "malformed_samples": [list(s) for s in self.malformed_samples],
            "notes": [list(n) for n in self.notes],
        }


# --------------------------------------------------------------------------
# tick time


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def to_ticks(year: int, month: int, day: int, hour: int = 0, minute: int = 0,
             second: int = 0, millisecond: int = 0) -> int:
    """Milliseconds elapsed since 0001-01-01T00:00:00.000.

    Raises ValueError naming the first out-of-range field.
    """
    if year < 1 or year > 9999:
        raise ValueError(f"year out of range: {year}")
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {month}")
    dim = 29 if month == 2 and _is_leap(year) else _DAYS_IN_MONTH[month - 1]
    if not 1 <= day <= dim:
        raise ValueError(f"day out of range: {day} (month {month} of {year} has {dim} days)")
    if not 0 <= hour < 24:
        raise ValueError(f"hour out of range: {hour}")
    if not 0 <= minute < 60:
        raise ValueError(f"minute out of range: {minute}")
    if not 0 <= second < 60:
        raise ValueError(f"second out of range: {second}")
    if not 0 <= millisecond < 1000:
        raise ValueError(f"millisecond out of range: {millisecond}")
    days = date(year, month, day).toordinal() - 1
    return (days * MS_PER_DAY + ((hour * 60 + minute) * 60 + second) * 1000
            + millisecond)


def datetime_to_ticks(dt: datetime) -> int:
    """Tick value of a naive datetime; sub-millisecond digits are truncated."""
    return to_ticks(dt.year, dt.month, dt.day, dt.hour, dt.minute, dt.second,
                    dt.microsecond // 1000)


def ticks_to_datetime(ticks: int) -> datetime:
    if ticks < 0:
        raise ValueError(f"ticks must be non-negative, got {ticks}")
    return datetime(1, 1, 1) + timedelta(milliseconds=ticks)


def _split_ticks(ticks: int) -> tuple[int, int, int, int, int, int, int]:
    days, ms = divmod(ticks, MS_PER_DAY)
    d = date.fromordinal(days + 1)
    secs, milli = divmod(ms, 1000)
    mins, sec = divmod(secs, 60)
    hour, minute = divmod(mins, 60)
    return d.year, d.month, d.day, hour, minute, sec, milli


def format_journal_time(ticks: int) -> str:
    """Render ticks in the pinned journal format ``DD-Mon-YYYY HH:MM:SS.mmm``."""
    y, mo, d, h, mi, s, ms = _split_ticks(ticks)
    return f"{d:02d}-{MONTHS[mo - 1]}-{y:04d} {h:02d}:{mi:02d}:{s:02d}.{ms:03d}"


def format_iso_time(ticks: int) -> str:
    y, mo, d, h, mi, s, ms = _split_ticks(ticks)
    return f"{y:04d}-{mo:02d}-{d:02d}T{h:02d}:{mi:02d}:{s:02d}.{ms:03d}"


_JOURNAL_TIME = re.compile(
    r"'C (\d{2})-([A-Za-z]{3})-(\d{4}) (\d{2}):(\d{2}):(\d{2})\.(\d{3})")


def parse_journal_time(text: str) -> int:
    """Ticks for a journal timestamp prefix such as ``'C 25-Jan-2023 10:15:30.123``."""
    m = _JOURNAL_TIME.fullmatch(text.strip())
    if m is None:
        raise ValueError(f"timestamp not in DD-Mon-YYYY HH:MM:SS.mmm form: {text!r}")
    day, mon, year, hour, minute, second, milli = m.groups()
    if mon not in _MONTH_INDEX:
        raise ValueError(f"month out of range: {mon!r}")
    return to_ticks(int(year), _MONTH_INDEX[mon], int(day), int(hour),
                    int(minute), int(second), int(milli))


# --------------------------------------------------------------------------
# journal files

_TYPE_TOKEN = re.compile(r"[Jj]rn\.([A-Za-z][A-Za-z0-9_]*)")
_METHOD = re.compile(r' "([^"]*)"')
_DETAILS = re.compile(r'(?: , "[^"]*")*')
_DETAIL = re.compile(r' , "([^"]*)"')
_KINDS = {
    "command": JournalKind.COMMAND,
    "pushbutton": JournalKind.PUSH_BUTTON,
    "transaction": JournalKind.TRANSACTION,
}
_METHODS = {"Ribbon": Method.RIBBON, "AccelKey": Method.ACCEL_KEY,
            "Internal": Method.INTERNAL}


def _parse_journal_line(line: str, lineno: int, report: ParseReport):
    """Return a record, ``None`` for system lines, or raise ValueError."""
    sep = line.find("; ")
    if sep < 0:
        return None
    rest = line[sep + 2:]
    if not (rest.startswith("Jrn.") or rest.startswith("jrn.")):
        return None
    space = rest.find(" ")
    token, tail = (rest, "") if space < 0 else (rest[:space], rest[space:])
    m = _TYPE_TOKEN.fullmatch(token)
    if m is None:
        raise ValueError(f"unknown kind token {token!r}")
    tick = parse_journal_time(line[:sep])
    kind = _KINDS.get(m.group(1).lower(), JournalKind.OTHER_JRN)

    method = Method.NONE
    if kind is JournalKind.COMMAND:
        mm = _METHOD.match(tail)
        if mm is None:
            raise ValueError("command without method token")
        method = _METHODS.get(mm.group(1))
        if method is None:
            report._note(lineno, f"unknown command method {mm.group(1)!r} read as Internal")
            method = Method.INTERNAL
        tail = tail[mm.end():]
    if _DETAILS.fullmatch(tail) is None:
        raise ValueError("details are not a ' , \"...\"' list")
    details = tuple(_DETAIL.findall(tail))
    if kind is not JournalKind.OTHER_JRN and not details:
        raise ValueError(f"{kind.value} record without details")
    return JournalRecord(tick, kind, method, details, m.group(0))


def parse_journal(stream: Iterable[str]) -> tuple[list[JournalRecord], ParseReport]:
    """Extract behavioural ("Jrn."/"jrn.") records from journal lines.

    Non-behavioural lines are counted as irrelevant; behavioural lines that
    fail to parse are counted as malformed and skipped.
    """
    records: list[JournalRecord] = []
    report = ParseReport()
    for lineno, raw in enumerate(stream, start=1):
        report.lines_total += 1
        line = raw.rstrip("\r\n")
        try:
            rec = _parse_journal_line(line, lineno, report)
        except ValueError as exc:
            report._malformed(lineno, str(exc))
            continue
        if rec is None:
            report.lines_skipped_irrelevant += 1
        else:
            report.lines_kept += 1
            records.append(rec)
    return records, report


def format_journal_record(rec: JournalRecord) -> str:
    for text in rec.details:
        if '"' in text or "\n" in text:
            raise ValueError(f"journal detail cannot hold quotes or newlines: {text!r}")
    name = rec.type_name or f"Jrn.{rec.kind.value}"
    method = f' "{rec.method.value}"' if rec.kind is JournalKind.COMMAND else ""
    details = "".join(f' , "{d}"' for d in rec.details)
    return f"'C {format_journal_time(rec.tick)}; {name}{method}{details}"


def write_journal(records: Iterable[JournalRecord], out) -> None:
    for rec in records:
        out.write(format_journal_record(rec))
        out.write("\n")


# --------------------------------------------------------------------------
# tracker files

_TRACKER_KINDS = {k.value: k for k in TrackerKind}


def _parse_tracker_row(row: list[str]) -> TrackerRecord:
    if not row or row == [""]:
        raise ValueError("blank line")
    if len(row) != len(TRACKER_HEADER):
        raise ValueError(f"expected {len(TRACKER_HEADER)} fields, got {len(row)}")
    ticks_text, _, kind_text, count_text, payload = row
    try:
        tick = int(ticks_text)
    except ValueError:
        raise ValueError(f"non-integer ticks {ticks_text!r}") from None
    if tick < 0:
        raise ValueError(f"negative ticks {tick}")
    kind = _TRACKER_KINDS.get(kind_text)
    if kind is None:
        raise ValueError(f"unknown record_type {kind_text!r}")
    try:
        count = int(count_text)
    except ValueError:
        raise ValueError(f"non-integer count {count_text!r}") from None
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if kind is TrackerKind.KEY_PRESS and count != 1:
        raise ValueError(f"KeyPress count must be 1, got {count}")
    return TrackerRecord(tick, kind, count, payload)


def parse_tracker(stream: Iterable[str]) -> tuple[list[TrackerRecord], ParseReport]:
    """Parse a tracker CSV stream. Ticks are taken verbatim from column one.

    Raises TrackerFormatError when the header line is missing or wrong.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise TrackerFormatError("empty stream: tracker header missing") from None
    if tuple(header) != TRACKER_HEADER:
        raise TrackerFormatError(f"not a tracker file, header was {header!r}")
    records: list[TrackerRecord] = []
    report = ParseReport()
    for row in reader:
        report.lines_total += 1
        try:
            rec = _parse_tracker_row(row)
        except ValueError as exc:
            report._malformed(reader.line_num, str(exc))
            continue
        report.lines_kept += 1
        records.append(rec)
    return records, report


_NEEDS_QUOTES = re.compile(r'[,"\r\n]')


def _csv_field(text: str) -> str:
    # csv.writer only quotes characters of its own line terminator, so a lone
    # "\r" would slip through unquoted and split the row on reading
    return f'"{text.replace(chr(34), chr(34) * 2)}"' if _NEEDS_QUOTES.search(text) else text


def write_tracker(records: Iterable[TrackerRecord], out) -> None:
    out.write(",".join(TRACKER_HEADER) + "\n")
    for rec in records:
        if "\x00" in rec.payload:
            raise ValueError("tracker payload cannot hold NUL characters")
        out.write(f"{rec.tick},{format_iso_time(rec.tick)},{rec.kind.value},{rec.count},"
                  f"{_csv_field(rec.payload)}\n")


def format_tracker(records: Iterable[TrackerRecord]) -> str:
    buf = io.StringIO()
    write_tracker(records, buf)
    return buf.getvalue()
