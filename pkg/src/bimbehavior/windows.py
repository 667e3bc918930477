"""Window cropping: slice each designer's event sequence into overlapping samples."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

MANIFEST_HEADER = ("designer_id", "start", "end", "label")


class MissingScoreError(KeyError):
    pass


@dataclass(frozen=True)
class WindowConfig:
    length: int
    step: int
    keep_short: bool = True

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"window length must be >= 1, got {self.length}")
        if not 1 <= self.step <= self.length:
            raise ValueError(f"step must lie in [1, {self.length}], got {self.step}")

    @property
    def overlap(self) -> int:
        return self.length - self.step


class Window(NamedTuple):
    start: int
    end: int
    short: bool = False


@dataclass(frozen=True)
class WindowSample:
    designer_id: str
    start: int
    end: int
    label: float
    short: bool = False


def window_count(length: int, config: WindowConfig) -> int:
    if length >= config.length:
        return (length - config.length) // config.step + 1
    return 1 if config.keep_short and length >= 1 else 0


def make_windows(length: int, config: WindowConfig) -> list[Window]:
    """Half-open ranges ``[i*s, i*s + N)``; the tail past the last full window is dropped."""
    if length < 1:
        raise ValueError(f"sequence length must be >= 1, got {length}")
    n, s = config.length, config.step
    if length < n:
        return [Window(0, length, True)] if config.keep_short else []
    return [Window(i * s, i * s + n) for i in range((length - n) // s + 1)]


def attach_labels(ranges: Mapping[str, Sequence[Window]],
                  scores: Mapping[str, float]) -> list[WindowSample]:
    samples = []
    for designer, windows in ranges.items():
        if designer not in scores:
            raise MissingScoreError(f"no score for designer {designer!r}")
        label = scores[designer]
        samples.extend(WindowSample(designer, w.start, w.end, label, w.short) for w in windows)
    return samples


def write_manifest(samples: Iterable[WindowSample], out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for s in samples:
        writer.writerow((s.designer_id, s.start, s.end, _fmt_label(s.label)))


def read_manifest(stream, length: int | None = None) -> list[WindowSample]:
    """Read a window manifest; with ``length`` given, shorter windows are flagged short."""
    reader = csv.reader(stream)
    header = tuple(next(reader, ()))
    if header != MANIFEST_HEADER:
        raise ValueError(f"not a window manifest, header was {header!r}")
    out = []
    for row in reader:
        if not row:
            continue
        designer, start, end, label = row
        start, end = int(start), int(end)
        short = length is not None and end - start < length
        out.append(WindowSample(designer, start, end, float(label), short))
    return out


def _fmt_label(label: float) -> str:
    return str(int(label)) if float(label).is_integer() else repr(float(label))
