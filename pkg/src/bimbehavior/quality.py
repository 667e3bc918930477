"""Benchmark-relative scoring rubric for submitted BIM models.

A benchmark submission scores 20/20/20 on architectural completeness,
accuracy and complexity plus 10 on structural completeness (70 in total).
Other submissions move away from it in 2-point steps per component type or
modelling error; complexity moves freely within +/-10.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

SHEET_HEADER = ("designer_id", "arch_completeness", "arch_accuracy",
                "arch_complexity", "struct_completeness", "total")
ASSESSMENT_HEADER = ("designer_id", "arch_completeness_delta", "arch_error_delta",
                     "complexity_adjustment", "struct_delta")

ARCH_COMPLETENESS_RANGE = (14, 24)
ARCH_ACCURACY_RANGE = (12, 24)
ARCH_COMPLEXITY_RANGE = (10, 30)
STRUCT_COMPLETENESS_RANGE = (2, 16)
TOTAL_RANGE = (38, 94)
BENCHMARK_TOTAL = 70


@dataclass(frozen=True)
class AssessmentInput:
    arch_completeness_delta: int = 0
    arch_error_delta: int = 0
    complexity_adjustment: int = 0
    struct_delta: int = 0

    def __post_init__(self):
        if not -10 <= self.complexity_adjustment <= 10:
            raise ValueError(
                f"complexity adjustment must stay within +/-10, got {self.complexity_adjustment}")


@dataclass(frozen=True)
class QualityScore:
    arch_completeness: int
    arch_accuracy: int
    arch_complexity: int
    struct_completeness: int

    @property
    def total(self) -> int:
        return (self.arch_completeness + self.arch_accuracy + self.arch_complexity
                + self.struct_completeness)

    def row(self) -> tuple[int, int, int, int, int]:
        return (self.arch_completeness, self.arch_accuracy, self.arch_complexity,
                self.struct_completeness, self.total)


def _clamp(v: int, bounds: tuple[int, int]) -> int:
    return max(bounds[0], min(bounds[1], v))


def score(a: AssessmentInput) -> QualityScore:
    return QualityScore(
        _clamp(20 + 2 * a.arch_completeness_delta, ARCH_COMPLETENESS_RANGE),
        _clamp(20 - 2 * a.arch_error_delta, ARCH_ACCURACY_RANGE),
        20 + a.complexity_adjustment,
        _clamp(10 + 2 * a.struct_delta, STRUCT_COMPLETENESS_RANGE),
    )


def assessment_for_total(total: int) -> AssessmentInput:
    """Some assessment whose score has the given total.

    Complexity absorbs the difference first; whole 2-point steps left over are
    spread over structural completeness, then architectural completeness and
    accuracy, each within its cap.
    """
    if not TOTAL_RANGE[0] <= total <= TOTAL_RANGE[1]:
        raise ValueError(f"total {total} outside {TOTAL_RANGE}")
    diff = total - BENCHMARK_TOTAL
    complexity = max(-10, min(10, diff))
    rest = diff - complexity
    if rest % 2:
        complexity -= 1 if diff > 0 else -1
        rest = diff - complexity
    steps = rest // 2
    # (field, lowest delta, highest delta) in points-per-step direction
    struct = max(-4, min(3, steps))
    steps -= struct
    comp = max(-3, min(2, steps))
    steps -= comp
    errors = -max(-4, min(2, steps))
    steps += errors
    assert steps == 0
    a = AssessmentInput(comp, errors, complexity, struct)
    assert score(a).total == total
    return a


def read_assessments(stream) -> tuple[list[tuple[str, AssessmentInput]], list[tuple[int, str]]]:
    """Rows of (designer, input) plus (row number, error) for rejected rows."""
    reader = csv.reader(stream)
    header = tuple(next(reader, ()))
    if header != ASSESSMENT_HEADER:
        raise ValueError(f"not an assessment file, header was {header!r}")
    rows, errors = [], []
    for row in reader:
        if not row:
            continue
        try:
            if len(row) != len(ASSESSMENT_HEADER):
                raise ValueError(f"expected {len(ASSESSMENT_HEADER)} fields, got {len(row)}")
            rows.append((row[0], AssessmentInput(*(int(v) for v in row[1:]))))
        except ValueError as exc:
            errors.append((reader.line_num, str(exc)))
    return rows, errors


def write_assessments(rows, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ASSESSMENT_HEADER)
    for designer, a in rows:
        writer.writerow((designer, a.arch_completeness_delta, a.arch_error_delta,
                         a.complexity_adjustment, a.struct_delta))


def write_sheet(rows, out) -> None:
    """Write (designer, QualityScore) pairs as a score sheet."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SHEET_HEADER)
    for designer, s in rows:
        writer.writerow((designer, *s.row()))


def read_sheet(stream) -> dict[str, int]:
    """Designer -> total score. Rows whose parts do not sum to the total are rejected."""
    reader = csv.reader(stream)
    header = tuple(next(reader, ()))
    if header != SHEET_HEADER:
        raise ValueError(f"not a score sheet, header was {header!r}")
    totals = {}
    for row in reader:
        if not row:
            continue
        parts = [int(v) for v in row[1:]]
        if sum(parts[:4]) != parts[4]:
            raise ValueError(f"line {reader.line_num}: parts {parts[:4]} do not sum to {parts[4]}")
        totals[row[0]] = parts[4]
    return totals
