"""Hierarchical 13-character labels and the position-weighted retrieval error.

A label has four mono-hierarchical axes, T (4 characters), D, A and B
(3 each). Per-query error sums, over every axis k and 1-based position j,
the term 1 / B[k][j] * 1 / j whenever the two labels disagree at that slot,
where B[k][j] counts the labels possible at the slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

AXIS_NAMES = ("T", "D", "A", "B")
AXIS_LENGTHS = (4, 3, 3, 3)
CODE_LENGTH = sum(AXIS_LENGTHS)  # 13


class IrmaCodeError(ValueError):
    """Raised for strings that are not well-formed 13-character codes."""


@dataclass(frozen=True)
class IrmaCode:
    """An immutable parsed label; ``raw`` is the unhyphenated 13-char form."""

    raw: str

    def __post_init__(self) -> None:
        if len(self.raw) != CODE_LENGTH:
            raise IrmaCodeError(
                f"code must have {CODE_LENGTH} characters, got {len(self.raw)}"
            )
        for ch in self.raw:
            if not (ch.isascii() and ch.isalnum()):
                raise IrmaCodeError(f"code contains non-alphanumeric character {ch!r}")

    @property
    def axes(self) -> tuple[str, str, str, str]:
        t = self.raw
        return (t[0:4], t[4:7], t[7:10], t[10:13])

    def hyphenated(self) -> str:
        return "-".join(self.axes)

    def __str__(self) -> str:
        return self.raw


def parse_irma(code: str) -> IrmaCode:
    """Parse a 13-character or hyphenated 16-character (TTTT-DDD-AAA-BBB) label."""
    if len(code) == CODE_LENGTH:
        return IrmaCode(code)
    if len(code) == CODE_LENGTH + 3:
        parts = code.split("-")
        if len(parts) != 4 or tuple(len(p) for p in parts) != AXIS_LENGTHS:
            raise IrmaCodeError(
                f"hyphenated code must have segment lengths {AXIS_LENGTHS}, got {code!r}"
            )
        return IrmaCode("".join(parts))
    raise IrmaCodeError(
        f"code must have 13 characters (or 16 with hyphens), got {len(code)}"
    )


@dataclass(frozen=True)
class CardinalityTable:
    """Per-axis, per-position counts of possible labels; every entry >= 1."""

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if tuple(len(axis) for axis in self.counts) != AXIS_LENGTHS:
            raise ValueError(
                f"table shape {tuple(len(a) for a in self.counts)} must be {AXIS_LENGTHS}"
            )
        for axis in self.counts:
            for b in axis:
                if b < 1:
                    raise ValueError("every cardinality must be >= 1")
        object.__setattr__(
            self, "counts", tuple(tuple(int(b) for b in axis) for axis in self.counts)
        )

    def max_error(self) -> float:
        """Upper bound of the per-query error: all positions wrong."""
        return math.fsum(
            1.0 / b / (j + 1) for axis in self.counts for j, b in enumerate(axis)
        )


def build_cardinalities(codes: Iterable[IrmaCode]) -> CardinalityTable:
    """Count the distinct characters observed at each axis position."""
    seen: list[list[set[str]]] = [[set() for _ in range(n)] for n in AXIS_LENGTHS]
    empty = True
    for code in codes:
        empty = False
        for k, axis in enumerate(code.axes):
            for j, ch in enumerate(axis):
                seen[k][j].add(ch)
    if empty:
        raise ValueError("cannot build a cardinality table from an empty collection")
    return CardinalityTable(
        counts=tuple(tuple(len(s) for s in axis) for axis in seen)
    )


def irma_error(
    query: IrmaCode,
    retrieved: IrmaCode,
    table: CardinalityTable,
    hierarchical: bool = False,
) -> float:
    """Position-weighted disagreement between two labels.

    With ``hierarchical=True`` every position after the first mismatch of an
    axis also counts as wrong; the default scores each position on its own.
    """
    terms = []
    for k in range(4):
        qa = query.axes[k]
        ra = retrieved.axes[k]
        mismatched = False
        for j in range(AXIS_LENGTHS[k]):
            wrong = qa[j] != ra[j]
            if hierarchical:
                mismatched = mismatched or wrong
                wrong = mismatched
            if wrong:
                terms.append(1.0 / table.counts[k][j] / (j + 1))
    return math.fsum(terms)


@dataclass(frozen=True)
class EvaluationReport:
    """First-hit errors for a batch of queries and their compensated sum."""

    per_query_errors: tuple[float, ...]
    total_error: float
    query_count: int
    ids: tuple[tuple[str, str], ...] | None = None  # (query_id, hit_id) pairs

    def __post_init__(self) -> None:
        if self.query_count != len(self.per_query_errors):
            raise ValueError("query_count must match the number of per-query errors")
        if self.ids is not None and len(self.ids) != self.query_count:
            raise ValueError("ids must pair up with per-query errors")


def total_error(
    first_hits: Sequence[tuple[IrmaCode, IrmaCode]],
    table: CardinalityTable,
    ids: Sequence[tuple[str, str]] | None = None,
    hierarchical: bool = False,
) -> EvaluationReport:
    """Sum the per-pair error over (query, first hit) label pairs.

    Summation uses math.fsum so the total is independent of query order.
    """
    if not first_hits:
        raise ValueError("cannot evaluate an empty sequence of first hits")
    errors = tuple(
        irma_error(q, r, table, hierarchical=hierarchical) for q, r in first_hits
    )
    return EvaluationReport(
        per_query_errors=errors,
        total_error=math.fsum(errors),
        query_count=len(errors),
        ids=tuple((str(q), str(h)) for q, h in ids) if ids is not None else None,
    )


def report_to_json_dict(report: EvaluationReport, skipped: int = 0) -> dict:
    """Shape an EvaluationReport for the JSON report file."""
    ids = report.ids or tuple(
        (str(i), str(i)) for i in range(report.query_count)
    )
    return {
        "query_count": report.query_count,
        "total_error": report.total_error,
        "skipped_queries": skipped,
        "per_query": [
            {"query_id": qid, "hit_id": hid, "error": err}
            for (qid, hid), err in zip(ids, report.per_query_errors)
        ],
    }


def format_report(report: EvaluationReport, skipped: int = 0) -> str:
    """Plain-text summary table of an evaluation run."""
    lines = [
        f"{'query':<24} {'first hit':<24} {'error':>10}",
        "-" * 60,
    ]
    ids = report.ids or tuple((str(i), "") for i in range(report.query_count))
    for (qid, hid), err in zip(ids, report.per_query_errors):
        lines.append(f"{qid:<24} {hid:<24} {err:>10.6f}")
    lines.append("-" * 60)
    lines.append(f"queries: {report.query_count}   skipped: {skipped}")
    lines.append(f"total error: {report.total_error:.6f}")
    return "\n".join(lines)
