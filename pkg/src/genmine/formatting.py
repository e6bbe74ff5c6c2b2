"""Aligned plain-text table rendering shared by the report writers."""

from __future__ import annotations

from typing import Sequence


def align_table(rows: Sequence[Sequence[str]], indent: str = "") -> str:
    """Render rows as left-aligned columns separated by two spaces.

    The first row is treated like any other; callers supply their own
    header row and separators if they want them.
    """
    if not rows:
        return ""
    ncols = max(len(r) for r in rows)
    widths = [0] * ncols
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    for row in rows:
        padded = [cell.ljust(widths[i]) for i, cell in enumerate(row)]
        lines.append((indent + "  ".join(padded)).rstrip())
    return "\n".join(lines)
