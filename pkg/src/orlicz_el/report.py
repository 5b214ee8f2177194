"""Plain-text key-value reports and CSV artifacts.

Output is deterministic: no timestamps or timings, floats formatted with a
fixed number of significant digits, ``.`` decimals and LF line endings.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np


def fmt(v, digits: int = 12) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v + 0.0, f".{digits}g")
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt(x, digits) for x in v) + "]"
    if v is None:
        return "none"
    return str(v)


class Report:
    """An ordered list of titled blocks of ``key = value`` lines."""

    def __init__(self):
        self.blocks = []

    def block(self, title: str, items) -> None:
        self.blocks.append((title, list(items.items() if isinstance(items, dict) else items)))

    def render(self) -> str:
        lines = []
        for title, items in self.blocks:
            lines.append(f"[{title}]")
            width = max((len(k) for k, _ in items), default=0)
            lines += [f"{k.ljust(width)} = {fmt(v)}" for k, v in items]
            lines.append("")
        return "\n".join(lines)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())


def write_rows(path, header, rows) -> None:
    """CSV with a header row, ``,`` delimiter and LF endings; floats round-trip."""
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x, 17) for x in row])


def hypothesis_items(rep) -> list:
    items = [("passed", rep.passed), ("required", rep.required), ("worst_slack", rep.worst_slack),
             ("probes", rep.probes)]
    if getattr(rep, "worst_point", None):
        items.append(("worst_point", fmt(list(_flatten(rep.worst_point)))))
    if hasattr(rep, "log_ratios"):
        items.append(("radii", rep.radii))
        items.append(("log_min_ratio", rep.log_ratios))
        items.append(("threshold", rep.threshold))
    if getattr(rep, "detail", ""):
        items.append(("detail", rep.detail))
    return items


def _flatten(x):
    if isinstance(x, (list, tuple)):
        for v in x:
            yield from _flatten(v)
    elif x is not None:
        yield x
