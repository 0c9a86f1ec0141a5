"""Deterministic text formatting for CSV and report outputs.

Numbers are written in fixed (positional) notation with 9 significant
digits, '.' decimal separator and '\n' line endings, so identical inputs
produce byte-identical files on every platform, and re-exporting parsed
values reproduces the bytes.
"""

from __future__ import annotations

import math

import numpy as np


def format_fixed9(value) -> str:
    """Fixed-notation, 9-significant-digit rendering of a float."""
    if value is None:
        return "nan"
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0.00000000"
    return np.format_float_positional(x, precision=9, unique=False,
                                      fractional=False)


def csv_line(*fields) -> str:
    out = []
    for f in fields:
        if isinstance(f, str):
            out.append(f)
        elif isinstance(f, (int, np.integer)):
            out.append(str(int(f)))
        else:
            out.append(format_fixed9(f))
    return ",".join(out)


def render_csv(header: list[str], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    lines.extend(csv_line(*row) for row in rows)
    return "\n".join(lines) + "\n"
