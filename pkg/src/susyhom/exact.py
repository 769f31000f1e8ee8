"""Exact rank of sparse rational matrices.

Rows are scaled to primitive integer vectors and eliminated fraction-free, so
every intermediate value is a Python ``int``.  Pivots follow a Markowitz-style
rule (shortest row, then sparsest column, then smallest magnitude) to limit
fill-in on the very sparse coboundary matrices this package produces.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Integral
from typing import Mapping


def _primitive(row: dict[int, int]) -> dict[int, int]:
    g = 0
    for v in row.values():
        g = math.gcd(g, v)
        if g == 1:
            return row
    if g > 1:
        return {k: v // g for k, v in row.items()}
    return row


def _integer_row(row: Mapping[int, object]) -> dict[int, int]:
    den = 1
    row = {k: int(v) if isinstance(v, Integral) else v for k, v in row.items()}
    for v in row.values():
        if not isinstance(v, (int, Fraction)):
            raise TypeError(f"exact rank needs rational entries, got {type(v).__name__}")
        if isinstance(v, Fraction):
            den = den * v.denominator // math.gcd(den, v.denominator)
    out = {}
    for k, v in row.items():
        iv = int(v * den)
        if iv:
            out[k] = iv
    return _primitive(out)


def exact_rank(rows: Mapping[int, Mapping[int, object]] | list) -> int:
    """Rank over the rationals of a sparse matrix given as ``{row: {col: value}}``."""
    items = rows.values() if isinstance(rows, Mapping) else rows
    work: dict[int, dict[int, int]] = {}
    for r, row in enumerate(items):
        ir = _integer_row(row)
        if ir:
            work[r] = ir
    cols: dict[int, set[int]] = {}
    for r, row in work.items():
        for c in row:
            cols.setdefault(c, set()).add(r)

    rank = 0
    while work:
        r = min(work, key=lambda k: (len(work[k]), k))
        prow = work.pop(r)
        for c in prow:
            cols[c].discard(r)
        c = min(prow, key=lambda k: (len(cols[k]), abs(prow[k]), k))
        pv = prow[c]
        rank += 1
        for k in list(cols[c]):
            row = work[k]
            f = row[c]
            g = math.gcd(pv, f)
            a, b = pv // g, f // g
            new = {}
            for col in row.keys() | prow.keys():
                v = a * row.get(col, 0) - b * prow.get(col, 0)
                if v:
                    new[col] = v
            for col in row:
                if col not in new:
                    cols[col].discard(k)
            for col in new:
                if col not in row:
                    cols.setdefault(col, set()).add(k)
            if new:
                work[k] = _primitive(new)
            else:
                del work[k]
    return rank


def dense_exact_rank(matrix) -> int:
    """Convenience wrapper for a dense list-of-lists of rationals."""
    rows = {i: {j: v for j, v in enumerate(r) if v != 0} for i, r in enumerate(matrix)}
    return exact_rank(rows)
