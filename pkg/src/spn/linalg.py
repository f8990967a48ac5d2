"""Exact integer/rational linear algebra: determinants and rank.

Determinants use fraction-free Bareiss elimination on integer matrices;
rank clears denominators row-wise and runs integer elimination with gcd
reduction.  Everything is exact and deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd


def det_bareiss(matrix: list[list[int]]) -> int:
    """Exact determinant of a square integer matrix (O(k^3), fraction-free)."""
    k = len(matrix)
    if k == 0:
        return 1
    m = [list(map(int, row)) for row in matrix]
    sign = 1
    prev = 1
    for p in range(k - 1):
        if m[p][p] == 0:
            for r in range(p + 1, k):
                if m[r][p] != 0:
                    m[p], m[r] = m[r], m[p]
                    sign = -sign
                    break
            else:
                return 0
        pivot = m[p][p]
        for r in range(p + 1, k):
            row_r = m[r]
            row_p = m[p]
            factor = row_r[p]
            for c in range(p + 1, k):
                row_r[c] = (pivot * row_r[c] - factor * row_p[c]) // prev
            row_r[p] = 0
        prev = pivot
    return sign * m[k - 1][k - 1]


def _integer_rows(matrix) -> list[list[int]]:
    rows = []
    for row in matrix:
        fracs = [x if isinstance(x, Fraction) else Fraction(x) for x in row]
        denom = 1
        for x in fracs:
            denom = denom * x.denominator // gcd(denom, x.denominator)
        rows.append([int(x.numerator * (denom // x.denominator)) for x in fracs])
    return rows


def exact_rank(matrix) -> int:
    """Rank over the rationals via integer row echelon with gcd reduction.

    Rows are scaled to integers (rank-preserving); the pivot in each column
    is the candidate with the largest absolute value, ties broken by the
    smallest row index, for deterministic elimination order.
    """
    rows = [row for row in _integer_rows(matrix) if any(row)]
    if not rows:
        return 0
    n_cols = len(rows[0])
    rank = 0
    for col in range(n_cols):
        # largest-|value| pivot, smallest row index on ties
        pivot_row = -1
        pivot_abs = 0
        for r in range(rank, len(rows)):
            a = abs(rows[r][col])
            if a > pivot_abs:
                pivot_abs = a
                pivot_row = r
        if pivot_row < 0:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        prow = rows[rank]
        pval = prow[col]
        for r in range(rank + 1, len(rows)):
            row = rows[r]
            f = row[col]
            if f == 0:
                continue
            g = gcd(pval, f)
            a = pval // g
            b = f // g
            for c in range(col, n_cols):
                row[c] = a * row[c] - b * prow[c]
            reduce = 0
            for c in range(col + 1, n_cols):
                reduce = gcd(reduce, row[c])
                if reduce == 1:
                    break
            if reduce > 1:
                for c in range(col + 1, n_cols):
                    row[c] //= reduce
        rank += 1
        if rank == len(rows):
            break
    return rank
