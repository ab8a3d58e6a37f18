"""GF(2) linear algebra on sparse matrices encoded as integer bitsets.

A matrix is a list of columns, each column an int whose set bits are the
row indices.  This keeps boundary-map ranks exact and fast enough for
desk-scale cubical and flag complexes.
"""
from __future__ import annotations

from typing import Iterable


def column(rows: Iterable[int]) -> int:
    col = 0
    for r in rows:
        col ^= 1 << r
    return col


def rank(columns: list[int]) -> int:
    """Rank over GF(2) by elimination with a pivot-row table."""
    pivots: dict[int, int] = {}
    r = 0
    for col in columns:
        while col:
            pivot = col.bit_length() - 1
            other = pivots.get(pivot)
            if other is None:
                pivots[pivot] = col
                r += 1
                break
            col ^= other
    return r


def reduce_columns(columns: list[int]) -> list[int]:
    """Persistence-style left-to-right reduction: each column is XORed with
    earlier columns until its lowest set bit is unique or it vanishes.
    Returns the list of reduced columns (same order)."""
    low_owner: dict[int, int] = {}
    reduced: list[int] = []
    for j, col in enumerate(columns):
        while col:
            low = col.bit_length() - 1
            owner = low_owner.get(low)
            if owner is None:
                low_owner[low] = j
                break
            col ^= reduced[owner]
        reduced.append(col)
    return reduced


def betti_from_boundaries(n_cells: list[int], boundaries: list[list[int]]) -> list[int]:
    """Betti numbers of a chain complex over GF(2).

    n_cells[i] is the number of i-cells; boundaries[i] is the list of
    columns of the boundary map C_i -> C_{i-1} (boundaries[0] is ignored
    and may be empty).  b_i = dim C_i - rank d_i - rank d_{i+1}.
    """
    top = len(n_cells) - 1
    ranks = [0] * (top + 2)
    for i in range(1, top + 1):
        ranks[i] = rank(boundaries[i])
    betti = []
    for i in range(top + 1):
        betti.append(n_cells[i] - ranks[i] - ranks[i + 1])
    return betti
