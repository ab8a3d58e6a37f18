"""Cubical homology of formula realizations in a box, over GF(2).

A top cell of the axis-aligned grid is included iff its center satisfies
the (equality-inflated) matrix.  Lower cells are the faces of included
top cells; Betti numbers are rank-nullity of the boundary maps.  Only
the formula's atoms are used: implicit sphere constraints of blocks must
be materialized by the caller as inflated band atoms.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import gf2
from .compiled import CompiledFormula
from .betti import BettiEstimate
from .formula import Formula, FormulaError

__all__ = ["ChainComplex", "CubicalComplex", "betti_ranks", "poincare_cubical",
           "build_cubical_complex"]

Cell = tuple[tuple[int, int], ...]   # per axis: (grid index, extent 0 or 1)


@dataclass
class ChainComplex:
    """Cell counts and GF(2) boundary columns per dimension."""

    n_cells: list[int]
    boundaries: list[list[int]]   # boundaries[i]: columns of d_i (i >= 1)

    def betti(self) -> list[int]:
        return gf2.betti_from_boundaries(self.n_cells, self.boundaries)

    def boundary_squared_is_zero(self, rng: np.random.Generator, trials: int = 5) -> bool:
        """Check d(d(chain)) = 0 on random chains in every dimension."""
        for i in range(2, len(self.n_cells)):
            cols_i = self.boundaries[i]
            cols_prev = self.boundaries[i - 1]
            if not cols_i:
                continue
            for _ in range(trials):
                chain = 0
                for j in range(len(cols_i)):
                    if rng.integers(0, 2):
                        chain ^= cols_i[j]
                image = 0
                k = 0
                while chain:
                    if chain & 1:
                        image ^= cols_prev[k]
                    chain >>= 1
                    k += 1
                if image != 0:
                    return False
        return True


def from_graph(n_vertices: int, edges: Sequence[tuple[int, int]]) -> ChainComplex:
    cols = [gf2.column([u, v]) if u != v else 0 for u, v in edges]
    return ChainComplex([n_vertices, len(edges)], [[], cols])


def betti_ranks(complex: ChainComplex, field: int = 2) -> tuple[int, ...]:
    """Betti numbers b_i = dim ker d_i - rank d_{i+1} via sparse elimination."""
    if field != 2:
        raise ValueError("only the two-element field is supported")
    return tuple(complex.betti())


@dataclass
class CubicalComplex:
    box: tuple[tuple[float, float], ...]
    resolution: int
    top_cells: list[Cell]
    chain: ChainComplex


def _grid_centers(box, resolution: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, resolution, endpoint=False) + (hi - lo) / (2 * resolution)
            for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def build_cubical_complex(cf: CompiledFormula, box, resolution: int,
                          eps_eq: float) -> CubicalComplex:
    d = len(box)
    centers = _grid_centers(box, resolution)
    keep = cf.eval_bool(centers, eq_tol=eps_eq)
    idx = np.nonzero(keep)[0]
    multi = np.stack(np.unravel_index(idx, (resolution,) * d), axis=1)

    top: list[Cell] = [tuple((int(k), 1) for k in row) for row in multi]
    cells_by_dim: list[dict[Cell, int]] = [dict() for _ in range(d + 1)]
    for cell in top:
        cells_by_dim[d].setdefault(cell, len(cells_by_dim[d]))
    for dim in range(d, 0, -1):
        lower = cells_by_dim[dim - 1]
        for cell in cells_by_dim[dim]:
            for face in _faces(cell):
                lower.setdefault(face, len(lower))

    boundaries: list[list[int]] = [[] for _ in range(d + 1)]
    for dim in range(1, d + 1):
        table = cells_by_dim[dim - 1]
        cols = []
        order = sorted(cells_by_dim[dim], key=cells_by_dim[dim].get)
        for cell in order:
            cols.append(gf2.column(table[f] for f in _faces(cell)))
        boundaries[dim] = cols

    chain = ChainComplex([len(t) for t in cells_by_dim], boundaries)
    return CubicalComplex(tuple(box), resolution, top, chain)


def _faces(cell: Cell):
    for axis, (k, extent) in enumerate(cell):
        if extent == 0:
            continue
        for which in (0, 1):
            yield cell[:axis] + ((k + which, 0),) + cell[axis + 1:]


def poincare_cubical(f: Formula, box, resolution: int = 32,
                     eps_eq: float | None = None,
                     max_degree: int | None = None) -> BettiEstimate:
    """Betti numbers of the realization of f's atoms within the box.

    Runs the grid at the given resolution and at twice it; converged is
    set iff both levels agree on every reported degree.  Equality atoms
    are inflated to slabs |q| <= eps_eq (default 0.05 * cell size); pass
    pre-inflated bands for geometrically meaningful widths.
    """
    if f.prefix:
        raise FormulaError("poincare_cubical requires a quantifier-free formula")
    coords = [c for b in f.free_blocks for c in b.coords()]
    d = len(coords)
    if d > 4:
        raise FormulaError(f"ambient dimension {d} exceeds the cubical limit of 4")
    box = _normalize_box(box, d)
    if resolution < 2 or resolution > 256:
        raise FormulaError("resolution out of range")
    cf = CompiledFormula(f.matrix, coords)
    if max_degree is None:
        max_degree = min(d, 2)

    levels = []
    for res in (resolution, 2 * resolution):
        cell = max((hi - lo) / res for lo, hi in box)
        eps = 0.05 * cell if eps_eq is None else eps_eq
        complex_ = build_cubical_complex(cf, box, res, eps)
        betti = complex_.chain.betti()
        levels.append({i: (betti[i] if i < len(betti) else 0) for i in range(max_degree + 1)})
    converged = levels[0] == levels[1]
    return BettiEstimate(levels[1], converged, {
        "backend": "cubical",
        "resolutions": [resolution, 2 * resolution],
        "coarse": levels[0],
        "box": [list(b) for b in box],
    })


def _normalize_box(box, d: int):
    if isinstance(box, (int, float)):
        return tuple((-float(box), float(box)) for _ in range(d))
    box = [tuple(map(float, b)) for b in box]
    if len(box) == 1:
        box = box * d
    if len(box) != d:
        raise FormulaError(f"box has {len(box)} axes, formula has {d} coordinates")
    return tuple(box)
