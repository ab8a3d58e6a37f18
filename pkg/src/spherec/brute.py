"""Brute-force decision of quantified sentences over sphere grids.

The ground-truth oracle for end-to-end tests: quantifiers are evaluated
exhaustively over deterministic quasi-uniform grids, with a dual margin
(+delta and -delta readings) so that answers near atom boundaries or
under-resolved by the grid degrade to Unknown instead of lying.
Sentences whose blocks are all zero-dimensional are evaluated exactly
with rational arithmetic (the grid is the whole sphere).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .formula import (And, Atom, BoolNode, Formula, FormulaError, Not,
                      PrefixGroup, Quantifier, Sign, VarBlock, nnf)

__all__ = ["Decision", "SphereGrid", "sphere_grid", "brute_decide"]


class Decision(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @staticmethod
    def from_bool(value: bool) -> "Decision":
        return Decision.TRUE if value else Decision.FALSE


@dataclass(frozen=True)
class SphereGrid:
    dim: int
    points: tuple[tuple, ...]

    @property
    def count(self) -> int:
        return len(self.points)


def sphere_grid(dim: int, count: int) -> SphereGrid:
    """Deterministic quasi-uniform points on the unit sphere S^dim.

    S^0 is always exactly {+1, -1}; S^1 uses uniform angles, S^2 a
    Fibonacci spiral, and higher dimensions a normalized Kronecker
    lattice pushed through the Gaussian quantile.
    """
    if count < 2:
        raise FormulaError("grid count must be at least 2")
    if dim == 0:
        return SphereGrid(0, ((Fraction(1),), (Fraction(-1),)))
    if dim == 1:
        pts = []
        for i in range(count):
            theta = 2.0 * math.pi * i / count
            pts.append((math.cos(theta), math.sin(theta)))
        return SphereGrid(1, tuple(pts))
    if dim == 2:
        golden = math.pi * (3.0 - math.sqrt(5.0))
        pts = []
        for i in range(count):
            z = 1.0 - 2.0 * (i + 0.5) / count
            r = math.sqrt(max(0.0, 1.0 - z * z))
            theta = golden * i
            pts.append((r * math.cos(theta), r * math.sin(theta), z))
        return SphereGrid(2, tuple(pts))
    from scipy.special import ndtri
    n = dim + 1
    phi = _plastic_constant(n)
    alphas = np.array([(1.0 / phi) ** (k + 1) for k in range(n)])
    out = []
    for i in range(count):
        u = np.mod(0.5 + alphas * (i + 1), 1.0)
        u = np.clip(u, 1e-9, 1.0 - 1e-9)
        v = ndtri(u)
        norm = np.linalg.norm(v)
        if norm < 1e-9:
            v[0] = 1.0
            norm = 1.0
        out.append(tuple((v / norm).tolist()))
    return SphereGrid(dim, tuple(out))


def _plastic_constant(d: int) -> float:
    x = 1.5
    for _ in range(64):
        x = (1.0 + x) ** (1.0 / (d + 1))
    return x


@dataclass(frozen=True)
class _Margin:
    delta: Fraction | float

    def atom_holds(self, atom: Atom, assign, shift) -> bool:
        v = atom.poly.evaluate(assign)
        s = atom.sign
        if s is Sign.EQ:
            return abs(v) <= self.delta
        if s is Sign.NE:
            return abs(v) > self.delta
        if s is Sign.GE:
            return v >= shift
        if s is Sign.GT:
            return v > shift
        if s is Sign.LE:
            return v <= -shift
        return v < -shift


def _eval_margin(node: BoolNode, assign, margin: _Margin, shift) -> bool:
    if isinstance(node, Atom):
        return margin.atom_holds(node, assign, shift)
    if isinstance(node, Not):
        raise FormulaError("margin evaluation requires an NNF matrix")
    if isinstance(node, And):
        return all(_eval_margin(c, assign, margin, shift) for c in node.children)
    return any(_eval_margin(c, assign, margin, shift) for c in node.children)


def _decide_reading(prefix, matrix, grids, assign, margin: _Margin, shift) -> bool:
    if not prefix:
        return _eval_margin(matrix, assign, margin, shift)
    group = prefix[0]
    rest = prefix[1:]

    def group_points(blocks):
        if not blocks:
            yield {}
            return
        block = blocks[0]
        for pt in grids[block.name].points:
            head = {(block.name, i): v for i, v in enumerate(pt)}
            for tail in group_points(blocks[1:]):
                yield {**head, **tail}

    exists = group.quantifier is Quantifier.EXISTS
    for values in group_points(list(group.blocks)):
        sub = {**assign, **values}
        result = _decide_reading(rest, matrix, grids, sub, margin, shift)
        if exists and result:
            return True
        if not exists and not result:
            return False
    return not exists


def brute_decide(f: Formula, counts: int | dict[str, int] = 64,
                 delta: float = 0.05) -> Decision:
    """Exhaustive dual-margin grid evaluation of a sentence.

    The strict reading shifts every inequality by +delta, the lenient one
    by -delta (equalities always read as slabs |q| <= delta); Unknown is
    returned when the readings disagree.  All-S^0 sentences are decided
    exactly with rational arithmetic and no margin.
    """
    if f.free_blocks:
        raise FormulaError("brute_decide expects a sentence (no free blocks)")
    blocks = [b for g in f.prefix for b in g.blocks]
    for b in blocks:
        if b.radius2 != 1:
            raise FormulaError("brute_decide supports unit sphere blocks only")
    matrix = nnf(f.matrix)
    exact = all(b.sphere_dim == 0 for b in blocks)

    grids: dict[str, SphereGrid] = {}
    for b in blocks:
        if isinstance(counts, dict):
            c = counts.get(b.name, 64)
        else:
            c = counts
        grids[b.name] = sphere_grid(b.sphere_dim, max(2, c))

    if exact:
        margin = _Margin(Fraction(0))
        result = _decide_reading(f.prefix, matrix, grids, {}, margin, Fraction(0))
        return Decision.from_bool(result)

    margin = _Margin(float(delta))
    strict = _decide_reading(f.prefix, matrix, grids, {}, margin, float(delta))
    lenient = _decide_reading(f.prefix, matrix, grids, {}, margin, -float(delta))
    if strict and lenient:
        return Decision.TRUE
    if not strict and not lenient:
        return Decision.FALSE
    return Decision.UNKNOWN
