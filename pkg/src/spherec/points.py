"""Exact rational points on spheres of rational squared radius.

Rational points are dense on any sphere |v|^2 = r2 with r2 a sum of four
rational squares (always, by Lagrange).  We build one exact base point
from a four-square decomposition and scramble it with random rational
Givens rotations, which preserve the norm exactly.  Unit spheres also get
a direct stereographic construction.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .formula import Point, VarBlock

__all__ = [
    "rational_unit_point", "rational_sphere_point", "rational_point_for",
    "float_sphere_point", "four_squares",
]


def four_squares(n: int) -> tuple[int, int, int, int]:
    """A representation n = a^2 + b^2 + c^2 + d^2 over the integers."""
    if n < 0:
        raise ValueError("n must be non-negative")
    for a in range(math.isqrt(n), -1, -1):
        r1 = n - a * a
        for b in range(math.isqrt(r1), -1, -1):
            r2 = r1 - b * b
            for c in range(math.isqrt(r2), -1, -1):
                d2 = r2 - c * c
                d = math.isqrt(d2)
                if d * d == d2:
                    return a, b, c, d
    raise AssertionError("four-square decomposition must exist")


def _random_fraction(rng: np.random.Generator, scale: int = 6) -> Fraction:
    num = int(rng.integers(-scale, scale + 1))
    den = int(rng.integers(1, scale + 1))
    return Fraction(num, den)


def rational_unit_point(dim: int, rng: np.random.Generator) -> tuple[Fraction, ...]:
    """Exact rational point on the unit sphere S^dim via stereographic projection."""
    if dim == 0:
        return (Fraction(1) if rng.integers(0, 2) else Fraction(-1),)
    a = [_random_fraction(rng) for _ in range(dim)]
    s = sum(x * x for x in a)
    denom = s + 1
    coords = [2 * x / denom for x in a] + [(s - 1) / denom]
    return tuple(coords)


def _givens(vec: list[Fraction], i: int, j: int, rng: np.random.Generator):
    t = _random_fraction(rng)
    denom = 1 + t * t
    c, s = (1 - t * t) / denom, 2 * t / denom
    vi, vj = vec[i], vec[j]
    vec[i] = c * vi - s * vj
    vec[j] = s * vi + c * vj


def rational_sphere_point(n_coords: int, radius2: Fraction,
                          rng: np.random.Generator) -> tuple[Fraction, ...]:
    """Exact rational point with sum of squares equal to radius2."""
    radius2 = Fraction(radius2)
    if radius2 < 0:
        raise ValueError("radius2 must be non-negative")
    if radius2 == 1:
        base = list(rational_unit_point(n_coords - 1, rng))
    else:
        a, b, c, d = four_squares(radius2.numerator * radius2.denominator)
        den = radius2.denominator
        vals = [Fraction(a, den), Fraction(b, den), Fraction(c, den), Fraction(d, den)]
        if n_coords < 4:
            vals = [v for v in vals if v] or [Fraction(0)]
            if len(vals) > n_coords:
                raise ValueError(
                    f"radius2 {radius2} needs more than {n_coords} coordinates for a rational point")
        base = (vals + [Fraction(0)] * n_coords)[:n_coords]
    for _ in range(2 * n_coords):
        if n_coords < 2:
            break
        i, j = rng.choice(n_coords, size=2, replace=False)
        _givens(base, int(i), int(j), rng)
    assert sum(v * v for v in base) == radius2
    return tuple(base)


def rational_point_for(blocks, rng: np.random.Generator) -> Point:
    """Random exact rational on-sphere point assigning all given blocks."""
    values = {}
    for block in blocks:
        if block.radius2 is None:
            values[block.name] = tuple(_random_fraction(rng) for _ in range(block.n_coords))
        else:
            values[block.name] = rational_sphere_point(block.n_coords, block.radius2, rng)
    return Point(values, mode="rational")


def float_sphere_point(n_coords: int, radius2: float, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(n_coords)
    v /= np.linalg.norm(v)
    return v * math.sqrt(radius2)


def float_shell_point(n_coords: int, radius2: float, rng: np.random.Generator,
                      lo: float = 0.5, hi: float = 1.5) -> np.ndarray:
    """Point with |v|^2 uniform in (lo*radius2, hi*radius2): the shell domain."""
    r2 = radius2 * rng.uniform(lo, hi)
    return float_sphere_point(n_coords, r2, rng)
