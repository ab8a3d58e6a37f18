"""Sparse multivariate polynomials with exact rational coefficients.

Variables are block coordinates, addressed as (block_name, index) pairs.
Monomial keys are canonically sorted tuples of ((name, index), exponent)
with strictly positive exponents; zero coefficients are never stored.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

Coord = tuple[str, int]
MonoKey = tuple[tuple[Coord, int], ...]

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _canon_key(factors: Iterable[tuple[Coord, int]]) -> MonoKey:
    acc: dict[Coord, int] = {}
    for coord, exp in factors:
        if exp < 0:
            raise ValueError(f"negative exponent for {coord}")
        if exp:
            acc[coord] = acc.get(coord, 0) + exp
    return tuple(sorted(acc.items()))


class Polynomial:
    """Immutable sparse polynomial over Q."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[MonoKey, Fraction] | None = None):
        clean: dict[MonoKey, Fraction] = {}
        if terms:
            for key, coeff in terms.items():
                c = Fraction(coeff)
                if c != 0:
                    clean[key] = c
        self._terms = clean
        self._hash: int | None = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> Polynomial:
        return Polynomial()

    @staticmethod
    def const(value) -> Polynomial:
        c = Fraction(value)
        if c == 0:
            return Polynomial()
        return Polynomial({(): c})

    @staticmethod
    def coord(name: str, index: int, exp: int = 1, coeff=1) -> Polynomial:
        if exp == 0:
            return Polynomial.const(coeff)
        return Polynomial({(((name, index), exp),): Fraction(coeff)})

    @staticmethod
    def from_monomials(monos: Iterable[tuple[Fraction, Iterable[tuple[Coord, int]]]]) -> Polynomial:
        acc: dict[MonoKey, Fraction] = {}
        for coeff, factors in monos:
            key = _canon_key(factors)
            acc[key] = acc.get(key, _ZERO) + Fraction(coeff)
        return Polynomial(acc)

    # -- inspection ----------------------------------------------------

    @property
    def terms(self) -> dict[MonoKey, Fraction]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[MonoKey, Fraction]]:
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(key == () for key in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self._terms.get((), _ZERO)

    def coords(self) -> set[Coord]:
        out: set[Coord] = set()
        for key in self._terms:
            for coord, _ in key:
                out.add(coord)
        return out

    def block_names(self) -> set[str]:
        return {coord[0] for coord in self.coords()}

    def total_degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(e for _, e in key) for key in self._terms)

    def degree_in(self, names: set[str]) -> int:
        """Max total degree restricted to coordinates of the given blocks."""
        best = 0
        for key in self._terms:
            d = sum(e for (name, _), e in key if name in names)
            best = max(best, d)
        return best

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other) -> Polynomial:
        other = _coerce(other)
        acc = dict(self._terms)
        for key, coeff in other._terms.items():
            s = acc.get(key, _ZERO) + coeff
            if s == 0:
                acc.pop(key, None)
            else:
                acc[key] = s
        return Polynomial(acc)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial({k: -c for k, c in self._terms.items()})

    def __sub__(self, other) -> Polynomial:
        return self + (-_coerce(other))

    def __rsub__(self, other) -> Polynomial:
        return _coerce(other) + (-self)

    def __mul__(self, other) -> Polynomial:
        other = _coerce(other)
        acc: dict[MonoKey, Fraction] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                key = _mul_keys(k1, k2)
                s = acc.get(key, _ZERO) + c1 * c2
                if s == 0:
                    acc.pop(key, None)
                else:
                    acc[key] = s
        return Polynomial(acc)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Polynomial:
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- evaluation / substitution --------------------------------------

    def evaluate(self, assign: Mapping[Coord, object]):
        """Evaluate with Fractions (exact) or floats, per the assignment values."""
        total = None
        for key, coeff in self._terms.items():
            val = coeff
            for coord, exp in key:
                val = val * assign[coord] ** exp
            total = val if total is None else total + val
        if total is None:
            return _ZERO
        return total

    def substitute(self, assign: Mapping[Coord, Fraction]) -> Polynomial:
        """Substitute exact values for a subset of coordinates."""
        acc: dict[MonoKey, Fraction] = {}
        for key, coeff in self._terms.items():
            c = coeff
            rest: list[tuple[Coord, int]] = []
            for coord, exp in key:
                if coord in assign:
                    c = c * Fraction(assign[coord]) ** exp
                else:
                    rest.append((coord, exp))
            if c == 0:
                continue
            new_key = tuple(sorted(rest))
            s = acc.get(new_key, _ZERO) + c
            if s == 0:
                acc.pop(new_key, None)
            else:
                acc[new_key] = s
        return Polynomial(acc)

    def rename(self, mapping: Mapping[str, str]) -> Polynomial:
        """Rename block names; coordinate indices are preserved."""
        acc: dict[MonoKey, Fraction] = {}
        for key, coeff in self._terms.items():
            new_key = tuple(sorted((((mapping.get(n, n), i), e) for (n, i), e in key)))
            acc[new_key] = acc.get(new_key, _ZERO) + coeff
        return Polynomial(acc)

    def remap_coords(self, mapping: Mapping[Coord, Coord]) -> Polynomial:
        acc: dict[MonoKey, Fraction] = {}
        for key, coeff in self._terms.items():
            new_key = tuple(sorted(((mapping.get(c, c), e) for c, e in key)))
            acc[new_key] = acc.get(new_key, _ZERO) + coeff
        return Polynomial(acc)

    def split_by_degree_in(self, names: set[str]) -> dict[int, Polynomial]:
        """Group terms by their total degree in the given blocks' coordinates."""
        buckets: dict[int, dict[MonoKey, Fraction]] = {}
        for key, coeff in self._terms.items():
            d = sum(e for (name, _), e in key if name in names)
            buckets.setdefault(d, {})[key] = coeff
        return {d: Polynomial(t) for d, t in buckets.items()}

    # -- dunder --------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "Polynomial(0)"
        parts = []
        for key, coeff in self.sorted_terms():
            factors = "*".join(f"{n}.{i}^{e}" if e > 1 else f"{n}.{i}" for (n, i), e in key)
            parts.append(f"{coeff}" + (f"*{factors}" if factors else ""))
        return "Polynomial(" + " + ".join(parts) + ")"


def _coerce(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    return Polynomial.const(value)


def _mul_keys(k1: MonoKey, k2: MonoKey) -> MonoKey:
    acc: dict[Coord, int] = dict(k1)
    for coord, exp in k2:
        acc[coord] = acc.get(coord, 0) + exp
    return tuple(sorted(acc.items()))


def squared_norm(name: str, n_coords: int) -> Polynomial:
    """Sum of squared coordinates of a block with n_coords coordinates."""
    return Polynomial({(((name, i), 2),): _ONE for i in range(n_coords)})
