"""Poincare polynomials (finite Betti-number sequences) and oracle estimates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence


class InconsistentBettiError(ValueError):
    """A coefficient map produced a negative Betti number: the input vector
    cannot come from an actual subset, i.e. the oracle was inconsistent."""


@dataclass(frozen=True)
class PoincarePolynomial:
    """Sum of b_i * T^i with non-negative integer coefficients.

    Trailing zeros are trimmed, so equality is canonical; the zero
    polynomial (empty set) has an empty coefficient tuple.
    """

    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        if any(c < 0 for c in coeffs):
            raise InconsistentBettiError(f"negative Betti number in {coeffs}")
        while coeffs and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coeffs", coeffs)

    @staticmethod
    def from_betti(values: Sequence[int] | Mapping[int, int]) -> PoincarePolynomial:
        if isinstance(values, Mapping):
            degree = max(values, default=-1)
            return PoincarePolynomial(tuple(values.get(i, 0) for i in range(degree + 1)))
        return PoincarePolynomial(tuple(values))

    def coeff(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def __call__(self, t: int) -> int:
        return sum(c * t ** i for i, c in enumerate(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if i == 0:
                parts.append(str(c))
            else:
                term = "T" if i == 1 else f"T^{i}"
                parts.append(term if c == 1 else f"{c}{term}")
        return " + ".join(parts)


@dataclass(frozen=True)
class BettiEstimate:
    """Partial Betti estimate from a homology backend.

    betti holds the estimated coefficients by degree; converged is set
    only when two successive refinement levels (resolution or sample
    size) agreed exactly on every estimated degree.
    """

    betti: Mapping[int, int]
    converged: bool
    diagnostics: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "betti", dict(self.betti))
        object.__setattr__(self, "diagnostics", dict(self.diagnostics))

    def poincare(self) -> PoincarePolynomial:
        """Estimated coefficients as a polynomial; missing degrees read 0."""
        return PoincarePolynomial.from_betti(dict(self.betti))

    def covers(self, degrees) -> bool:
        return all(d in self.betti for d in degrees)
