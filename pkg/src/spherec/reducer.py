"""Recursive compilation of quantified sphere formulas into a
quantifier-free formula plus a chain of coefficient maps, and the
Betti-number decision rule on the result.

Each step eliminates the outermost quantifier group by a join: an
existential step joins the current matrix directly and contributes a
truncation stage; a universal step complements the inner formula (matrix
negated, inner quantifiers flipped, polarity flipped), joins with the
variant matching the new polarity, and contributes a sphere-complement
duality stage.  Applying the chain to the Poincare polynomial of the
compiled formula's fiber recovers, degree by degree, that of the
original formula's fiber; truth of a sentence is the degree-0
coefficient being positive.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

from .betti import BettiEstimate, InconsistentBettiError, PoincarePolynomial
from .brute import Decision
from .formula import (Formula, FormulaError, PrefixGroup, Quantifier,
                      TopologyClass, VarBlock, classify_topology, nnf,
                      restrict_fiber)
from .join import JoinLayout, JoinSpec, JoinVariant, join_prenex
from .poly import Coord

__all__ = [
    "StageKind", "DualDirection", "CoeffStage", "truncate", "dual_betti",
    "apply_chain", "needed_theta_degrees", "ReduceOptions", "LiftInfo",
    "StepTrace", "ReductionArtifact", "lift_sentence", "reduce_formula",
    "reduce_sentence", "decide", "size_report", "SizeReport", "ReduceError",
]


class ReduceError(FormulaError):
    pass


class StageKind(enum.Enum):
    IDENTITY = "identity"
    TRUNCATE = "truncate"
    DUALITY = "duality"


class DualDirection(enum.Enum):
    CLOSED_K = "closed_K"   # input: P of the open complement, output: P of compact K
    OPEN_K = "open_K"       # input: P of the compact complement, output: P of open O


@dataclass(frozen=True)
class CoeffStage:
    kind: StageKind
    n: int = 0
    direction: DualDirection | None = None

    def __post_init__(self):
        if self.kind is StageKind.TRUNCATE and self.n < 0:
            raise ReduceError("truncation degree must be non-negative")
        if self.kind is StageKind.DUALITY and self.direction is None:
            raise ReduceError("duality stage needs a direction")

    def describe(self) -> str:
        if self.kind is StageKind.IDENTITY:
            return "identity"
        if self.kind is StageKind.TRUNCATE:
            return f"truncate({self.n})"
        return f"duality({self.n}, {self.direction.value})"

    # -- full vector application ---------------------------------------

    def apply(self, P: PoincarePolynomial) -> PoincarePolynomial:
        if self.kind is StageKind.IDENTITY:
            return P
        if self.kind is StageKind.TRUNCATE:
            return truncate(P, self.n)
        return dual_betti(P, self.n, self.direction)

    # -- partial (degree-on-demand) application -------------------------

    def needed(self, out_degrees: set[int]) -> set[int]:
        if self.kind is StageKind.IDENTITY:
            return set(out_degrees)
        if self.kind is StageKind.TRUNCATE:
            return {d for d in out_degrees if d <= self.n}
        n = self.n
        if n == 0:
            return {0} if out_degrees else set()
        if n == 1:
            return {0, 1} if out_degrees else set()
        need: set[int] = set()
        for d in out_degrees:
            if d == 0:
                need |= {n - 1, n}
            elif 1 <= d <= n - 2:
                need.add(n - d - 1)
            elif d in (n - 1, n):
                need |= set(range(n + 1))
            # degrees above n are identically zero
        return need

    def compute(self, out_degree: int, coeff: Callable[[int], int]) -> int:
        """One output coefficient from input coefficients fetched on demand."""
        if self.kind is StageKind.IDENTITY:
            return coeff(out_degree)
        if self.kind is StageKind.TRUNCATE:
            return coeff(out_degree) if out_degree <= self.n else 0
        n, d = self.n, out_degree
        if d > n:
            return 0
        if n == 0:
            value = 2 - coeff(0) if d == 0 else 0
        elif n == 1:
            c0, c1 = coeff(0), coeff(1)
            if c1 > 0:
                value = 0                        # complement is the whole circle
            elif c0 == 0:
                value = 1                        # complement empty: K is the circle
            else:
                value = c0 if d == 0 else 0
        elif self.direction is DualDirection.CLOSED_K:
            if d == 0:
                value = 1 + coeff(n - 1) - coeff(n)
            elif d <= n - 2:
                value = coeff(n - d - 1)
            elif d == n - 1:
                c0 = coeff(0)
                value = c0 - 1 + max(1 - c0, 0)
            else:
                value = 1 - min(1, coeff(0))
        else:
            kn = coeff(n)
            if kn > 1:
                raise InconsistentBettiError(f"top coefficient {kn} exceeds 1")
            if kn == 1:
                # compact complement is the whole sphere: the open set is empty
                if coeff(n - 1) != 0:
                    raise InconsistentBettiError("full-sphere complement with extra homology")
                value = 0
            elif d == 0:
                value = coeff(n - 1) + 1
            elif d <= n - 2:
                value = coeff(n - d - 1)
            elif d == n - 1:
                empty_comp = all(coeff(i) == 0 for i in range(n + 1))
                value = 0 if empty_comp else coeff(0) - 1
            else:  # d == n: the open set is the whole sphere iff the complement is empty
                value = 1 if all(coeff(i) == 0 for i in range(n + 1)) else 0
        if value < 0:
            raise InconsistentBettiError(
                f"stage {self.describe()} produced negative coefficient {value} at degree {d}")
        return value


def truncate(P: PoincarePolynomial, m: int) -> PoincarePolynomial:
    """Drop all coefficients above degree m."""
    if m < 0:
        raise ReduceError("truncation degree must be non-negative")
    return PoincarePolynomial(P.coeffs[:m + 1])


def dual_betti(P_comp: PoincarePolynomial, n: int,
               direction: DualDirection) -> PoincarePolynomial:
    """Betti numbers of a subset of the n-sphere from those of its complement.

    closed_K: the input is the Poincare polynomial of the open complement
    of the compact set being solved for; open_K is the inverse map (input
    is the compact complement of an open set).  n in {0, 1} is handled by
    direct case analysis on subsets of S^0 and S^1.
    """
    if n < 0:
        raise ReduceError("sphere dimension must be non-negative")
    stage = CoeffStage(StageKind.DUALITY, n, direction)
    if n == 0:
        c0 = P_comp.coeff(0)
        if c0 > 2 or P_comp.degree > 0:
            raise InconsistentBettiError(f"{P_comp} is not a subset of a 0-sphere")
        return PoincarePolynomial((2 - c0,))
    if n == 1:
        c0, c1 = P_comp.coeff(0), P_comp.coeff(1)
        if P_comp.degree > 1 or c1 > 1 or (c1 == 1 and c0 != 1):
            raise InconsistentBettiError(f"{P_comp} is not a subset of a circle")
        if c1 == 1:
            return PoincarePolynomial(())
        if c0 == 0:
            return PoincarePolynomial((1, 1))
        return PoincarePolynomial((c0,))
    return PoincarePolynomial(tuple(stage.compute(d, P_comp.coeff) for d in range(n + 1)))


def apply_chain(chain: Sequence[CoeffStage], P: PoincarePolynomial) -> PoincarePolynomial:
    """Apply stages in order (innermost first)."""
    if not chain:
        raise ReduceError("chain must be non-empty")
    for stage in chain:
        P = stage.apply(P)
    return P


def apply_chain_partial(chain: Sequence[CoeffStage], theta_coeffs: dict[int, int],
                        final_degrees: set[int]) -> dict[int, int]:
    """Evaluate only the requested final degrees, reading exactly the
    input coefficients each stage needs (absent inputs read 0)."""
    def level_coeff(level: int) -> Callable[[int], int]:
        if level < 0:
            return lambda d: theta_coeffs.get(d, 0)
        inner = level_coeff(level - 1)
        stage = chain[level]
        return lambda d: stage.compute(d, inner)

    top = level_coeff(len(chain) - 1)
    return {d: top(d) for d in sorted(final_degrees)}


def needed_theta_degrees(chain: Sequence[CoeffStage],
                         final_degrees: set[int] = frozenset({0})) -> set[int]:
    need = set(final_degrees)
    for stage in reversed(list(chain)):
        need = stage.needed(need)
    return need


# -- reduction --------------------------------------------------------------


@dataclass(frozen=True)
class ReduceOptions:
    join_param_policy: str = "m_plus_1"     # or "paper_m"
    lift_fiber_dim: int = 0

    def join_param(self, m: int) -> int:
        if self.join_param_policy == "m_plus_1":
            return m + 1
        if self.join_param_policy == "paper_m":
            return m
        raise ReduceError(f"unknown join parameter policy {self.join_param_policy!r}")


@dataclass(frozen=True)
class LiftInfo:
    param_added: bool = False
    fiber_added: bool = False
    param_name: str = ""
    fiber_name: str = ""


@dataclass(frozen=True)
class StepTrace:
    step: int
    quantifier: Quantifier
    polarity_in: TopologyClass
    polarity_out: TopologyClass
    variant: JoinVariant
    m: int
    p: int
    joined: tuple[tuple[str, int], ...]       # (name, sphere_dim) per joined block
    R2: Fraction
    fiber_radius2: Fraction
    coords_before: int
    coords_after: int
    atoms_before: int
    atoms_after: int
    stage: CoeffStage
    formula_before: Formula = field(repr=False, compare=False)
    fiber_origin_before: dict[Coord, Coord] = field(repr=False, compare=False, default_factory=dict)
    layout: JoinLayout | None = field(repr=False, compare=False, default=None)

    def summary(self) -> dict:
        return {
            "step": self.step,
            "quantifier": self.quantifier.value,
            "polarity_in": self.polarity_in.value,
            "polarity_out": self.polarity_out.value,
            "variant": self.variant.value,
            "m": self.m,
            "p": self.p,
            "joined": [list(j) for j in self.joined],
            "R2": str(self.R2),
            "fiber_radius2": str(self.fiber_radius2),
            "coords_before": self.coords_before,
            "coords_after": self.coords_after,
            "atoms_before": self.atoms_before,
            "atoms_after": self.atoms_after,
            "stage": self.stage.describe(),
        }


@dataclass(frozen=True)
class ReductionArtifact:
    theta: Formula
    chain: tuple[CoeffStage, ...]
    param_block: VarBlock
    fiber_block: VarBlock
    trace: tuple[StepTrace, ...]
    options: ReduceOptions
    lift: LiftInfo
    fiber_origin: dict[Coord, Coord] = field(repr=False, compare=False, default_factory=dict)

    @property
    def fiber_dim(self) -> int:
        return self.fiber_block.sphere_dim

    def to_report(self) -> dict:
        from .sexpr import print_formula
        return {
            "theta": print_formula(self.theta),
            "chain": [s.describe() for s in self.chain],
            "param_block": [self.param_block.name, self.param_block.sphere_dim],
            "fiber_block": [self.fiber_block.name, self.fiber_block.sphere_dim,
                            str(self.fiber_block.radius2)],
            "trace": [t.summary() for t in self.trace],
            "options": {"join_param_policy": self.options.join_param_policy,
                        "lift_fiber_dim": self.options.lift_fiber_dim},
            "lift": {"param_added": self.lift.param_added,
                     "fiber_added": self.lift.fiber_added},
        }


def lift_sentence(f: Formula, options: ReduceOptions = ReduceOptions()) -> tuple[Formula, LiftInfo]:
    """Ensure a parameter block and a fiber block exist, adding unused
    dummy sphere blocks when the input is a bare sentence."""
    if len(f.free_blocks) > 2:
        raise ReduceError("at most two free blocks (parameter, fiber) are supported")
    existing = {b.name for b in f.all_blocks()}
    free = list(f.free_blocks)
    info = LiftInfo()
    if len(free) == 0:
        name = "X#lift"
        if name in existing:
            raise ReduceError(f"cannot lift: name {name!r} already in use")
        free.append(VarBlock(name, 0))
        info = replace(info, param_added=True, param_name=name)
    if len(free) == 1:
        name = "Y#lift"
        if name in existing:
            raise ReduceError(f"cannot lift: name {name!r} already in use")
        free.append(VarBlock(name, options.lift_fiber_dim))
        info = replace(info, fiber_added=True, fiber_name=name)
    return Formula(tuple(free), f.prefix, f.matrix), info


def reduce_sentence(f: Formula, options: ReduceOptions = ReduceOptions()) -> ReductionArtifact:
    lifted, info = lift_sentence(f, options)
    return reduce_formula(lifted, options, lift=info)


def reduce_formula(f: Formula, options: ReduceOptions = ReduceOptions(),
                   lift: LiftInfo = LiftInfo()) -> ReductionArtifact:
    """Compile a compact-hierarchy-valid formula with free blocks (X, Y)."""
    if len(f.free_blocks) != 2:
        raise ReduceError("reduce_formula expects exactly two free blocks (parameter, fiber)")
    if classify_topology(f) is not TopologyClass.CLOSED:
        raise ReduceError("input matrix must be syntactically closed")

    param, fiber = f.free_blocks
    current = f
    polarity = TopologyClass.CLOSED
    stages: list[CoeffStage] = []
    trace: list[StepTrace] = []
    fiber_origin = {c: c for c in fiber.coords()}
    step = 0

    while current.prefix:
        step += 1
        fiber_block = current.free_blocks[1]
        group = current.prefix[0]
        rest = current.prefix[1:]
        m = fiber_block.sphere_dim
        p = options.join_param(m)

        if group.quantifier is Quantifier.EXISTS:
            matrix = current.matrix
            inner_prefix = rest
            new_polarity = polarity
            stage = CoeffStage(StageKind.TRUNCATE, m)
        else:
            matrix = nnf(current.matrix, positive=False)
            inner_prefix = tuple(PrefixGroup(g.quantifier.flipped(), g.blocks) for g in rest)
            direction = (DualDirection.CLOSED_K if polarity is TopologyClass.CLOSED
                         else DualDirection.OPEN_K)
            new_polarity = (TopologyClass.OPEN if polarity is TopologyClass.CLOSED
                            else TopologyClass.CLOSED)
            stage = CoeffStage(StageKind.DUALITY, m, direction)

        variant = (JoinVariant.CLOSED if new_polarity is TopologyClass.CLOSED
                   else JoinVariant.OPEN)
        psi = Formula((param, fiber_block) + group.blocks, inner_prefix, matrix)
        spec = JoinSpec(param_blocks=(param, fiber_block), join_blocks=group.blocks,
                        p=p, variant=variant, step_tag=str(step),
                        fold_params=(fiber_block.name,))
        result = join_prenex(psi, spec)
        before = current

        trace.append(StepTrace(
            step=step, quantifier=group.quantifier, polarity_in=polarity,
            polarity_out=new_polarity, variant=variant, m=m, p=p,
            joined=tuple((b.name, b.sphere_dim) for b in group.blocks),
            R2=result.layout.R2, fiber_radius2=result.layout.super_block.radius2,
            coords_before=before.n_total_coords(), coords_after=result.formula.n_total_coords(),
            atoms_before=before.atom_count(), atoms_after=result.formula.atom_count(),
            stage=stage, formula_before=before,
            fiber_origin_before=dict(fiber_origin), layout=result.layout))

        fiber_origin = {orig: result.layout.coord_map[cur]
                        for orig, cur in fiber_origin.items()}
        stages.append(stage)
        current = result.formula
        polarity = new_polarity

    chain = (CoeffStage(StageKind.IDENTITY),) + tuple(reversed(stages))
    return ReductionArtifact(
        theta=current, chain=chain, param_block=param,
        fiber_block=current.free_blocks[1] if len(current.free_blocks) > 1 else current.free_blocks[0],
        trace=tuple(trace), options=options, lift=lift, fiber_origin=fiber_origin)


# -- decision ----------------------------------------------------------------


@dataclass
class DecideReport:
    decision: Decision
    needed_degrees: tuple[int, ...]
    estimate: BettiEstimate | None = None
    final_value: int | None = None
    chain: tuple[str, ...] = ()
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "decision": self.decision.value,
            "needed_degrees": list(self.needed_degrees),
            "betti": ({str(k): v for k, v in self.estimate.betti.items()}
                      if self.estimate else None),
            "converged": self.estimate.converged if self.estimate else None,
            "oracle_diagnostics": dict(self.estimate.diagnostics) if self.estimate else None,
            "final_value": self.final_value,
            "chain": list(self.chain),
            "reason": self.reason,
        }


def decide(artifact: ReductionArtifact, x: Sequence, oracle) -> DecideReport:
    """Decision rule: the chain applied to the oracle's Poincare polynomial
    of theta's fiber over x, evaluated at T=0 and compared against 0.
    Oracle failure (non-convergence or missing degrees) yields Unknown."""
    needed = needed_theta_degrees(artifact.chain)
    chain_desc = tuple(s.describe() for s in artifact.chain)
    fiber_formula = restrict_fiber(artifact.theta, artifact.param_block, x)
    est = oracle.estimate(fiber_formula, tuple(sorted(needed)),
                          artifact=artifact, x=tuple(x))
    if not est.covers(needed):
        return DecideReport(Decision.UNKNOWN, tuple(sorted(needed)), est,
                            chain=chain_desc, reason="oracle does not cover needed degrees")
    if not est.converged:
        return DecideReport(Decision.UNKNOWN, tuple(sorted(needed)), est,
                            chain=chain_desc, reason="oracle estimate did not converge")
    try:
        final = apply_chain_partial(artifact.chain, dict(est.betti), {0})[0]
    except InconsistentBettiError as exc:
        return DecideReport(Decision.UNKNOWN, tuple(sorted(needed)), est,
                            chain=chain_desc, reason=f"inconsistent oracle output: {exc}")
    return DecideReport(Decision.from_bool(final > 0), tuple(sorted(needed)), est,
                        final_value=final, chain=chain_desc)


# -- size accounting ---------------------------------------------------------


@dataclass(frozen=True)
class SizeReport:
    atom_count: int
    variable_count: int
    max_degree: int
    join_params: tuple[int, ...]
    expected_variable_count: int
    matches_recurrence: bool

    def to_dict(self) -> dict:
        return {
            "atom_count": self.atom_count,
            "variable_count": self.variable_count,
            "max_degree": self.max_degree,
            "join_params": list(self.join_params),
            "expected_variable_count": self.expected_variable_count,
            "matches_recurrence": self.matches_recurrence,
        }


def size_report(artifact: ReductionArtifact) -> SizeReport:
    """Measured size of theta plus the closed-form variable-count recurrence:
    each step maps fiber coordinate count f to f + (p+1)(L+1) + 1 where L is
    the joined group's coordinate count."""
    theta = artifact.theta
    if artifact.trace:
        f_coords = artifact.trace[0].formula_before.free_blocks[1].n_coords
    else:
        f_coords = theta.free_blocks[1].n_coords if len(theta.free_blocks) > 1 else 0
    for t in artifact.trace:
        L = sum(dim + 1 for _, dim in t.joined)
        f_coords = f_coords + (t.p + 1) * (L + 1) + 1
    expected = artifact.param_block.n_coords + f_coords
    actual = theta.n_free_coords()
    return SizeReport(
        atom_count=theta.atom_count(),
        variable_count=actual,
        max_degree=theta.max_degree(),
        join_params=tuple(t.p for t in artifact.trace),
        expected_variable_count=expected,
        matches_recurrence=(expected == actual),
    )
