"""First-order formulas over blocks of sphere-constrained variables.

A formula has free blocks (parameter block first, then fiber blocks), a
prenex prefix of quantified blocks, and a quantifier-free matrix built
from sign atoms with and/or/not connectives.  Each block of k+1
coordinates carries an implicit constraint |v|^2 = radius2 (a sphere of
dimension k), or no constraint at all for radius2=None "box" blocks used
by the homology fixtures.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence, Union

from .poly import Coord, Polynomial


class FormulaError(Exception):
    """Base class for formula construction/usage errors."""


class UnknownVariableError(FormulaError):
    pass


class AlternationError(FormulaError):
    pass


class MissingAssignmentError(FormulaError):
    pass


class OffSphereError(FormulaError):
    pass


class Quantifier(enum.Enum):
    EXISTS = "exists"
    FORALL = "forall"

    def flipped(self) -> Quantifier:
        return Quantifier.FORALL if self is Quantifier.EXISTS else Quantifier.EXISTS


class Sign(enum.Enum):
    EQ = "="
    GE = ">="
    GT = ">"
    LE = "<="
    LT = "<"
    NE = "!="

    @property
    def is_closed(self) -> bool:
        return self in (Sign.EQ, Sign.GE, Sign.LE)

    def negated(self) -> Sign:
        return _NEGATION[self]

    def holds(self, value) -> bool:
        if self is Sign.EQ:
            return value == 0
        if self is Sign.GE:
            return value >= 0
        if self is Sign.GT:
            return value > 0
        if self is Sign.LE:
            return value <= 0
        if self is Sign.LT:
            return value < 0
        return value != 0


_NEGATION = {
    Sign.EQ: Sign.NE,
    Sign.NE: Sign.EQ,
    Sign.GE: Sign.LT,
    Sign.LT: Sign.GE,
    Sign.GT: Sign.LE,
    Sign.LE: Sign.GT,
}


class TopologyClass(enum.Enum):
    CLOSED = "closed"
    OPEN = "open"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class VarBlock:
    """A named block of sphere_dim+1 coordinates.

    radius2 is the squared radius of the implicit sphere constraint;
    None marks an unconstrained box block.
    """

    name: str
    sphere_dim: int
    radius2: Fraction | None = Fraction(1)

    def __post_init__(self):
        if self.sphere_dim < 0:
            raise FormulaError(f"block {self.name}: negative sphere dimension")
        if self.radius2 is not None:
            object.__setattr__(self, "radius2", Fraction(self.radius2))
            if self.radius2 <= 0:
                raise FormulaError(f"block {self.name}: radius2 must be positive")

    @property
    def n_coords(self) -> int:
        return self.sphere_dim + 1

    def coords(self) -> list[Coord]:
        return [(self.name, i) for i in range(self.n_coords)]


@dataclass(frozen=True)
class Atom:
    poly: Polynomial
    sign: Sign

    def negated(self) -> Atom:
        return Atom(self.poly, self.sign.negated())

    def evaluate(self, assign: Mapping[Coord, object]) -> bool:
        return self.sign.holds(self.poly.evaluate(assign))


@dataclass(frozen=True)
class And:
    children: tuple[BoolNode, ...]

    def __post_init__(self):
        if not self.children:
            raise FormulaError("And requires at least one child")


@dataclass(frozen=True)
class Or:
    children: tuple[BoolNode, ...]

    def __post_init__(self):
        if not self.children:
            raise FormulaError("Or requires at least one child")


@dataclass(frozen=True)
class Not:
    child: BoolNode


BoolNode = Union[Atom, And, Or, Not]


def conj(*nodes: BoolNode) -> BoolNode:
    return nodes[0] if len(nodes) == 1 else And(tuple(nodes))


def disj(*nodes: BoolNode) -> BoolNode:
    return nodes[0] if len(nodes) == 1 else Or(tuple(nodes))


def iter_atoms(node: BoolNode) -> Iterator[Atom]:
    if isinstance(node, Atom):
        yield node
    elif isinstance(node, Not):
        yield from iter_atoms(node.child)
    else:
        for child in node.children:
            yield from iter_atoms(child)


def map_atoms(node: BoolNode, fn) -> BoolNode:
    """Rebuild the tree with fn applied to each atom (fn returns a BoolNode)."""
    if isinstance(node, Atom):
        return fn(node)
    if isinstance(node, Not):
        return Not(map_atoms(node.child, fn))
    children = tuple(map_atoms(c, fn) for c in node.children)
    if isinstance(node, And):
        return And(children)
    return Or(children)


def eval_node(node: BoolNode, assign: Mapping[Coord, object]) -> bool:
    if isinstance(node, Atom):
        return node.evaluate(assign)
    if isinstance(node, Not):
        return not eval_node(node.child, assign)
    if isinstance(node, And):
        return all(eval_node(c, assign) for c in node.children)
    return any(eval_node(c, assign) for c in node.children)


def nnf(node: BoolNode, positive: bool = True) -> BoolNode:
    """Negation normal form; with positive=False, the NNF of the complement."""
    if isinstance(node, Atom):
        return node if positive else node.negated()
    if isinstance(node, Not):
        return nnf(node.child, not positive)
    children = tuple(nnf(c, positive) for c in node.children)
    if isinstance(node, And):
        return And(children) if positive else Or(children)
    return Or(children) if positive else And(children)


@dataclass(frozen=True)
class PrefixGroup:
    """A maximal run of same-quantifier blocks in the prenex prefix.

    User-facing source always has singleton groups; the join rewrites
    introduce multi-block groups (copies of a quantified block).
    """

    quantifier: Quantifier
    blocks: tuple[VarBlock, ...]

    def __post_init__(self):
        if not self.blocks:
            raise FormulaError("empty prefix group")


@dataclass(frozen=True)
class Formula:
    free_blocks: tuple[VarBlock, ...]
    prefix: tuple[PrefixGroup, ...]
    matrix: BoolNode

    def __post_init__(self):
        names: set[str] = set()
        for block in self.all_blocks():
            if block.name in names:
                raise FormulaError(f"duplicate block name {block.name!r}")
            names.add(block.name)
        limits = {b.name: b.n_coords for b in self.all_blocks()}
        for atom in iter_atoms(self.matrix):
            for name, idx in atom.poly.coords():
                if name not in limits:
                    raise UnknownVariableError(f"unknown variable {name}.{idx}")
                if not 0 <= idx < limits[name]:
                    raise UnknownVariableError(
                        f"coordinate {name}.{idx} out of range (block has {limits[name]} coordinates)")
        for g1, g2 in zip(self.prefix, self.prefix[1:]):
            if g1.quantifier == g2.quantifier:
                raise AlternationError("consecutive prefix groups share a quantifier")

    def all_blocks(self) -> list[VarBlock]:
        out = list(self.free_blocks)
        for group in self.prefix:
            out.extend(group.blocks)
        return out

    def free_block(self, name: str) -> VarBlock:
        for block in self.free_blocks:
            if block.name == name:
                return block
        raise UnknownVariableError(f"no free block named {name!r}")

    def n_free_coords(self) -> int:
        return sum(b.n_coords for b in self.free_blocks)

    def n_total_coords(self) -> int:
        return sum(b.n_coords for b in self.all_blocks())

    def atom_count(self) -> int:
        return sum(1 for _ in iter_atoms(self.matrix))

    def max_degree(self) -> int:
        return max((a.poly.total_degree() for a in iter_atoms(self.matrix)), default=0)

    def is_quantifier_free(self) -> bool:
        return not self.prefix


@dataclass(frozen=True)
class Point:
    """Per-block coordinate vectors, all-Fraction (rational mode) or all-float."""

    values: Mapping[str, tuple]
    mode: str = "rational"
    tol: float = 1e-12

    def __post_init__(self):
        if self.mode not in ("rational", "float"):
            raise FormulaError(f"unknown point mode {self.mode!r}")
        object.__setattr__(self, "values", dict(self.values))

    def assignment(self) -> dict[Coord, object]:
        out: dict[Coord, object] = {}
        for name, vec in self.values.items():
            for i, v in enumerate(vec):
                out[(name, i)] = v
        return out

    def check_blocks(self, blocks: Sequence[VarBlock]):
        for block in blocks:
            if block.name not in self.values:
                raise MissingAssignmentError(f"no value for block {block.name!r}")
            vec = self.values[block.name]
            if len(vec) != block.n_coords:
                raise OffSphereError(
                    f"block {block.name!r}: expected {block.n_coords} coordinates, got {len(vec)}")
            if block.radius2 is None:
                continue
            norm2 = sum(v * v for v in vec)
            if self.mode == "rational":
                if Fraction(norm2) != block.radius2:
                    raise OffSphereError(f"block {block.name!r}: |v|^2 = {norm2} != {block.radius2}")
            else:
                scale = max(1.0, float(block.radius2))
                if abs(float(norm2) - float(block.radius2)) > self.tol * scale:
                    raise OffSphereError(f"block {block.name!r}: |v|^2 = {norm2} != {block.radius2}")


def eval_formula(f: Formula, pt: Point) -> bool:
    """Evaluate a quantifier-free formula at a point on the blocks' spheres."""
    if f.prefix:
        raise FormulaError("eval_formula requires an empty prefix")
    pt.check_blocks(f.free_blocks)
    return eval_node(f.matrix, pt.assignment())


def to_nnf_complement(f: Formula) -> Formula:
    """The complement formula in prenex NNF: quantifiers flipped, negation
    pushed onto atoms by flipping their signs."""
    prefix = tuple(PrefixGroup(g.quantifier.flipped(), g.blocks) for g in f.prefix)
    return Formula(f.free_blocks, prefix, nnf(f.matrix, positive=False))


def classify_topology(f: Formula) -> TopologyClass:
    """Syntactic closed/open classification of the matrix.

    Closed iff the matrix is a not-free and/or tree of closed-type atoms
    (=, >=, <=); open iff not-free over strict atoms (>, <, !=).
    """
    saw_closed = saw_open = False

    def walk(node: BoolNode) -> bool:
        nonlocal saw_closed, saw_open
        if isinstance(node, Not):
            return False
        if isinstance(node, Atom):
            if node.sign.is_closed:
                saw_closed = True
            else:
                saw_open = True
            return True
        return all(walk(c) for c in node.children)

    if not walk(f.matrix):
        return TopologyClass.UNKNOWN
    if saw_closed and not saw_open:
        return TopologyClass.CLOSED
    if saw_open and not saw_closed:
        return TopologyClass.OPEN
    return TopologyClass.UNKNOWN


def restrict_fiber(f: Formula, block: VarBlock | str, value: Sequence) -> Formula:
    """Substitute an on-sphere value for a free block and drop the block."""
    if isinstance(block, str):
        block = f.free_block(block)
    if block not in f.free_blocks:
        raise UnknownVariableError(f"{block.name!r} is not a free block")
    if len(value) != block.n_coords:
        raise OffSphereError(
            f"block {block.name!r}: expected {block.n_coords} coordinates, got {len(value)}")
    rational = all(isinstance(v, (int, Fraction)) for v in value)
    if block.radius2 is not None:
        norm2 = sum(v * v for v in value)
        if rational:
            if Fraction(norm2) != block.radius2:
                raise OffSphereError(
                    f"value for {block.name!r} has |v|^2 = {norm2}, expected {block.radius2}")
        elif abs(float(norm2) - float(block.radius2)) > 1e-9 * max(1.0, float(block.radius2)):
            raise OffSphereError(
                f"value for {block.name!r} has |v|^2 = {norm2}, expected {block.radius2}")
    if not rational:
        raise OffSphereError("restrict_fiber requires exact rational values")
    assign = {(block.name, i): Fraction(v) for i, v in enumerate(value)}

    def subst(atom: Atom) -> BoolNode:
        return Atom(atom.poly.substitute(assign), atom.sign)

    matrix = map_atoms(f.matrix, subst)
    free = tuple(b for b in f.free_blocks if b.name != block.name)
    return Formula(free, f.prefix, matrix)
