"""Closed and open join constructions on formulas over sphere blocks.

Given a formula Phi over a parameter block group X and a joined block
group Y, the builders emit the quantifier-free matrix

    Theta1 ^ Theta2 ^ Theta3

over (X, Y^0..Y^p, T, U0) whose realization is a subset of a sphere and
whose Betti numbers agree with those of the projection of Phi's
realization along Y in degrees below p.  The closed variant constrains
copies to balls and ties them to Phi on the sphere; the open variant
thickens everything (simplex faces, spheres to shells) and tests Phi at
radially normalized arguments, with radicals removed by sign denesting.

The emitted fiber coordinates (copies, T, U0, and any parameter blocks
the caller folds in) are merged into a single output block whose
implicit constraint is the Theta3 sphere equation with the kept
parameter blocks pinned to their own spheres.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .formula import (And, Atom, BoolNode, Formula, FormulaError, Not, Or,
                      PrefixGroup, Sign, TopologyClass, VarBlock,
                      classify_topology, conj, disj, iter_atoms, map_atoms)
from .poly import Coord, Polynomial, squared_norm

__all__ = [
    "JoinVariant", "JoinSpec", "JoinLayout", "JoinResult", "JoinError",
    "NameCollisionError", "build_closed_join", "build_open_join",
    "pull_quantifiers", "join_prenex", "shell_normalize", "fold_constants",
]


class JoinError(FormulaError):
    pass


class NameCollisionError(JoinError):
    pass


class JoinVariant(enum.Enum):
    CLOSED = "closed"
    OPEN = "open"


@dataclass(frozen=True)
class JoinSpec:
    """Parameters of one join step.

    param_blocks: the construction's "X" side (possibly several blocks,
    e.g. the original parameter plus an accumulated fiber block).
    join_blocks: the block group being joined away (p+1 copies emitted).
    fold_params: names of param blocks to absorb into the output fiber
    block alongside the copies, T and U0.
    """

    param_blocks: tuple[VarBlock, ...]
    join_blocks: tuple[VarBlock, ...]
    p: int
    variant: JoinVariant
    step_tag: str = "1"
    fold_params: tuple[str, ...] = ()

    def __post_init__(self):
        if self.p < 0:
            raise JoinError("join parameter p must be non-negative")
        if not self.join_blocks:
            raise JoinError("join_blocks must be non-empty")
        for b in self.param_blocks + self.join_blocks:
            if b.radius2 is None:
                raise JoinError(f"block {b.name!r} has no sphere constraint")
        kept = {b.name for b in self.param_blocks}
        for name in self.fold_params:
            if name not in kept:
                raise JoinError(f"fold_params entry {name!r} is not a param block")


@dataclass(frozen=True)
class JoinLayout:
    """Coordinate layout of the merged output fiber block."""

    variant: JoinVariant
    p: int
    R2: Fraction
    N: int
    super_block: VarBlock
    kept_param: tuple[VarBlock, ...]
    folded_param: tuple[tuple[str, int, int, Fraction], ...]   # (name, offset, n, radius2)
    copies: tuple[tuple[tuple[str, int, int, Fraction], ...], ...]  # per instance i
    t_offset: int
    u_offset: int
    coord_map: dict[Coord, Coord] = field(repr=False, default_factory=dict)


@dataclass(frozen=True)
class JoinResult:
    formula: Formula
    layout: JoinLayout


def _tick(p: int) -> Fraction:
    return Fraction(1, 2 * (p + 1))


def build_closed_join(phi: Formula, spec: JoinSpec) -> Formula:
    """The closed join formula of a quantifier-free closed input."""
    if spec.variant is not JoinVariant.CLOSED:
        raise JoinError("spec.variant must be closed")
    if not phi.is_quantifier_free():
        raise JoinError("input must be quantifier-free")
    if classify_topology(phi) is not TopologyClass.CLOSED:
        raise JoinError("closed join requires a syntactically closed input")
    return _build(phi.matrix, spec, instance_groups=()).formula


def build_open_join(phi: Formula, spec: JoinSpec) -> Formula:
    """The open join formula of a quantifier-free open input."""
    if spec.variant is not JoinVariant.OPEN:
        raise JoinError("spec.variant must be open")
    if not phi.is_quantifier_free():
        raise JoinError("input must be quantifier-free")
    if classify_topology(phi) is not TopologyClass.OPEN:
        raise JoinError("open join requires a syntactically open input")
    return _build(phi.matrix, spec, instance_groups=()).formula


def pull_quantifiers(psi: Formula, spec: JoinSpec) -> Formula:
    """Prenex join of a formula with quantified blocks: the prefix is
    rebuilt with p+1 same-quantifier copies of every inner block, and the
    i-th Phi-instance of Theta2 references the i-th copies."""
    return join_prenex(psi, spec).formula


def join_prenex(psi: Formula, spec: JoinSpec) -> JoinResult:
    return _build(psi.matrix, spec, instance_groups=psi.prefix)


# -- core ------------------------------------------------------------------


def _build(matrix: BoolNode, spec: JoinSpec,
           instance_groups: tuple[PrefixGroup, ...]) -> JoinResult:
    p = spec.p
    tag = spec.step_tag
    t_name, u_name, v_name = f"T#{tag}", f"U0#{tag}", f"V#{tag}"

    instance_blocks = tuple(b for g in instance_groups for b in g.blocks)
    existing = {b.name for b in spec.param_blocks + spec.join_blocks + instance_blocks}
    fresh = [t_name, u_name, v_name]
    for b in spec.join_blocks + instance_blocks:
        fresh.extend(f"{b.name}#{i}" for i in range(p + 1))
    for name in fresh:
        if name in existing:
            raise NameCollisionError(f"fresh name {name!r} collides with an input block")

    A = sum((b.radius2 for b in spec.param_blocks), Fraction(0))
    joined_r2 = sum((b.radius2 for b in spec.join_blocks), Fraction(0))
    B = (p + 1) * joined_r2
    if spec.variant is JoinVariant.CLOSED:
        R2 = A + B + 2
    else:
        R2 = 2 * A + 2 * B

    # Per-instance matrices: copy i of every joined and every quantified block.
    inst_matrices = []
    for i in range(p + 1):
        ren = {b.name: f"{b.name}#{i}" for b in spec.join_blocks + instance_blocks}
        mi = map_atoms(matrix, lambda a, r=ren: Atom(a.poly.rename(r), a.sign))
        inst_matrices.append(mi)
    copy_blocks = [
        tuple(VarBlock(f"{b.name}#{i}", b.sphere_dim, b.radius2) for b in spec.join_blocks)
        for i in range(p + 1)
    ]

    t_coords = [(t_name, i) for i in range(p + 1)]
    t_sum = Polynomial.from_monomials((Fraction(1), [(c, 1)]) for c in t_coords)
    t_norm2 = Polynomial.from_monomials((Fraction(1), [(c, 2)]) for c in t_coords)
    u = Polynomial.coord(u_name, 0)

    if spec.variant is JoinVariant.CLOSED:
        theta1 = And(tuple(Atom(Polynomial.coord(t_name, i), Sign.GE) for i in range(p + 1))
                     + (Atom(t_sum - 1, Sign.EQ),))
        theta2_parts: list[BoolNode] = [
            Atom(squared_norm(b.name, b.n_coords) - b.radius2, Sign.EQ)
            for b in spec.param_blocks
        ]
        for i in range(p + 1):
            for cb in copy_blocks[i]:
                theta2_parts.append(Atom(squared_norm(cb.name, cb.n_coords) - cb.radius2, Sign.LE))
            inst = conj(inst_matrices[i],
                        *[Atom(squared_norm(cb.name, cb.n_coords) - cb.radius2, Sign.EQ)
                          for cb in copy_blocks[i]])
            theta2_parts.append(Or((Atom(Polynomial.coord(t_name, i), Sign.EQ), inst)))
        theta2 = And(tuple(theta2_parts))
        sphere_eq = (u * u + _norm_sum(spec.param_blocks) + _copies_norm(copy_blocks)
                     + t_norm2 - R2)
        theta3 = And((Atom(sphere_eq, Sign.EQ), Atom(u, Sign.GE)))
    else:
        eps = _tick(p)
        theta1 = And(tuple(Atom(Polynomial.coord(t_name, i), Sign.GT) for i in range(p + 1))
                     + (Atom(t_sum - (1 - eps), Sign.GT),
                        Atom((1 + eps) - t_sum, Sign.GT)))
        normalized = spec.param_blocks
        theta2_parts = []
        for i in range(p + 1):
            for cb in copy_blocks[i]:
                theta2_parts.append(
                    Atom(squared_norm(cb.name, cb.n_coords) - Fraction(3, 2) * cb.radius2, Sign.LT))
            plus = _phi_plus(inst_matrices[i], normalized + copy_blocks[i])
            theta2_parts.append(Or((Atom(eps - Polynomial.coord(t_name, i), Sign.GT), plus)))
        theta2 = And(tuple(theta2_parts))
        # The Theta3 sphere equation is held as the output block's implicit
        # constraint so the emitted matrix stays syntactically open.
        theta3 = And((Atom(u, Sign.GT),))

    raw_matrix = And((theta1, theta2, theta3))

    # Merge fiber-side coordinates into the output block.
    folded = [b for b in spec.param_blocks if b.name in spec.fold_params]
    kept = tuple(b for b in spec.param_blocks if b.name not in spec.fold_params)
    coord_map: dict[Coord, Coord] = {}
    folded_descr = []
    offset = 0
    for b in folded:
        folded_descr.append((b.name, offset, b.n_coords, b.radius2))
        for i in range(b.n_coords):
            coord_map[(b.name, i)] = (v_name, offset + i)
        offset += b.n_coords
    copies_descr = []
    for i in range(p + 1):
        descr = []
        for cb in copy_blocks[i]:
            descr.append((cb.name, offset, cb.n_coords, cb.radius2))
            for j in range(cb.n_coords):
                coord_map[(cb.name, j)] = (v_name, offset + j)
            offset += cb.n_coords
        copies_descr.append(tuple(descr))
    t_offset = offset
    for i in range(p + 1):
        coord_map[(t_name, i)] = (v_name, offset + i)
    offset += p + 1
    u_offset = offset
    coord_map[(u_name, 0)] = (v_name, offset)
    offset += 1

    rho_v = R2 - sum((b.radius2 for b in kept), Fraction(0))
    super_block = VarBlock(v_name, offset - 1, rho_v)
    merged = map_atoms(raw_matrix, lambda a: Atom(a.poly.remap_coords(coord_map), a.sign))

    out_prefix = tuple(
        PrefixGroup(g.quantifier,
                    tuple(VarBlock(f"{b.name}#{i}", b.sphere_dim, b.radius2)
                          for b in g.blocks for i in range(p + 1)))
        for g in instance_groups
    )
    formula = Formula(kept + (super_block,), out_prefix, merged)

    L = sum(b.n_coords for b in spec.join_blocks)
    N = sum(b.n_coords for b in spec.param_blocks) + (p + 1) * (L + 1)
    assert sum(b.n_coords for b in kept) + super_block.n_coords == N + 1

    layout = JoinLayout(spec.variant, p, R2, N, super_block, kept, tuple(folded_descr),
                        tuple(copies_descr), t_offset, u_offset, coord_map)
    return JoinResult(formula, layout)


def _norm_sum(blocks) -> Polynomial:
    total = Polynomial.zero()
    for b in blocks:
        total = total + squared_norm(b.name, b.n_coords)
    return total


def _copies_norm(copy_blocks) -> Polynomial:
    total = Polynomial.zero()
    for group in copy_blocks:
        for cb in group:
            total = total + squared_norm(cb.name, cb.n_coords)
    return total


def _phi_plus(matrix: BoolNode, normalized: tuple[VarBlock, ...]) -> BoolNode:
    """Shell bounds plus the radically denested matrix at normalized arguments."""
    shells: list[BoolNode] = []
    for b in normalized:
        n2 = squared_norm(b.name, b.n_coords)
        shells.append(Atom(n2 - b.radius2 / 2, Sign.GT))
        shells.append(Atom(Fraction(3, 2) * b.radius2 - n2, Sign.GT))
    body = map_atoms(matrix, lambda a: shell_normalize(a, normalized))
    body = fold_constants(body, closed=False)
    return conj(*shells, body)


# -- radical denesting -----------------------------------------------------


def shell_normalize(atom: Atom, blocks) -> BoolNode:
    """Rewrite sign(q(.., v * r_v/|v|, ..)) as a radical-free formula valid on
    the shells rho/2 < |v|^2 < 3 rho/2 of the given blocks.

    Writing q at the normalized argument of one block as
    (A + w B) / s^D with s = |v|^2 and w = sqrt(rho * s) > 0, the sign
    condition on A + w B is expressed through signs of A, B and
    A^2 - rho*s*B^2; blocks are processed one at a time.
    """
    node: BoolNode = atom
    for block in blocks:
        if block.radius2 is None:
            raise JoinError(f"cannot normalize box block {block.name!r}")
        node = map_atoms(node, lambda a, b=block: _denest(a, b))
    return fold_constants(node, closed=atom.sign.is_closed)


def _denest(atom: Atom, block: VarBlock) -> BoolNode:
    names = {block.name}
    dmax = atom.poly.degree_in(names)
    if dmax == 0:
        return atom
    rho = block.radius2
    s = squared_norm(block.name, block.n_coords)
    D = (dmax + 1) // 2
    a_part = Polynomial.zero()
    b_part = Polynomial.zero()
    for d, qd in atom.poly.split_by_degree_in(names).items():
        if d % 2 == 0:
            a_part = a_part + qd * (rho ** (d // 2)) * (s ** (D - d // 2))
        else:
            b_part = b_part + qd * (rho ** ((d - 1) // 2)) * (s ** (D - (d + 1) // 2))
    if b_part.is_zero():
        return Atom(a_part, atom.sign)
    if a_part.is_zero():
        return Atom(b_part, atom.sign)
    A, B = a_part, b_part
    diff = A * A - rho * s * (B * B)   # A^2 - rho*s*B^2
    prod = A * B
    sign = atom.sign
    if sign is Sign.GT:
        return Or((And((Atom(A, Sign.GT), Atom(B, Sign.GT))),
                   And((Atom(B, Sign.GT), Atom(diff, Sign.LT))),
                   And((Atom(A, Sign.GT), Atom(diff, Sign.GT)))))
    if sign is Sign.LT:
        return Or((And((Atom(A, Sign.LT), Atom(B, Sign.LT))),
                   And((Atom(B, Sign.LT), Atom(diff, Sign.LT))),
                   And((Atom(A, Sign.LT), Atom(diff, Sign.GT)))))
    if sign is Sign.GE:
        return Or((And((Atom(A, Sign.GE), Atom(B, Sign.GE))),
                   And((Atom(B, Sign.GE), Atom(diff, Sign.LE))),
                   And((Atom(A, Sign.GE), Atom(diff, Sign.GE)))))
    if sign is Sign.LE:
        return Or((And((Atom(A, Sign.LE), Atom(B, Sign.LE))),
                   And((Atom(B, Sign.LE), Atom(diff, Sign.LE))),
                   And((Atom(A, Sign.LE), Atom(diff, Sign.GE)))))
    if sign is Sign.EQ:
        return And((Atom(diff, Sign.EQ), Atom(prod, Sign.LE)))
    return Or((Atom(diff, Sign.NE), Atom(prod, Sign.GT)))


def fold_constants(node: BoolNode, closed: bool) -> BoolNode:
    """Fold atoms with constant polynomials; the surviving constant (if the
    whole node is decided) keeps the requested topological polarity."""
    true_atom = Atom(Polynomial.zero(), Sign.EQ) if closed else Atom(Polynomial.const(1), Sign.GT)
    false_atom = Atom(Polynomial.const(-1), Sign.GE) if closed else Atom(Polynomial.zero(), Sign.GT)

    def walk(n: BoolNode):
        """Returns True / False / simplified node."""
        if isinstance(n, Atom):
            if n.poly.is_constant():
                return n.sign.holds(n.poly.constant_value())
            return n
        if isinstance(n, Not):
            inner = walk(n.child)
            if isinstance(inner, bool):
                return not inner
            return Not(inner)
        results = [walk(c) for c in n.children]
        if isinstance(n, And):
            if any(r is False for r in results):
                return False
            kept = [r for r in results if not isinstance(r, bool)]
            if not kept:
                return True
            return conj(*kept)
        if any(r is True for r in results):
            return True
        kept = [r for r in results if not isinstance(r, bool)]
        if not kept:
            return False
        return disj(*kept)

    result = walk(node)
    if result is True:
        return true_atom
    if result is False:
        return false_atom
    return result
