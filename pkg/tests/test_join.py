"""Join builder tests, including the independent template evaluator:
membership in the emitted formula must coincide with a from-scratch
evaluation of the Theta1/Theta2/Theta3 conditions computed directly from
the layout, on exact rational points of the output sphere."""
from fractions import Fraction

import numpy as np
import pytest

from spherec.formula import (And, Atom, Formula, Or, Point, PrefixGroup,
                             Quantifier, Sign, TopologyClass, VarBlock,
                             classify_topology, eval_formula, eval_node,
                             restrict_fiber)
from spherec.join import (JoinError, JoinSpec, JoinVariant,
                          NameCollisionError, build_closed_join,
                          build_open_join, join_prenex, pull_quantifiers)
from spherec.points import rational_point_for
from spherec.poly import Polynomial

X0 = VarBlock("X", 0)
Y0 = VarBlock("Y", 0)
Y1 = VarBlock("Y", 1)
TRUE = Atom(Polynomial.zero(), Sign.EQ)
TRUE_OPEN = Atom(Polynomial.const(1), Sign.GT)
FALSE_CLOSED = Atom(Polynomial.const(-1), Sign.GE)


def closed_spec(px, py, p, **kw):
    return JoinSpec((px,), (py,), p=p, variant=JoinVariant.CLOSED, **kw)


def open_spec(px, py, p, **kw):
    return JoinSpec((px,), (py,), p=p, variant=JoinVariant.OPEN, **kw)


def test_paper_variable_count():
    # k=0, l=1, p=1: N = (k+1) + (p+1)(l+2) = 1 + 2*3 = 7, ambient N+1 = 8
    out = build_closed_join(Formula((X0, Y1), (), TRUE), closed_spec(X0, Y1, 1))
    assert out.n_total_coords() == 8
    res = join_prenex(Formula((X0, Y1), (), TRUE), closed_spec(X0, Y1, 1))
    assert res.layout.N == 7
    assert res.layout.R2 == 5           # p + 4 for a unit parameter sphere


def test_closed_output_is_closed():
    out = build_closed_join(Formula((X0, Y1), (), TRUE), closed_spec(X0, Y1, 1))
    assert classify_topology(out) is TopologyClass.CLOSED
    assert len(out.free_blocks) == 2
    assert out.free_blocks[1].radius2 == 4   # R^2 minus the unit parameter


def test_open_output_is_open():
    out = build_open_join(Formula((X0, Y1), (), TRUE_OPEN), open_spec(X0, Y1, 1))
    assert classify_topology(out) is TopologyClass.OPEN


def test_open_theta1_bounds_p1():
    res = join_prenex(Formula((X0, Y1), (), TRUE_OPEN), open_spec(X0, Y1, 1))
    assert res.layout.R2 == 6           # 2p + 4 for unit parameter sphere
    from spherec.sexpr import print_formula
    text = print_formula(res.formula)
    assert "(mono -3/4)" in text        # sum T_i > 3/4
    assert "(mono 5/4)" in text         # sum T_i < 5/4


def test_closed_requires_closed_input():
    with pytest.raises(JoinError):
        build_closed_join(Formula((X0, Y1), (), TRUE_OPEN), closed_spec(X0, Y1, 1))


def test_open_requires_open_input():
    with pytest.raises(JoinError):
        build_open_join(Formula((X0, Y1), (), TRUE), open_spec(X0, Y1, 1))


def test_name_collision():
    taken = VarBlock("T#1", 0)
    with pytest.raises(NameCollisionError):
        build_closed_join(Formula((taken, Y1), (), TRUE), closed_spec(taken, Y1, 1))


def test_unsatisfiable_matrix_gives_empty_join():
    out = build_closed_join(Formula((X0, Y0), (), FALSE_CLOSED), closed_spec(X0, Y0, 1))
    rng = np.random.default_rng(0)
    for _ in range(200):
        pt = rational_point_for(out.free_blocks, rng)
        assert not eval_formula(out, pt)


def test_pull_quantifiers_structure():
    z = VarBlock("Z", 0)
    w = VarBlock("W", 1)
    matrix = Atom(Polynomial.coord("Z", 0) * Polynomial.coord("W", 0), Sign.GE)
    psi = Formula((X0, Y0, z), (PrefixGroup(Quantifier.EXISTS, (w,)),), matrix)
    spec = JoinSpec((X0, Y0), (z,), p=1, variant=JoinVariant.CLOSED)
    res = join_prenex(psi, spec)
    out = res.formula
    assert len(out.prefix) == 1
    group = out.prefix[0]
    assert group.quantifier is Quantifier.EXISTS
    assert [b.name for b in group.blocks] == ["W#0", "W#1"]
    # free+bound coordinate audit: N+1 plus (p+1) copies of the inner block
    expected = (res.layout.N + 1) + 2 * w.n_coords
    assert out.n_total_coords() == expected


def test_pull_quantifiers_identity_without_inner():
    psi = Formula((X0, Y1), (), TRUE)
    out = pull_quantifiers(psi, closed_spec(X0, Y1, 1))
    assert out.prefix == ()


def _strip_constant_atoms(node):
    from spherec.join import fold_constants
    return fold_constants(node, closed=True)


def test_fiber_compatibility_structural():
    """Same matrix after renaming: build the join of phi and of its fiber
    restriction and compare matrices modulo constant-true conjuncts."""
    X = VarBlock("X", 0)
    Y = VarBlock("Y", 1)
    matrix = Atom(Polynomial.coord("X", 0) * Polynomial.coord("Y", 0)
                  - Fraction(1, 2), Sign.GE)
    phi = Formula((X, Y), (), matrix)
    x_val = (Fraction(1),)

    joined = build_closed_join(phi, JoinSpec((X,), (Y,), p=1, variant=JoinVariant.CLOSED))
    lhs = restrict_fiber(joined, "X", x_val)
    phi_x = restrict_fiber(phi, "X", x_val)
    rhs = build_closed_join(phi_x, JoinSpec((), (Y,), p=1, variant=JoinVariant.CLOSED))
    lhs_matrix = _strip_constant_atoms(lhs.matrix)
    rhs_matrix = _strip_constant_atoms(rhs.matrix)
    assert lhs.free_blocks == rhs.free_blocks
    assert lhs_matrix == rhs_matrix


# -- independent template evaluation ----------------------------------------


def direct_theta_eval(phi: Formula, spec: JoinSpec, layout, point: Point) -> bool:
    """From-scratch evaluation of the three template conditions, reading
    segments straight from the layout; shares no code with the builder."""
    assign = point.assignment()
    v = point.values[layout.super_block.name]
    p = spec.p

    def seg(off, n):
        return [v[off + i] for i in range(n)]

    def norm2(vals):
        return sum(c * c for c in vals)

    params = {}
    for b in layout.kept_param:
        params[b.name] = list(point.values[b.name])
    for name, off, n, rho in layout.folded_param:
        params[name] = seg(off, n)
    t = seg(layout.t_offset, p + 1)
    u = v[layout.u_offset]
    copies = [[(name, seg(off, n), rho) for name, off, n, rho in inst]
              for inst in layout.copies]

    def phi_instance(i) -> bool:
        inst_assign = dict()
        for name, vals in params.items():
            for j, val in enumerate(vals):
                inst_assign[(name, j)] = val
        for name, vals, rho in copies[i]:
            orig = name.rsplit("#", 1)[0]
            for j, val in enumerate(vals):
                inst_assign[(orig, j)] = val
        return eval_node(phi.matrix, inst_assign)

    if spec.variant is JoinVariant.CLOSED:
        theta1 = all(ti >= 0 for ti in t) and sum(t) == 1
        theta2 = all(Fraction(norm2(vals)) == spec.param_blocks[k].radius2
                     for k, (name, vals) in enumerate(params.items()))
        for i in range(p + 1):
            for name, vals, rho in copies[i]:
                theta2 = theta2 and norm2(vals) <= rho
            on_spheres = all(Fraction(norm2(vals)) == rho for _, vals, rho in copies[i])
            theta2 = theta2 and (t[i] == 0 or (phi_instance(i) and on_spheres))
        total = u * u + sum(norm2(vals) for vals in params.values()) \
            + sum(norm2(vals) for inst in copies for _, vals, _ in inst) + norm2(t)
        theta3 = total == layout.R2 and u >= 0
        return bool(theta1 and theta2 and theta3)

    eps = Fraction(1, 2 * (p + 1))
    theta1 = all(ti > 0 for ti in t) and (1 - eps) < sum(t) < (1 + eps)
    theta2 = True
    for i in range(p + 1):
        for name, vals, rho in copies[i]:
            theta2 = theta2 and norm2(vals) < Fraction(3, 2) * rho
        if not (t[i] < eps or _phi_plus_direct(phi, params, copies[i], spec)):
            theta2 = False
    total = u * u + sum(norm2(vals) for vals in params.values()) \
        + sum(norm2(vals) for inst in copies for _, vals, _ in inst) + norm2(t)
    theta3 = total == layout.R2 and u > 0
    return bool(theta1 and theta2 and theta3)


def _phi_plus_direct(phi, params, copy, spec) -> bool:
    import math

    def norm2(vals):
        return sum(float(c) * float(c) for c in vals)

    rho_of = {b.name: float(b.radius2) for b in spec.param_blocks}
    assign = {}
    for name, vals in params.items():
        n2 = norm2(vals)
        rho = rho_of[name]
        if not rho / 2 < n2 < 3 * rho / 2:
            return False
        scale = math.sqrt(rho / n2)
        for j, val in enumerate(vals):
            assign[(name, j)] = float(val) * scale
    for name, vals, rho in copy:
        n2 = norm2(vals)
        if not float(rho) / 2 < n2 < 3 * float(rho) / 2:
            return False
        scale = math.sqrt(float(rho) / n2)
        orig = name.rsplit("#", 1)[0]
        for j, val in enumerate(vals):
            assign[(orig, j)] = float(val) * scale
    return eval_node(phi.matrix, assign)


PHI_CASES = [
    ("product ge", Formula((X0, Y1), (),
     Atom(Polynomial.coord("X", 0) * Polynomial.coord("Y", 0) - Fraction(1, 3), Sign.GE))),
    ("conj", Formula((X0, Y1), (), And((
        Atom(Polynomial.coord("Y", 0) + Polynomial.coord("Y", 1), Sign.GE),
        Atom(Polynomial.coord("X", 0) - Fraction(1, 2), Sign.LE))))),
]


@pytest.mark.parametrize("name,phi", PHI_CASES)
def test_closed_template_fidelity(name, phi):
    spec = closed_spec(X0, Y1, 1)
    res = join_prenex(phi, spec)
    rng = np.random.default_rng(17)
    agree = 0
    for _ in range(300):
        pt = rational_point_for(res.formula.free_blocks, rng)
        lhs = eval_formula(res.formula, pt)
        rhs = direct_theta_eval(phi, spec, res.layout, pt)
        assert lhs == rhs
        agree += 1
    assert agree == 300
