from fractions import Fraction

import numpy as np
import pytest

from spherec.formula import (AlternationError, And, Atom, Formula,
                             FormulaError, MissingAssignmentError, Not,
                             OffSphereError, Or, Point, PrefixGroup,
                             Quantifier, Sign, TopologyClass, VarBlock,
                             classify_topology, eval_formula, restrict_fiber,
                             to_nnf_complement)
from spherec.points import rational_point_for
from spherec.poly import Polynomial


def coord(n, i):
    return Polynomial.coord(n, i)


X = VarBlock("X", 1)
Y = VarBlock("Y", 1)


def qf(matrix, blocks=(X,)):
    return Formula(tuple(blocks), (), matrix)


def test_eval_atom_ge():
    f = qf(Atom(coord("X", 0), Sign.GE))
    assert eval_formula(f, Point({"X": (Fraction(1), Fraction(0))}))


def test_eval_pythagorean_point():
    f = qf(Atom(coord("X", 0) ** 2 + coord("X", 1) ** 2 - 1, Sign.EQ))
    assert eval_formula(f, Point({"X": (Fraction(3, 5), Fraction(4, 5))}))


def test_eval_not():
    f = qf(Not(Atom(coord("X", 0), Sign.GT)))
    assert eval_formula(f, Point({"X": (Fraction(0), Fraction(1))}))


def test_eval_requires_assignment():
    f = qf(Atom(coord("X", 0), Sign.GE))
    with pytest.raises(MissingAssignmentError):
        eval_formula(f, Point({"Z": (Fraction(1), Fraction(0))}))


def test_point_off_sphere_rejected():
    f = qf(Atom(coord("X", 0), Sign.GE))
    with pytest.raises(OffSphereError):
        eval_formula(f, Point({"X": (Fraction(1), Fraction(1))}))


def test_nnf_atom():
    f = qf(Atom(coord("X", 0), Sign.GE))
    g = to_nnf_complement(f)
    assert g.matrix == Atom(coord("X", 0), Sign.LT)


def test_nnf_de_morgan_with_prefix():
    z = VarBlock("Z", 1)
    inner = And((Atom(coord("Z", 0), Sign.GE), Atom(coord("Z", 1), Sign.EQ)))
    f = Formula((), (PrefixGroup(Quantifier.FORALL, (z,)),), inner)
    g = to_nnf_complement(f)
    assert g.prefix[0].quantifier is Quantifier.EXISTS
    assert g.matrix == Or((Atom(coord("Z", 0), Sign.LT), Atom(coord("Z", 1), Sign.NE)))


def test_nnf_double_complement_pointwise():
    rng = np.random.default_rng(3)
    matrix = Or((And((Atom(coord("X", 0) * coord("Y", 0) - Fraction(1, 3), Sign.GE),
                      Atom(coord("X", 1), Sign.LT))),
                 Atom(coord("Y", 1) ** 2 - coord("X", 0), Sign.NE)))
    f = Formula((X, Y), (), matrix)
    g = to_nnf_complement(to_nnf_complement(f))
    for _ in range(200):
        pt = rational_point_for([X, Y], rng)
        assert eval_formula(f, pt) == eval_formula(g, pt)


def test_nnf_complement_negates_pointwise():
    rng = np.random.default_rng(4)
    matrix = And((Atom(coord("X", 0) - Fraction(1, 7), Sign.GE),
                  Atom(coord("X", 1) + coord("X", 0), Sign.LE)))
    f = qf(matrix)
    g = to_nnf_complement(f)
    for _ in range(200):
        pt = rational_point_for([X], rng)
        assert eval_formula(g, pt) == (not eval_formula(f, pt))


def test_classify():
    closed = qf(And((Atom(coord("X", 0), Sign.GE), Atom(coord("X", 1), Sign.EQ))))
    open_ = qf(Or((Atom(coord("X", 0), Sign.GT), Atom(coord("X", 1), Sign.LT))))
    mixed = qf(And((Atom(coord("X", 0), Sign.GE), Atom(coord("X", 1), Sign.GT))))
    negged = qf(Not(Atom(coord("X", 0), Sign.GE)))
    assert classify_topology(closed) is TopologyClass.CLOSED
    assert classify_topology(open_) is TopologyClass.OPEN
    assert classify_topology(mixed) is TopologyClass.UNKNOWN
    assert classify_topology(negged) is TopologyClass.UNKNOWN


def test_classify_flips_under_complement():
    closed = qf(And((Atom(coord("X", 0), Sign.GE), Atom(coord("X", 1), Sign.EQ))))
    assert classify_topology(to_nnf_complement(closed)) is TopologyClass.OPEN
    open_ = to_nnf_complement(closed)
    assert classify_topology(to_nnf_complement(open_)) is TopologyClass.CLOSED


def test_restrict_fiber_substitutes():
    f = Formula((X, Y), (), Atom(coord("X", 0) * coord("Y", 0), Sign.GE))
    g = restrict_fiber(f, X, (Fraction(1), Fraction(0)))
    assert g.free_blocks == (Y,)
    assert g.matrix == Atom(coord("Y", 0), Sign.GE)


def test_restrict_fiber_constant_atom():
    f = Formula((X, Y), (), Atom(coord("X", 0) * coord("Y", 0), Sign.GE))
    g = restrict_fiber(f, X, (Fraction(0), Fraction(1)))
    assert g.matrix == Atom(Polynomial.zero(), Sign.GE)
    assert eval_formula(g, Point({"Y": (Fraction(1), Fraction(0))}))


def test_restrict_fiber_off_sphere():
    f = Formula((X, Y), (), Atom(coord("X", 0), Sign.GE))
    with pytest.raises(OffSphereError):
        restrict_fiber(f, X, (Fraction(1), Fraction(1)))
    with pytest.raises(OffSphereError):
        restrict_fiber(f, X, (Fraction(1),))


def test_restrict_eval_commutes():
    rng = np.random.default_rng(5)
    matrix = Or((Atom(coord("X", 0) * coord("Y", 1) - Fraction(1, 5), Sign.GE),
                 Atom(coord("X", 1) ** 2 - coord("Y", 0), Sign.LE)))
    f = Formula((X, Y), (), matrix)
    for _ in range(200):
        pt = rational_point_for([X, Y], rng)
        restricted = restrict_fiber(f, X, pt.values["X"])
        lhs = eval_formula(restricted, Point({"Y": pt.values["Y"]}))
        assert lhs == eval_formula(f, pt)


def test_alternation_enforced():
    z1, z2 = VarBlock("A", 0), VarBlock("B", 0)
    with pytest.raises(AlternationError):
        Formula((), (PrefixGroup(Quantifier.EXISTS, (z1,)),
                     PrefixGroup(Quantifier.EXISTS, (z2,))),
                Atom(coord("A", 0), Sign.GE))


def test_duplicate_names_rejected():
    with pytest.raises(FormulaError):
        Formula((X, VarBlock("X", 2)), (), Atom(coord("X", 0), Sign.GE))


def test_out_of_range_coordinate():
    with pytest.raises(FormulaError):
        qf(Atom(coord("X", 5), Sign.GE))
