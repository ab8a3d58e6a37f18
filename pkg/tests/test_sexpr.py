from fractions import Fraction

import numpy as np
import pytest

from spherec.formula import (AlternationError, Atom, Formula, Quantifier,
                             Sign, UnknownVariableError, VarBlock)
from spherec.poly import Polynomial
from spherec.sexpr import FormulaSyntaxError, parse_formula, print_formula

GOLDEN = [
    "(sentence (prefix (exists Z 1)) (body (atom >= (poly (mono 1 (Z.0 1))) 0)))",
    "(sentence (free (X 1)) (body (atom = (poly (mono 1 (X.0 2)) (mono 1 (X.1 2)) (mono -1)) 0)))",
    "(sentence (free (X 0) (Y 2)) (prefix (forall Z 1) (exists W 0)) "
    "(body (and (atom > (poly (mono 1/2 (X.0 1) (Z.1 2))) 0) "
    "(or (atom != (poly (mono -1)) 0) (atom <= (poly (mono 3 (W.0 1)) (mono -2/3)) 0)))))",
    "(sentence (free (V 5 23)) (body (atom >= (poly (mono 1 (V.0 1))) 0)))",
    "(sentence (free (P 1 free)) (body (atom <= (poly (mono 1 (P.0 2)) (mono 1 (P.1 2)) (mono -1)) 0)))",
]


@pytest.mark.parametrize("src", GOLDEN)
def test_roundtrip_structural(src):
    f = parse_formula(src)
    assert parse_formula(print_formula(f)) == f


def test_parse_basic_sentence():
    f = parse_formula(GOLDEN[0])
    assert f.prefix[0].quantifier is Quantifier.EXISTS
    assert f.prefix[0].blocks[0] == VarBlock("Z", 1)
    assert f.free_blocks == ()


def test_print_is_canonical_rational():
    f = Formula((VarBlock("X", 0),), (),
                Atom(Polynomial.coord("X", 0, 1, Fraction(2, 4)), Sign.GE))
    assert "(mono 1/2 (X.0 1))" in print_formula(f)


def test_print_parse_idempotent():
    for src in GOLDEN:
        once = print_formula(parse_formula(src))
        twice = print_formula(parse_formula(once))
        assert once == twice


def test_alternation_violation_reported():
    bad = ("(sentence (prefix (exists A 1) (exists B 1)) "
           "(body (atom >= (poly (mono 1 (A.0 1))) 0)))")
    with pytest.raises(AlternationError):
        parse_formula(bad)


def test_unknown_variable_reported():
    bad = "(sentence (prefix (exists Z 1)) (body (atom >= (poly (mono 1 (W.0 1))) 0)))"
    with pytest.raises(UnknownVariableError):
        parse_formula(bad)


def test_out_of_range_coordinate_reported():
    bad = "(sentence (prefix (exists Z 1)) (body (atom >= (poly (mono 1 (Z.5 1))) 0)))"
    with pytest.raises(UnknownVariableError):
        parse_formula(bad)


def test_syntax_error_has_position():
    with pytest.raises(FormulaSyntaxError) as err:
        parse_formula("(sentence (body (atom >= poly 0)))")
    assert err.value.line == 1
    assert err.value.col > 0


def test_zero_poly_prints():
    f = Formula((VarBlock("X", 0),), (), Atom(Polynomial.zero(), Sign.EQ))
    text = print_formula(f)
    assert "(poly (mono 0))" in text
    assert parse_formula(text) == f


def test_empty_body_rejected():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("(sentence (body (and)))")


def test_missing_body_rejected():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("(sentence (free (X 1)))")


def test_random_formulas_roundtrip():
    rng = np.random.default_rng(11)
    signs = list(Sign)
    for _ in range(50):
        n_atoms = int(rng.integers(1, 4))
        atoms = []
        for _ in range(n_atoms):
            poly = Polynomial.const(Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 5))))
            for _ in range(int(rng.integers(0, 3))):
                poly = poly + Polynomial.coord(
                    "X", int(rng.integers(0, 3)), int(rng.integers(1, 3)),
                    Fraction(int(rng.integers(-3, 4)) or 1))
            atoms.append(Atom(poly, signs[int(rng.integers(0, len(signs)))]))
        from spherec.formula import And, Or
        matrix = atoms[0] if len(atoms) == 1 else \
            (And(tuple(atoms)) if rng.integers(0, 2) else Or(tuple(atoms)))
        f = Formula((VarBlock("X", 2),), (), matrix)
        assert parse_formula(print_formula(f)) == f
