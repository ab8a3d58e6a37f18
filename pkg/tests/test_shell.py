"""Shell normalization: the radical-free rewrite must agree with direct
float evaluation of the polynomial at radially normalized arguments on
the shells, away from a small sign boundary."""
import math
from fractions import Fraction

import numpy as np
import pytest

from spherec.compiled import CompiledFormula
from spherec.formula import Atom, Sign, VarBlock, eval_node
from spherec.join import shell_normalize
from spherec.poly import Polynomial

X = VarBlock("X", 1)
Y = VarBlock("Y", 1)


def shell_point(rng, n, rho=1.0):
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    return v * math.sqrt(rho * rng.uniform(0.55, 1.45))


def eval_normalized(poly, blocks, assign):
    scaled = {}
    for b in blocks:
        vals = [assign[(b.name, i)] for i in range(b.n_coords)]
        n = math.sqrt(sum(v * v for v in vals))
        for i, v in enumerate(vals):
            scaled[(b.name, i)] = v / n * math.sqrt(float(b.radius2))
    for coord, v in assign.items():
        scaled.setdefault(coord, v)
    return poly.evaluate(scaled)


def test_even_degree_fast_path():
    q = Polynomial.coord("X", 0, 2) - Polynomial.coord("X", 1, 2)
    node = shell_normalize(Atom(q, Sign.GT), [X])
    assert node == Atom(q, Sign.GT)


def test_linear_fast_path():
    q = Polynomial.coord("X", 0)
    node = shell_normalize(Atom(q, Sign.GT), [X])
    assert node == Atom(q, Sign.GT)


def test_untouched_blocks_pass_through():
    q = Polynomial.coord("Y", 0)
    node = shell_normalize(Atom(q, Sign.GT), [X])
    assert node == Atom(q, Sign.GT)


@pytest.mark.parametrize("sign", [Sign.GT, Sign.GE, Sign.LT, Sign.LE, Sign.EQ, Sign.NE])
def test_single_block_mixed_parity(sign):
    rng = np.random.default_rng(int(sign.value.encode()[0]))
    q = (Polynomial.coord("X", 0, 2, Fraction(2)) + Polynomial.coord("X", 1)
         - Fraction(1, 3))
    node = shell_normalize(Atom(q, sign), [X])
    for _ in range(500):
        pt = shell_point(rng, 2)
        assign = {("X", 0): pt[0], ("X", 1): pt[1]}
        val = eval_normalized(q, [X], assign)
        if abs(val) <= 1e-9:
            continue
        assert eval_node(node, assign) == sign.holds(val)


def test_two_block_cubic_agreement():
    rng = np.random.default_rng(23)
    for trial in range(6):
        q = Polynomial.zero()
        for _ in range(4):
            term = Polynomial.const(Fraction(int(rng.integers(-2, 3)) or 1))
            for _ in range(int(rng.integers(1, 4))):
                name = "X" if rng.integers(0, 2) else "Y"
                term = term * Polynomial.coord(name, int(rng.integers(0, 2)))
            q = q + term
        if q.is_zero():
            continue
        node = shell_normalize(Atom(q, Sign.GT), [X, Y])
        mismatches = 0
        for _ in range(1000):
            px = shell_point(rng, 2)
            py = shell_point(rng, 2)
            assign = {("X", 0): px[0], ("X", 1): px[1],
                      ("Y", 0): py[0], ("Y", 1): py[1]}
            val = eval_normalized(q, [X, Y], assign)
            if abs(val) <= 1e-9:
                continue
            if eval_node(node, assign) != (val > 0):
                mismatches += 1
        assert mismatches == 0


def test_nonunit_radius_normalization():
    V = VarBlock("V", 2, Fraction(7))
    q = Polynomial.coord("V", 0) + Polynomial.coord("V", 1, 2) - 2
    node = shell_normalize(Atom(q, Sign.GT), [V])
    rng = np.random.default_rng(5)
    for _ in range(500):
        pt = shell_point(rng, 3, rho=7.0)
        assign = {("V", i): pt[i] for i in range(3)}
        val = eval_normalized(q, [V], assign)
        if abs(val) <= 1e-9:
            continue
        assert eval_node(node, assign) == (val > 0)


def test_output_polarity_matches_input():
    from spherec.formula import Formula, classify_topology, TopologyClass
    q = Polynomial.coord("X", 0, 2) + Polynomial.coord("X", 1) - Fraction(1, 5)
    strict = shell_normalize(Atom(q, Sign.GT), [X])
    closed = shell_normalize(Atom(q, Sign.GE), [X])
    f_strict = Formula((X,), (), strict)
    f_closed = Formula((X,), (), closed)
    assert classify_topology(f_strict) is TopologyClass.OPEN
    assert classify_topology(f_closed) is TopologyClass.CLOSED
