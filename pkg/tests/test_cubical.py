from fractions import Fraction

import numpy as np
import pytest

from spherec.cubical import (ChainComplex, betti_ranks, build_cubical_complex,
                             from_graph, poincare_cubical)
from spherec.compiled import CompiledFormula
from spherec.fixtures import (annulus, circle_band, solid_disk, sphere_band,
                              two_disks)
from spherec.formula import FormulaError, Formula, VarBlock, Atom, Sign
from spherec.poly import Polynomial
from spherec import gf2


def test_betti_ranks_cycle_graph():
    edges = [(i, (i + 1) % 8) for i in range(8)]
    assert betti_ranks(from_graph(8, edges)) == (1, 1)


def test_betti_ranks_two_edges():
    assert betti_ranks(from_graph(4, [(0, 1), (2, 3)])) == (2, 0)


def test_betti_ranks_filled_square():
    # four vertices, four edges, one 2-cell whose boundary is all edges
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    chain = from_graph(4, edges)
    face = gf2.column([0, 1, 2, 3])
    complex_ = ChainComplex(chain.n_cells + [1], chain.boundaries + [[face]])
    assert betti_ranks(complex_) == (1, 0, 0)


def test_betti_ranks_field_guard():
    with pytest.raises(ValueError):
        betti_ranks(from_graph(2, [(0, 1)]), field=3)


def test_gf2_rank():
    assert gf2.rank([0b11, 0b01, 0b10]) == 2
    assert gf2.rank([0, 0]) == 0
    assert gf2.rank([0b111, 0b011, 0b100]) == 2


def test_circle_band():
    est = poincare_cubical(circle_band(), [(-2, 2)], 64)
    assert dict(est.betti) == {0: 1, 1: 1}
    assert est.converged


def test_solid_disk():
    est = poincare_cubical(solid_disk(), [(-2, 2)], 64)
    assert dict(est.betti) == {0: 1, 1: 0}
    assert est.converged


def test_two_disks():
    est = poincare_cubical(two_disks(), [(-2, 2)], 64)
    assert dict(est.betti) == {0: 2, 1: 0}
    assert est.converged


def test_annulus():
    est = poincare_cubical(annulus(), [(-2, 2)], 64)
    assert dict(est.betti) == {0: 1, 1: 1}
    assert est.converged


def test_sphere_band():
    est = poincare_cubical(sphere_band(), [(-2, 2)], 32)
    assert dict(est.betti) == {0: 1, 1: 0, 2: 1}
    assert est.converged


def test_boundary_squared_zero_and_euler():
    f = annulus()
    coords = [c for b in f.free_blocks for c in b.coords()]
    cf = CompiledFormula(f.matrix, coords)
    complex_ = build_cubical_complex(cf, [(-2.0, 2.0)] * 2, 48, eps_eq=0.0)
    rng = np.random.default_rng(0)
    assert complex_.chain.boundary_squared_is_zero(rng)
    betti = complex_.chain.betti()
    chi_cells = sum((-1) ** i * n for i, n in enumerate(complex_.chain.n_cells))
    chi_betti = sum((-1) ** i * b for i, b in enumerate(betti))
    assert chi_cells == chi_betti


def test_empty_realization():
    b = VarBlock("P", 1, None)
    f = Formula((b,), (), Atom(Polynomial.const(-1), Sign.GE))
    est = poincare_cubical(f, [(-2, 2)], 16)
    assert dict(est.betti) == {0: 0, 1: 0}
    assert est.converged


def test_dimension_guard():
    b = VarBlock("P", 4, None)
    f = Formula((b,), (), Atom(Polynomial.coord("P", 0), Sign.GE))
    with pytest.raises(FormulaError):
        poincare_cubical(f, [(-1, 1)], 4)


def test_quantifier_guard():
    from spherec.formula import PrefixGroup, Quantifier
    b = VarBlock("P", 1, None)
    z = VarBlock("Z", 0)
    f = Formula((b,), (PrefixGroup(Quantifier.EXISTS, (z,)),),
                Atom(Polynomial.coord("P", 0), Sign.GE))
    with pytest.raises(FormulaError):
        poincare_cubical(f, [(-1, 1)], 8)
