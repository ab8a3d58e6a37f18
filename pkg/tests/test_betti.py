import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherec.betti import (BettiEstimate, InconsistentBettiError,
                           PoincarePolynomial)
from spherec.reducer import (CoeffStage, DualDirection, StageKind,
                             apply_chain, apply_chain_partial, dual_betti,
                             needed_theta_degrees, truncate)

P = PoincarePolynomial
IDENT = CoeffStage(StageKind.IDENTITY)


def test_trailing_zeros_trimmed():
    assert P((1, 0, 0)).coeffs == (1,)
    assert P((0, 0)).coeffs == ()
    assert P((1, 2)) == P((1, 2, 0))


def test_negative_rejected():
    with pytest.raises(InconsistentBettiError):
        P((1, -1))


def test_eval_at_zero():
    assert P((3, 1))(0) == 3
    assert P(())(0) == 0


def test_truncate_examples():
    assert truncate(P((1, 1, 0, 0, 0, 3)), 2) == P((1, 1))
    assert truncate(P((2, 1)), 0) == P((2,))
    assert truncate(P((1, 2)), 5) == P((1, 2))


def test_dual_equator_circle():
    assert dual_betti(P((2,)), 2, DualDirection.CLOSED_K) == P((1, 1))


def test_dual_empty():
    assert dual_betti(P((1, 0, 1)), 2, DualDirection.CLOSED_K) == P(())


def test_dual_two_points():
    assert dual_betti(P((1, 1)), 2, DualDirection.CLOSED_K) == P((2,))


def test_dual_inverse_roundtrip():
    fixtures = [P(()), P((1,)), P((2,)), P((1, 1)), P((1, 0, 1)), P((3,))]
    for vec in fixtures:
        k = dual_betti(vec, 2, DualDirection.CLOSED_K)
        assert dual_betti(k, 2, DualDirection.OPEN_K) == vec


def test_dual_low_dim_cases():
    assert dual_betti(P(()), 0, DualDirection.CLOSED_K) == P((2,))
    assert dual_betti(P((1,)), 0, DualDirection.CLOSED_K) == P((1,))
    assert dual_betti(P((2,)), 0, DualDirection.CLOSED_K) == P(())
    assert dual_betti(P(()), 1, DualDirection.CLOSED_K) == P((1, 1))
    assert dual_betti(P((1, 1)), 1, DualDirection.CLOSED_K) == P(())
    assert dual_betti(P((4,)), 1, DualDirection.CLOSED_K) == P((4,))
    # same maps in the open direction for n <= 1
    assert dual_betti(P((2,)), 0, DualDirection.OPEN_K) == P(())
    assert dual_betti(P((4,)), 1, DualDirection.OPEN_K) == P((4,))


def test_dual_inconsistent_inputs():
    with pytest.raises(InconsistentBettiError):
        dual_betti(P((3,)), 0, DualDirection.CLOSED_K)
    with pytest.raises(InconsistentBettiError):
        dual_betti(P((1, 2)), 1, DualDirection.CLOSED_K)


def test_apply_chain_examples():
    assert apply_chain([IDENT], P((1, 2))) == P((1, 2))
    tr = CoeffStage(StageKind.TRUNCATE, 1)
    assert apply_chain([IDENT, tr], P((1, 2, 0, 1))) == P((1, 2))
    dual = CoeffStage(StageKind.DUALITY, 2, DualDirection.CLOSED_K)
    assert apply_chain([IDENT, CoeffStage(StageKind.TRUNCATE, 2), dual],
                       P((2,))) == P((1, 1))


def test_apply_chain_empty_rejected():
    with pytest.raises(Exception):
        apply_chain([], P((1,)))


def test_needed_degrees():
    chain = (IDENT, CoeffStage(StageKind.TRUNCATE, 0))
    assert needed_theta_degrees(chain) == {0}
    chain = (IDENT, CoeffStage(StageKind.DUALITY, 0, DualDirection.CLOSED_K))
    assert needed_theta_degrees(chain) == {0}
    chain = (IDENT,
             CoeffStage(StageKind.DUALITY, 5, DualDirection.OPEN_K),
             CoeffStage(StageKind.DUALITY, 0, DualDirection.CLOSED_K))
    assert needed_theta_degrees(chain) == {4, 5}
    chain = (IDENT,
             CoeffStage(StageKind.DUALITY, 5, DualDirection.CLOSED_K),
             CoeffStage(StageKind.TRUNCATE, 0))
    assert needed_theta_degrees(chain) == {4, 5}


def test_partial_matches_full_on_needed():
    chain = (IDENT,
             CoeffStage(StageKind.DUALITY, 3, DualDirection.CLOSED_K),
             CoeffStage(StageKind.TRUNCATE, 0))
    full_in = P((1, 0, 1, 0))
    full = apply_chain(chain, full_in)
    part = apply_chain_partial(chain, {i: full_in.coeff(i) for i in range(4)}, {0})
    assert part[0] == full.coeff(0)


@given(st.lists(st.integers(0, 5), max_size=6), st.integers(0, 5))
@settings(max_examples=50, deadline=None)
def test_truncate_idempotent(coeffs, m):
    p = P(tuple(coeffs))
    assert truncate(truncate(p, m), m) == truncate(p, m)
    if p.degree <= m:
        assert truncate(p, m) == p


def test_estimate_poincare():
    est = BettiEstimate({0: 2, 1: 1}, True)
    assert est.poincare() == P((2, 1))
    assert est.covers({0, 1})
    assert not est.covers({0, 2})
