"""Fixture formulas, sentence generation, and the verification suites.

Everything here is shared between the test suite and the CLI `verify`
subcommands: each suite function returns a list of per-case records with
a boolean "pass" entry.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .betti import PoincarePolynomial
from .brute import Decision, brute_decide
from .cubical import poincare_cubical
from .formula import (And, Atom, Formula, Or, PrefixGroup, Quantifier, Sign,
                      VarBlock)
from .join import JoinSpec, JoinVariant, join_prenex
from .oracles import OracleConfig, TraceOracle, join_starts
from .poly import Polynomial, squared_norm
from .reducer import (DualDirection, ReduceOptions, apply_chain, decide,
                      dual_betti, reduce_sentence, size_report)
from .sampled import poincare_sampled
from .sexpr import parse_formula

TRUE_CLOSED = Atom(Polynomial.zero(), Sign.EQ)


def _coord(name, i):
    return Polynomial.coord(name, i)


# -- homology fixture formulas ----------------------------------------------


def box_block(name: str, n_coords: int) -> VarBlock:
    return VarBlock(name, n_coords - 1, None)


def circle_band() -> Formula:
    b = box_block("P", 2)
    r2 = squared_norm("P", 2)
    return Formula((b,), (), And((Atom(r2 - Fraction(11, 10), Sign.LE),
                                  Atom(Fraction(9, 10) - r2, Sign.LE))))


def solid_disk() -> Formula:
    b = box_block("P", 2)
    return Formula((b,), (), Atom(squared_norm("P", 2) - 1, Sign.LE))


def two_disks() -> Formula:
    b = box_block("P", 2)
    p0, p1 = _coord("P", 0), _coord("P", 1)
    left = (p0 + 1) * (p0 + 1) + p1 * p1
    right = (p0 - 1) * (p0 - 1) + p1 * p1
    return Formula((b,), (), Or((Atom(left - Fraction(1, 4), Sign.LE),
                                 Atom(right - Fraction(1, 4), Sign.LE))))


def annulus() -> Formula:
    b = box_block("P", 2)
    r2 = squared_norm("P", 2)
    return Formula((b,), (), And((Atom(r2 - Fraction(3, 2), Sign.LE),
                                  Atom(Fraction(1, 2) - r2, Sign.LE))))


def sphere_band() -> Formula:
    b = box_block("P", 3)
    r2 = squared_norm("P", 3)
    return Formula((b,), (), And((Atom(r2 - Fraction(12, 10), Sign.LE),
                                  Atom(Fraction(8, 10) - r2, Sign.LE))))


def antipodal_caps() -> Formula:
    s2 = VarBlock("Z", 2)
    z2 = _coord("Z", 2)
    return Formula((s2,), (), Or((Atom(z2 - Fraction(9, 10), Sign.GE),
                                  Atom(z2 + Fraction(9, 10), Sign.LE))))


def great_circle() -> Formula:
    s2 = VarBlock("Z", 2)
    return Formula((s2,), (), Atom(_coord("Z", 0), Sign.EQ))


# -- sentence fixtures --------------------------------------------------------


@dataclass(frozen=True)
class SentenceCase:
    name: str
    formula: Formula
    expected: Decision


def omega2_sentences() -> list[SentenceCase]:
    """Hand-built robust sentences with two quantifier alternations over
    S^0/S^1 blocks (minimax slack well above the brute margin)."""
    def parse(name, src, want):
        return SentenceCase(name, parse_formula(src), want)

    return [
        parse("forall-exists S0 match", "(sentence (prefix (forall A 0) (exists B 0)) "
              "(body (atom >= (poly (mono 1 (A.0 1) (B.0 1)) (mono -1)) 0)))", Decision.TRUE),
        parse("forall-exists S0 sum", "(sentence (prefix (forall A 0) (exists B 0)) "
              "(body (atom >= (poly (mono 1 (A.0 1)) (mono 1 (B.0 1)) (mono -3)) 0)))", Decision.FALSE),
        parse("exists-forall S0 product", "(sentence (prefix (exists A 0) (forall B 0)) "
              "(body (atom >= (poly (mono 1 (A.0 2) (B.0 2)) (mono -1/2)) 0)))", Decision.TRUE),
        parse("forall-exists S1 align", "(sentence (prefix (forall A 1) (exists B 1)) "
              "(body (atom >= (poly (mono 1 (A.0 1) (B.0 1)) (mono 1 (A.1 1) (B.1 1)) (mono -1/2)) 0)))",
              Decision.TRUE),
        parse("exists-forall S1 align", "(sentence (prefix (exists A 1) (forall B 1)) "
              "(body (atom >= (poly (mono 1 (A.0 1) (B.0 1)) (mono 1 (A.1 1) (B.1 1)) (mono -1/2)) 0)))",
              Decision.FALSE),
    ]


def generate_level1_sentences(count_sigma: int = 20, count_pi: int = 5,
                              seed: int = 7, margin: float = 0.1) -> list[SentenceCase]:
    """Random one-quantifier sentences over blocks of dimension <= 2 with
    degree <= 2 closed matrices, filtered for a robustness margin: the
    minimax atom slack over a dense grid must clear the margin on
    whichever side decides the sentence."""
    rng = np.random.default_rng(seed)
    out: list[SentenceCase] = []
    want_sigma = {Decision.TRUE: (count_sigma + 1) // 2,
                  Decision.FALSE: count_sigma // 2}
    want_pi = {Decision.TRUE: (count_pi + 1) // 2, Decision.FALSE: count_pi // 2}
    attempts = 0
    while (sum(want_sigma.values()) or sum(want_pi.values())) and attempts < 4000:
        attempts += 1
        dim = int(rng.integers(1, 3))
        block = VarBlock("Z", dim)
        n_atoms = int(rng.integers(1, 3))
        atoms = []
        for _ in range(n_atoms):
            poly = Polynomial.const(Fraction(int(rng.integers(-2, 3)), int(rng.integers(1, 3))))
            for _ in range(int(rng.integers(1, 4))):
                i = int(rng.integers(0, dim + 1))
                deg = int(rng.integers(1, 3))
                coeff = Fraction(int(rng.integers(-2, 3)))
                if coeff == 0:
                    continue
                poly = poly + Polynomial.coord("Z", i, deg, coeff)
            atoms.append(Atom(poly, Sign.GE))
        matrix = atoms[0] if len(atoms) == 1 else \
            (And(tuple(atoms)) if rng.integers(0, 2) else Or(tuple(atoms)))
        quantifier = Quantifier.EXISTS if sum(want_sigma.values()) else Quantifier.FORALL
        f = Formula((), (PrefixGroup(quantifier, (block,)),), matrix)
        slack = _sentence_slack(f)
        if slack is None or abs(slack) < margin:
            continue
        expected = Decision.TRUE if slack > 0 else Decision.FALSE
        bucket = want_sigma if quantifier is Quantifier.EXISTS else want_pi
        if bucket.get(expected, 0) <= 0:
            continue
        bucket[expected] -= 1
        kind = "sigma1" if quantifier is Quantifier.EXISTS else "pi1"
        out.append(SentenceCase(f"{kind}-{len(out)}-{expected.value}", f, expected))
    if sum(want_sigma.values()) or sum(want_pi.values()):
        raise RuntimeError("sentence generation did not reach the requested counts")
    return out


def _sentence_slack(f: Formula) -> float | None:
    """Minimax slack of a single-quantifier sentence over a dense grid:
    positive iff true, magnitude = robustness margin estimate."""
    from .brute import sphere_grid
    group = f.prefix[0]
    block = group.blocks[0]
    grid = sphere_grid(block.sphere_dim, {0: 2, 1: 720, 2: 4000}[block.sphere_dim])

    def node_slack(node, assign):
        if isinstance(node, Atom):
            v = float(node.poly.evaluate(assign))
            if node.sign in (Sign.GE, Sign.GT):
                return v
            if node.sign in (Sign.LE, Sign.LT):
                return -v
            return None
        vals = [node_slack(c, assign) for c in node.children]
        if any(v is None for v in vals):
            return None
        return min(vals) if isinstance(node, And) else max(vals)

    best = None
    for pt in grid.points:
        assign = {(block.name, i): float(v) for i, v in enumerate(pt)}
        s = node_slack(f.matrix, assign)
        if s is None:
            return None
        if group.quantifier is Quantifier.EXISTS:
            best = s if best is None else max(best, s)
        else:
            best = s if best is None else min(best, s)
    return best


# -- verify suites -------------------------------------------------------------


def suite_duality() -> list[dict]:
    """Sphere-complement duality on analytically known fixtures."""
    cases = []
    P = PoincarePolynomial

    def check(name, got, want):
        cases.append({"case": name, "got": str(got), "want": str(want),
                      "pass": got == want})

    check("equator circle in S2", dual_betti(P((2,)), 2, DualDirection.CLOSED_K), P((1, 1)))
    check("empty set in S2", dual_betti(P((1, 0, 1)), 2, DualDirection.CLOSED_K), P(()))
    check("single point in S2", dual_betti(P((1,)), 2, DualDirection.CLOSED_K), P((1,)))
    check("two points in S2", dual_betti(P((1, 1)), 2, DualDirection.CLOSED_K), P((2,)))

    # n = 0: subsets of the two-point sphere
    for comp, want in [((0,), (2,)), ((1,), (1,)), ((2,), (0,))]:
        check(f"S0 complement {comp}", dual_betti(P(comp), 0, DualDirection.CLOSED_K), P(want))
    # n = 1: subsets of the circle
    for comp, want in [((0,), (1, 1)), ((1, 1), ()), ((3,), (3,))]:
        check(f"S1 complement {comp}", dual_betti(P(comp), 1, DualDirection.CLOSED_K), P(want))

    round_trip = [P((1,)), P((2,)), P((1, 1)), P((1, 0, 1)), P(())]
    for vec in round_trip:
        forward = dual_betti(vec, 2, DualDirection.CLOSED_K)
        back = dual_betti(forward, 2, DualDirection.OPEN_K)
        check(f"round trip {vec}", back, vec)
    return cases


def suite_homology(resolution_2d: int = 64, resolution_3d: int = 32,
                   samples: int = 1200, seed: int = 42) -> list[dict]:
    """Cubical backend on the band/disk fixtures plus cubical-vs-sampled
    agreement on every ambient-<=3 fixture."""
    box2, box3 = [(-2.0, 2.0)], [(-2.0, 2.0)]
    fixtures = [
        ("circle band", circle_band(), box2, resolution_2d, {0: 1, 1: 1}),
        ("solid disk", solid_disk(), box2, resolution_2d, {0: 1, 1: 0}),
        ("two disks", two_disks(), box2, resolution_2d, {0: 2, 1: 0}),
        ("annulus", annulus(), box2, resolution_2d, {0: 1, 1: 1}),
        ("sphere band", sphere_band(), box3, resolution_3d, {0: 1, 1: 0, 2: 1}),
    ]
    cases = []
    for name, f, box, res, want in fixtures:
        est = poincare_cubical(f, box, res)
        got = {d: est.betti.get(d, 0) for d in want}
        cases.append({"case": f"cubical {name}", "got": str(got), "want": str(want),
                      "converged": est.converged,
                      "pass": got == want and est.converged})
        s_want = {d: v for d, v in want.items() if d <= 1}
        est_s = poincare_sampled(f, n_samples=samples, seed=seed, need_b1=True)
        got_s = {d: est_s.betti.get(d, 0) for d in s_want}
        cases.append({"case": f"sampled agreement {name}", "got": str(got_s),
                      "want": str(s_want), "converged": est_s.converged,
                      "pass": got_s == s_want and est_s.converged})
    return cases


def join_invariance_fixtures() -> list[tuple[str, Formula, VarBlock, VarBlock, int, dict, bool]]:
    x0, y0 = VarBlock("X", 0), VarBlock("Y", 0)
    x1, y1 = VarBlock("X", 1), VarBlock("Y", 1)
    full = TRUE_CLOSED
    diag = And((Atom(_coord("X", 0) - _coord("Y", 0), Sign.EQ),
                Atom(_coord("X", 1) - _coord("Y", 1), Sign.EQ)))
    return [
        ("S0xS0 p=1", Formula((x0, y0), (), full), x0, y0, 1, {0: 2}, False),
        ("S0xS1 p=1", Formula((x0, y1), (), full), x0, y1, 1, {0: 2}, False),
        ("S0xS1 p=2", Formula((x0, y1), (), full), x0, y1, 2, {0: 2, 1: 0}, True),
        ("diag S1xS1 p=1", Formula((x1, y1), (), diag), x1, y1, 1, {0: 1}, False),
    ]


def suite_join(samples: int = 1000, seeds=(1, 2, 3)) -> list[dict]:
    """Betti invariance of the closed join against known projections."""
    cases = []
    for name, phi, px, py, p, want, need_b1 in join_invariance_fixtures():
        spec = JoinSpec((px,), (py,), p=p, variant=JoinVariant.CLOSED)
        res = join_prenex(phi, spec)
        for seed in seeds:
            rng = np.random.default_rng(seed + 900)
            starts = join_starts(res.layout, samples, rng)
            est = poincare_sampled(res.formula, n_samples=samples, seed=seed,
                                   need_b1=need_b1, extra_starts=starts)
            got = {d: est.betti.get(d, 0) for d in want}
            cases.append({"case": f"{name} seed {seed}", "got": str(got),
                          "want": str(want), "converged": est.converged,
                          "pass": got == want and est.converged})
    return cases


def suite_end2end(samples: int = 600, seed: int = 7,
                  count_sigma: int = 20, count_pi: int = 5) -> list[dict]:
    """decide vs brute_decide over generated level-1 sentences plus the
    hand-built two-alternation sentences."""
    sentences = generate_level1_sentences(count_sigma, count_pi, seed=seed)
    sentences += omega2_sentences()
    oracle = TraceOracle(OracleConfig(samples=samples))
    cases = []
    for case in sentences:
        t0 = time.time()
        art = reduce_sentence(case.formula)
        rep = decide(art, (Fraction(1),), oracle)
        counts = {b.name: (128 if b.sphere_dim == 1 else 600)
                  for g in case.formula.prefix for b in g.blocks}
        ground = brute_decide(case.formula, counts=counts)
        ok = (rep.decision == ground == case.expected
              and rep.decision is not Decision.UNKNOWN)
        cases.append({"case": case.name, "decide": rep.decision.value,
                      "brute": ground.value, "expected": case.expected.value,
                      "seconds": round(time.time() - t0, 2), "pass": ok})
    return cases


def suite_sizes(max_atoms: int = 10) -> list[dict]:
    """Reduction size growth at two alternations: measured polynomial fit
    of output size vs input atoms and exact variable-count recurrence."""
    sizes = []
    cases = []
    for n_atoms in range(1, max_atoms + 1):
        atoms = []
        for i in range(n_atoms):
            poly = (Polynomial.coord("A", 0, 1, Fraction(i + 1))
                    * Polynomial.coord("B", 0) + Fraction(1, i + 2))
            atoms.append(Atom(poly, Sign.GE))
        matrix = atoms[0] if n_atoms == 1 else And(tuple(atoms))
        f = Formula((), (PrefixGroup(Quantifier.FORALL, (VarBlock("A", 0),)),
                         PrefixGroup(Quantifier.EXISTS, (VarBlock("B", 0),))), matrix)
        art = reduce_sentence(f)
        report = size_report(art)
        sizes.append((n_atoms, report.atom_count))
        cases.append({"case": f"recurrence n={n_atoms}",
                      "got": report.variable_count,
                      "want": report.expected_variable_count,
                      "pass": report.matches_recurrence})
    xs = np.log([s[0] for s in sizes])
    ys = np.log([s[1] for s in sizes])
    slope = float(np.polyfit(xs, ys, 1)[0])
    cases.append({"case": "log-log slope", "got": round(slope, 3),
                  "want": "<= 3", "pass": slope <= 3.0})
    return cases


SUITES = {
    "duality": suite_duality,
    "homology": suite_homology,
    "join": suite_join,
    "end2end": suite_end2end,
    "sizes": suite_sizes,
}
