"""spherec: compile quantified formulas over products of spheres into
quantifier-free formulas plus coefficient-map chains, and decide them by
computing Betti numbers of the compiled sets."""

__version__ = "0.1.0"

from .betti import BettiEstimate, InconsistentBettiError, PoincarePolynomial
from .brute import Decision, SphereGrid, brute_decide, sphere_grid
from .cubical import ChainComplex, CubicalComplex, betti_ranks, poincare_cubical
from .formula import (And, Atom, Formula, FormulaError, Not, Or, Point,
                      PrefixGroup, Quantifier, Sign, TopologyClass, VarBlock,
                      classify_topology, eval_formula, restrict_fiber,
                      to_nnf_complement)
from .join import (JoinLayout, JoinSpec, JoinVariant, build_closed_join,
                   build_open_join, pull_quantifiers, shell_normalize)
from .oracles import CubicalOracle, OracleConfig, SampledOracle, TraceOracle, make_oracle
from .poly import Polynomial
from .reducer import (CoeffStage, DualDirection, ReduceOptions,
                      ReductionArtifact, StageKind, apply_chain, decide,
                      dual_betti, lift_sentence, reduce_formula,
                      reduce_sentence, size_report, truncate)
from .sampled import SampleCloud, poincare_sampled, sample_cloud
from .sexpr import FormulaSyntaxError, parse_formula, print_formula

__all__ = [
    "__version__", "BettiEstimate", "InconsistentBettiError", "PoincarePolynomial",
    "Decision", "SphereGrid", "brute_decide", "sphere_grid",
    "ChainComplex", "CubicalComplex", "betti_ranks", "poincare_cubical",
    "And", "Atom", "Formula", "FormulaError", "Not", "Or", "Point",
    "PrefixGroup", "Quantifier", "Sign", "TopologyClass", "VarBlock",
    "classify_topology", "eval_formula", "restrict_fiber", "to_nnf_complement",
    "JoinLayout", "JoinSpec", "JoinVariant", "build_closed_join",
    "build_open_join", "pull_quantifiers", "shell_normalize",
    "CubicalOracle", "OracleConfig", "SampledOracle", "TraceOracle", "make_oracle",
    "Polynomial",
    "CoeffStage", "DualDirection", "ReduceOptions", "ReductionArtifact",
    "StageKind", "apply_chain", "decide", "dual_betti", "lift_sentence",
    "reduce_formula", "reduce_sentence", "size_report", "truncate",
    "SampleCloud", "poincare_sampled", "sample_cloud",
    "FormulaSyntaxError", "parse_formula", "print_formula",
]
