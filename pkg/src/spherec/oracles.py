"""Fiber oracle backends for the decision rule.

An oracle estimates requested coefficients of the Poincare polynomial of
the compiled formula's fiber over a parameter value.  The sampled and
cubical backends are generic; the trace oracle additionally serves the
two top coefficients a sphere-complement duality stage reads, computing
them exactly from the connectivity of the pre-join formula's realization
(sampled after expanding its one remaining quantifier group over exact
grid points) via the duality relations b_{n-1}, b_n vs b_0 of the
complement.  Quantifier expansion keeps coefficients rational: S^0
grids are {+-1} and circle grids use tan-half-angle rational points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product

import numpy as np

from .betti import BettiEstimate
from .cubical import poincare_cubical
from .formula import (And, Atom, Formula, FormulaError, Or, Quantifier, Sign,
                      VarBlock, map_atoms, restrict_fiber)
from .join import JoinLayout, JoinVariant, fold_constants
from .poly import Polynomial, squared_norm
from .reducer import DualDirection, ReductionArtifact, StageKind
from .sampled import DescentProblem, poincare_sampled, sample_cloud, validated_components

__all__ = ["OracleConfig", "SampledOracle", "CubicalOracle", "TraceOracle",
           "make_oracle", "expand_prefix", "rational_circle_grid"]


@dataclass(frozen=True)
class OracleConfig:
    samples: int = 2000
    seed: int = 42
    radius: float | None = None
    resolution: int = 32
    landmarks: int = 160
    expand_count_s1: int = 24
    box_margin: float = 0.4


class SampledOracle:
    """Generic sampled backend: degrees 0 and 1 only."""

    def __init__(self, config: OracleConfig = OracleConfig()):
        self.config = config

    def estimate(self, fiber: Formula, degrees, artifact=None, x=None) -> BettiEstimate:
        need_b1 = any(d == 1 for d in degrees)
        est = poincare_sampled(fiber, n_samples=self.config.samples,
                               radius=self.config.radius, seed=self.config.seed,
                               need_b1=need_b1, landmarks=self.config.landmarks)
        return est


class CubicalOracle:
    """Cubical backend for fibers of ambient dimension at most 4; block
    sphere constraints are materialized as inflated bands."""

    def __init__(self, config: OracleConfig = OracleConfig(), band: float = 0.1):
        self.config = config
        self.band = band

    def estimate(self, fiber: Formula, degrees, artifact=None, x=None) -> BettiEstimate:
        banded, halfwidth = materialize_sphere_bands(fiber, self.band)
        box = [(-halfwidth, halfwidth)] * banded.n_free_coords()
        max_deg = max([d for d in degrees] or [1])
        return poincare_cubical(banded, box, self.config.resolution, max_degree=max_deg)


def materialize_sphere_bands(f: Formula, band: float) -> tuple[Formula, float]:
    """Replace implicit block sphere constraints by band atoms
    | |v|^2 - rho | <= band * rho, returning box half-width to cover them."""
    extra = []
    halfwidth = 1.0
    blocks = []
    for b in f.free_blocks:
        if b.radius2 is None:
            blocks.append(b)
            continue
        rho = Fraction(b.radius2)
        n2 = squared_norm(b.name, b.n_coords)
        eps = Fraction(band).limit_denominator(1000) * rho
        extra.append(Atom(n2 - (rho + eps), Sign.LE))
        extra.append(Atom((rho - eps) - n2, Sign.LE))
        halfwidth = max(halfwidth, math.sqrt(float(rho + eps)) + 0.2)
        blocks.append(VarBlock(b.name, b.sphere_dim, None))
    matrix = And(tuple(extra) + (f.matrix,)) if extra else f.matrix
    return Formula(tuple(blocks), f.prefix, matrix), halfwidth


# -- exact grids for quantifier expansion -----------------------------------


def rational_circle_grid(count: int, denom: int = 4096) -> list[tuple[Fraction, Fraction]]:
    """count exact rational points on the unit circle with near-uniform
    angles, via rationalized tan-half-angle parameters."""
    pts = []
    for k in range(count):
        theta = -math.pi + 2.0 * math.pi * (k + 0.5) / count
        t = Fraction(round(math.tan(theta / 2.0) * denom), denom)
        d = 1 + t * t
        pts.append(((1 - t * t) / d, 2 * t / d))
    return pts


def _block_grid(dim: int, count: int) -> list[tuple[Fraction, ...]]:
    if dim == 0:
        return [(Fraction(1),), (Fraction(-1),)]
    if dim == 1:
        return [tuple(p) for p in rational_circle_grid(count)]
    raise FormulaError(f"quantifier expansion supports S^0 and S^1 blocks, got S^{dim}")


def expand_prefix(f: Formula, count_s1: int = 24) -> Formula:
    """Replace every quantified group by an exact finite conjunction or
    disjunction over grid points of its blocks."""
    def rec(groups) -> object:
        if not groups:
            return f.matrix
        inner = rec(groups[1:])
        group = groups[0]
        grids = [_block_grid(b.sphere_dim, count_s1) for b in group.blocks]
        parts = []
        for combo in product(*grids):
            assign = {}
            for b, pt in zip(group.blocks, combo):
                for i, v in enumerate(pt):
                    assign[(b.name, i)] = v
            parts.append(map_atoms(inner, lambda a, s=assign: Atom(a.poly.substitute(s), a.sign)))
        return (And(tuple(parts)) if group.quantifier is Quantifier.FORALL
                else Or(tuple(parts)))

    matrix = rec(list(f.prefix))
    matrix = fold_constants(matrix, closed=True)
    return Formula(f.free_blocks, (), matrix)


def join_starts(layout: JoinLayout, n: int, rng: np.random.Generator,
                include_params: bool = True) -> np.ndarray:
    """Structured descent starts for a join output.

    Copies start on their spheres, T on the simplex (with a vertex-biased
    share so the corner regions where copies roam their balls are
    covered), and U0 at the sphere-equation residual.  These only seed
    the descent; membership of the results is verified as usual.
    """
    params = layout.kept_param if include_params else ()
    p_coords = sum(b.n_coords for b in params)
    dim_v = layout.super_block.n_coords
    out = np.zeros((n, p_coords + dim_v))

    def sphere(nc: int, rho: float) -> np.ndarray:
        v = rng.standard_normal((n, nc))
        v /= np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-12)
        return v * math.sqrt(rho)

    col = 0
    for b in params:
        out[:, col:col + b.n_coords] = sphere(b.n_coords, float(b.radius2))
        col += b.n_coords
    V = out[:, p_coords:]
    for name, off, nc, rho in layout.folded_param:
        V[:, off:off + nc] = sphere(nc, float(rho))
    for inst in layout.copies:
        for name, off, nc, rho in inst:
            V[:, off:off + nc] = sphere(nc, float(rho))
    p = layout.p
    T = rng.dirichlet(np.ones(p + 1), size=n)
    vertexy = rng.random(n) < 0.5
    if vertexy.any():
        verts = np.eye(p + 1)[rng.integers(0, p + 1, size=int(vertexy.sum()))]
        beta = rng.uniform(0.0, 0.3, size=(int(vertexy.sum()), 1))
        T[vertexy] = (1 - beta) * verts + beta * T[vertexy]
    V[:, layout.t_offset:layout.t_offset + p + 1] = T
    total = float(layout.R2) - (out[:, :p_coords] ** 2).sum(axis=1) \
        - (V ** 2).sum(axis=1) + V[:, layout.u_offset] ** 2
    V[:, layout.u_offset] = np.sqrt(np.maximum(total, 1e-4))
    return out


# -- trace-aware oracle -------------------------------------------------------


class TraceOracle:
    """Sampled oracle that additionally serves the two top coefficients
    consumed by the innermost duality stage of a reduction chain.

    Those coefficients of the compiled set equal b_{n-1} and b_n of the
    projection it joins (trusted degrees), which sphere-complement
    duality determines from b_0 of the last pre-join formula's own
    realization; that realization is evaluated pointwise by expanding
    its single remaining quantifier group over exact grids.  For lifted
    sentences b_0 is the number of dummy-fiber signs hit by the cloud,
    which is exact because joins preserve connected components of the
    projection.
    """

    def __init__(self, config: OracleConfig = OracleConfig()):
        self.config = config
        self.base = SampledOracle(config)

    def estimate(self, fiber: Formula, degrees, artifact: ReductionArtifact = None,
                 x=None) -> BettiEstimate:
        low = tuple(d for d in degrees if d <= 1)
        high = tuple(d for d in degrees if d > 1)
        betti: dict[int, int] = {}
        diagnostics: dict[str, object] = {"backend": "trace"}
        converged = True

        if low:
            starts = None
            sign_coord = None
            if artifact is not None and artifact.trace:
                rng = np.random.default_rng(self.config.seed + 13)
                starts = join_starts(artifact.trace[-1].layout,
                                     self.config.samples, rng, include_params=False)
                if (artifact.lift.fiber_added and artifact.options.lift_fiber_dim == 0
                        and set(low) == {0}):
                    sign_coord = artifact.fiber_origin[(artifact.lift.fiber_name, 0)]
            if sign_coord is not None:
                # joins preserve b_0 of the projection onto the dummy
                # 0-sphere, so components are exactly the signs hit
                b0, sub_diag, ok = _sign_count_b0(fiber, sign_coord, self.config, starts)
                betti[0] = b0
                converged = converged and ok
                diagnostics["low"] = sub_diag
            else:
                est = poincare_sampled(fiber, n_samples=self.config.samples,
                                       radius=self.config.radius, seed=self.config.seed,
                                       need_b1=any(d == 1 for d in low),
                                       landmarks=self.config.landmarks,
                                       extra_starts=starts)
                betti.update({d: est.betti[d] for d in low if d in est.betti})
                converged = converged and est.converged
                diagnostics["low"] = dict(est.diagnostics)

        if high:
            if artifact is None or x is None:
                return BettiEstimate(betti, False, diagnostics | {"reason": "no artifact context"})
            stage = artifact.chain[1] if len(artifact.chain) > 1 else None
            if (stage is None or stage.kind is not StageKind.DUALITY
                    or set(high) - {stage.n - 1, stage.n}):
                return BettiEstimate(betti, False, diagnostics | {
                    "reason": "high degrees not served by the innermost duality stage"})
            last = artifact.trace[-1]
            level = restrict_fiber(last.formula_before, artifact.param_block, x)
            b0, sub_diag, ok = self._level_b0(level, last, artifact)
            diagnostics["level_b0"] = b0
            diagnostics["level_diag"] = sub_diag
            converged = converged and ok
            n = stage.n
            if stage.direction is DualDirection.CLOSED_K:
                # theta proxies the open complement O of the closed realization
                if b0 == 0:
                    vals = {n - 1: 0, n: 1}
                else:
                    vals = {n - 1: b0 - 1, n: 0}
            else:
                # theta proxies the compact complement K of the open realization
                vals = {n - 1: b0 - 1 + max(1 - b0, 0), n: 1 - min(1, b0)}
            betti.update({d: vals[d] for d in high})

        return BettiEstimate(betti, converged, diagnostics)

    def _level_b0(self, level: Formula, last, artifact) -> tuple[int, dict, bool]:
        expanded = expand_prefix(level, self.config.expand_count_s1)
        starts = None
        if len(artifact.trace) >= 2:
            rng = np.random.default_rng(self.config.seed + 29)
            starts = join_starts(artifact.trace[-2].layout,
                                 self.config.samples, rng, include_params=False)
        if artifact.lift.fiber_added and artifact.options.lift_fiber_dim == 0:
            coord = last.fiber_origin_before[(artifact.lift.fiber_name, 0)]
            return _sign_count_b0(expanded, coord, self.config, starts,
                                  seed_shift=7)
        cloud = sample_cloud(expanded, self.config.samples, self.config.seed + 7,
                             extra_starts=starts)
        diag = dict(cloud.diagnostics)
        if len(cloud.points) == 0:
            ok = cloud.diagnostics["min_final_violation"] > 1e-4
            return 0, diag, ok
        problem = DescentProblem(expanded)
        b0 = validated_components(problem, cloud.points)
        return b0, diag | {"method": "components"}, True


def _sign_count_b0(f: Formula, sign_coord, config: OracleConfig, starts,
                   seed_shift: int = 3) -> tuple[int, dict, bool]:
    """b_0 of a join realization fibered over a dummy 0-sphere: the number
    of dummy-coordinate signs present in the cloud (two runs must agree)."""
    idx = _coord_index(f, sign_coord)
    counts = []
    diag: dict[str, object] = {"method": "dummy-signs"}
    ok = True
    for i, frac in enumerate((0.5, 1.0)):
        sub = None if starts is None else starts[: max(1, int(len(starts) * frac))]
        cloud = sample_cloud(f, max(8, int(config.samples * frac)),
                             config.seed + seed_shift + 67 * i, extra_starts=sub)
        if len(cloud.points) == 0:
            counts.append(0)
            ok = ok and cloud.diagnostics["min_final_violation"] > 1e-4
        else:
            counts.append(len({s > 0 for s in cloud.points[:, idx]}))
        diag[f"run{i}"] = dict(cloud.diagnostics)
    diag["counts"] = counts
    return counts[1], diag, ok and counts[0] == counts[1]


def _coord_index(f: Formula, coord) -> int:
    idx = 0
    for b in f.free_blocks:
        for i in range(b.n_coords):
            if (b.name, i) == coord:
                return idx
            idx += 1
    raise FormulaError(f"coordinate {coord} not free in formula")


def make_oracle(backend: str, config: OracleConfig = OracleConfig()):
    if backend == "sampled":
        return SampledOracle(config)
    if backend == "cubical":
        return CubicalOracle(config)
    if backend == "auto":
        return TraceOracle(config)
    raise ValueError(f"unknown oracle backend {backend!r}")
