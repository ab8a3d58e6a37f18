"""Sampled Betti estimation: descent onto a formula's realization, then
connectivity and low persistent homology of the resulting point cloud.

Points are generated by random restarts of a vectorized projected descent
minimizing the sum of squared atom violations plus squared block-sphere
violations.  b_0 is computed from a k-nearest-neighbor graph whose edges
are validated by membership of repaired waypoints along the segment
(rejecting bridges across gaps); b_1 from a landmark flag complex as the
rank of 1-homology classes that persist across the window [r, 2r].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .betti import BettiEstimate
from .compiled import CompiledFormula
from .formula import Formula, FormulaError

__all__ = ["poincare_sampled", "SampleCloud", "sample_cloud", "DescentProblem"]


@dataclass
class SampleCloud:
    points: np.ndarray
    seed: int
    radius: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)


class DescentProblem:
    """Violation objective for a quantifier-free formula with block spheres."""

    def __init__(self, f: Formula, box_halfwidth: float = 2.0):
        if f.prefix:
            raise FormulaError("sampling requires a quantifier-free formula")
        self.formula = f
        self.coords = [c for b in f.free_blocks for c in b.coords()]
        self.cf = CompiledFormula(f.matrix, self.coords)
        self.blocks = []
        offset = 0
        for b in f.free_blocks:
            self.blocks.append((slice(offset, offset + b.n_coords),
                                None if b.radius2 is None else float(b.radius2)))
            offset += b.n_coords
        self.dim = offset
        self.box_halfwidth = box_halfwidth

    def violation(self, X: np.ndarray, tau: float, with_grad: bool = False):
        if with_grad:
            v, g = self.cf.violation(X, tau=tau, with_grad=True)
        else:
            v = self.cf.violation(X, tau=tau)
            g = None
        for sl, rho in self.blocks:
            if rho is None:
                continue
            n2 = (X[:, sl] ** 2).sum(axis=1)
            d = n2 - rho
            v = v + d * d
            if g is not None:
                g[:, sl] += (4.0 * d)[:, None] * X[:, sl]
        return (v, g) if with_grad else v

    def project(self, X: np.ndarray) -> np.ndarray:
        """Renormalize each sphere block onto its sphere."""
        X = X.copy()
        for sl, rho in self.blocks:
            if rho is None:
                continue
            norms = np.linalg.norm(X[:, sl], axis=1)
            norms = np.where(norms < 1e-12, 1.0, norms)
            X[:, sl] *= (math.sqrt(rho) / norms)[:, None]
        return X

    def random_starts(self, n: int, rng: np.random.Generator) -> np.ndarray:
        X = rng.standard_normal((n, self.dim))
        for sl, rho in self.blocks:
            if rho is None:
                X[:, sl] = rng.uniform(-self.box_halfwidth, self.box_halfwidth,
                                       size=X[:, sl].shape)
            else:
                norms = np.linalg.norm(X[:, sl], axis=1, keepdims=True)
                norms[norms < 1e-12] = 1.0
                X[:, sl] *= math.sqrt(rho) / norms
        return X

    def is_member(self, X: np.ndarray, eq_tol: float = 1e-4) -> np.ndarray:
        ok = self.cf.eval_bool(X, eq_tol=eq_tol, slack=eq_tol)
        for sl, rho in self.blocks:
            if rho is None:
                continue
            n2 = (X[:, sl] ** 2).sum(axis=1)
            ok &= np.abs(n2 - rho) <= eq_tol * max(1.0, rho)
        return ok


def descend(problem: DescentProblem, X0: np.ndarray, iters: int,
            tau: float, lr0: float = 0.03, decay_every: int = 60,
            decay: float = 0.3) -> np.ndarray:
    """Vectorized Adam descent with stepwise learning-rate decay;
    returns the best iterate seen per point."""
    X = X0.copy()
    m = np.zeros_like(X)
    v = np.zeros_like(X)
    b1, b2, eps = 0.9, 0.999, 1e-12
    best = X.copy()
    best_f = problem.violation(X, tau)
    lr = lr0
    for t in range(1, iters + 1):
        fx, g = problem.violation(X, tau, with_grad=True)
        better = fx < best_f
        best[better] = X[better]
        best_f = np.where(better, fx, best_f)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1 ** t)
        vh = v / (1 - b2 ** t)
        X = X - lr * mh / (np.sqrt(vh) + eps)
        if t % decay_every == 0:
            lr *= decay
    fx = problem.violation(X, tau)
    better = fx < best_f
    best[better] = X[better]
    return best


def sample_cloud(f: Formula, n_restarts: int, seed: int,
                 iters: int = 240, tau: float = 1e-3,
                 interior_tau: float | None = 0.08,
                 eq_tol: float = 1e-4,
                 box_halfwidth: float = 2.0,
                 extra_starts=None) -> SampleCloud:
    """Descend from random starts; keep exact members.

    Descent runs a coarse and a fine Adam stage; the fine stage drives
    equality residuals into the acceptance tolerance.  A final phase with
    a larger strictness target concentrates points toward the interior
    margin core, which thins the effective dimension of the cloud; a
    phase-2 point is kept only if it is still a member, otherwise the
    phase-1 point is used.
    """
    problem = DescentProblem(f, box_halfwidth)
    rng = np.random.default_rng(seed)
    X1 = problem.random_starts(n_restarts, rng)
    if extra_starts is not None and len(extra_starts):
        X1 = np.vstack([X1, np.asarray(extra_starts, dtype=float)])
    X1 = descend(problem, X1, iters, tau, lr0=0.03)
    X1 = descend(problem, X1, iters, tau, lr0=0.003)
    final_v = problem.violation(X1, tau=0.0)
    members1 = problem.is_member(X1, eq_tol)
    parts = [X1[members1]]
    accepted = int(members1.sum())
    if interior_tau is not None:
        X2 = descend(problem, X1, iters // 2, interior_tau, lr0=0.01)
        X2 = descend(problem, X2, iters // 2, tau, lr0=0.002)
        members2 = problem.is_member(X2, eq_tol)
        # keep both phases: interior points thin the cloud's effective
        # dimension, phase-1 points keep connector regions populated
        parts.append(X2[members2])
        accepted = int((members1 | members2).sum())
    pts = np.vstack([p for p in parts if len(p)]) if any(len(p) for p in parts) \
        else np.zeros((0, problem.dim))
    if len(pts):
        # collapse near-duplicate basin endpoints so neighbor lists carry
        # real geometric information
        _, keep = np.unique(np.round(pts, 4), axis=0, return_index=True)
        pts = pts[np.sort(keep)]
    diag = {
        "restarts": int(n_restarts),
        "accepted": accepted,
        "cloud_size": int(len(pts)),
        "min_final_violation": float(final_v.min()) if n_restarts else float("nan"),
        "median_final_violation": float(np.median(final_v)) if n_restarts else float("nan"),
    }
    return SampleCloud(pts, seed, diagnostics=diag)


# -- connectivity ----------------------------------------------------------


def _validate_paths(problem: DescentProblem, P: np.ndarray, Q: np.ndarray,
                    waypoints: int = 7, rounds: int = 3,
                    repair_iters: int = 50, member_tol: float = 1e-3) -> np.ndarray:
    """For each endpoint pair, try to connect it by a chain of repaired
    waypoints inside the set.

    Each round repairs the waypoints (projection plus short descent) and
    subdivides the largest remaining jumps; a pair validates when all
    waypoints are members and no jump greatly exceeds the chain's median
    step.  Genuine voids cannot be subdivided away: inserted midpoints
    repair back to either side and the jump persists.
    """
    n_edges = len(P)
    dim = P.shape[1]
    ts = np.linspace(0.0, 1.0, waypoints + 2)[1:-1]
    chains = (P[:, None, :] * (1 - ts)[None, :, None] + Q[:, None, :] * ts[None, :, None])
    chains = np.concatenate([P[:, None, :], chains, Q[:, None, :]], axis=1)
    for _ in range(rounds):
        inner = chains[:, 1:-1, :].reshape(-1, dim)
        inner = problem.project(inner)
        inner = descend(problem, inner, repair_iters, tau=1e-4, lr0=0.02)
        inner = descend(problem, inner, repair_iters, tau=1e-4, lr0=0.002)
        chains[:, 1:-1, :] = inner.reshape(n_edges, -1, dim)
        gaps = np.linalg.norm(np.diff(chains, axis=1), axis=2)
        worst = gaps.argmax(axis=1)
        mids = 0.5 * (chains[np.arange(n_edges), worst] + chains[np.arange(n_edges), worst + 1])
        new_chains = np.zeros((n_edges, chains.shape[1] + 1, dim))
        for e in range(n_edges):
            new_chains[e] = np.insert(chains[e], worst[e] + 1, mids[e], axis=0)
        chains = new_chains

    inner = chains[:, 1:-1, :].reshape(-1, dim)
    viol = problem.violation(inner, tau=0.0).reshape(n_edges, -1)
    gaps = np.linalg.norm(np.diff(chains, axis=1), axis=2)
    med = np.median(gaps, axis=1)
    lengths = np.linalg.norm(Q - P, axis=1)
    gap_ok = gaps.max(axis=1) <= np.maximum(3.0 * med, 0.25 * lengths) + 1e-9
    viol_ok = (viol <= member_tol).all(axis=1)
    return gap_ok & viol_ok


def validated_components(problem: DescentProblem, pts: np.ndarray,
                         k: int = 10, member_tol: float = 1e-3,
                         auto_accept: float = 0.3) -> int:
    """Connected components of the kNN graph keeping only edges whose
    repaired waypoint chains stay in the set without large jumps.

    Edges shorter than auto_accept join directly: both endpoints are
    verified members and the fixture geometry has no voids that narrow.
    """
    n = len(pts)
    if n == 0:
        return 0
    if n == 1:
        return 1
    k = min(k, n - 1)
    tree = cKDTree(pts)
    dists, idxs = tree.query(pts, k=k + 1)
    edges = []
    for i in range(n):
        for j in idxs[i][1:]:
            a, b = (i, int(j)) if i < int(j) else (int(j), i)
            if a != b:
                edges.append((a, b))
    edges = sorted(set(edges))
    if not edges:
        return n

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b) -> bool:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
        return True

    # Shortest edges first, in waves: each wave validates only edges whose
    # endpoints are still in different components, so dense-cluster edges
    # made redundant by earlier unions are never paid for.
    P = pts[[e[0] for e in edges]]
    Q = pts[[e[1] for e in edges]]
    lengths = np.linalg.norm(Q - P, axis=1)
    order = [int(i) for i in np.argsort(lengths)]
    for e_idx in order:
        if lengths[e_idx] <= auto_accept:
            union(*edges[e_idx])
    queue = [i for i in order if lengths[i] > auto_accept]
    pos = 0
    wave = 512
    while pos < len(queue):
        batch = []
        while pos < len(queue) and len(batch) < wave:
            i = queue[pos]
            pos += 1
            a, b = edges[i]
            if find(a) != find(b):
                batch.append(i)
        if not batch:
            continue
        valid = _validate_paths(problem, P[batch], Q[batch], member_tol=member_tol)
        for e_idx, ok in zip(batch, valid):
            if ok:
                union(*edges[e_idx])
    return len({find(i) for i in range(n)})


# -- persistence window ----------------------------------------------------


def maxmin_landmarks(pts: np.ndarray, count: int) -> tuple[np.ndarray, float]:
    """Farthest-point landmark selection; also returns the covering radius
    (max distance of any point to its nearest landmark)."""
    n = len(pts)
    if n <= count:
        if n < 2:
            return np.arange(n), 0.0
        # every point is a landmark: half the worst nearest-neighbor gap
        # plays the role of the covering radius
        D = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        nn = np.partition(D + np.diag([np.inf] * n), 0, axis=1)[:, 0]
        return np.arange(n), float(nn.max()) / 2.0
    chosen = [0]
    d = np.linalg.norm(pts - pts[0], axis=1)
    for _ in range(count - 1):
        nxt = int(np.argmax(d))
        chosen.append(nxt)
        d = np.minimum(d, np.linalg.norm(pts - pts[nxt], axis=1))
    return np.asarray(chosen), float(d.max())


def persistent_b1_window(pts: np.ndarray, r: float | None = None,
                         landmarks: int = 160, n_components: int = 1) -> tuple[int, float]:
    """Rank of H_1 classes of the landmark flag complex born by r and
    still alive at 2r; returns (count, radius used).

    The default radius is sized from the landmark minimum spanning tree:
    its largest edge, after discarding the n_components-1 bridges between
    known components, is the scale at which each component's 1-skeleton
    closes up, so cycles of the underlying space are born by about then.
    """
    idx, covering = maxmin_landmarks(pts, landmarks)
    L = pts[idx]
    n = len(L)
    if n < 3:
        return 0, r if r is not None else 0.0
    D = np.linalg.norm(L[:, None, :] - L[None, :, :], axis=2)
    if r is None:
        from scipy.sparse.csgraph import minimum_spanning_tree
        mst = minimum_spanning_tree(D)
        mst_edges = np.sort(np.asarray(mst[mst.nonzero()]).ravel())[::-1]
        skip = max(0, n_components - 1)
        base = mst_edges[skip] if skip < len(mst_edges) else mst_edges[-1]
        # cycle-closing gaps are not spanning-tree edges; pad by the
        # covering radius to bound them
        r = max(1.6 * float(base) + 2.0 * covering, 1e-6)
    fmax = 2.0 * r
    simplices: list[tuple[float, int, tuple[int, ...]]] = [(0.0, 0, (i,)) for i in range(n)]
    pairs = np.argwhere(np.triu(D <= fmax, 1))
    edge_list = [(float(D[i, j]), (int(i), int(j))) for i, j in pairs]
    for filt, (i, j) in edge_list:
        simplices.append((filt, 1, (i, j)))
    adj = [set() for _ in range(n)]
    for _, (i, j) in edge_list:
        adj[i].add(j)
        adj[j].add(i)
    for i in range(n):
        for j in sorted(adj[i]):
            if j <= i:
                continue
            for k in sorted(adj[i] & adj[j]):
                if k > j:
                    filt = max(D[i, j], D[i, k], D[j, k])
                    simplices.append((float(filt), 2, (i, j, k)))
    simplices.sort(key=lambda s: (s[0], s[1], s[2]))
    index = {s[2]: pos for pos, s in enumerate(simplices)}

    low_owner: dict[int, int] = {}
    reduced: dict[int, int] = {}
    births: dict[int, float] = {}
    deaths: dict[int, float] = {}
    for pos, (filt, dim, verts) in enumerate(simplices):
        if dim == 0:
            col = 0
        elif dim == 1:
            col = (1 << index[(verts[0],)]) | (1 << index[(verts[1],)])
        else:
            i, j, k = verts
            col = ((1 << index[(i, j)]) | (1 << index[(i, k)]) | (1 << index[(j, k)]))
        while col:
            low = col.bit_length() - 1
            owner = low_owner.get(low)
            if owner is None:
                low_owner[low] = pos
                deaths[low] = filt
                break
            col ^= reduced[owner]
        reduced[pos] = col
        if col == 0:
            births[pos] = filt

    count = 0
    for pos, birth in births.items():
        if simplices[pos][1] != 1 or birth > r:
            continue
        death = deaths.get(pos, math.inf)
        if death > 2.0 * r:
            count += 1
    return count, r


def poincare_sampled(f: Formula, n_samples: int = 2000, radius: float | None = None,
                     seed: int = 42, need_b1: bool = False,
                     landmarks: int = 160, extra_starts=None, **cloud_kw) -> BettiEstimate:
    """Sampled b_0 (and optionally b_1) of the realization of f.

    Runs at half and full sample budgets; converged requires exact
    agreement of the estimates, and for an empty result additionally that
    descent residuals stayed well away from zero (a genuinely infeasible
    objective rather than a near-miss).
    """
    runs = []
    for fraction, run_seed in ((0.5, seed + 101), (1.0, seed)):
        starts = None
        if extra_starts is not None and len(extra_starts):
            starts = extra_starts[: max(1, int(len(extra_starts) * fraction))]
        cloud = sample_cloud(f, max(8, int(n_samples * fraction)), run_seed,
                             extra_starts=starts, **cloud_kw)
        problem = DescentProblem(f, cloud_kw.get("box_halfwidth", 2.0))
        est = {0: validated_components(problem, cloud.points)}
        r = radius
        if need_b1:
            if len(cloud.points) >= 3:
                est[1], r = persistent_b1_window(cloud.points, radius, landmarks,
                                                 n_components=max(1, est[0]))
            else:
                est[1] = 0
        runs.append((est, cloud, r))

    (est_half, cloud_half, _), (est_full, cloud_full, r_full) = runs
    converged = est_half == est_full
    if est_full[0] == 0:
        ok_full = cloud_full.diagnostics["min_final_violation"] > 1e-4
        ok_half = cloud_half.diagnostics["min_final_violation"] > 1e-4
        empty_confident = ok_full and ok_half
        converged = converged and empty_confident
    diag = {
        "backend": "sampled",
        "n_samples": n_samples,
        "seed": seed,
        "radius": r_full,
        "coarse": est_half,
        "accepted": cloud_full.diagnostics["accepted"],
        "accepted_half": cloud_half.diagnostics["accepted"],
        "min_final_violation": cloud_full.diagnostics["min_final_violation"],
    }
    return BettiEstimate(est_full, converged, diag)
