"""Vectorized float evaluation of quantifier-free matrices.

Atoms are flattened into one monomial table evaluated for whole batches
of points at once; the boolean tree is folded over the resulting value
arrays.  Used by the homology backends for membership tests and for the
smooth "violation" objective the sampling descent minimizes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formula import And, Atom, BoolNode, Not, Or, Sign, nnf
from .poly import Coord

_SIGN_CODE = {Sign.EQ: 0, Sign.GE: 1, Sign.GT: 2, Sign.LE: 3, Sign.LT: 4, Sign.NE: 5}


@dataclass
class _Node:
    kind: str                 # "atom" | "and" | "or"
    atom: int = -1
    children: tuple = ()


class CompiledFormula:
    """Batch evaluator for a (negation-free) matrix over a fixed coordinate order."""

    def __init__(self, matrix: BoolNode, coords: list[Coord]):
        matrix = nnf(matrix)
        self.coords = list(coords)
        self.index = {c: d for d, c in enumerate(self.coords)}
        self.dim = len(self.coords)

        atoms: list[Atom] = []
        self.tree = self._build_tree(matrix, atoms)
        self.n_atoms = len(atoms)

        coeffs: list[float] = []
        exps_rows: list[np.ndarray] = []
        atom_starts = [0]
        sign_codes = []
        for atom in atoms:
            sign_codes.append(_SIGN_CODE[atom.sign])
            terms = atom.poly.sorted_terms()
            if not terms:
                coeffs.append(0.0)
                exps_rows.append(np.zeros(self.dim, dtype=np.int64))
            for key, coeff in terms:
                coeffs.append(float(coeff))
                row = np.zeros(self.dim, dtype=np.int64)
                for coord, e in key:
                    if coord not in self.index:
                        raise KeyError(f"coordinate {coord} not in evaluation order")
                    row[self.index[coord]] = e
                exps_rows.append(row)
            atom_starts.append(len(coeffs))
        self.mono_coeffs = np.asarray(coeffs, dtype=np.float64)
        self.exps = (np.vstack(exps_rows) if exps_rows
                     else np.zeros((0, self.dim), dtype=np.int64))
        self.atom_starts = np.asarray(atom_starts, dtype=np.int64)
        self.sign_codes = np.asarray(sign_codes, dtype=np.int64)
        self.per_dim = []
        for d in range(self.dim):
            idx = np.nonzero(self.exps[:, d])[0]
            self.per_dim.append((idx, self.exps[idx, d]))
        self.mono_atom = np.zeros(len(self.mono_coeffs), dtype=np.int64)
        for i in range(self.n_atoms):
            self.mono_atom[self.atom_starts[i]:self.atom_starts[i + 1]] = i

    def _build_tree(self, node: BoolNode, atoms: list[Atom]) -> _Node:
        if isinstance(node, Atom):
            atoms.append(node)
            return _Node("atom", atom=len(atoms) - 1)
        if isinstance(node, Not):
            raise ValueError("matrix must be negation-free after NNF")
        kind = "and" if isinstance(node, And) else "or"
        return _Node(kind, children=tuple(self._build_tree(c, atoms) for c in node.children))

    # -- forward values ------------------------------------------------

    def mono_values(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        vals = np.broadcast_to(self.mono_coeffs, (n, len(self.mono_coeffs))).copy()
        for d, (idx, exps) in enumerate(self.per_dim):
            if len(idx) == 0:
                continue
            vals[:, idx] *= X[:, d:d + 1] ** exps[None, :]
        return vals

    def atom_values(self, X: np.ndarray, mono_vals: np.ndarray | None = None) -> np.ndarray:
        if mono_vals is None:
            mono_vals = self.mono_values(X)
        if self.n_atoms == 0:
            return np.zeros((X.shape[0], 0))
        return np.add.reduceat(mono_vals, self.atom_starts[:-1], axis=1)

    def eval_bool(self, X: np.ndarray, eq_tol: float = 0.0, slack: float = 0.0) -> np.ndarray:
        """Boolean membership per point; eq_tol inflates equality atoms to
        slabs |q| <= eq_tol, slack relaxes every inequality by slack."""
        vals = self.atom_values(X)
        truth = np.zeros_like(vals, dtype=bool)
        for i, code in enumerate(self.sign_codes):
            v = vals[:, i]
            if code == 0:
                truth[:, i] = np.abs(v) <= eq_tol
            elif code == 1:
                truth[:, i] = v >= -slack
            elif code == 2:
                truth[:, i] = v > -slack
            elif code == 3:
                truth[:, i] = v <= slack
            elif code == 4:
                truth[:, i] = v < slack
            else:
                truth[:, i] = np.abs(v) > eq_tol
        return self._fold_bool(self.tree, truth)

    def _fold_bool(self, node: _Node, truth: np.ndarray) -> np.ndarray:
        if node.kind == "atom":
            return truth[:, node.atom]
        parts = [self._fold_bool(c, truth) for c in node.children]
        out = parts[0].copy()
        for p in parts[1:]:
            if node.kind == "and":
                out &= p
            else:
                out |= p
        return out

    # -- violation objective --------------------------------------------

    def _residuals(self, vals: np.ndarray, tau: float):
        """Per-atom residual r and weight dr^2/dvalue."""
        r = np.zeros_like(vals)
        w = np.zeros_like(vals)
        for i, code in enumerate(self.sign_codes):
            v = vals[:, i]
            if code == 0:          # = 0
                r[:, i] = v
                w[:, i] = 2.0 * v
            elif code == 1:        # >= 0
                m = np.minimum(v, 0.0)
                r[:, i] = m
                w[:, i] = 2.0 * m
            elif code == 2:        # > 0, target interior margin tau
                m = np.minimum(v - tau, 0.0)
                r[:, i] = m
                w[:, i] = 2.0 * m
            elif code == 3:        # <= 0
                m = np.maximum(v, 0.0)
                r[:, i] = m
                w[:, i] = 2.0 * m
            elif code == 4:        # < 0
                m = np.maximum(v + tau, 0.0)
                r[:, i] = m
                w[:, i] = 2.0 * m
            else:                  # != 0, target |v| >= tau
                m = np.maximum(tau - np.abs(v), 0.0)
                r[:, i] = m
                w[:, i] = -2.0 * m * np.sign(v)
        return r * r, w

    def violation(self, X: np.ndarray, tau: float = 1e-3,
                  with_grad: bool = False):
        mono_vals = self.mono_values(X)
        vals = self.atom_values(X, mono_vals)
        sq, dsq = self._residuals(vals, tau)
        cache: dict[int, np.ndarray] = {}

        def fwd(node: _Node) -> np.ndarray:
            if node.kind == "atom":
                return sq[:, node.atom]
            parts = [fwd(c) for c in node.children]
            if node.kind == "and":
                out = parts[0].copy()
                for p in parts[1:]:
                    out += p
            else:
                out = parts[0].copy()
                for p in parts[1:]:
                    out = np.minimum(out, p)
            cache[id(node)] = out
            return out

        total = fwd(self.tree)
        if not with_grad:
            return total

        atom_w = np.zeros_like(vals)

        def bwd(node: _Node, mask: np.ndarray):
            if node.kind == "atom":
                atom_w[:, node.atom] += mask * dsq[:, node.atom]
                return
            if node.kind == "and":
                for c in node.children:
                    bwd(c, mask)
                return
            remaining = mask.astype(bool).copy()
            target = cache[id(node)]
            for c in node.children:
                cv = cache[id(c)] if c.kind != "atom" else sq[:, c.atom]
                take = remaining & (cv <= target)
                if take.any():
                    bwd(c, mask * take)
                remaining &= ~take

        bwd(self.tree, np.ones(X.shape[0]))

        mono_w = atom_w[:, self.mono_atom] * mono_vals
        grad = np.zeros_like(X)
        safe = np.where(np.abs(X) > 1e-300, X, np.inf)
        for d, (idx, exps) in enumerate(self.per_dim):
            if len(idx) == 0:
                continue
            grad[:, d] = (mono_w[:, idx] * exps[None, :].astype(np.float64)).sum(axis=1) / safe[:, d]
        return total, grad
