"""Matchings and matrix/graph decompositions.

Perfect matchings on boolean supports, Birkhoff-von-Neumann decomposition of
doubly stochastic matrices, edge coloring of regular multigraphs into
matchings, and seeded random regular digraph generation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BVN_DEFAULT_TOL = 1e-9


class DecompositionError(RuntimeError):
    """No perfect matching on the positive support: input is not doubly stochastic."""


@dataclass(frozen=True)
class PermutationMatching:
    """A bijection input port -> output port, i.e. a permutation matrix.

    A self-mapping (i -> i) stands for a padding slot in a switch schedule;
    padding carries no routable capacity downstream.
    """

    mapping: tuple

    def __post_init__(self):
        mapping = tuple(int(x) for x in self.mapping)
        n = len(mapping)
        if sorted(mapping) != list(range(n)):
            raise ValueError(f"mapping {mapping} is not a permutation of 0..{n - 1}")
        object.__setattr__(self, "mapping", mapping)

    @property
    def n(self) -> int:
        return len(self.mapping)

    def self_maps(self) -> tuple:
        return tuple(i for i, j in enumerate(self.mapping) if i == j)

    def as_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n, self.n))
        mat[np.arange(self.n), self.mapping] = 1.0
        return mat


@dataclass(frozen=True)
class BvnDecomposition:
    """Weighted permutation terms whose sum reconstructs a doubly stochastic matrix."""

    terms: tuple  # of (coefficient, PermutationMatching)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def coefficient_sum(self) -> float:
        return float(sum(lam for lam, _ in self.terms))

    def reconstruct(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, 0))
        n = self.terms[0][1].n
        out = np.zeros((n, n))
        for lam, pm in self.terms:
            out[np.arange(n), pm.mapping] += lam
        return out


@dataclass(frozen=True)
class RegularMultigraph:
    """Directed multigraph where every node has in-degree = out-degree = `degree`.

    edge_multiplicity[i, j] counts parallel links i -> j; diagonal entries are
    allowed and represent self-loops.
    """

    edge_multiplicity: np.ndarray

    def __post_init__(self):
        mult = np.array(self.edge_multiplicity, dtype=np.int64)
        if mult.ndim != 2 or mult.shape[0] != mult.shape[1]:
            raise ValueError(f"edge multiplicity must be square, got {mult.shape}")
        if np.any(mult < 0):
            raise ValueError("edge multiplicities must be nonnegative")
        rows = mult.sum(axis=1)
        cols = mult.sum(axis=0)
        if not (np.all(rows == rows[0]) and np.all(cols == rows[0])):
            raise ValueError(
                f"graph is not regular: out-degrees {rows.tolist()}, in-degrees {cols.tolist()}"
            )
        mult.setflags(write=False)
        object.__setattr__(self, "edge_multiplicity", mult)

    @property
    def n(self) -> int:
        return self.edge_multiplicity.shape[0]

    @property
    def degree(self) -> int:
        return int(self.edge_multiplicity[0].sum()) if self.n else 0


def perfect_matching(support) -> PermutationMatching | None:
    """Find a perfect matching using only True cells of a boolean n x n support.

    Augmenting-path search in lexicographic order, so the result is
    deterministic. Returns None when no perfect matching exists.
    """
    sup = np.asarray(support, dtype=bool)
    n = sup.shape[0]
    col_owner = [-1] * n

    def augment(row, banned):
        for col in range(n):
            if sup[row, col] and col not in banned:
                banned.add(col)
                if col_owner[col] < 0 or augment(col_owner[col], banned):
                    col_owner[col] = row
                    return True
        return False

    for row in range(n):
        if not augment(row, set()):
            return None
    mapping = [0] * n
    for col, row in enumerate(col_owner):
        mapping[row] = col
    return PermutationMatching(tuple(mapping))


def bvn_decompose(m, tol: float = BVN_DEFAULT_TOL) -> BvnDecomposition:
    """Decompose a doubly stochastic matrix into weighted permutation matchings.

    Repeatedly finds a perfect matching on the strictly-positive support, peels
    off the minimum matched entry, and stops once the residual mass drops below
    n*tol. Reconstruction error is bounded by tol and the number of terms by
    n^2 - 2n + 2.

    Raises DecompositionError if the positive support loses its perfect
    matching while significant mass remains (the input was not doubly
    stochastic to within tol).
    """
    work = np.array(m, dtype=float)
    n = work.shape[0]
    if work.ndim != 2 or work.shape[0] != work.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {work.shape}")
    if np.any(work < -tol):
        raise ValueError("matrix entries must be nonnegative")
    work = np.maximum(work, 0.0)
    row_sums = work.sum(axis=1)
    col_sums = work.sum(axis=0)
    scale = row_sums.mean()
    allowed = tol * max(scale, 1.0)
    if np.abs(row_sums - scale).max() > allowed or np.abs(col_sums - scale).max() > allowed:
        raise ValueError(
            "matrix is not doubly stochastic: row/column sums differ by more than tolerance"
        )

    terms = []
    while work.sum() >= n * tol:
        pm = perfect_matching(work > tol)
        if pm is None:
            raise DecompositionError(
                "no perfect matching on positive support with residual mass remaining"
            )
        idx = (np.arange(n), np.array(pm.mapping))
        lam = float(work[idx].min())
        terms.append((lam, pm))
        work[idx] -= lam
        np.maximum(work, 0.0, out=work)
    return BvnDecomposition(tuple(terms))


def edge_color_regular(g: RegularMultigraph) -> list:
    """Split a d-regular multigraph into exactly d perfect matchings.

    Peels one matching at a time; regularity is preserved after each peel, so a
    perfect matching always exists. The multiset union of the returned
    matchings' edges equals the input's edge multiset exactly.
    """
    work = np.array(g.edge_multiplicity)
    matchings = []
    for _ in range(g.degree):
        pm = perfect_matching(work > 0)
        if pm is None:  # unreachable for a regular input
            raise DecompositionError("regular multigraph lost its perfect matching")
        work[np.arange(g.n), pm.mapping] -= 1
        matchings.append(pm)
    return matchings


def _random_disjoint_matching(allowed: np.ndarray, rng) -> PermutationMatching:
    """Random perfect matching on the allowed cells (Kuhn with rng-shuffled orders)."""
    n = allowed.shape[0]
    prefs = [rng.permutation(np.nonzero(allowed[i])[0]) for i in range(n)]
    col_owner = [-1] * n

    def augment(row, banned):
        for col in prefs[row]:
            col = int(col)
            if col not in banned:
                banned.add(col)
                if col_owner[col] < 0 or augment(col_owner[col], banned):
                    col_owner[col] = row
                    return True
        return False

    for row in rng.permutation(n):
        if not augment(int(row), set()):
            raise DecompositionError("allowed support has no perfect matching")
    mapping = [0] * n
    for col, row in enumerate(col_owner):
        mapping[row] = col
    return PermutationMatching(tuple(mapping))


def random_regular_digraph(n: int, d: int, seed,
                           allow_self_loops: bool = False) -> RegularMultigraph:
    """Sample a simple d-regular digraph: the union of d pairwise-disjoint random matchings.

    Every node gets exactly d distinct out-neighbors and d distinct in-neighbors
    (no parallel arcs), which maximizes pair coverage for a given degree budget.
    Self-loops are excluded unless allow_self_loops is set. Deterministic per seed.
    """
    if n < 1:
        raise ValueError(f"need at least one node, got n={n}")
    if n == 1 and not allow_self_loops:
        raise ValueError("a single node admits no self-loop-free links")
    max_d = n if allow_self_loops else n - 1
    if not 1 <= d <= max_d:
        raise ValueError(f"degree d={d} must satisfy 1 <= d <= {max_d} for n={n}")
    rng = np.random.default_rng(seed)
    allowed = np.ones((n, n), dtype=bool)
    if not allow_self_loops:
        np.fill_diagonal(allowed, False)
    mult = np.zeros((n, n), dtype=np.int64)
    for _ in range(d):
        pm = _random_disjoint_matching(allowed, rng)
        rows = np.arange(n)
        mult[rows, pm.mapping] += 1
        allowed[rows, pm.mapping] = False
    return RegularMultigraph(mult)
