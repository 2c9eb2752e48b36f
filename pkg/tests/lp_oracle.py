"""Brute-force path-formulation oracle for small max-throughput instances.

Independent of the edge-based production formulation: enumerates (simple)
paths explicitly and solves the path LP. Used to cross-check optima on
instances small enough to enumerate.
"""

import numpy as np
from scipy.optimize import linprog


def enumerate_paths(counts, s, d, max_len=None):
    """All simple directed paths s -> d over arcs with positive link count."""
    n = counts.shape[0]
    limit = max_len if max_len is not None else n - 1
    paths = []

    def extend(node, visited, arcs):
        if node == d:
            paths.append(tuple(arcs))
            return
        if len(arcs) == limit:
            return
        for nxt in range(n):
            if nxt != node and nxt not in visited and counts[node, nxt] > 0:
                extend(nxt, visited | {nxt}, arcs + [(node, nxt)])

    extend(s, {s}, [])
    return paths


def path_lp_throughput(counts, demand, max_len=None):
    """Maximize theta with one variable per enumerated path.

    Returns the optimum, or 0.0 when some commodity has no path at all.
    """
    n = counts.shape[0]
    commodities = [(s, d) for s in range(n) for d in range(n) if s != d and demand[s, d] > 0]
    all_paths = []
    owners = []
    for k, (s, d) in enumerate(commodities):
        paths = enumerate_paths(counts, s, d, max_len=max_len)
        if not paths:
            return 0.0
        all_paths.extend(paths)
        owners.extend([k] * len(paths))

    nvar = 1 + len(all_paths)
    rows = []
    b = []
    for k, (s, d) in enumerate(commodities):
        row = np.zeros(nvar)
        row[0] = demand[s, d]
        for idx, owner in enumerate(owners):
            if owner == k:
                row[1 + idx] = -1.0
        rows.append(row)
        b.append(0.0)
    arcs = [(i, j) for i in range(n) for j in range(n) if i != j and counts[i, j] > 0]
    for (i, j) in arcs:
        row = np.zeros(nvar)
        for idx, path in enumerate(all_paths):
            if (i, j) in path:
                row[1 + idx] = 1.0
        rows.append(row)
        b.append(float(counts[i, j]))

    c = np.zeros(nvar)
    c[0] = -1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(b), bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.x[0])
