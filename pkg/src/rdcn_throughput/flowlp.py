"""Exact throughput via the multi-commodity-flow linear program.

Edge-based formulation: one commodity per (source, destination) pair with
positive demand, one flow variable per commodity and directed arc. Parallel
links between a pair aggregate into a single arc whose capacity is the link
count (unit link capacities; demand must be normalized to the same unit).
Maximize the demand scaling factor theta subject to source/destination demand,
flow conservation at intermediate nodes, and arc capacities. Padding
self-loops never enter the variable set.

The demand constraints bound the NET flow out of the source and into the
destination (gross minus returning flow). Bounding gross flow instead would
let disjoint cycles touching the endpoints register phantom throughput; net
flow is what a path flow delivers, matching the path-based definition of
throughput and the brute-force path oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .demand import DemandMatrix
from .topology import Topology

DEFAULT_TOL = 1e-7
# Interior point with crossover is markedly faster than simplex on the
# degenerate demand-aware instances and returns the same vertex optima;
# dual simplex stays available as the fallback.
DEFAULT_METHOD = "highs-ipm"
FALLBACK_METHOD = "highs-ds"
FLOW_EPS = 1e-12


class SolverError(RuntimeError):
    """LP backend failed to return a usable optimum."""


@dataclass(frozen=True)
class FlowViolation:
    kind: str  # capacity | source-demand | dest-demand | conservation | negative-flow | unknown-arc
    detail: str
    magnitude: float


@dataclass(frozen=True)
class VerificationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class ThroughputResult:
    """Optimal scaling factor plus the flow assignment that certifies it.

    flows maps (s, d, i, j) to the flow of commodity (s, d) on arc (i, j),
    in link-capacity units.
    """

    theta: float
    flows: dict
    solver_status: str  # optimal | infeasible | numerical-trouble
    message: str = ""

    def require_optimal(self) -> "ThroughputResult":
        if self.solver_status != "optimal":
            raise SolverError(f"solver returned {self.solver_status}: {self.message}")
        return self


def _problem_structure(t: Topology, m: DemandMatrix):
    if t.n != m.n:
        raise ValueError(f"dimension mismatch: topology n={t.n}, demand n={m.n}")
    counts = t.routable_counts()
    n = t.n
    arcs = [(i, j) for i in range(n) for j in range(n) if i != j and counts[i, j] > 0]
    commodities = [(s, d) for s in range(n) for d in range(n) if m.entries[s, d] > 0]
    if not commodities:
        raise ValueError("demand matrix has no positive entries; throughput is unbounded")
    return counts, arcs, commodities


def solve_max_throughput(t: Topology, m: DemandMatrix, tol: float = DEFAULT_TOL,
                         method: str = DEFAULT_METHOD) -> ThroughputResult:
    """Maximize theta such that theta*m admits a feasible flow on t.

    `m` must already be normalized to t.link_capacity units. `method` names the
    scipy.optimize.linprog backend; any LP solver honoring the formulation and
    an optimality tolerance of `tol` is acceptable. If the chosen method fails
    numerically, the dual simplex is tried once before reporting trouble.
    """
    counts, arcs, commodities = _problem_structure(t, m)
    n = t.n
    n_arcs = len(arcs)
    n_comm = len(commodities)
    nvar = 1 + n_comm * n_arcs  # theta first, then flows laid out commodity-major

    arcs_from = [[] for _ in range(n)]
    arcs_to = [[] for _ in range(n)]
    for a, (i, j) in enumerate(arcs):
        arcs_from[i].append(a)
        arcs_to[j].append(a)
    arcs_from = [np.array(lst, dtype=np.int64) for lst in arcs_from]
    arcs_to = [np.array(lst, dtype=np.int64) for lst in arcs_to]

    ub_rows, ub_cols, ub_data, b_ub = [], [], [], []
    row = 0
    # Source and destination demand: net outflow at s (net inflow at d)
    # >= theta * m[s, d], written as theta*m - sum(f_out) + sum(f_in) <= 0.
    for k, (s, d) in enumerate(commodities):
        base = 1 + k * n_arcs
        for fwd, rev in ((arcs_from[s], arcs_to[s]), (arcs_to[d], arcs_from[d])):
            size = 1 + fwd.size + rev.size
            ub_rows.append(np.full(size, row))
            ub_cols.append(np.concatenate(([0], base + fwd, base + rev)))
            ub_data.append(np.concatenate(
                ([m.entries[s, d]], np.full(fwd.size, -1.0), np.ones(rev.size))
            ))
            b_ub.append(0.0)
            row += 1
    # Arc capacities: total flow over all commodities <= link count.
    cap_rows = row + np.tile(np.arange(n_arcs), n_comm)
    cap_cols = 1 + (np.arange(n_comm)[:, None] * n_arcs + np.arange(n_arcs)[None, :]).ravel()
    ub_rows.append(cap_rows)
    ub_cols.append(cap_cols)
    ub_data.append(np.ones(n_comm * n_arcs))
    b_ub.extend(float(counts[i, j]) for i, j in arcs)
    row += n_arcs

    A_ub = sp.csr_matrix(
        (np.concatenate(ub_data), (np.concatenate(ub_rows), np.concatenate(ub_cols))),
        shape=(row, nvar),
    )

    eq_rows, eq_cols, eq_data = [], [], []
    row = 0
    for k, (s, d) in enumerate(commodities):
        base = 1 + k * n_arcs
        for j in range(n):
            if j == s or j == d:
                continue
            inc, out = arcs_to[j], arcs_from[j]
            if inc.size == 0 and out.size == 0:
                continue
            eq_rows.append(np.full(inc.size + out.size, row))
            eq_cols.append(np.concatenate((base + inc, base + out)))
            eq_data.append(np.concatenate((np.ones(inc.size), -np.ones(out.size))))
            row += 1
    if row:
        A_eq = sp.csr_matrix(
            (np.concatenate(eq_data), (np.concatenate(eq_rows), np.concatenate(eq_cols))),
            shape=(row, nvar),
        )
        b_eq = np.zeros(row)
    else:
        A_eq, b_eq = None, None

    c = np.zeros(nvar)
    c[0] = -1.0
    options = {
        "primal_feasibility_tolerance": max(tol, 1e-11),
        "dual_feasibility_tolerance": max(tol, 1e-11),
    }
    b_ub = np.array(b_ub)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=(0, None), method=method, options=options)
    if res.status not in (0, 3) and method != FALLBACK_METHOD:
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=(0, None), method=FALLBACK_METHOD, options=options)

    if res.status == 3:
        raise SolverError("LP reported unbounded theta on a capacity-bounded network")
    if res.status != 0:
        status = "infeasible" if res.status == 2 else "numerical-trouble"
        return ThroughputResult(float("nan"), {}, status, message=str(res.message))

    x = res.x
    flows = {}
    for idx in np.nonzero(x[1:] > FLOW_EPS)[0]:
        k, a = divmod(int(idx), n_arcs)
        s, d = commodities[k]
        i, j = arcs[a]
        flows[(s, d, i, j)] = float(x[1 + idx])
    return ThroughputResult(float(x[0]), flows, "optimal")


def verify_solution(t: Topology, m: DemandMatrix, r: ThroughputResult,
                    eps: float = 1e-6) -> VerificationReport:
    """Re-check every LP constraint from the raw flows with fresh arithmetic.

    Returns a report of violations exceeding eps (in link-capacity units);
    empty report means the flows certify theta.
    """
    counts = t.routable_counts()
    n = t.n
    violations = []

    arc_load = {}
    outflow = {}
    inflow = {}
    node_in = {}
    node_out = {}
    for (s, d, i, j), val in r.flows.items():
        if val < -eps:
            violations.append(FlowViolation("negative-flow", f"f[{s},{d},{i},{j}] = {val}", -val))
        if i == j or not (0 <= i < n and 0 <= j < n) or counts[i, j] == 0:
            violations.append(FlowViolation("unknown-arc", f"flow on nonexistent arc ({i},{j})", val))
            continue
        arc_load[(i, j)] = arc_load.get((i, j), 0.0) + val
        outflow[(s, d, i)] = outflow.get((s, d, i), 0.0) + val
        inflow[(s, d, j)] = inflow.get((s, d, j), 0.0) + val
        node_out.setdefault((s, d), set()).add(i)
        node_in.setdefault((s, d), set()).add(j)

    for (i, j), load in arc_load.items():
        slack = load - float(counts[i, j])
        if slack > eps:
            violations.append(
                FlowViolation("capacity", f"arc ({i},{j}) carries {load:.9g} > {int(counts[i, j])}", slack)
            )

    theta = r.theta
    for s in range(n):
        for d in range(n):
            need = theta * m.entries[s, d]
            if m.entries[s, d] <= 0:
                continue
            got_out = outflow.get((s, d, s), 0.0) - inflow.get((s, d, s), 0.0)
            if got_out < need - eps:
                violations.append(
                    FlowViolation("source-demand",
                                  f"commodity ({s},{d}) net-emits {got_out:.9g} < {need:.9g}",
                                  need - got_out)
                )
            got_in = inflow.get((s, d, d), 0.0) - outflow.get((s, d, d), 0.0)
            if got_in < need - eps:
                violations.append(
                    FlowViolation("dest-demand",
                                  f"commodity ({s},{d}) net-absorbs {got_in:.9g} < {need:.9g}",
                                  need - got_in)
                )
            touched = node_in.get((s, d), set()) | node_out.get((s, d), set())
            for j in touched:
                if j in (s, d):
                    continue
                imbalance = inflow.get((s, d, j), 0.0) - outflow.get((s, d, j), 0.0)
                if abs(imbalance) > eps:
                    violations.append(
                        FlowViolation("conservation",
                                      f"commodity ({s},{d}) unbalanced at node {j} by {imbalance:.9g}",
                                      abs(imbalance))
                    )
    return VerificationReport(tuple(violations))


def export_lp(t: Topology, m: DemandMatrix) -> str:
    """Render the LP in human-readable text with stable names f_s_d_i_j and theta."""
    counts, arcs, commodities = _problem_structure(t, m)
    lines = [
        f"\\ max-throughput LP for a {t.net_class!r} network, n={t.n}",
        "Maximize",
        " obj: theta",
        "Subject To",
    ]
    arcs_from = {}
    arcs_to = {}
    for (i, j) in arcs:
        arcs_from.setdefault(i, []).append((i, j))
        arcs_to.setdefault(j, []).append((i, j))
    for s, d in commodities:
        out_terms = " + ".join(f"f_{s}_{d}_{i}_{j}" for i, j in arcs_from.get(s, []))
        out_terms += "".join(f" - f_{s}_{d}_{i}_{j}" for i, j in arcs_to.get(s, []))
        in_terms = " + ".join(f"f_{s}_{d}_{i}_{j}" for i, j in arcs_to.get(d, []))
        in_terms += "".join(f" - f_{s}_{d}_{i}_{j}" for i, j in arcs_from.get(d, []))
        dem = f"{m.entries[s, d]:.17g} theta"
        lines.append(f" src_{s}_{d}: {out_terms or '0 theta'} - {dem} >= 0")
        lines.append(f" dst_{s}_{d}: {in_terms or '0 theta'} - {dem} >= 0")
        for j in range(t.n):
            if j in (s, d):
                continue
            inc = [f"f_{s}_{d}_{i}_{k}" for i, k in arcs_to.get(j, [])]
            out = [f"f_{s}_{d}_{j}_{k}" for _, k in arcs_from.get(j, [])]
            if not inc and not out:
                continue
            expr = " + ".join(inc) if inc else ""
            if out:
                expr += "".join(f" - {term}" for term in out)
            lines.append(f" con_{s}_{d}_{j}: {expr} = 0")
    for i, j in arcs:
        total = " + ".join(f"f_{s}_{d}_{i}_{j}" for s, d in commodities)
        lines.append(f" cap_{i}_{j}: {total} <= {int(counts[i, j])}")
    lines += ["Bounds", " theta >= 0", "End", ""]
    return "\n".join(lines)
