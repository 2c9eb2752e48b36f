import numpy as np
import pytest

from rdcn_throughput import (
    DemandMatrix,
    NetworkParams,
    Topology,
    ThroughputResult,
    build_oblivious_equivalent,
    export_lp,
    generate,
    normalize,
    solve_max_throughput,
    verify_solution,
)

from lp_oracle import path_lp_throughput


def complete_topology(n, cap=1.0):
    counts = np.ones((n, n), dtype=int)
    np.fill_diagonal(counts, 0)
    return Topology(counts, cap, "test", degree_budget=n - 1)


def unit_uniform_demand(n):
    entries = np.ones((n, n))
    np.fill_diagonal(entries, 0.0)
    return DemandMatrix(entries)


class TestSolveMaxThroughput:
    def test_complete_graph_carries_unit_uniform_exactly(self):
        result = solve_max_throughput(complete_topology(4), unit_uniform_demand(4))
        assert result.solver_status == "optimal"
        assert result.theta == pytest.approx(1.0, abs=1e-9)

    def test_single_link_half_throughput(self):
        counts = np.zeros((2, 2), dtype=int)
        counts[0, 1] = 1
        t = Topology(counts, 1.0, "test", degree_budget=1)
        entries = np.zeros((2, 2))
        entries[0, 1] = 2.0
        result = solve_max_throughput(t, DemandMatrix(entries))
        assert result.theta == pytest.approx(0.5, abs=1e-9)

    def test_commodity_with_no_outgoing_arcs_forces_zero(self):
        counts = np.zeros((3, 3), dtype=int)
        counts[1, 2] = 1
        t = Topology(counts, 1.0, "test", degree_budget=1)
        entries = np.zeros((3, 3))
        entries[0, 1] = 1.0
        result = solve_max_throughput(t, DemandMatrix(entries))
        assert result.theta == pytest.approx(0.0, abs=1e-9)

    def test_oblivious_lp_at_least_two_hop_oracle(self):
        p = NetworkParams(8, 2, 1.0)
        t = build_oblivious_equivalent(p)
        m = normalize(generate("permutation", p), t.link_capacity)
        full = solve_max_throughput(t, m).theta
        restricted = path_lp_throughput(t.routable_counts(), m.entries, max_len=2)
        assert full >= restricted - 1e-9

    def test_theta_can_exceed_one_for_slack_demand(self):
        entries = np.zeros((2, 2))
        entries[0, 1] = 0.25
        counts = np.zeros((2, 2), dtype=int)
        counts[0, 1] = 1
        t = Topology(counts, 1.0, "test", degree_budget=1)
        result = solve_max_throughput(t, DemandMatrix(entries))
        assert result.theta == pytest.approx(4.0, abs=1e-8)

    def test_scaling_duality(self):
        p = NetworkParams(6, 2, 1.0)
        t = build_oblivious_equivalent(p)
        m = normalize(generate("random-saturated", p, seed=4), t.link_capacity)
        base = solve_max_throughput(t, m).theta
        for k in (0.5, 2.0, 3.0):
            scaled = solve_max_throughput(t, m.scaled(k)).theta
            assert scaled == pytest.approx(base / k, abs=2e-7)

    @pytest.mark.parametrize("seed", range(6))
    def test_adding_a_link_never_hurts(self, seed):
        rng = np.random.default_rng(seed)
        n = 5
        counts = (rng.random((n, n)) < 0.5).astype(int)
        np.fill_diagonal(counts, 0)
        counts[0, 1] = max(counts[0, 1], 1)  # keep at least one arc
        entries = rng.random((n, n)) * (counts.sum() > 0)
        np.fill_diagonal(entries, 0.0)
        if not entries.any():
            entries[0, 1] = 1.0
        t = Topology(counts, 1.0, "test", degree_budget=n)
        base = solve_max_throughput(t, DemandMatrix(entries)).theta
        bumped = counts.copy()
        i, j = rng.integers(0, n, 2)
        while i == j:
            j = rng.integers(0, n)
        bumped[i, j] += 1
        t2 = Topology(bumped, 1.0, "test", degree_budget=n + 1)
        assert solve_max_throughput(t2, DemandMatrix(entries)).theta >= base - 1e-7

    def test_methods_agree(self):
        p = NetworkParams(6, 3, 1.0)
        t = build_oblivious_equivalent(p)
        m = normalize(generate("random-saturated", p, seed=9), t.link_capacity)
        a = solve_max_throughput(t, m, method="highs-ipm").theta
        b = solve_max_throughput(t, m, method="highs-ds").theta
        assert a == pytest.approx(b, abs=1e-7)

    def test_zero_demand_rejected(self):
        with pytest.raises(ValueError, match="no positive entries"):
            solve_max_throughput(complete_topology(3), DemandMatrix(np.zeros((3, 3))))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            solve_max_throughput(complete_topology(3), unit_uniform_demand(4))


class TestPathOracleEquivalence:
    """Edge and path formulations agree on every small topology with unit demands."""

    def topologies(self, n):
        yield complete_topology(n)
        ring = np.zeros((n, n), dtype=int)
        for i in range(n):
            ring[i, (i + 1) % n] = 1
        yield Topology(ring, 1.0, "ring", degree_budget=1)
        rng = np.random.default_rng(n)
        for seed in range(4):
            counts = rng.integers(0, 3, size=(n, n))
            np.fill_diagonal(counts, 0)
            # make sure every node can reach out and be reached
            for i in range(n):
                counts[i, (i + 1) % n] = max(counts[i, (i + 1) % n], 1)
            yield Topology(counts, 1.0, f"rand{seed}", degree_budget=int(counts.sum(axis=1).max()))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_equivalence(self, n):
        demand = unit_uniform_demand(n)
        for t in self.topologies(n):
            edge_opt = solve_max_throughput(t, demand).theta
            path_opt = path_lp_throughput(t.routable_counts(), demand.entries)
            assert edge_opt == pytest.approx(path_opt, abs=1e-6), t.net_class


class TestVerifySolution:
    def _solved(self):
        t = complete_topology(4)
        m = unit_uniform_demand(4)
        return t, m, solve_max_throughput(t, m)

    def test_optimal_solution_is_clean(self):
        t, m, result = self._solved()
        assert verify_solution(t, m, result).ok

    def test_capacity_violation_detected(self):
        t, m, result = self._solved()
        flows = dict(result.flows)
        key = next(iter(flows))
        flows[key] += 1.0
        report = verify_solution(t, m, ThroughputResult(result.theta, flows, "optimal"))
        assert any(v.kind == "capacity" for v in report.violations)

    def test_inflated_theta_detected(self):
        t, m, result = self._solved()
        report = verify_solution(t, m, ThroughputResult(result.theta * 1.1, result.flows, "optimal"))
        kinds = {v.kind for v in report.violations}
        assert "source-demand" in kinds and "dest-demand" in kinds

    def test_flow_on_missing_arc_detected(self):
        t, m, result = self._solved()
        flows = dict(result.flows)
        flows[(0, 1, 2, 2)] = 0.5
        report = verify_solution(t, m, ThroughputResult(result.theta, flows, "optimal"))
        assert any(v.kind == "unknown-arc" for v in report.violations)

    def test_conservation_violation_detected(self):
        counts = np.zeros((3, 3), dtype=int)
        counts[0, 1] = counts[1, 2] = 1
        t = Topology(counts, 1.0, "line", degree_budget=1)
        entries = np.zeros((3, 3))
        entries[0, 2] = 1.0
        m = DemandMatrix(entries)
        result = solve_max_throughput(t, m)
        flows = dict(result.flows)
        flows[(0, 2, 0, 1)] = flows.get((0, 2, 0, 1), 0.0) + 0.25
        report = verify_solution(t, m, ThroughputResult(result.theta, flows, "optimal"))
        assert any(v.kind == "conservation" for v in report.violations)

    def test_require_optimal_raises_on_failure_status(self):
        from rdcn_throughput import SolverError
        bad = ThroughputResult(float("nan"), {}, "numerical-trouble", "test")
        with pytest.raises(SolverError):
            bad.require_optimal()


class TestExportLp:
    def test_stable_naming_and_structure(self):
        counts = np.zeros((3, 3), dtype=int)
        counts[0, 1] = 1
        counts[1, 2] = 2
        t = Topology(counts, 1.0, "line", degree_budget=2)
        entries = np.zeros((3, 3))
        entries[0, 2] = 1.5
        text = export_lp(t, DemandMatrix(entries))
        assert "Maximize" in text and "obj: theta" in text
        assert " src_0_2: f_0_2_0_1 - 1.5 theta >= 0" in text
        assert " dst_0_2: f_0_2_1_2 - 1.5 theta >= 0" in text
        assert " con_0_2_1: f_0_2_0_1 - f_0_2_1_2 = 0" in text
        assert " cap_1_2: f_0_2_1_2 <= 2" in text
        assert text.rstrip().endswith("End")
