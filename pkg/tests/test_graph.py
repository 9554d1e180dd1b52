import numpy as np
import pytest

from predictive_consensus.errors import (
    ContractViolationError,
    DisconnectedGraphError,
    GenerationFailureError,
    InvalidSizeError,
)
from predictive_consensus.graph import (
    Graph,
    diameter,
    from_edges,
    make_chain,
    make_complete,
    make_grid,
    make_rgg,
    make_star,
    rgg_radius,
)


class TestChain:
    def test_two_nodes(self):
        g = make_chain(2)
        assert g.edges() == [(0, 1)]
        assert g.degrees.tolist() == [1, 1]

    def test_four_nodes(self):
        g = make_chain(4)
        assert g.edges() == [(0, 1), (1, 2), (2, 3)]
        assert diameter(g) == 3

    def test_interior_edges_have_max_degree_two(self):
        g = make_chain(5)
        d = g.degrees
        assert [max(d[i], d[j]) for i, j in g.edges()] == [2, 2, 2, 2]

    @pytest.mark.parametrize("n", range(2, 65))
    def test_diameter_is_n_minus_one(self, n):
        assert diameter(make_chain(n)) == n - 1

    def test_too_small(self):
        with pytest.raises(InvalidSizeError):
            make_chain(1)


class TestGrid:
    def test_side_two_is_a_cycle(self):
        g = make_grid(2)
        assert g.n == 4
        assert g.degrees.tolist() == [2, 2, 2, 2]
        assert g.num_edges == 4

    def test_side_three_degrees(self):
        d = make_grid(3).degrees
        assert d[4] == 4
        assert [d[c] for c in (0, 2, 6, 8)] == [2, 2, 2, 2]

    def test_diameters(self):
        assert diameter(make_grid(3)) == 4
        assert diameter(make_grid(4)) == 6

    def test_node_numbering_is_row_major(self):
        g = make_grid(3)
        assert g.neighbors(1) == (0, 2, 4)


class TestOtherTopologies:
    def test_complete_diameter(self):
        assert diameter(make_complete(4)) == 1

    def test_star_hub(self):
        g = make_star(5)
        assert g.degrees[0] == 4
        assert set(g.neighbors(0)) == {1, 2, 3, 4}

    def test_disconnected_diameter_raises(self):
        g = from_edges(4, [(0, 1), (2, 3)])
        assert not g.is_connected()
        with pytest.raises(DisconnectedGraphError):
            diameter(g)


class TestRgg:
    def test_radius(self):
        assert rgg_radius(200) == pytest.approx(np.sqrt(2 * np.log(200) / 200))

    def test_deterministic(self):
        a = make_rgg(50, seed=11)
        b = make_rgg(50, seed=11)
        assert a.edges() == b.edges()
        assert np.array_equal(a.positions, b.positions)
        assert a.retries == b.retries

    def test_different_seeds_differ(self):
        assert make_rgg(50, seed=1).edges() != make_rgg(50, seed=2).edges()

    def test_two_nodes_connected(self):
        # radius sqrt(log 2) > sqrt(2): any two points in the unit square are linked
        g = make_rgg(2, seed=0)
        assert g.edges() == [(0, 1)]

    def test_edges_match_positions(self):
        g = make_rgg(60, seed=4)
        r = rgg_radius(60)
        dist = np.linalg.norm(g.positions[:, None] - g.positions[None, :], axis=-1)
        expect = {(i, j) for i in range(60) for j in range(i + 1, 60) if dist[i, j] <= r}
        assert set(g.edges()) == expect

    def test_n200_connected(self):
        for seed in range(5):
            g = make_rgg(200, seed)
            assert g.is_connected()
            assert g.retries >= 0

    def test_positions_read_only(self):
        g = make_rgg(20, seed=0)
        with pytest.raises(ValueError):
            g.positions[0, 0] = 1.0

    def test_retry_cap(self, monkeypatch):
        import predictive_consensus.graph as graph_mod

        monkeypatch.setattr(graph_mod, "rgg_radius", lambda n: 1e-6)
        with pytest.raises(GenerationFailureError):
            make_rgg(30, 0, max_retries=3)

    def test_retries_recorded(self, monkeypatch):
        import predictive_consensus.graph as graph_mod

        calls = []
        real = graph_mod._rgg_sample

        def flaky(n, rng):
            pos, edges = real(n, rng)
            calls.append(1)
            return (pos, []) if len(calls) < 3 else (pos, edges)

        monkeypatch.setattr(graph_mod, "_rgg_sample", flaky)
        assert make_rgg(30, 0).retries == 2


class TestValidationAndSerialization:
    def test_asymmetric_rejected(self):
        with pytest.raises(ContractViolationError):
            Graph(n=2, neighbor_lists=((1,), ()))

    def test_self_loop_rejected(self):
        with pytest.raises(ContractViolationError):
            from_edges(3, [(1, 1)])

    def test_out_of_range_rejected(self):
        with pytest.raises(ContractViolationError):
            from_edges(3, [(0, 3)])

    @pytest.mark.parametrize("g", [make_chain(6), make_grid(3), make_rgg(40, 3)])
    def test_adjacency_symmetric_zero_diagonal(self, g):
        a = g.adjacency_matrix()
        assert np.array_equal(a, a.T)
        assert not a.diagonal().any()

    def test_edge_list_roundtrip(self):
        g = make_grid(3)
        text = g.to_edge_list()
        assert text.splitlines()[0] == "9"
        assert text.splitlines()[1] == "0 1"
        assert Graph.from_edge_list(text).edges() == g.edges()
