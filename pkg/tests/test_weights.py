import numpy as np
import pytest

from predictive_consensus.errors import ContractViolationError, DisconnectedGraphError
from predictive_consensus.graph import from_edges, make_chain, make_complete, make_grid, make_rgg, make_star
from predictive_consensus.weights import (
    WeightMatrix,
    check_conditions,
    lazy_transform,
    max_degree,
    metropolis_hastings,
)


def _sweep():
    for n in (8, 16, 32, 64):
        yield make_chain(n)
        yield make_rgg(n, seed=n)
    for side in (3, 4, 6, 8):
        yield make_grid(side)


class TestMetropolisHastings:
    def test_chain3_entries(self):
        w = metropolis_hastings(make_chain(3)).matrix
        assert w[0, 1] == pytest.approx(1 / 3)
        assert w[0, 0] == pytest.approx(2 / 3)
        assert w[1, 1] == pytest.approx(1 / 3)

    def test_chain_tridiagonal_thirds(self):
        w = metropolis_hastings(make_chain(12)).matrix
        off = np.diag(w, 1)
        assert np.allclose(off, 1 / 3)
        assert np.count_nonzero(np.triu(w, 2)) == 0

    def test_complete3(self):
        assert np.allclose(metropolis_hastings(make_complete(3)).matrix, 1 / 3)

    def test_disconnected_rejected(self):
        with pytest.raises(DisconnectedGraphError):
            metropolis_hastings(from_edges(4, [(0, 1), (2, 3)]))

    def test_read_only(self):
        w = metropolis_hastings(make_chain(4))
        with pytest.raises(ValueError):
            w.matrix[0, 0] = 0.0


class TestMaxDegree:
    def test_chain3(self):
        w = max_degree(make_chain(3)).matrix
        assert w[0, 1] == pytest.approx(1 / 3)
        assert w[0, 0] == pytest.approx(2 / 3)

    def test_star_leaf_diagonal(self):
        w = max_degree(make_star(4)).matrix
        assert w[1, 1] == pytest.approx(3 / 4)
        assert w[0, 0] == pytest.approx(1 / 4)

    def test_regular_graph_matches_mh(self):
        g = make_grid(2)  # 4-cycle, every degree 2
        assert np.allclose(max_degree(g).matrix, metropolis_hastings(g).matrix)


class TestLazyTransform:
    def test_identity_fixed(self):
        w = WeightMatrix(np.eye(3))
        assert np.array_equal(lazy_transform(w).matrix, np.eye(3))

    def test_chain3(self):
        w = lazy_transform(metropolis_hastings(make_chain(3))).matrix
        assert np.allclose(np.diag(w), [5 / 6, 2 / 3, 5 / 6])
        assert w[0, 1] == pytest.approx(1 / 6)

    def test_eigenvalue_map(self):
        m = np.array([[0.25, 0.75], [0.75, 0.25]])  # eigenvalues 1, -0.5
        ev = np.linalg.eigvalsh(lazy_transform(WeightMatrix(m)).matrix)
        assert ev.min() == pytest.approx(0.25)


class TestConditions:
    def test_chain10_ok(self):
        rep = check_conditions(metropolis_hastings(make_chain(10)))
        assert rep.all_ok
        assert rep.rho_deviation == pytest.approx(1 / 3 + 2 / 3 * np.cos(np.pi / 10), abs=1e-12)

    def test_identity_does_not_mix(self):
        rep = check_conditions(np.eye(5))
        assert not rep.contracting
        assert rep.rho_deviation == pytest.approx(1.0)

    def test_bipartite_flip_fails_ordering(self):
        rep = check_conditions(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert not rep.ordering
        assert rep.lambda_min == pytest.approx(-1.0)

    def test_non_stochastic_detected(self):
        rep = check_conditions(np.array([[0.5, 0.4], [0.4, 0.5]]))
        assert not rep.doubly_stochastic

    @pytest.mark.parametrize("build", [metropolis_hastings, max_degree])
    def test_sweep(self, build):
        for g in _sweep():
            rep = check_conditions(build(g))
            assert rep.doubly_stochastic and rep.symmetric and rep.contracting
            # lazy_transform always repairs the ordering condition
            assert check_conditions(lazy_transform(build(g))).all_ok

    @pytest.mark.parametrize("build", [metropolis_hastings, max_degree])
    def test_sparsity_matches_adjacency(self, build):
        for g in _sweep():
            w = build(g).matrix
            pattern = (g.adjacency_matrix() + np.eye(g.n)) != 0
            assert np.array_equal(w != 0, pattern)


class TestWeightMatrix:
    def test_rejects_non_edge(self):
        g = make_chain(3)
        with pytest.raises(ContractViolationError):
            WeightMatrix(np.full((3, 3), 1 / 3), g)

    def test_rejects_non_square(self):
        with pytest.raises(ContractViolationError):
            WeightMatrix(np.ones((2, 3)))

    def test_exchange_matches_dense(self):
        w = metropolis_hastings(make_rgg(30, 2))
        x = np.random.default_rng(0).normal(size=30)
        assert np.allclose(w.exchange.apply(x), w.matrix @ x, atol=1e-14)

    def test_exchange_without_graph(self):
        m = metropolis_hastings(make_chain(5)).matrix
        w = WeightMatrix(m)
        x = np.arange(5.0)
        assert np.allclose(w.exchange.apply(x), m @ x, atol=1e-15)

    def test_csv_roundtrip(self):
        w = metropolis_hastings(make_grid(3))
        back = np.loadtxt(w.to_csv().splitlines(), delimiter=",")
        assert np.array_equal(back, w.matrix)
