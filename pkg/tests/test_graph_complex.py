from __future__ import annotations

import numpy as np
import pytest

from conftest import random_graphs
from oracles import annihilation_matrix, cliques, creation_matrix, independent_sets, reduced_betti_by_size
from susyhom import complex as cx
from susyhom.graph_complex import (
    Graph,
    PointCloud,
    betti_scan,
    clique_complex,
    complement,
    hardcore_hamiltonian,
    hardcore_supercharge,
    independence_complex,
    independence_space,
    vietoris_rips,
)
from susyhom.operators import FermionOperator, adjoint, anticommutator, nilpotency_residual, sector_matrix

SQUARE = PointCloud(np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]))


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(2, frozenset({(0, 0)}))
    with pytest.raises(ValueError):
        Graph(2, frozenset({(0, 2)}))
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    assert Graph.from_edges(3, [(1, 0)]).sorted_edges() == [(0, 1)]


def test_independence_space_examples():
    assert independence_space(Graph(3)).dims() == [1, 3, 3, 1]
    assert independence_space(Graph.complete(3)).dims() == [1, 3, 0, 0]
    dims = independence_space(Graph.cycle(6)).dims()
    assert dims[2] == 9 and dims[3] == 2
    assert independence_space(Graph.path(2)).sector_words(2) == []


def test_independence_space_matches_brute_force():
    for G in random_graphs(30, 12, seed=3):
        space = independence_space(G)
        brute = sorted(sum(1 << v for v in S) for S in independent_sets(G.n, G.sorted_edges()))
        words = sorted(w for l in range(G.n + 1) for w in space.sector_words(l))
        assert words == brute


def test_supercharge_examples():
    assert hardcore_supercharge(Graph(1)).equals(FermionOperator.create(1, 0))
    one = FermionOperator.identity(2)
    n0, n1 = FermionOperator.number(2, 0), FermionOperator.number(2, 1)
    expect = FermionOperator.create(2, 0) @ (one - n1) + FermionOperator.create(2, 1) @ (one - n0)
    assert hardcore_supercharge(Graph.path(2)).equals(expect)
    d = hardcore_supercharge(Graph.cycle(6))
    assert d.locality() == 3
    assert nilpotency_residual(d, independence_space(Graph.cycle(6))) == 0


def test_adjoint_is_sum_of_dressed_annihilators():
    G = Graph.cycle(5)
    one = FermionOperator.identity(5)
    expect = FermionOperator.zero(5)
    for i in range(5):
        P = one
        for j in G.neighbours(i):
            P = P @ (one - FermionOperator.number(5, j))
        expect = expect + P @ FermionOperator.annihilate(5, i)
    assert adjoint(hardcore_supercharge(G)).equals(expect)


def test_single_vertex_hamiltonian_is_identity():
    d = hardcore_supercharge(Graph(1))
    assert anticommutator(d, adjoint(d)).equals(FermionOperator.identity(1))
    assert hardcore_hamiltonian(Graph(1)).equals(FermionOperator.identity(1))


def test_hamiltonian_matches_kronecker_oracle():
    for G in random_graphs(12, 7, seed=4, n_min=2):
        m = G.n
        adj = {i: set() for i in range(m)}
        for u, v in G.sorted_edges():
            adj[u].add(v)
            adj[v].add(u)
        eye = np.eye(2**m)

        def proj(i):
            P = eye
            for j in adj[i]:
                P = P @ (eye - creation_matrix(j, m) @ annihilation_matrix(j, m))
            return P

        Q = sum(creation_matrix(i, m) @ proj(i) for i in range(m))
        H = Q @ Q.conj().T + Q.conj().T @ Q
        space = independence_space(G)
        op = hardcore_hamiltonian(G)
        for l in range(m + 1):
            words = space.sector_words(l)
            if words:
                assert np.allclose(sector_matrix(op, space, l).toarray(), H[np.ix_(words, words)])


def test_hamiltonian_p2_sector():
    H = hardcore_hamiltonian(Graph.path(2))
    assert np.allclose(sector_matrix(H, independence_space(Graph.path(2)), 1).toarray(), [[1, 1], [1, 1]])


def test_complement_and_clique_examples():
    assert complement(Graph.complete(3)).edges == frozenset()
    c4 = clique_complex(Graph.cycle(4))
    assert c4.dims() == [1, 4, 4, 0, 0]
    assert cx.betti_numbers(c4) == [0, 0, 1, 0, 0]
    assert cx.euler_characteristic(c4.dims()) == 1
    k3 = clique_complex(Graph.complete(3))
    assert k3.dims() == [1, 3, 3, 1]
    assert cx.betti_numbers(k3) == [0, 0, 0, 0]
    assert cx.euler_characteristic(k3.dims()) == 0


def test_betti_matches_simplicial_oracle():
    for G in random_graphs(15, 8, seed=5):
        edges = G.sorted_edges()
        assert cx.betti_numbers(independence_complex(G)) == reduced_betti_by_size(independent_sets(G.n, edges), G.n)
        assert cx.betti_numbers(clique_complex(G)) == reduced_betti_by_size(cliques(G.n, edges), G.n)


def test_vietoris_rips_examples():
    pair = PointCloud(np.array([[0.0, 0], [1, 0]]))
    assert vietoris_rips(pair, 0.5).edges == frozenset()
    assert vietoris_rips(pair, 1.0).edges == frozenset({(0, 1)})
    sq = vietoris_rips(SQUARE, 1.1)
    assert sq.sorted_edges() == Graph.cycle(4).sorted_edges()


def test_betti_scan_square():
    rows = betti_scan(SQUARE, [0.9, 1.1, 1.5], 2)
    beta2 = [r.betti for r in rows if r.level == 2]
    assert beta2 == [0, 1, 0]


def test_betti_scan_conventions():
    one = PointCloud(np.array([[0.0, 0.0]]))
    raw = betti_scan(one, [1.0], 1)
    assert [r.betti for r in raw] == [0, 0]
    simp = betti_scan(one, [1.0], 1, convention="simplicial")
    assert [(r.level, r.betti) for r in simp] == [(0, 1), (1, 0)]
    assert betti_scan(PointCloud(np.zeros((0, 2))), [1.0], 1) == []
    with pytest.raises(ValueError):
        betti_scan(SQUARE, [1.5, 1.0], 1)
