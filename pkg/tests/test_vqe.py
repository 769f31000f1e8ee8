from __future__ import annotations

import cmath
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import PAULI, annihilation_matrix, creation_matrix, kron_qubits
from susyhom import complex as cx
from susyhom.graph_complex import Graph, hardcore_hamiltonian, independence_complex
from susyhom.operators import FermionOperator, full_matrix
from susyhom.pauli import QubitOperator, multiply_strings, string_key, strings_commute
from susyhom.vqe import (
    AnsatzSpec,
    FactoredOperator,
    GREEDY,
    ansatz_state,
    commuting_groups,
    hardcore_penalty,
    independent_start,
    jordan_wigner,
    jw_dirac,
    jw_laplacian,
    number_preserving_ansatz,
    vqe_run,
)

letters = st.sampled_from("IXYZ")
strings = st.lists(letters, min_size=3, max_size=3)


def _key(s):
    return string_key({q: p for q, p in enumerate(s)})


def _mat(s):
    return kron_qubits({q: PAULI[p] for q, p in enumerate(s)}, len(s))


@given(strings, strings)
@settings(max_examples=100, deadline=None)
def test_string_product_matches_matrices(a, b):
    k, c = multiply_strings(_key(a), _key(b))
    x, z = c
    word = ["Y" if (x >> q & 1) and (z >> q & 1) else "X" if x >> q & 1 else "Z" if z >> q & 1 else "I" for q in range(3)]
    assert np.allclose(_mat(a) @ _mat(b), 1j**k * _mat(word))
    commute = np.allclose(_mat(a) @ _mat(b), _mat(b) @ _mat(a))
    assert strings_commute(_key(a), _key(b)) == commute


def test_qubit_operator_matrix():
    op = QubitOperator.from_list(2, [(0.5, {0: "X", 1: "Z"}), (2, {1: "Y"})])
    ref = 0.5 * kron_qubits({0: PAULI["X"], 1: PAULI["Z"]}, 2) + 2 * kron_qubits({1: PAULI["Y"]}, 2)
    assert np.allclose(op.matrix(), ref)
    assert op.is_hermitian()


def test_jordan_wigner_examples():
    a0 = jordan_wigner(FermionOperator.create(1, 0))
    expect = QubitOperator.from_list(1, [(0.5, {0: "X"}), (-0.5j, {0: "Y"})])
    assert a0.equals(expect)
    a1 = jordan_wigner(FermionOperator.create(2, 1))
    expect = QubitOperator.from_list(2, [(0.5, {0: "Z", 1: "X"}), (-0.5j, {0: "Z", 1: "Y"})])
    assert a1.equals(expect)
    n0 = jordan_wigner(FermionOperator.number(1, 0))
    assert n0.equals(QubitOperator.from_list(1, [(0.5, {}), (-0.5, {0: "Z"})]))


def test_jordan_wigner_matches_kronecker_ladder():
    m = 4
    for i in range(m):
        assert np.allclose(jordan_wigner(FermionOperator.create(m, i)).matrix(), creation_matrix(i, m))
        assert np.allclose(jordan_wigner(FermionOperator.annihilate(m, i)).matrix(), annihilation_matrix(i, m))


def test_jw_spectrum_preserved_on_graphs():
    for n in range(2, 8):
        G = Graph.cycle(n)
        H = hardcore_hamiltonian(G)
        a = np.linalg.eigvalsh(jordan_wigner(H).matrix())
        b = np.linalg.eigvalsh(full_matrix(H).toarray())
        assert np.allclose(a, b, atol=1e-8)


def test_jw_dirac_examples():
    B = jw_dirac(Graph(1))
    assert len(B) == 1
    assert np.allclose(np.sort(np.linalg.eigvalsh(B.expand().matrix())), [-1, 1])
    assert len(jw_dirac(Graph.path(2))) == 2
    c6 = Graph.cycle(6)
    B = jw_dirac(c6)
    assert len(B) == 6
    # on independent sets the expanded operator is the fermionic Dirac operator
    c = independence_complex(c6)
    words = [w for l in range(7) for w in c.space.sector_words(l)]
    Bq = B.expand().matrix()[np.ix_(words, words)]
    assert np.allclose(np.sort(np.linalg.eigvalsh(Bq)), np.sort(cx.spectrum(cx.dirac(c))))


def test_jw_laplacian_examples():
    assert len(jw_laplacian(Graph.path(2))) <= 4
    assert len(jw_laplacian(Graph(1))) == 1
    c6 = Graph.cycle(6)
    L = jw_laplacian(c6)
    assert len(L) <= 18
    assert L.expand().equals(jordan_wigner(hardcore_hamiltonian(c6)), 1e-12)


def test_commuting_groups_examples():
    allz = QubitOperator.from_list(3, [(1, {0: "Z"}), (2, {1: "Z", 2: "Z"}), (1, {2: "Z"})])
    assert len(commuting_groups(allz, GREEDY)) == 1
    xz = QubitOperator.from_list(1, [(1, {0: "X"}), (1, {0: "Z"})])
    assert len(commuting_groups(xz, GREEDY)) == 2
    assert len(commuting_groups(jw_dirac(Graph.cycle(6)))) <= 6
    with pytest.raises(ValueError):
        commuting_groups(xz, "random")


def test_group_partition_covers_operator():
    op = jw_laplacian(Graph.cycle(5)).expand()
    for strategy in ("per-term", GREEDY):
        groups = commuting_groups(op, strategy)
        total = QubitOperator(op.n, {})
        for g in groups:
            assert all(strings_commute(a, b) for a, b in itertools.combinations(g.terms, 2))
            total = total + g
        assert total.equals(op)


def test_ansatz_state_examples():
    spec = number_preserving_ansatz(2)
    psi = ansatz_state(spec, np.zeros(spec.n_params), "10")
    assert np.allclose(psi, np.eye(4)[1])
    z = AnsatzSpec([QubitOperator.single(1, 0, "Z")])
    # exp(i t Z) puts e^{it} on |0> and e^{-it} on |1>
    assert np.allclose(ansatz_state(z, [np.pi / 2], "0"), [cmath.exp(0.5j * np.pi), 0])
    assert np.allclose(ansatz_state(z, [np.pi / 2], "1"), [0, cmath.exp(-0.5j * np.pi)])


def test_number_preserving_support():
    rng = np.random.default_rng(0)
    spec = number_preserving_ansatz(2, layers=2)
    psi = ansatz_state(spec, rng.uniform(-np.pi, np.pi, spec.n_params), "10")
    assert abs(psi[0]) < 1e-12 and abs(psi[3]) < 1e-12
    assert np.linalg.norm(psi) == pytest.approx(1, abs=1e-12)


def test_ansatz_rejects_non_commuting_group():
    with pytest.raises(ValueError):
        AnsatzSpec([QubitOperator.from_list(1, [(1, {0: "X"}), (1, {0: "Z"})])])


def test_vqe_single_qubit():
    H = QubitOperator.single(1, 0, "Z")
    spec = AnsatzSpec([QubitOperator.single(1, 0, "X")])
    res = vqe_run(H, spec, 1, restarts=2, seed=0)
    assert res.energy == pytest.approx(-1, abs=1e-6)
    assert res.energy >= res.reference - 1e-10


def test_vqe_is_deterministic():
    G = Graph.path(3)
    H = jw_laplacian(G).expand() + hardcore_penalty(G)
    spec = number_preserving_ansatz(3)
    a = vqe_run(H, spec, 1, restarts=3, seed=5)
    b = vqe_run(H, spec, 1, restarts=3, seed=5, workers=3)
    assert a.energy == b.energy and np.array_equal(a.params, b.params)


def test_vqe_simplex_on_p2():
    G = Graph.path(2)
    spec = number_preserving_ansatz(2)
    res = vqe_run(jw_laplacian(G), spec, 1, optimizer="simplex", restarts=5, seed=1)
    assert min(res.restart_energies) <= 1e-4


def test_hardcore_penalty_and_start():
    G = Graph.cycle(6)
    P = hardcore_penalty(G, 2).matrix()
    assert P[0b010101, 0b010101] == 0
    assert P[0b000011, 0b000011] == 2
    assert independent_start(G, 3) == 0b010101
    with pytest.raises(ValueError):
        independent_start(G, 4)


def test_factored_operator_expand_count():
    L = jw_laplacian(Graph.complete(4))
    assert isinstance(L, FactoredOperator)
    assert len(L) == 6 + 4
