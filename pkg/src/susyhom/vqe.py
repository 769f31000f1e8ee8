"""Jordan-Wigner forms of the hard-core operators and a statevector VQE.

Mode ``i`` maps to qubit ``i`` with ``|1>`` meaning occupied:
``a_i^dag -> (X_i - i Y_i)/2 * Z_0 ... Z_{i-1}``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .fock import CapExceeded
from .graph_complex import Graph
from .operators import FermionOperator
from .pauli import PauliKey, QubitOperator, string_label, strings_commute

STATEVECTOR_CAP = 20
PER_TERM = "per-term"
GREEDY = "greedy-coloring"
GOLDEN = (math.sqrt(5) - 1) / 2


def _check_cap(m: int) -> None:
    if m > STATEVECTOR_CAP:
        raise CapExceeded(f"{m} qubits exceed the statevector cap {STATEVECTOR_CAP}")


# -- Jordan-Wigner --------------------------------------------------------------
_RAISE = {(1, 0): 0.5, (1, 1): -0.5j}   # |1><0| = (X - iY)/2
_LOWER = {(1, 0): 0.5, (1, 1): 0.5j}    # |0><1| = (X + iY)/2
_OCC = {(0, 0): 0.5, (0, 1): -0.5}      # |1><1| = (I - Z)/2


def _monomial_to_qubit(cre: tuple[int, ...], ann: tuple[int, ...], coef, m: int) -> QubitOperator:
    # the monomial maps each valid input word to a single output word; its sign
    # is a constant times a parity of the untouched ("spectator") modes
    support = 0
    for i in cre + ann:
        support |= 1 << i
    zmask = 0
    for i in cre + ann:
        zmask ^= (1 << i) - 1
    zmask &= ~support
    ann_mask = sum(1 << i for i in ann)
    sign = 1
    w = ann_mask
    for i in reversed(ann):
        if (w & ((1 << i) - 1)).bit_count() & 1:
            sign = -sign
        w ^= 1 << i
    for i in reversed(cre):
        if (w & ((1 << i) - 1)).bit_count() & 1:
            sign = -sign
        w |= 1 << i
    terms: dict[PauliKey, complex] = {(0, zmask): complex(coef) * sign}
    cset, aset = set(cre), set(ann)
    for i in sorted(cset | aset):
        if i in cset and i in aset:
            local = _OCC
        elif i in cset:
            local = _RAISE
        else:
            local = _LOWER
        new: dict[PauliKey, complex] = {}
        for (x, z), c in terms.items():
            for (bx, bz), lc in local.items():
                key = (x | (bx << i), z | (bz << i))
                new[key] = new.get(key, 0) + c * lc
        terms = new
    return QubitOperator(m, terms)


def jordan_wigner(op: FermionOperator) -> QubitOperator:
    """Qubit image of a fermion operator on the full ``2^m`` space."""
    _check_cap(op.m)
    acc: dict[PauliKey, complex] = {}
    scale = op.scale if op.scale2 != 1 else 1
    for (cre, ann), c in op.terms.items():
        for key, v in _monomial_to_qubit(cre, ann, c, op.m).terms.items():
            acc[key] = acc.get(key, 0) + v
    out = QubitOperator(op.m, acc)
    return out * scale if scale != 1 else out


# -- factored forms ----------------------------------------------------------------
@dataclass(frozen=True)
class FactoredTerm:
    """``core * prod_{q in projectors} (I + Z_q)/2``; the projectors vanish on occupied qubits."""

    core: QubitOperator
    projectors: tuple[int, ...] = ()

    def expand(self) -> QubitOperator:
        out = self.core
        n = self.core.n
        for q in self.projectors:
            out = out * QubitOperator(n, {(0, 0): 0.5, (0, 1 << q): 0.5})
        return out


@dataclass(frozen=True)
class FactoredOperator:
    n: int
    terms: tuple[FactoredTerm, ...]

    def __len__(self) -> int:
        return len(self.terms)

    def expand(self) -> QubitOperator:
        total = QubitOperator(self.n)
        for t in self.terms:
            total = total + t.expand()
        return total


def _zstring(qubits) -> int:
    z = 0
    for q in qubits:
        z |= 1 << q
    return z


def jw_dirac(G: Graph) -> FactoredOperator:
    """``B = sum_i X_i Z_{<i} P_i`` with ``P_i`` the neighbourhood projector."""
    _check_cap(G.n)
    adj = G.adjacency()
    terms = []
    for i in range(G.n):
        core = QubitOperator(G.n, {(1 << i, _zstring(range(i))): 1})
        terms.append(FactoredTerm(core, tuple(adj[i])))
    return FactoredOperator(G.n, tuple(terms))


def jw_laplacian(G: Graph) -> FactoredOperator:
    """Hard-core Hamiltonian as ``|E| + n`` projector-dressed terms.

    Edge ``(i, j)`` contributes ``(X_i X_j + Y_i Y_j)/2`` with a ``Z`` string on
    the qubits strictly between ``i`` and ``j``, dressed by the projectors of
    ``N(i) | N(j)`` minus ``{i, j}``; vertex ``i`` contributes ``P_i``.
    """
    _check_cap(G.n)
    adj = G.adjacency()
    terms = []
    for i, j in G.sorted_edges():
        mid = _zstring(range(i + 1, j))
        pair = (1 << i) | (1 << j)
        core = QubitOperator(G.n, {(pair, mid): 0.5, (pair, mid | pair): 0.5})
        dress = tuple(sorted((set(adj[i]) | set(adj[j])) - {i, j}))
        terms.append(FactoredTerm(core, dress))
    for i in range(G.n):
        terms.append(FactoredTerm(QubitOperator.identity(G.n), tuple(adj[i])))
    return FactoredOperator(G.n, tuple(terms))


# -- grouping ---------------------------------------------------------------------------
def _verify_group(keys: Sequence[PauliKey]) -> None:
    for a, b in combinations(keys, 2):
        if not strings_commute(a, b):
            raise AssertionError(f"strings {a} and {b} in one group do not commute")


def commuting_groups(op: Union[QubitOperator, FactoredOperator], strategy: str = PER_TERM) -> list[QubitOperator]:
    """Partition the strings of ``op`` into mutually commuting groups.

    ``per-term`` keeps each top-level factored term together (a plain
    :class:`QubitOperator` has one term per string); a string shared by
    several terms goes to the first of them.  ``greedy-coloring`` colours the
    anticommutation graph in order of descending degree, lowest index first.
    """
    if isinstance(op, FactoredOperator):
        full = op.expand()
        n = op.n
        parts = [t.expand() for t in op.terms]
    else:
        full = op
        n = op.n
        parts = [QubitOperator(n, {k: c}) for k, c in sorted(op.terms.items())]
    if strategy == PER_TERM:
        groups = []
        placed = set()
        for part in parts:
            keys = [k for k in sorted(part.terms) if k in full.terms and k not in placed]
            if not keys:
                continue
            placed.update(keys)
            groups.append(QubitOperator(n, {k: full.terms[k] for k in keys}))
    elif strategy == GREEDY:
        keys = sorted(full.terms)
        nbrs = [[j for j, b in enumerate(keys) if j != i and not strings_commute(a, b)] for i, a in enumerate(keys)]
        order = sorted(range(len(keys)), key=lambda i: (-len(nbrs[i]), i))
        colour: dict[int, int] = {}
        for i in order:
            used = {colour[j] for j in nbrs[i] if j in colour}
            c = 0
            while c in used:
                c += 1
            colour[i] = c
        ncol = max(colour.values(), default=-1) + 1
        groups = [
            QubitOperator(n, {keys[i]: full.terms[keys[i]] for i in range(len(keys)) if colour[i] == c})
            for c in range(ncol)
        ]
    else:
        raise ValueError(f"unknown grouping strategy {strategy!r}")
    for g in groups:
        _verify_group(list(g.terms))
    return groups


# -- statevector machinery ------------------------------------------------------------------
def _string_action(key: PauliKey, m: int) -> tuple[np.ndarray, np.ndarray]:
    """``(perm, phase)`` with ``(P psi)[perm[b]] = phase[b] * psi[b]``."""
    x, z = key
    idx = np.arange(1 << m, dtype=np.int64)
    par = np.zeros(1 << m, dtype=np.int64)
    for q in range(m):
        if (z >> q) & 1:
            par += (idx >> q) & 1
    k = ((x & z).bit_count() + 2 * par) % 4
    return idx ^ x, np.array([1, 1j, -1, -1j])[k]


@dataclass
class AnsatzSpec:
    """Layers of ``prod_j exp(i t_j H_j)`` over commuting groups ``H_j``.

    Within a layer the groups act in list order (group 0 first).
    """

    groups: list[QubitOperator]
    layers: int = 1

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("need at least one layer")
        if not self.groups:
            raise ValueError("ansatz needs at least one group")
        n = self.groups[0].n
        for g in self.groups:
            if g.n != n:
                raise ValueError("all groups must act on the same qubits")
            if not g.is_hermitian():
                raise ValueError("group generators must be Hermitian")
            if not all(strings_commute(a, b) for a, b in combinations(g.terms, 2)):
                raise ValueError("strings inside one ansatz group must commute")

    @property
    def n(self) -> int:
        return self.groups[0].n

    @property
    def n_params(self) -> int:
        return self.layers * len(self.groups)

    def to_json(self, params=None, seed=None) -> dict:
        return {
            "groups": [[f"{complex(c).real:.12g} {string_label(k, self.n)}" for k, c in sorted(g.terms.items())]
                       for g in self.groups],
            "layers": self.layers,
            "params": [] if params is None else [float(p) for p in np.ravel(params)],
            "seed": seed,
        }


def number_preserving_ansatz(n: int, layers: int = 1, zz: bool = False) -> AnsatzSpec:
    """Pair-hopping groups ``{X_iX_j/2, Y_iY_j/2}`` followed by ``Z_i`` (and optional ``Z_iZ_j``)."""
    groups = []
    for i, j in combinations(range(n), 2):
        pair = (1 << i) | (1 << j)
        groups.append(QubitOperator(n, {(pair, 0): 0.5, (pair, pair): 0.5}))
    for i in range(n):
        groups.append(QubitOperator(n, {(0, 1 << i): 1}))
    if zz:
        for i, j in combinations(range(n), 2):
            groups.append(QubitOperator(n, {(0, (1 << i) | (1 << j)): 1}))
    return AnsatzSpec(groups, layers)


def hardcore_penalty(G: Graph, J=None) -> QubitOperator:
    """``J sum_{(i,j) in E} n_i n_j`` with ``n_i = (1 - Z_i)/2``.

    Diagonal, zero on independent sets and at least ``J`` elsewhere.  The
    hard-core Hamiltonian preserves the independent-set space, so adding this
    term with ``J`` above its largest eigenvalue keeps the low spectrum inside
    that space.  The default ``J`` is ``1 + `` the Pauli 1-norm of the Hamiltonian.
    """
    if J is None:
        J = 1 + math.ceil(jw_laplacian(G).expand().norm1())
    acc: dict[PauliKey, float] = {}
    for i, j in G.sorted_edges():
        zi, zj = 1 << i, 1 << j
        for key, c in (((0, 0), 1), ((0, zi), -1), ((0, zj), -1), ((0, zi | zj), 1)):
            acc[key] = acc.get(key, 0) + c * J / 4
    return QubitOperator(G.n, acc)


def independent_start(G: Graph, l: int) -> int:
    """Smallest basis index of weight ``l`` whose occupied qubits form an independent set."""
    adj = G.adjacency()
    for w in _weight_basis(G.n, l):
        w = int(w)
        if all(not (w >> j) & 1 for i in range(G.n) if (w >> i) & 1 for j in adj[i]):
            return w
    raise ValueError(f"graph has no independent set of size {l}")


def _basis_index(initial, n: int) -> int:
    if hasattr(initial, "occupancy"):
        if initial.m != n:
            raise ValueError(f"initial state has {initial.m} modes, ansatz has {n} qubits")
        return initial.occupancy
    if isinstance(initial, str):
        if len(initial) != n or set(initial) - {"0", "1"}:
            raise ValueError("initial bit string must have one 0/1 per qubit")
        return sum(int(b) << q for q, b in enumerate(initial))
    b = int(initial)
    if not 0 <= b < 1 << n:
        raise ValueError("initial basis index out of range")
    return b


def ansatz_state(spec: AnsatzSpec, params, initial) -> np.ndarray:
    """Exact statevector; each group exponential is a product of Pauli rotations."""
    n = spec.n
    _check_cap(n)
    params = np.asarray(params, dtype=float).reshape(spec.layers, len(spec.groups))
    psi = np.zeros(1 << n, dtype=complex)
    psi[_basis_index(initial, n)] = 1.0
    actions = [[(_string_action(k, n), float(complex(c).real)) for k, c in sorted(g.terms.items())] for g in spec.groups]
    for layer in range(spec.layers):
        for j, acts in enumerate(actions):
            t = params[layer, j]
            if t == 0:
                continue
            for (perm, phase), c in acts:
                ang = t * c
                moved = np.zeros_like(psi)
                moved[perm] = phase * psi
                psi = math.cos(ang) * psi + 1j * math.sin(ang) * moved
    return psi


# -- optimisation ------------------------------------------------------------------------------
@dataclass
class _Problem:
    H: np.ndarray
    gens: list[tuple[np.ndarray, np.ndarray]]   # eigenvalues, eigenvectors per group
    psi0: np.ndarray
    layers: int

    @property
    def n_groups(self) -> int:
        return len(self.gens)

    def state(self, params: np.ndarray) -> np.ndarray:
        psi = self.psi0
        p = params.reshape(self.layers, self.n_groups)
        for layer in range(self.layers):
            for j, (lam, vec) in enumerate(self.gens):
                t = p[layer, j]
                if t:
                    psi = vec @ (np.exp(1j * t * lam) * (vec.conj().T @ psi))
        return psi

    def energy(self, params: np.ndarray) -> float:
        psi = self.state(params)
        return float(np.real(np.vdot(psi, self.H @ psi)))

    def line(self, params: np.ndarray, k: int):
        """Energy as a function of parameter ``k`` with the rest fixed."""
        p = params.reshape(self.layers, self.n_groups).copy()
        layer, j = divmod(k, self.n_groups)
        p[layer, j] = 0.0
        flat = p.ravel()
        before = self.psi0
        H = self.H
        # state entering gate k
        for ll in range(self.layers):
            for jj, (lam, vec) in enumerate(self.gens):
                if (ll, jj) == (layer, j):
                    break
                t = p[ll, jj]
                if t:
                    before = vec @ (np.exp(1j * t * lam) * (vec.conj().T @ before))
            else:
                continue
            break
        # conjugate H by the gates after k
        after = np.eye(H.shape[0], dtype=complex)
        started = False
        for ll in range(self.layers):
            for jj, (lam, vec) in enumerate(self.gens):
                if (ll, jj) == (layer, j):
                    started = True
                    continue
                if started and p[ll, jj]:
                    after = (vec * np.exp(1j * p[ll, jj] * lam)) @ (vec.conj().T @ after)
        Heff = after.conj().T @ H @ after
        lam, vec = self.gens[j]
        alpha = vec.conj().T @ before
        K = vec.conj().T @ Heff @ vec
        W = np.conj(alpha)[:, None] * alpha[None, :] * K
        diff = lam[None, :] - lam[:, None]

        def f(thetas):
            thetas = np.atleast_1d(thetas)
            vals = np.real(np.einsum("ab,tab->t", W, np.exp(1j * thetas[:, None, None] * diff[None])))
            return vals
        return f, flat


def _golden(f, a: float, b: float, iters: int = 40) -> tuple[float, float]:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


@dataclass
class RestartResult:
    energy: float
    params: np.ndarray
    trace: list[float]
    status: str


def _coordinate_descent(prob: _Problem, x0: np.ndarray, max_sweeps: int, tol: float, grid: int = 32) -> RestartResult:
    x = x0.copy()
    best = prob.energy(x)
    trace = [best]
    thetas = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    status = "max-sweeps"
    for _ in range(max_sweeps):
        start = best
        for k in range(x.size):
            f, _ = prob.line(x, k)
            vals = f(thetas)
            i = int(np.argmin(vals))
            h = thetas[1] - thetas[0]
            t, e = _golden(lambda s: float(f(s)[0]), thetas[i] - h, thetas[i] + h)
            if e < best - 1e-15:
                x[k] = t
                best = prob.energy(x)
            trace.append(min(best, trace[-1]))
        if start - best < tol:
            status = "converged" if start - best >= 0 else "stagnated"
            break
    return RestartResult(best, x, trace, status)


def _simplex(prob: _Problem, x0: np.ndarray, max_sweeps: int, tol: float) -> RestartResult:
    trace = [prob.energy(x0)]

    def fun(x):
        e = prob.energy(x)
        trace.append(min(e, trace[-1]))
        return e

    res = minimize(fun, x0, method="Nelder-Mead",
                   options={"maxfev": max_sweeps * 200 * max(1, x0.size), "xatol": 1e-8, "fatol": tol})
    e = prob.energy(res.x)
    if e > trace[0]:
        return RestartResult(trace[0], x0, trace, "stagnated")
    return RestartResult(e, res.x, trace, "converged" if res.success else "stagnated")


@dataclass
class VQEResult:
    energy: float
    params: np.ndarray
    trace: list[float]
    restart: int
    restart_energies: list[float]
    status: str
    reference: float
    subspace_dim: int

    def to_json(self) -> dict:
        return {
            "energy": self.energy,
            "params": [float(p) for p in self.params],
            "trace": [float(t) for t in self.trace],
            "restart": self.restart,
            "restart_energies": [float(e) for e in self.restart_energies],
            "status": self.status,
            "reference": self.reference,
            "subspace_dim": self.subspace_dim,
        }


def _weight_basis(n: int, l: int) -> np.ndarray:
    return np.array(sorted(sum(1 << q for q in c) for c in combinations(range(n), l)), dtype=np.int64)


def _preserves_weight(op: QubitOperator, n: int) -> bool:
    M = op.sparse_matrix().tocoo()
    mask = np.abs(M.data) > 1e-14
    rows, cols = M.row[mask], M.col[mask]
    pc = np.array([int(v).bit_count() for v in range(1 << n)])
    return bool(np.all(pc[rows] == pc[cols]))


def vqe_run(H: Union[QubitOperator, FactoredOperator], spec: AnsatzSpec, sector: int,
            optimizer: str = "coordinate-descent", restarts: int = 5, seed: int = 0,
            max_sweeps: int = 60, tol: float = 1e-12, workers: int = 1, initial=None) -> VQEResult:
    """Minimise ``<psi(theta)|H|psi(theta)>`` starting from a weight-``sector`` basis state.

    The start is ``initial`` when given, otherwise the lowest basis state of
    that weight.

    When ``H`` and every group preserve Hamming weight the search runs inside
    the weight-``sector`` subspace; otherwise on the full space.  The result
    also carries the exact minimum over the reachable space as ``reference``.
    """
    if isinstance(H, FactoredOperator):
        H = H.expand()
    n = H.n
    _check_cap(n)
    if spec.n != n:
        raise ValueError(f"ansatz acts on {spec.n} qubits, Hamiltonian on {n}")
    if not 0 <= sector <= n:
        raise ValueError(f"sector {sector} outside 0..{n}")
    if restarts < 1:
        raise ValueError("need at least one restart")
    if optimizer not in ("coordinate-descent", "simplex"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    Hs = H.sparse_matrix()
    if all(_preserves_weight(g, n) for g in spec.groups) and _preserves_weight(H, n):
        basis = _weight_basis(n, sector)
    else:
        basis = np.arange(1 << n, dtype=np.int64)
    Hsub = Hs[basis][:, basis].toarray()
    gens = []
    for g in spec.groups:
        G = g.sparse_matrix()[basis][:, basis].toarray()
        lam, vec = np.linalg.eigh(G)
        gens.append((lam, vec))
    psi0 = np.zeros(basis.size, dtype=complex)
    start = int(np.searchsorted(basis, (1 << sector) - 1))
    if initial is not None:
        word = _basis_index(initial, n)
        if word.bit_count() != sector:
            raise ValueError(f"initial state has weight {word.bit_count()}, expected {sector}")
        start = int(np.searchsorted(basis, word))
    psi0[start] = 1.0
    prob = _Problem(Hsub, gens, psi0, spec.layers)
    reference = float(np.linalg.eigvalsh(Hsub)[0])

    streams = np.random.SeedSequence(seed).spawn(restarts)

    def run(r: int) -> RestartResult:
        rng = np.random.default_rng(streams[r])
        if r == 0:
            x0 = rng.normal(scale=0.1, size=spec.n_params)
        else:
            x0 = rng.uniform(-math.pi, math.pi, size=spec.n_params)
        if optimizer == "simplex":
            return _simplex(prob, x0, max_sweeps, tol)
        return _coordinate_descent(prob, x0, max_sweeps, tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(r) for r in range(restarts)]
    best = min(range(restarts), key=lambda r: (results[r].energy, r))
    b = results[best]
    return VQEResult(b.energy, b.params, b.trace, best, [r.energy for r in results], b.status, reference, int(basis.size))
