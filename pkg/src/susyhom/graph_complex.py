"""Complexes built from graphs and point clouds.

The fermion hard-core model on a graph ``G`` places one mode per vertex and
forbids occupying both ends of an edge.  Its supercharge is

    d = sum_i a_i^dag P_i,   P_i = prod_{j adjacent to i} (1 - n_j),

and its cohomology in fermion-number sector ``l`` is the reduced cohomology
of the independence complex of ``G`` in simplicial degree ``l - 1``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .complex import CochainComplex, betti, simplicial_relabel
from .fock import CapExceeded, ConstraintSet, GradedSpace, mode_cap
from .operators import FermionOperator, Monomial

FERMION = "fermion-number"
SIMPLICIAL = "simplicial"


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        norm = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) references a vertex outside 0..{self.n - 1}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        seen = set()
        for u, v in edges:
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add(key)
        return cls(n, frozenset(seen))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, (i + 1) % n) for i in range(n)) if n > 2 else frozenset())

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset(combinations(range(n), 2)))

    @classmethod
    def random(cls, n: int, p: float, rng: np.random.Generator) -> "Graph":
        pairs = [e for e in combinations(range(n), 2) if rng.random() < p]
        return cls(n, frozenset(pairs))

    def neighbours(self, i: int) -> list[int]:
        return sorted({v for e in self.edges for v in e if i in e and v != i})

    def adjacency(self) -> list[list[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return [sorted(a) for a in adj]

    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency()), default=0)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def complement(G: Graph) -> Graph:
    return Graph(G.n, frozenset(combinations(range(G.n), 2)) - G.edges)


def _check_cap(n: int) -> None:
    cap = mode_cap()
    if n > cap:
        raise CapExceeded(f"{n} vertices exceed the mode cap {cap}")


def independence_space(G: Graph) -> GradedSpace:
    _check_cap(G.n)
    return GradedSpace(G.n, ConstraintSet.of(G.sorted_edges()))


def _expand_projector_product(cre: Optional[int], ann: Optional[int], dress: Sequence[int]) -> dict[Monomial, int]:
    """Canonical terms of ``[a_cre^dag] [a_ann] prod_{k in dress} (1 - n_k)``.

    ``dress`` must avoid ``cre`` and ``ann``.  The nested form
    ``prod_S n_s = a^dag_{S desc} a_{S asc}`` holds with sign +1; the number
    operators are even so they commute past the hop, after which ``a_cre^dag``
    and ``a_ann`` are sorted into place, one sign per larger ``S`` index passed.
    """
    out: dict[Monomial, int] = {}
    dress = sorted(dress)
    for r in range(len(dress) + 1):
        for sub in combinations(dress, r):
            flips = r
            cre_modes = list(sub)
            ann_modes = list(sub)
            if cre is not None:
                flips += sum(1 for s in sub if s > cre)
                cre_modes.append(cre)
            if ann is not None:
                flips += sum(1 for s in sub if s > ann)
                ann_modes.append(ann)
            key = (tuple(sorted(cre_modes, reverse=True)), tuple(sorted(ann_modes)))
            out[key] = out.get(key, 0) + (-1 if flips % 2 else 1)
    return out


def hardcore_supercharge(G: Graph) -> FermionOperator:
    """``d = sum_i a_i^dag prod_{j ~ i} (1 - n_j)`` with integer coefficients."""
    _check_cap(G.n)
    adj = G.adjacency()
    terms: dict[Monomial, int] = {}
    for i in range(G.n):
        for key, val in _expand_projector_product(i, None, adj[i]).items():
            terms[key] = terms.get(key, 0) + val
    return FermionOperator(G.n, terms)


def hardcore_hamiltonian(G: Graph) -> FermionOperator:
    """Hopping over both orientations of every edge plus ``sum_i P_i``.

    ``P_i a_i^dag a_j P_j`` reduces to ``a_i^dag a_j`` dressed by the
    projectors of the common neighbourhood ``N(i) | N(j)`` minus ``{i, j}``.
    """
    _check_cap(G.n)
    adj = G.adjacency()
    terms: dict[Monomial, int] = {}

    def add(d):
        for key, val in d.items():
            terms[key] = terms.get(key, 0) + val

    for u, v in G.sorted_edges():
        dress = (set(adj[u]) | set(adj[v])) - {u, v}
        add(_expand_projector_product(u, v, dress))
        add(_expand_projector_product(v, u, dress))
    for i in range(G.n):
        add(_expand_projector_product(None, None, adj[i]))
    return FermionOperator(G.n, terms)


def independence_complex(G: Graph, check: bool = True) -> CochainComplex:
    return CochainComplex(independence_space(G), hardcore_supercharge(G), check=check)


def clique_complex(G: Graph, check: bool = True) -> CochainComplex:
    """Sector ``l`` is spanned by the ``l``-cliques of ``G``."""
    return independence_complex(complement(G), check=check)


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0)
        if pts.ndim != 2:
            raise ValueError("points must form a 2-d array (one row per point)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


def vietoris_rips(pc: PointCloud, eps: float) -> Graph:
    """Connect points whose Euclidean distance is at most ``eps``."""
    if not math.isfinite(eps) or eps < 0:
        raise ValueError("grouping scale must be a finite non-negative number")
    pts = pc.points
    n = pts.shape[0]
    if n < 2:
        return Graph(n)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    iu, ju = np.triu_indices(n, k=1)
    keep = dist[iu, ju] <= eps
    return Graph(n, frozenset(zip(iu[keep].tolist(), ju[keep].tolist())))


@dataclass(frozen=True)
class ScanRow:
    eps: float
    level: int
    betti: Optional[int]
    error: Optional[str] = None

    def to_json(self) -> dict:
        out = {"eps": self.eps, "level": self.level, "betti": self.betti}
        if self.error is not None:
            out["error"] = self.error
        return out


def _scan_one(pc: PointCloud, eps: float, l_max: int, method: str, convention: str) -> list[ScanRow]:
    G = vietoris_rips(pc, eps)
    try:
        c = clique_complex(G)
        top = min(l_max + 1, c.m) if convention == SIMPLICIAL else min(l_max, c.m)
        raw = [betti(c, l, method) for l in range(top + 1)]
        raw += [0] * (l_max + 2 - len(raw))
    except CapExceeded as exc:
        return [ScanRow(eps, -1, None, str(exc))]
    if convention == SIMPLICIAL:
        dims = [c.space.dim(l) for l in range(len(raw))]
        vals = simplicial_relabel(raw, dims)
        return [ScanRow(eps, k, vals[k]) for k in range(l_max + 1)]
    return [ScanRow(eps, l, raw[l]) for l in range(l_max + 1)]


def betti_scan(pc: PointCloud, eps_list: Sequence[float], l_max: int, method: str = "exact",
               convention: str = FERMION, workers: int = 1) -> list[ScanRow]:
    """Betti numbers of the Vietoris-Rips clique complex at each scale.

    Rows are ``(eps, level, beta)``.  With ``convention='simplicial'`` the
    level is the simplicial degree and the numbers are unreduced.  A scale
    whose graph exceeds the mode cap yields a single row with ``error`` set.
    """
    if convention not in (FERMION, SIMPLICIAL):
        raise ValueError(f"unknown convention {convention!r}")
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    eps_list = [float(e) for e in eps_list]
    if any(b < a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("scales must be listed in non-decreasing order")
    if len(pc) == 0:
        return []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda e: _scan_one(pc, e, l_max, method, convention), eps_list))
    else:
        chunks = [_scan_one(pc, e, l_max, method, convention) for e in eps_list]
    return [row for chunk in chunks for row in chunk]
