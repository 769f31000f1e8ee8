"""Cochain complexes on constrained Fock spaces and their spectral data."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exact import exact_rank
from .fock import GradedSpace
from .operators import (
    FermionOperator,
    exact_sector_rows,
    nilpotency_residual,
    sector_matrix,
)

DENSE_CAP = 4096
ZERO_TOL = 1e-8
HERMITIAN_TOL = 1e-12
NILPOTENCY_TOL = 1e-12


class NotNilpotent(ValueError):
    pass


class NotHermitian(ValueError):
    pass


class NotPSD(ValueError):
    pass


@dataclass(eq=False)
class CochainComplex:
    """A graded space with a degree-one coboundary ``d``.

    Construction checks the grading and ``d^2 = 0`` (exactly for rational
    coefficients, to 1e-12 otherwise).  Pass ``check=False`` only for
    deliberately broken fixtures.
    """

    space: GradedSpace
    d: FermionOperator
    check: bool = True
    _mats: dict = field(default_factory=dict, init=False, repr=False)
    _ranks: dict = field(default_factory=dict, init=False, repr=False)
    _eigs: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.d.m != self.space.m:
            raise ValueError(f"coboundary acts on {self.d.m} modes, space has {self.space.m}")
        g = self.d.grading()
        if not self.d.is_zero() and g != 1:
            raise ValueError(f"coboundary must raise fermion number by one, grading is {g}")
        if self.check:
            res = nilpotency_residual(self.d, self.space)
            if res >= NILPOTENCY_TOL if isinstance(res, float) else res != 0:
                raise NotNilpotent(f"d^2 != 0 (residual {float(res):.3g})")

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def exact(self) -> bool:
        return self.d.exact

    def dims(self) -> list[int]:
        return self.space.dims()

    def coboundary(self, l: int) -> sp.csr_matrix:
        """``M_l : V^l -> V^{l+1}``; zero-sized outside ``0..m``."""
        if l < 0 or l >= self.m:
            rows = self.space.dim(l + 1)
            cols = self.space.dim(l)
            return sp.csr_matrix((rows, cols))
        mat = self._mats.get(l)
        if mat is None:
            if self.d.is_zero():
                mat = sp.csr_matrix((self.space.dim(l + 1), self.space.dim(l)))
            else:
                mat = sector_matrix(self.d, self.space, l)
            mat = self._mats.setdefault(l, mat)
        return mat

    def coboundary_rank(self, l: int) -> int:
        """Exact rank of ``M_l`` over the rationals."""
        if l < 0 or l >= self.m or self.d.is_zero():
            return 0
        r = self._ranks.get(l)
        if r is None:
            if not self.exact:
                raise TypeError("exact rank needs rational coefficients")
            rows, _, _ = exact_sector_rows(self.d, self.space, l)
            r = self._ranks.setdefault(l, exact_rank(rows))
        return r

    def eigenvalues(self, l: int) -> np.ndarray:
        ev = self._eigs.get(l)
        if ev is None:
            ev = self._eigs.setdefault(l, spectrum(laplacian(self, l)))
        return ev


def laplacian(c: CochainComplex, l: int) -> sp.csr_matrix:
    """Sector Laplacian ``M_{l-1} M_{l-1}^dag + M_l^dag M_l`` on ``V^l``."""
    if not 0 <= l <= c.m:
        raise ValueError(f"sector {l} outside 0..{c.m}")
    lower = c.coboundary(l - 1)
    upper = c.coboundary(l)
    out = lower @ lower.conj().T + upper.conj().T @ upper
    return sp.csr_matrix(out)


def exact_laplacian(c: CochainComplex, l: int) -> dict[tuple[int, int], object]:
    """Nonzero entries of ``Delta^l`` in exact arithmetic (rational ``d`` only)."""
    if not c.exact:
        raise TypeError("exact Laplacian needs rational coefficients")
    s2 = c.d.scale2
    out: dict[tuple[int, int], object] = {}

    def add(key, v):
        v = out.get(key, 0) + v
        if v == 0:
            out.pop(key, None)
        else:
            out[key] = v

    # M_l^dag M_l: columns of M_l are images of V^l basis states
    if 0 <= l < c.m:
        rows, _, _ = exact_sector_rows(c.d, c.space, l)
        for row in rows.values():
            items = list(row.items())
            for i, vi in items:
                for j, vj in items:
                    add((i, j), vi * vj * s2)
    # M_{l-1} M_{l-1}^dag: rows of M_{l-1} are indexed by V^l
    if 1 <= l <= c.m:
        rows, _, _ = exact_sector_rows(c.d, c.space, l - 1)
        by_col: dict[int, dict[int, object]] = {}
        for r, row in rows.items():
            for k, v in row.items():
                by_col.setdefault(k, {})[r] = v
        for col in by_col.values():
            items = list(col.items())
            for i, vi in items:
                for j, vj in items:
                    add((i, j), vi * vj * s2)
    return out


def dirac(c: CochainComplex) -> sp.csr_matrix:
    """``B = d + d^dag`` on the whole constrained space, basis ordered by sector."""
    dims = c.dims()
    offsets = np.concatenate([[0], np.cumsum(dims)])
    n = int(offsets[-1])
    rows, cols, vals = [], [], []
    for l in range(c.m):
        M = c.coboundary(l).tocoo()
        rows.append(M.row + offsets[l + 1])
        cols.append(M.col + offsets[l])
        vals.append(M.data)
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    d_full = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return sp.csr_matrix(d_full + d_full.conj().T)


def _as_dense(M) -> np.ndarray:
    if sp.issparse(M):
        return M.toarray()
    return np.asarray(M)


def _norm1(M) -> float:
    if sp.issparse(M):
        if M.shape[0] == 0:
            return 0.0
        return float(abs(M).sum(axis=0).max())
    M = np.asarray(M)
    return float(np.abs(M).sum(axis=0).max()) if M.size else 0.0


def check_hermitian(M) -> None:
    if M.shape[0] != M.shape[1]:
        raise NotHermitian(f"matrix is not square: {M.shape}")
    if M.shape[0] == 0:
        return
    diff = M - M.conj().T
    res = float(abs(diff).max()) if sp.issparse(diff) else float(np.abs(diff).max(initial=0.0))
    if res > HERMITIAN_TOL * max(1.0, _norm1(M)):
        raise NotHermitian(f"symmetry residual {res:.3g} exceeds tolerance")


def spectrum(M, k: Optional[int] = None) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix.

    Matrices up to ``DENSE_CAP`` are diagonalised densely.  Larger ones use an
    iterative solver for the ``k`` lowest eigenvalues (default 6) with an
    eight-vector Ritz buffer.
    """
    check_hermitian(M)
    n = M.shape[0]
    if n == 0:
        return np.zeros(0)
    if n <= DENSE_CAP:
        return np.linalg.eigvalsh(_as_dense(M))
    k = 6 if k is None else k
    ncv = min(n - 1, max(2 * (k + 8) + 1, 20))
    try:
        vals = spla.eigsh(sp.csr_matrix(M), k=min(k + 8, n - 2), which="SA", ncv=ncv, return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise RuntimeError(f"iterative eigensolver did not converge: {exc}") from None
    return np.sort(vals)[:k]


def zero_threshold(M, tol: float = ZERO_TOL) -> float:
    return tol * max(1.0, _norm1(M))


def betti(c: CochainComplex, l: int, method: str = "exact", tol: float = ZERO_TOL) -> int:
    """Dimension of the degree-``l`` cohomology.

    ``method='exact'`` uses rank-nullity with ranks over the rationals;
    ``'spectral'`` counts near-zero eigenvalues of ``Delta^l`` below
    ``tol * max(1, ||Delta^l||_1)``.
    """
    if not 0 <= l <= c.m:
        raise ValueError(f"sector {l} outside 0..{c.m}")
    if method == "exact":
        if c.exact:
            return c.space.dim(l) - c.coboundary_rank(l) - c.coboundary_rank(l - 1)
        warnings.warn("coefficients are not rational; falling back to spectral Betti numbers", stacklevel=2)
        method = "spectral"
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    if c.space.dim(l) == 0:
        return 0
    lap = laplacian(c, l)
    thr = zero_threshold(lap, tol)
    n = lap.shape[0]
    if n <= DENSE_CAP:
        return int(np.sum(c.eigenvalues(l) < thr))
    # iterative path: widen the window until it reaches past the kernel
    k = 16
    while True:
        ev = spectrum(lap, k)
        count = int(np.sum(ev < thr))
        if count < k or k + 10 >= n:
            return count
        k *= 2


def betti_numbers(c: CochainComplex, method: str = "exact", tol: float = ZERO_TOL, workers: int = 1) -> list[int]:
    levels = range(c.m + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda l: betti(c, l, method, tol), levels))
    return [betti(c, l, method, tol) for l in levels]


def euler_characteristic(dims: Sequence[int]) -> int:
    return sum((-1) ** l * d for l, d in enumerate(dims))


@dataclass(frozen=True)
class WittenRecord:
    witten: int
    from_dims: int
    from_betti: int


def witten_index(c: Optional[CochainComplex] = None, counts: Optional[tuple[int, int]] = None,
                 betti_list: Optional[Sequence[int]] = None, method: str = "exact") -> WittenRecord:
    """Alternating sum of sector dimensions, cross-checked against Betti numbers.

    With ``counts=(n_B, n_F)`` the index is simply ``n_B - n_F``.
    """
    if counts is not None:
        nb, nf = counts
        if nb < 0 or nf < 0:
            raise ValueError("state counts must be non-negative")
        return WittenRecord(nb - nf, nb - nf, nb - nf)
    if c is None:
        raise ValueError("need a complex or explicit counts")
    from_dims = euler_characteristic(c.dims())
    bl = betti_numbers(c, method) if betti_list is None else betti_list
    from_betti = euler_characteristic(bl)
    if from_dims != from_betti:
        raise ArithmeticError(
            f"alternating sums disagree: dims give {from_dims}, Betti numbers give {from_betti}"
        )
    return WittenRecord(from_dims, from_dims, from_betti)


def spectral_gap(M, zero_tol: float = ZERO_TOL) -> float:
    """Smallest eigenvalue above ``zero_tol``; ``math.inf`` if there is none."""
    if isinstance(M, tuple):
        c, l = M
        if c.space.dim(l) == 0:
            raise ValueError(f"sector {l} is empty")
        ev = c.eigenvalues(l)
    else:
        if M.shape[0] == 0:
            raise ValueError("empty sector")
        ev = spectrum(M)
    pos = ev[ev > zero_tol]
    return float(pos[0]) if pos.size else math.inf


@dataclass
class PairingReport:
    pairs: list[tuple[float, float]]
    unmatched_even: list[float]
    unmatched_odd: list[float]
    zeros_even: int
    zeros_odd: int

    @property
    def ok(self) -> bool:
        return not self.unmatched_even and not self.unmatched_odd


def _match(even: np.ndarray, odd: np.ndarray, tol: float) -> PairingReport:
    pairs, ue, uo = [], [], []
    i = j = 0
    while i < len(even) and j < len(odd):
        a, b = even[i], odd[j]
        if abs(a - b) <= tol * max(1.0, abs(a)):
            pairs.append((float(a), float(b)))
            i += 1
            j += 1
        elif a < b:
            ue.append(float(a))
            i += 1
        else:
            uo.append(float(b))
            j += 1
    ue.extend(float(x) for x in even[i:])
    uo.extend(float(x) for x in odd[j:])
    return PairingReport(pairs, ue, uo, 0, 0)


def pairing_report(c: CochainComplex, zero_tol: float = ZERO_TOL) -> PairingReport:
    """Match positive Laplacian eigenvalues between even and odd fermion number."""
    even, odd = [], []
    ze = zo = 0
    for l in range(c.m + 1):
        if c.space.dim(l) == 0:
            continue
        ev = c.eigenvalues(l)
        thr = zero_threshold(laplacian(c, l), zero_tol)
        pos = ev[ev >= thr]
        nz = int(ev.size - pos.size)
        if l % 2 == 0:
            even.append(pos)
            ze += nz
        else:
            odd.append(pos)
            zo += nz
    e = np.sort(np.concatenate(even)) if even else np.zeros(0)
    o = np.sort(np.concatenate(odd)) if odd else np.zeros(0)
    rep = _match(e, o, zero_tol)
    rep.zeros_even, rep.zeros_odd = ze, zo
    return rep


def low_lying_density(M, b: float, tol: float = ZERO_TOL) -> Fraction:
    """Fraction of eigenvalues ``<= b``; accepts a matrix or ``(complex, l)``."""
    if b < 0:
        raise ValueError("threshold b must be non-negative")
    if isinstance(M, tuple):
        c, l = M
        ev = c.eigenvalues(l)
        scale = _norm1(laplacian(c, l))
    else:
        ev = spectrum(M)
        scale = _norm1(M)
    if ev.size == 0:
        raise ValueError("empty matrix has no spectral density")
    if ev[0] < -tol * max(1.0, scale):
        raise NotPSD(f"eigenvalue {ev[0]:.3g} is negative")
    return Fraction(int(np.sum(ev <= b)), int(ev.size))


def ground_state_check(c: CochainComplex, v, l: int, norm_tol: float = 1e-12) -> tuple[float, float]:
    """Return ``(||d v||, ||d^dag v||)`` for a vector on ``V^l``."""
    v = np.asarray(v)
    if v.shape != (c.space.dim(l),):
        raise ValueError(f"vector has shape {v.shape}, sector {l} has dimension {c.space.dim(l)}")
    if abs(np.linalg.norm(v) - 1.0) > norm_tol:
        raise ValueError("vector must be normalised")
    up = c.coboundary(l) @ v
    down = c.coboundary(l - 1).conj().T @ v
    return float(np.linalg.norm(up)), float(np.linalg.norm(down))


def simplicial_relabel(betti_list: Sequence[int], dims: Sequence[int]) -> list[int]:
    """Unreduced simplicial Betti numbers from fermion-number ones.

    Entry ``k`` is the rank of the degree-``k`` unreduced homology, i.e.
    fermion sector ``k + 1`` plus one connected-component correction at
    ``k = 0`` for a nonempty complex.
    """
    out = list(betti_list[1:])
    if len(dims) > 1 and dims[1] > 0:
        out[0] += 1
    return out


@dataclass
class SpectralReport:
    dims: list[int]
    betti: list[int]
    euler: int
    witten: int
    gaps: list[float]
    pairing_ok: bool
    eigenvalues: Optional[list[list[float]]] = None

    def to_json(self) -> dict:
        out = {
            "dims": self.dims,
            "betti": self.betti,
            "euler": self.euler,
            "witten": self.witten,
            "gaps": [None if math.isinf(g) else g for g in self.gaps],
            "pairing_ok": self.pairing_ok,
        }
        if self.eigenvalues is not None:
            out["eigenvalues"] = self.eigenvalues
        return out


def spectral_report(c: CochainComplex, method: str = "exact", workers: int = 1,
                    with_eigenvalues: bool = False, zero_tol: float = ZERO_TOL) -> SpectralReport:
    dims = c.dims()
    bl = betti_numbers(c, method, zero_tol, workers)
    w = witten_index(c, betti_list=bl)
    gaps = [spectral_gap((c, l), zero_tol) if dims[l] else math.inf for l in range(c.m + 1)]
    pr = pairing_report(c, zero_tol)
    eigs = [c.eigenvalues(l).tolist() for l in range(c.m + 1)] if with_eigenvalues else None
    return SpectralReport(dims, bl, euler_characteristic(dims), w.witten, gaps, pr.ok, eigs)
