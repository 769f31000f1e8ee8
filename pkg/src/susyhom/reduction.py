"""Encoding qubit Hamiltonians as supersymmetric fermion systems.

Each qubit becomes one fermion shared between two modes ``(a, b)`` of a site:
``|0>`` is ``a^dag|vac>`` and ``|1>`` is ``b^dag|vac>``.  Site ``s`` owns modes
``(2s, 2s+1)``.  The lifts reserve site 0 for the auxiliary pair
``(a_0, b_0)`` and put qubit ``q`` on site ``q + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .complex import CochainComplex, laplacian, spectrum
from .fock import ConstraintSet, DualRailLayout, FockState, GradedSpace, mode_cap, CapExceeded
from .operators import FermionOperator, compose
from .pauli import QubitOperator, _norm_coef

PROJECTOR_TOL = 1e-10


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real-weighted sum of Pauli strings on ``n`` qubits."""

    n: int
    terms: tuple[tuple[object, tuple[tuple[int, str], ...]], ...] = ()

    def __post_init__(self):
        clean = []
        for coef, string in self.terms:
            coef = _norm_coef(coef)
            if isinstance(coef, complex):
                raise ValueError("Pauli Hamiltonian coefficients must be real")
            if isinstance(coef, float) and not math.isfinite(coef):
                raise ValueError("Pauli Hamiltonian coefficients must be finite")
            items = tuple(sorted((int(q), p) for q, p in (string.items() if isinstance(string, Mapping) else string) if p != "I"))
            for q, p in items:
                if not 0 <= q < self.n:
                    raise ValueError(f"qubit {q} outside 0..{self.n - 1}")
                if p not in "XYZ":
                    raise ValueError(f"unknown Pauli letter {p!r}")
            if len({q for q, _ in items}) != len(items):
                raise ValueError("a qubit appears twice in one string")
            clean.append((coef, items))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def from_terms(cls, n: int, terms: Iterable) -> "PauliHamiltonian":
        return cls(n, tuple(terms))

    def locality(self) -> int:
        return max((len(s) for _, s in self.terms), default=0)

    def coefficient_sum(self) -> Union[int, Fraction, float]:
        return sum(abs(c) for c, _ in self.terms)

    def to_qubit(self) -> QubitOperator:
        return QubitOperator.from_list(self.n, [(c, s) for c, s in self.terms])

    def matrix(self) -> np.ndarray:
        return self.to_qubit().matrix()

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix()) if self.n or self.terms else np.zeros(1)

    @property
    def exact(self) -> bool:
        return all(isinstance(c, (int, Fraction)) for c, _ in self.terms)


def a_mode(site: int) -> int:
    return 2 * site


def b_mode(site: int) -> int:
    return 2 * site + 1


def dualrail_encode(bits: Union[str, Sequence[int]], offset: int = 0, m: Optional[int] = None) -> FockState:
    """Fock state with one fermion per qubit; qubit ``q`` sits on site ``q + offset``.

    ``bits[q]`` is the value of qubit ``q``.  With ``offset > 0`` the leading
    sites are left empty (callers fill the auxiliary site themselves).
    """
    vals = [int(b) for b in bits]
    if any(v not in (0, 1) for v in vals):
        raise ValueError("qubit values must be 0 or 1")
    m = 2 * (len(vals) + offset) if m is None else m
    word = 0
    for q, v in enumerate(vals):
        word |= 1 << (2 * (q + offset) + v)
    return FockState(word, m)


def _site_pauli(m: int, site: int, letter: str) -> FermionOperator:
    a, b = a_mode(site), b_mode(site)
    if letter == "Z":
        return FermionOperator(m, {((a,), (a,)): 1, ((b,), (b,)): -1})
    if letter == "X":
        return FermionOperator(m, {((a,), (b,)): 1, ((b,), (a,)): 1})
    if letter == "Y":
        # -i (sigma^+ - sigma^-) with sigma^+ -> a^dag b, sigma^- -> b^dag a
        return FermionOperator(m, {((a,), (b,)): -1j, ((b,), (a,)): 1j})
    raise ValueError(f"unknown Pauli letter {letter!r}")


def pauli_to_fermion(A: PauliHamiltonian, offset: int = 0, m: Optional[int] = None) -> FermionOperator:
    """Replace each Pauli by its fermion bilinear on the qubit's site.

    The site factors are even, so the product over a string needs no
    reordering signs.
    """
    m = 2 * (A.n + offset) if m is None else m
    total = FermionOperator.zero(m)
    for coef, string in A.terms:
        op = FermionOperator.identity(m, coef)
        for q, p in string:
            op = compose(op, _site_pauli(m, q + offset, p))
        total = total + op
    return total


def penalty(n: int, J=1, offset: int = 0, m: Optional[int] = None) -> FermionOperator:
    """``J sum_i [n_a n_b + (n_a - 1)(n_b - 1)]`` over qubit sites; zero on dual-rail states."""
    J = _norm_coef(J)
    if isinstance(J, complex) or J <= 0:
        raise ValueError("penalty strength J must be positive")
    m = 2 * (n + offset) if m is None else m
    terms: dict = {((), ()): 0}
    for q in range(n):
        a, b = a_mode(q + offset), b_mode(q + offset)
        # 2 n_a n_b - n_a - n_b + 1, with n_a n_b = a_b^dag a_a^dag a_a a_b
        for key, val in (((b, a), (a, b)), 2), (((a,), (a,)), -1), (((b,), (b,)), -1), (((), ()), 1):
            terms[key] = terms.get(key, 0) + val * J
    return FermionOperator(m, terms)


def default_penalty(A: PauliHamiltonian):
    s = A.coefficient_sum()
    return 1 + math.ceil(s)


def _aux_creator(m: int) -> FermionOperator:
    return FermionOperator(m, {((a_mode(0),), ()): 1, ((b_mode(0),), ()): 1})


def _check_lift_cap(n: int) -> None:
    cap = mode_cap()
    if 2 * (n + 1) > cap:
        raise CapExceeded(f"{n} qubits need {2 * (n + 1)} modes, above the cap {cap}")


def susy_lift(A: PauliHamiltonian, J=None) -> CochainComplex:
    """Unconstrained lift ``d = (a_0^dag + b_0^dag)(A_hat + B_pen) / sqrt(2)``.

    Because ``{c, c^dag} = 2`` for ``c = a_0^dag + b_0^dag`` and the bracket is
    even, ``{d, d^dag} = (A_hat + B_pen)^2``.
    """
    _check_lift_cap(A.n)
    J = default_penalty(A) if J is None else J
    m = 2 * (A.n + 1)
    B = pauli_to_fermion(A, offset=1) + penalty(A.n, J, offset=1)
    d = compose(_aux_creator(m), B).with_scale2(Fraction(1, 2))
    return CochainComplex(GradedSpace(m), d)


def lift_bracket(A: PauliHamiltonian, J=None) -> FermionOperator:
    """The even operator ``B = A_hat + B_pen`` whose square is the lifted Hamiltonian."""
    J = default_penalty(A) if J is None else J
    return pauli_to_fermion(A, offset=1) + penalty(A.n, J, offset=1)


def constrained_space(n: int) -> GradedSpace:
    forbidden = [(a_mode(s), b_mode(s)) for s in range(1, n + 1)]
    return GradedSpace(2 * (n + 1), ConstraintSet.of(forbidden), layout=DualRailLayout(n + 1))


def constrained_lift(A: PauliHamiltonian) -> tuple[CochainComplex, int]:
    """Lift on the space with at most one fermion per qubit site.

    Returns the complex and the level ``n + 2``, where the sector is the
    dual-rail image of the qubit space with a doubly occupied auxiliary site
    and ``Delta^{n+2}`` is unitarily equivalent to ``A^2``.
    """
    _check_lift_cap(A.n)
    m = 2 * (A.n + 1)
    d = compose(_aux_creator(m), pauli_to_fermion(A, offset=1)).with_scale2(Fraction(1, 2))
    return CochainComplex(constrained_space(A.n), d), A.n + 2


def _is_projector(P: PauliHamiltonian, tol: float = PROJECTOR_TOL) -> bool:
    M = P.matrix()
    return bool(np.max(np.abs(M @ M - M), initial=0.0) <= tol)


def ksat_complex(projectors: Sequence[PauliHamiltonian], n: Optional[int] = None) -> tuple[CochainComplex, int]:
    """Constrained lift of ``sum_S Pi_S`` for a list of projectors."""
    if n is None:
        if not projectors:
            raise ValueError("qubit count needed for an empty projector list")
        n = projectors[0].n
    terms = []
    for k, P in enumerate(projectors):
        if P.n != n:
            raise ValueError(f"projector {k} acts on {P.n} qubits, expected {n}")
        if not _is_projector(P):
            raise ValueError(f"input {k} is not a projector (P^2 != P)")
        terms.extend(P.terms)
    return constrained_lift(PauliHamiltonian(n, tuple(terms)))


@dataclass(frozen=True)
class SquaredSpectrumCheck:
    ok: bool
    deviation: float
    laplacian_eigenvalues: np.ndarray
    squared_eigenvalues: np.ndarray


def verify_squared_spectrum(A: PauliHamiltonian, c: CochainComplex, l: int, tol: float = 1e-8) -> SquaredSpectrumCheck:
    """Compare ``spec(Delta^l)`` with ``{lambda^2 : lambda in spec(A)}``."""
    dim = c.space.dim(l)
    if dim != 2 ** A.n:
        raise ValueError(f"sector {l} has dimension {dim}, expected 2^{A.n} = {2 ** A.n}")
    lap = spectrum(laplacian(c, l))
    sq = np.sort(A.eigenvalues() ** 2)
    dev = float(np.max(np.abs(lap - sq), initial=0.0))
    return SquaredSpectrumCheck(dev <= tol, dev, lap, sq)


def random_two_local(n: int, rng: np.random.Generator, n_terms: Optional[int] = None, integer: bool = False) -> PauliHamiltonian:
    """Random Hamiltonian with one- and two-qubit Pauli strings."""
    n_terms = 2 * n if n_terms is None else n_terms
    terms = []
    for _ in range(n_terms):
        k = 1 if n == 1 else int(rng.integers(1, 3))
        qs = sorted(rng.choice(n, size=k, replace=False).tolist())
        letters = rng.choice(list("XYZ"), size=k).tolist()
        coef = int(rng.integers(-3, 4)) if integer else float(rng.normal())
        terms.append((coef, tuple(zip(qs, letters))))
    return PauliHamiltonian(n, tuple(terms))
