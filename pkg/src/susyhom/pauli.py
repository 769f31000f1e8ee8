"""Pauli-string algebra on ``n`` qubits.

A string is stored as ``(xmask, zmask)``; qubit ``q`` carries ``X`` when only
bit ``q`` of ``xmask`` is set, ``Z`` when only ``zmask`` has it, and ``Y`` when
both do.  The operator represented is ``i^{|x & z|} X^x Z^z`` so every string
is Hermitian.  Qubit ``q`` is bit ``q`` of a computational basis index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

import numpy as np
import scipy.sparse as sp

Coefficient = Union[int, Fraction, float, complex]
PauliKey = tuple[int, int]

_LETTERS = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_I_POWERS = (1, 1j, -1, -1j)


def _norm_coef(c) -> Coefficient:
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, (bool, int, np.integer)):
        return int(c)
    if isinstance(c, (float, np.floating)):
        return float(c)
    c = complex(c)
    return c.real if c.imag == 0 else c


def _times_i_power(c: Coefficient, k: int) -> Coefficient:
    k %= 4
    if k == 0:
        return c
    if k == 2:
        return -c
    return _norm_coef(complex(c) * _I_POWERS[k])


def string_key(paulis: Mapping[int, str] | Iterable[tuple[int, str]]) -> PauliKey:
    items = paulis.items() if isinstance(paulis, Mapping) else paulis
    x = z = 0
    seen = set()
    for q, p in items:
        if q < 0:
            raise ValueError(f"negative qubit index {q}")
        if q in seen:
            raise ValueError(f"qubit {q} appears twice in one string")
        seen.add(q)
        if p == "I":
            continue
        try:
            bx, bz = _LETTERS[p]
        except KeyError:
            raise ValueError(f"unknown Pauli letter {p!r}") from None
        x |= bx << q
        z |= bz << q
    return x, z


def string_label(key: PauliKey, n: int) -> str:
    x, z = key
    parts = []
    for q in range(n):
        bx, bz = (x >> q) & 1, (z >> q) & 1
        if bx or bz:
            parts.append(("Y" if bz else "X") if bx else "Z")
            parts[-1] += str(q)
    return " ".join(parts) if parts else "I"


def multiply_strings(a: PauliKey, b: PauliKey) -> tuple[int, PauliKey]:
    """``P_a P_b = i^k P_c``; returns ``(k mod 4, c)``."""
    x1, z1 = a
    x2, z2 = b
    x3, z3 = x1 ^ x2, z1 ^ z2
    k = (x1 & z1).bit_count() + (x2 & z2).bit_count() - (x3 & z3).bit_count() + 2 * (z1 & x2).bit_count()
    return k % 4, (x3, z3)


def strings_commute(a: PauliKey, b: PauliKey) -> bool:
    return ((a[0] & b[1]).bit_count() + (a[1] & b[0]).bit_count()) % 2 == 0


def apply_string(key: PauliKey, basis: int) -> tuple[complex, int]:
    """Action of a single string on a computational basis state."""
    x, z = key
    phase = (x & z).bit_count() + 2 * (z & basis).bit_count()
    return _I_POWERS[phase % 4], basis ^ x


@dataclass(frozen=True, eq=False)
class QubitOperator:
    n: int
    terms: Mapping[PauliKey, Coefficient] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        lim = 1 << self.n
        for key, c in self.terms.items():
            x, z = key
            if x >= lim or z >= lim or x < 0 or z < 0:
                raise ValueError(f"Pauli string acts outside {self.n} qubits")
            c = _norm_coef(c)
            if c != 0:
                clean[(x, z)] = c
        object.__setattr__(self, "terms", clean)

    @classmethod
    def from_list(cls, n: int, items: Iterable[tuple[Coefficient, Mapping[int, str] | Iterable[tuple[int, str]]]]) -> "QubitOperator":
        acc: dict[PauliKey, Coefficient] = {}
        for c, paulis in items:
            key = string_key(paulis)
            acc[key] = acc.get(key, 0) + _norm_coef(c)
        return cls(n, acc)

    @classmethod
    def identity(cls, n: int, c=1) -> "QubitOperator":
        return cls(n, {(0, 0): c})

    @classmethod
    def single(cls, n: int, q: int, letter: str, c=1) -> "QubitOperator":
        return cls(n, {string_key({q: letter}): c})

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "QubitOperator") -> "QubitOperator":
        if self.n != other.n:
            raise ValueError(f"qubit counts differ: {self.n} vs {other.n}")
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return QubitOperator(self.n, acc)

    def __neg__(self) -> "QubitOperator":
        return QubitOperator(self.n, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "QubitOperator") -> "QubitOperator":
        return self + (-other)

    def __mul__(self, other) -> "QubitOperator":
        if isinstance(other, QubitOperator):
            if self.n != other.n:
                raise ValueError(f"qubit counts differ: {self.n} vs {other.n}")
            acc: dict[PauliKey, Coefficient] = {}
            for ka, ca in self.terms.items():
                for kb, cb in other.terms.items():
                    k, key = multiply_strings(ka, kb)
                    acc[key] = acc.get(key, 0) + _times_i_power(ca * cb, k)
            return QubitOperator(self.n, acc)
        c = _norm_coef(other)
        return QubitOperator(self.n, {k: v * c for k, v in self.terms.items()})

    def __rmul__(self, c) -> "QubitOperator":
        return self * c

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(complex(c).imag) <= tol for c in self.terms.values())

    def norm1(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def equals(self, other: "QubitOperator", tol: float = 1e-12) -> bool:
        if self.n != other.n:
            return False
        for k in set(self.terms) | set(other.terms):
            if abs(self.terms.get(k, 0) - other.terms.get(k, 0)) > tol:
                return False
        return True

    def strings(self) -> list[PauliKey]:
        return sorted(self.terms)

    def apply_basis(self, basis: int) -> dict[int, complex]:
        out: dict[int, complex] = {}
        for key, c in self.terms.items():
            ph, b = apply_string(key, basis)
            out[b] = out.get(b, 0) + ph * complex(c)
        return out

    def sparse_matrix(self) -> sp.csr_matrix:
        """Matrix on ``2^n`` states; built string by string with vectorised phases."""
        dim = 1 << self.n
        idx = np.arange(dim, dtype=np.int64)
        rows, cols, vals = [], [], []
        for (x, z), c in self.terms.items():
            par = np.zeros(dim, dtype=np.int64)
            zz = z
            q = 0
            while zz:
                if zz & 1:
                    par += (idx >> q) & 1
                zz >>= 1
                q += 1
            phase = ((x & z).bit_count() + 2 * par) % 4
            vals.append(np.asarray(_I_POWERS, dtype=complex)[phase] * complex(c))
            rows.append(idx ^ x)
            cols.append(idx)
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
        return M

    def matrix(self) -> np.ndarray:
        M = self.sparse_matrix().toarray()
        if not np.any(M.imag):
            return M.real
        return M

    def label(self) -> str:
        parts = [f"{c} {string_label(k, self.n)}" for k, c in sorted(self.terms.items())]
        return " + ".join(parts) if parts else "0"
