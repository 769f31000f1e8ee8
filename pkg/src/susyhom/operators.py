"""Fermionic operator algebra on a fixed number of modes.

An operator is a dictionary from canonical monomials to coefficients.  A
monomial ``(cre, ann)`` stands for ``a_{cre[0]}^dag a_{cre[1]}^dag ... a_{ann[0]} a_{ann[1]} ...``
with ``cre`` strictly descending and ``ann`` strictly ascending.

Coefficients stay exact (``int`` or :class:`fractions.Fraction`) as long as
every input is rational; anything else degrades to Python ``float``/``complex``.  An overall
factor ``sqrt(scale2)`` is carried symbolically so that constructions with a
``1/sqrt(2)`` prefactor keep exact coefficients.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Union

import numpy as np
import scipy.sparse as sp

from .fock import FockState, GradedSpace

Coefficient = Union[int, Fraction, float, complex]
Monomial = tuple[tuple[int, ...], tuple[int, ...]]
INHOMOGENEOUS = "inhomogeneous"


def as_coefficient(c) -> Coefficient:
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, (bool, int, np.integer)):
        return int(c)
    if isinstance(c, str):
        return parse_coefficient(c)
    if isinstance(c, (float, np.floating)):
        return float(c)
    if isinstance(c, (complex, np.complexfloating)):
        c = complex(c)
        return c.real if c.imag == 0 else c
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def is_exact(c: Coefficient) -> bool:
    return isinstance(c, (int, Fraction))


def _conj(c: Coefficient) -> Coefficient:
    return c.conjugate() if isinstance(c, complex) else c


def _is_zero(c: Coefficient) -> bool:
    return c == 0


def normal_order(factors: Iterable[tuple[int, bool]], coefficient: Coefficient = 1) -> dict[Monomial, Coefficient]:
    """Rewrite a product of ladder operators as a sum of canonical monomials.

    ``factors`` lists ``(mode, is_creation)`` from left to right.
    """
    out: dict[Monomial, Coefficient] = {}
    stack = [(coefficient, list(factors))]
    while stack:
        coef, f = stack.pop()
        zero = False
        n = len(f)
        for i in range(1, n):
            for j in range(i, 0, -1):
                (lm, lc), (rm, rc) = f[j - 1], f[j]
                if rc and not lc:
                    # a_l a_r^dag = delta_lr - a_r^dag a_l
                    if lm == rm:
                        stack.append((coef, f[: j - 1] + f[j + 1 :]))
                    f[j - 1], f[j] = f[j], f[j - 1]
                    coef = -coef
                elif rc == lc:
                    if lm == rm:
                        zero = True
                        break
                    if (rc and rm > lm) or (not rc and rm < lm):
                        f[j - 1], f[j] = f[j], f[j - 1]
                        coef = -coef
            if zero:
                break
        if zero:
            continue
        cre = tuple(m for m, c in f if c)
        ann = tuple(m for m, c in f if not c)
        key = (cre, ann)
        val = out.get(key, 0) + coef
        if _is_zero(val):
            out.pop(key, None)
        else:
            out[key] = val
    return out


def _monomial_factors(mono: Monomial) -> list[tuple[int, bool]]:
    cre, ann = mono
    return [(i, True) for i in cre] + [(i, False) for i in ann]


@dataclass(frozen=True)
class _CompiledTerm:
    cre: tuple[int, ...]
    ann: tuple[int, ...]
    cre_mask: int
    ann_mask: int
    coefficient: Coefficient

    def act(self, word: int) -> Optional[tuple[int, int]]:
        if word & self.ann_mask != self.ann_mask:
            return None
        sign = 1
        w = word
        # rightmost factor acts first: annihilations from the highest mode down
        for i in reversed(self.ann):
            if (w & ((1 << i) - 1)).bit_count() & 1:
                sign = -sign
            w ^= 1 << i
        if w & self.cre_mask:
            return None
        for i in reversed(self.cre):
            if (w & ((1 << i) - 1)).bit_count() & 1:
                sign = -sign
            w |= 1 << i
        return sign, w


@dataclass(frozen=True, eq=False)
class FermionOperator:
    """Immutable sum of canonical fermionic monomials on ``m`` modes."""

    m: int
    terms: Mapping[Monomial, Coefficient] = field(default_factory=dict)
    scale2: Fraction = Fraction(1)

    def __post_init__(self):
        clean = {}
        for (cre, ann), c in self.terms.items():
            for i in cre + ann:
                if not 0 <= i < self.m:
                    raise ValueError(f"mode {i} outside 0..{self.m - 1}")
            c = as_coefficient(c)
            if not _is_zero(c):
                clean[(tuple(cre), tuple(ann))] = c
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "scale2", Fraction(self.scale2))
        if self.scale2 <= 0:
            raise ValueError("scale2 must be positive")

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_products(cls, m: int, products: Iterable[tuple[Coefficient, Iterable[tuple[int, bool]]]], scale2=Fraction(1)) -> "FermionOperator":
        acc: dict[Monomial, Coefficient] = {}
        for coef, factors in products:
            for key, val in normal_order(factors, as_coefficient(coef)).items():
                _accumulate(acc, key, val)
        return cls(m, acc, scale2)

    @classmethod
    def identity(cls, m: int, coefficient=1) -> "FermionOperator":
        return cls(m, {((), ()): coefficient})

    @classmethod
    def zero(cls, m: int) -> "FermionOperator":
        return cls(m, {})

    @classmethod
    def create(cls, m: int, i: int) -> "FermionOperator":
        return cls(m, {((i,), ()): 1})

    @classmethod
    def annihilate(cls, m: int, i: int) -> "FermionOperator":
        return cls(m, {((), (i,)): 1})

    @classmethod
    def number(cls, m: int, i: int) -> "FermionOperator":
        return cls(m, {((i,), (i,)): 1})

    # -- basic properties -----------------------------------------------------
    @property
    def exact(self) -> bool:
        return all(is_exact(c) for c in self.terms.values())

    @property
    def scale(self) -> float:
        return math.sqrt(self.scale2)

    def is_zero(self) -> bool:
        return not self.terms

    def grading(self) -> Union[int, str]:
        grades = {len(cre) - len(ann) for cre, ann in self.terms}
        if not grades:
            return 0
        if len(grades) == 1:
            return grades.pop()
        return INHOMOGENEOUS

    def locality(self) -> int:
        return max((len(set(cre) | set(ann)) for cre, ann in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Monomial, Coefficient]]:
        return iter(self.terms.items())

    # -- algebra ----------------------------------------------------------------
    def _check_m(self, other: "FermionOperator") -> None:
        if self.m != other.m:
            raise ValueError(f"mode counts differ: {self.m} vs {other.m}")

    def unscaled(self) -> "FermionOperator":
        """Same operator with the symbolic scale folded into the coefficients."""
        if self.scale2 == 1:
            return self
        s = self.scale
        return FermionOperator(self.m, {k: v * s for k, v in self.terms.items()})

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        self._check_m(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        a, b = self, other
        if a.scale2 != b.scale2:
            a, b = a.unscaled(), b.unscaled()
        acc = dict(a.terms)
        for k, v in b.terms.items():
            _accumulate(acc, k, v)
        return FermionOperator(self.m, acc, a.scale2)

    def __neg__(self) -> "FermionOperator":
        return FermionOperator(self.m, {k: -v for k, v in self.terms.items()}, self.scale2)

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + (-other)

    def __mul__(self, c) -> "FermionOperator":
        if isinstance(c, FermionOperator):
            return compose(self, c)
        c = as_coefficient(c)
        return FermionOperator(self.m, {k: v * c for k, v in self.terms.items()}, self.scale2)

    __rmul__ = __mul__

    def __matmul__(self, other: "FermionOperator") -> "FermionOperator":
        return compose(self, other)

    def with_scale2(self, scale2) -> "FermionOperator":
        return FermionOperator(self.m, self.terms, Fraction(scale2) * self.scale2)

    def equals(self, other: "FermionOperator", tol: float = 0.0) -> bool:
        """Term-by-term comparison after canonicalisation."""
        if self.m != other.m:
            return False
        a, b = self, other
        if a.scale2 != b.scale2:
            a, b = a.unscaled(), b.unscaled()
        keys = set(a.terms) | set(b.terms)
        for k in keys:
            diff = a.terms.get(k, 0) - b.terms.get(k, 0)
            if abs(diff) > tol:
                return False
        return True

    # -- action -------------------------------------------------------------------
    def compiled(self) -> list[_CompiledTerm]:
        cached = self.__dict__.get("_compiled")
        if cached is None:
            cached = [
                _CompiledTerm(cre, ann, _mask(cre), _mask(ann), c)
                for (cre, ann), c in self.terms.items()
            ]
            object.__setattr__(self, "_compiled", cached)
        return cached

    def _by_annihilator(self) -> dict[int, list[_CompiledTerm]]:
        cached = self.__dict__.get("_by_ann")
        if cached is None:
            cached = {}
            for t in self.compiled():
                cached.setdefault(t.ann_mask, []).append(t)
            object.__setattr__(self, "_by_ann", cached)
        return cached

    def apply_word(self, word: int) -> dict[int, Coefficient]:
        """Unscaled action on a single occupancy word."""
        out: dict[int, Coefficient] = {}
        groups = self._by_annihilator()
        if 1 << word.bit_count() < len(groups):
            # few occupied modes: visit only terms whose annihilators fit
            candidates = []
            sub = word
            while True:
                g = groups.get(sub)
                if g is not None:
                    candidates.extend(g)
                if sub == 0:
                    break
                sub = (sub - 1) & word
        else:
            candidates = self.compiled()
        for t in candidates:
            r = t.act(word)
            if r is None:
                continue
            sign, w = r
            _accumulate(out, w, t.coefficient if sign > 0 else -t.coefficient)
        return out

    def to_text(self) -> str:
        return operator_to_text(self)


def _mask(modes: Iterable[int]) -> int:
    m = 0
    for i in modes:
        m |= 1 << i
    return m


def _accumulate(acc: dict, key, val) -> None:
    new = acc.get(key, 0) + val
    if _is_zero(new):
        acc.pop(key, None)
    else:
        acc[key] = new


def apply(op: FermionOperator, s: FockState) -> dict[FockState, Coefficient]:
    """Sparse amplitude map of ``op |s>``; zero amplitudes are omitted."""
    if op.m != s.m:
        raise ValueError(f"operator acts on {op.m} modes, state has {s.m}")
    raw = op.apply_word(s.occupancy)
    if op.scale2 != 1:
        k = op.scale
        return {FockState(w, s.m): c * k for w, c in raw.items()}
    return {FockState(w, s.m): c for w, c in raw.items()}


def adjoint(op: FermionOperator) -> FermionOperator:
    # (a_c1^dag ... a_a1 ...)^dag = ... a_a1^dag ... a_c1: reversed ann become
    # descending creations and reversed cre become ascending annihilations
    terms = {(tuple(reversed(ann)), tuple(reversed(cre))): _conj(c) for (cre, ann), c in op.terms.items()}
    return FermionOperator(op.m, terms, op.scale2)


def compose(a: FermionOperator, b: FermionOperator) -> FermionOperator:
    """Operator product ``a b`` (``b`` acts first)."""
    a._check_m(b)
    acc: dict[Monomial, Coefficient] = {}
    for ka, ca in a.terms.items():
        fa = _monomial_factors(ka)
        for kb, cb in b.terms.items():
            for key, val in normal_order(fa + _monomial_factors(kb), ca * cb).items():
                _accumulate(acc, key, val)
    return FermionOperator(a.m, acc, a.scale2 * b.scale2)


def anticommutator(a: FermionOperator, b: FermionOperator) -> FermionOperator:
    return compose(a, b) + compose(b, a)


def grading(op: FermionOperator) -> Union[int, str]:
    return op.grading()


# -- matrices ---------------------------------------------------------------------
def sector_triplets(op: FermionOperator, space: GradedSpace, l: int) -> tuple[list[int], list[int], list[Coefficient], int, int]:
    """Unscaled nonzero entries of ``op`` restricted to ``V^l -> V^{l+f}``.

    Targets that violate the constraints are dropped.  Returns
    ``(rows, cols, values, n_rows, n_cols)``.
    """
    if op.m != space.m:
        raise ValueError(f"operator acts on {op.m} modes, space has {space.m}")
    f = op.grading()
    if f == INHOMOGENEOUS:
        raise ValueError("sector matrices need an operator with definite fermion number")
    if not 0 <= l <= space.m:
        raise ValueError(f"source sector {l} outside 0..{space.m}")
    src = space.sector_words(l)
    t = l + f
    if not 0 <= t <= space.m:
        return [], [], [], 0, len(src)
    index = space.sector_index(t)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[Coefficient] = []
    for c, w in enumerate(src):
        for target, v in op.apply_word(w).items():
            r = index.get(target)
            if r is None:
                continue
            rows.append(r)
            cols.append(c)
            vals.append(v)
    return rows, cols, vals, len(index), len(src)


def _numeric_dtype(vals: Iterable[Coefficient]):
    return complex if any(isinstance(v, complex) for v in vals) else float


def sector_matrix(op: FermionOperator, space: GradedSpace, l: int) -> sp.csr_matrix:
    """Numeric sparse matrix of ``op`` from ``V^l`` to ``V^{l+f}`` (scale applied)."""
    rows, cols, vals, nr, nc = sector_triplets(op, space, l)
    dtype = _numeric_dtype(vals)
    data = np.array([dtype(v) for v in vals], dtype=np.complex128 if dtype is complex else np.float64)
    if op.scale2 != 1:
        data = data * op.scale
    return sp.csr_matrix((data, (rows, cols)), shape=(nr, nc))


def exact_sector_rows(op: FermionOperator, space: GradedSpace, l: int) -> tuple[dict[int, dict[int, Coefficient]], int, int]:
    """Unscaled entries grouped by row, ready for exact elimination."""
    rows, cols, vals, nr, nc = sector_triplets(op, space, l)
    out: dict[int, dict[int, Coefficient]] = {}
    for r, c, v in zip(rows, cols, vals):
        out.setdefault(r, {})[c] = v
    return out, nr, nc


def full_matrix(op: FermionOperator) -> sp.csr_matrix:
    """Matrix on the full ``2^m`` Fock space; basis index equals occupancy word."""
    rows, cols, vals = [], [], []
    for w in range(1 << op.m):
        for target, v in op.apply_word(w).items():
            rows.append(target)
            cols.append(w)
            vals.append(v)
    dtype = _numeric_dtype(vals)
    data = np.array([dtype(v) for v in vals], dtype=np.complex128 if dtype is complex else np.float64)
    if op.scale2 != 1:
        data = data * op.scale
    n = 1 << op.m
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def nilpotency_residual(d: FermionOperator, space: GradedSpace) -> Union[int, Fraction, float]:
    """Largest absolute entry of ``d^2`` over all sectors of ``space``.

    Rational coefficients give an exact rational (zero for a genuine
    coboundary); otherwise the floating-point residual.  Intermediate states
    outside the space are projected out, as in :func:`sector_matrix`.
    """
    f = d.grading()
    if f == INHOMOGENEOUS:
        raise ValueError("nilpotency check needs an operator with definite fermion number")
    worst: Union[int, Fraction, float] = 0
    for l in range(space.m + 1):
        if not 0 <= l + 2 * f <= space.m:
            continue
        for w in space.sector_words(l):
            acc: dict[int, Coefficient] = {}
            for u, cu in d.apply_word(w).items():
                if not space.is_member_word(u):
                    continue
                for v, cv in d.apply_word(u).items():
                    if space.is_member_word(v):
                        _accumulate(acc, v, cu * cv)
            for val in acc.values():
                val = abs(val)
                if val > worst:
                    worst = val
    if d.scale2 != 1:
        worst = worst * float(d.scale2) if isinstance(worst, float) else worst * d.scale2
    return worst


# -- text serialisation ------------------------------------------------------------
_COEF_RE = re.compile(r"^[+-]?(\d+(/\d+)?|\d*\.\d+([eE][+-]?\d+)?|\d+\.?\d*[eE][+-]?\d+|\d+\.)$")


def parse_coefficient(text: str) -> Coefficient:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        c = complex(text[1:-1].replace(" ", ""))
        return c.real if c.imag == 0 else c
    if "j" in text:
        c = complex(text)
        return c.real if c.imag == 0 else c
    if not _COEF_RE.match(text):
        raise ValueError(f"malformed coefficient {text!r}")
    return Fraction(text)


def format_coefficient(c: Coefficient) -> str:
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, complex):
        return f"({c.real!r}{c.imag:+.17g}j)"
    return repr(float(c))


def operator_to_text(op: FermionOperator) -> str:
    """One term per line: ``coef  +i -j ...`` (``+`` creation, ``-`` annihilation)."""
    lines = [f"# modes {op.m}"]
    if op.scale2 != 1:
        lines.append(f"# scale2 {op.scale2}")
    for (cre, ann), c in sorted(op.terms.items()):
        factors = " ".join([f"+{i}" for i in cre] + [f"-{i}" for i in ann])
        lines.append(f"{format_coefficient(c)}  {factors}".rstrip())
    return "\n".join(lines) + "\n"


def operator_from_text(text: str, m: Optional[int] = None) -> FermionOperator:
    scale2 = Fraction(1)
    products = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "modes" and m is None:
                m = int(parts[1])
            elif len(parts) == 2 and parts[0] == "scale2":
                scale2 = Fraction(parts[1])
            continue
        tokens = line.split()
        try:
            coef = parse_coefficient(tokens[0])
            factors = []
            for tok in tokens[1:]:
                if tok[0] not in "+-" or not tok[1:].isdigit():
                    raise ValueError(f"bad factor {tok!r}")
                factors.append((int(tok[1:]), tok[0] == "+"))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        products.append((coef, factors))
    if m is None:
        m = 1 + max((i for _, fs in products for i, _ in fs), default=-1)
    return FermionOperator.from_products(m, products, scale2)
