"""Classical emulation of the sampling estimators for low-lying spectral density.

Phase estimation is modelled by drawing a uniformly random eigenvalue of the
sector Laplacian (the maximally mixed input) and rounding it to a grid of
``t_bits`` binary digits.  ``t_bits = 0`` means an exact readout.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .complex import CochainComplex, NotPSD, ZERO_TOL, _as_dense, _norm1, check_hermitian, laplacian

EXACT_READOUT = 0
CHUNK = 1 << 16
DENSITY_FLOOR = Fraction(1, 32)


class PreconditionError(RuntimeError):
    """An estimator's stated hypothesis does not hold for the given input."""


@dataclass(frozen=True)
class EstimatorConfig:
    b: float
    delta: float
    eps: float
    mu: float
    t_bits: int = EXACT_READOUT
    seed: int = 0
    enumerate: bool = False

    def __post_init__(self):
        for name in ("b", "delta", "eps", "mu"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.b < 0:
            raise ValueError("threshold b must be non-negative")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not 0.5 < self.mu < 1:
            raise ValueError("mu must lie in (1/2, 1)")
        if self.t_bits < 0:
            raise ValueError("t_bits must be non-negative")

    @property
    def samples(self) -> int:
        """Hoeffding count ``ceil(ln(2/(1-mu)) / (2 eps^2))``."""
        return hoeffding_count(self.eps, 1 - self.mu)


def hoeffding_count(accuracy: float, failure: float) -> int:
    return math.ceil(math.log(2 / failure) / (2 * accuracy * accuracy))


@dataclass
class EstimateReport:
    chi: float
    N: int
    b: float
    delta: float
    eps: float
    mu: float
    seed: int
    stage: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


class ReadoutModel:
    """Eigenvalues of a PSD matrix together with the rounding grid."""

    def __init__(self, M, t_bits: int = EXACT_READOUT, vectors: bool = False, tol: float = ZERO_TOL):
        check_hermitian(M)
        dense = _as_dense(M)
        if dense.shape[0] == 0:
            raise ValueError("empty sector")
        if vectors:
            ev, vec = np.linalg.eigh(dense)
        else:
            ev, vec = np.linalg.eigvalsh(dense), None
        scale = max(1.0, _norm1(M))
        if ev[0] < -tol * scale:
            raise NotPSD(f"eigenvalue {ev[0]:.3g} is negative")
        # numerical zeros are snapped so exact counts at b = 0 are reliable
        ev = np.where(np.abs(ev) <= tol * scale, 0.0, ev)
        self.eigenvalues = ev
        self.vectors = vec
        self.t_bits = t_bits
        lam_max = float(ev[-1])
        self.lam_scale = 2.0 ** math.ceil(math.log2(max(lam_max, 1.0)))
        self.spacing = 0.0 if t_bits == EXACT_READOUT else self.lam_scale / 2**t_bits
        self.readouts = self.round(ev)

    def round(self, values: np.ndarray) -> np.ndarray:
        if self.spacing == 0.0:
            return np.asarray(values, dtype=float)
        return np.round(np.asarray(values) / self.spacing) * self.spacing

    def threshold(self, cfg: EstimatorConfig) -> float:
        if self.spacing == 0.0:
            return cfg.b
        if not self.spacing < cfg.delta / 2:
            raise PreconditionError(
                f"readout spacing {self.spacing:g} is not below delta/2 = {cfg.delta / 2:g}; increase t_bits"
            )
        return cfg.b + cfg.delta / 2

    def draw(self, rng: np.random.Generator, size: Optional[int] = None):
        idx = rng.integers(0, self.readouts.size, size=size)
        return self.readouts[idx]


def sample_eigenvalue(M, rng: np.random.Generator, t_bits: int = EXACT_READOUT) -> float:
    """One emulated phase-estimation readout on the maximally mixed state of ``M``."""
    return float(ReadoutModel(M, t_bits).draw(rng))


def _chunk_counts(total: int) -> list[int]:
    full, rest = divmod(total, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _count_below(model: ReadoutModel, thr: float, n: int, seed: int, workers: int) -> int:
    """Number of readouts ``<= thr`` among ``n`` draws split into fixed seeded chunks.

    Chunking is independent of ``workers`` so results are reproducible.
    """
    sizes = _chunk_counts(n)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def one(k):
        rng = np.random.default_rng(streams[k])
        return int(np.count_nonzero(model.draw(rng, sizes[k]) <= thr))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return sum(pool.map(one, range(len(sizes))))
    return sum(one(k) for k in range(len(sizes)))


def _estimate(model: ReadoutModel, cfg: EstimatorConfig, workers: int, extra: dict) -> EstimateReport:
    thr = model.threshold(cfg)
    stage = {"threshold": thr, "spacing": model.spacing, "lambda_scale": model.lam_scale, **extra}
    if cfg.enumerate:
        hits = int(np.count_nonzero(model.readouts <= thr))
        n = int(model.readouts.size)
        stage["mode"] = "enumeration"
        stage["exact"] = str(Fraction(hits, n))
        return EstimateReport(hits / n, n, cfg.b, cfg.delta, cfg.eps, cfg.mu, cfg.seed, stage)
    n = cfg.samples
    hits = _count_below(model, thr, n, cfg.seed, workers)
    stage["mode"] = "sampling"
    return EstimateReport(hits / n, n, cfg.b, cfg.delta, cfg.eps, cfg.mu, cfg.seed, stage)


def qbne(c: CochainComplex, l: int, cfg: EstimatorConfig, workers: int = 1) -> EstimateReport:
    """Estimate the fraction of ``Delta^l`` eigenvalues at or below ``b``.

    With probability at least ``mu`` the result lies between
    ``N(b) - eps`` and ``N(b + delta) + eps``.
    """
    if not 0 <= l <= c.m or c.space.dim(l) == 0:
        raise ValueError(f"sector {l} is empty")
    model = ReadoutModel(laplacian(c, l), cfg.t_bits)
    return _estimate(model, cfg, workers, {"level": l, "dim": c.space.dim(l)})


def llsd(M, cfg: EstimatorConfig, workers: int = 1) -> EstimateReport:
    """Same estimator on an arbitrary PSD matrix."""
    model = ReadoutModel(M, cfg.t_bits)
    return _estimate(model, cfg, workers, {"dim": int(M.shape[0])})


def _uniform_strings(rng: np.random.Generator, m: int, size: int) -> np.ndarray:
    return rng.integers(0, 1 << m, size=size, dtype=np.uint64)


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words) if hasattr(np, "bitwise_count") else np.array([int(w).bit_count() for w in words])


def dqc1_qbne(c: CochainComplex, l: int, cfg: EstimatorConfig, floor: Fraction = DENSITY_FLOOR,
              workers: int = 1) -> EstimateReport:
    """Two-stage estimate of the low-lying density from full-space samples.

    Stage 2 estimates ``q = dim V^l / 2^m`` from uniform bit strings.  Stage 1
    estimates ``p = (#low readouts in V^l) / 2^m``: a uniform string that lies
    in ``V^l`` is accepted with probability equal to the weight of the
    projector onto low-readout eigenvectors on that basis state.  The result
    is ``p_hat / q_hat``.  With ``eps' = eta_2 / q_hat`` and
    ``eps_1 = eta_1 / q_hat`` the deviation from ``p / q`` is at most
    ``(eps_1 + eps' chi) / (1 - eps')``.

    Raises :class:`PreconditionError` when the sector's estimated relative
    dimension falls below ``floor``.
    """
    m = c.m
    if m > 62:
        raise ValueError("too many modes for word sampling")
    if not 0 <= l <= m or c.space.dim(l) == 0:
        raise ValueError(f"sector {l} is empty")
    floor = float(floor)
    alpha = (1 - cfg.mu) / 2
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)

    # stage 2: relative dimension of the sector
    eta2 = cfg.eps * floor / 2
    n2 = hoeffding_count(eta2, alpha)
    space = c.space
    hits2 = 0
    rng2 = np.random.default_rng(seeds[1])
    for size in _chunk_counts(n2):
        w = _uniform_strings(rng2, m, size)
        ok = (_popcount(w) == l) & space.member_words(w)
        hits2 += int(np.count_nonzero(ok))
    q_hat = hits2 / n2
    if q_hat < floor:
        raise PreconditionError(
            f"sector F={l} has estimated relative dimension {q_hat:.4g} below the floor {floor:.4g}"
        )

    # stage 1: acceptance probability over the maximally mixed full-space input
    model = ReadoutModel(laplacian(c, l), cfg.t_bits, vectors=True)
    thr = model.threshold(cfg)
    low = model.readouts <= thr
    vec = model.vectors[:, low]
    accept = np.sum(np.abs(vec) ** 2, axis=1) if vec.size else np.zeros(model.readouts.size)
    words = np.asarray(space.sector_words(l), dtype=np.uint64)
    q_low = max(q_hat - eta2, floor / 2)
    eta1 = cfg.eps * q_low / 2
    n1 = hoeffding_count(eta1, alpha)
    rng1 = np.random.default_rng(seeds[0])
    hits1 = 0
    for size in _chunk_counts(n1):
        w = _uniform_strings(rng1, m, size)
        pos = np.searchsorted(words, w)
        pos = np.minimum(pos, words.size - 1)
        inside = words[pos] == w
        probs = np.where(inside, accept[pos], 0.0)
        hits1 += int(np.count_nonzero(rng1.random(size) < probs))
    p_hat = hits1 / n1

    chi = p_hat / q_hat
    eps_prime = eta2 / q_hat
    eps_one = eta1 / q_hat
    bound = (eps_one + eps_prime * chi) / (1 - eps_prime) if eps_prime < 1 else math.inf
    stage = {
        "p_hat": p_hat,
        "q_hat": q_hat,
        "N1": n1,
        "N2": n2,
        "eta1": eta1,
        "eta2": eta2,
        "eps_prime": eps_prime,
        "bound": bound,
        "floor": floor,
        "threshold": thr,
        "level": l,
    }
    return EstimateReport(chi, n1 + n2, cfg.b, cfg.delta, cfg.eps, cfg.mu, cfg.seed, stage)
