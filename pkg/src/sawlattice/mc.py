"""Seeded, stratified Monte Carlo with a deterministic reduction.

An integrand is a callable ``f(rng, u0) -> (m, k) array`` that draws
``len(u0)`` points using ``u0`` as its stratified first uniform coordinate
(ignoring it is allowed) and returns ``k`` weighted outputs per point, i.e.
``g(x) / q(x)`` for a proposal density q.

The ``samples`` budget is split across ``stream_count`` substreams spawned
from one :class:`numpy.random.SeedSequence` and across ``strata`` equal
slices of the first coordinate.  Each (stream, stratum) cell keeps its own
sums of f and f f^T.  Cells are combined in a fixed order after all work has
finished, so estimates are bit-identical for any ``workers`` value.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, List, Sequence

import numpy as np

from .errors import BudgetExceeded

DEFAULT_SEED = 20240611
CHUNK = 1 << 15

Integrand = Callable[[np.random.Generator, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class McConfig:
    samples: int = 200_000
    seed: int = DEFAULT_SEED
    stream_count: int = 8
    strata: int = 16
    workers: int = 1
    max_samples: int = 200_000_000

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.stream_count < 1 or self.strata < 1 or self.workers < 1:
            raise ValueError("stream_count, strata and workers must be >= 1")
        if self.samples < 2 * self.strata:
            raise ValueError("need at least two samples per stratum")

    def with_samples(self, samples: int) -> "McConfig":
        return McConfig(**{**asdict(self), "samples": samples})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    std_error: float
    samples_used: int

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be non-negative")

    def within(self, target: float, sigmas: float = 3.0, extra_error: float = 0.0) -> bool:
        return abs(self.value - target) <= sigmas * math.hypot(self.std_error, extra_error)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class McResult:
    """Mean vector and covariance of the mean for a k-output integrand."""

    mean: np.ndarray
    cov: np.ndarray
    samples_used: int

    def estimate(self, i: int = 0) -> EstimateWithError:
        return EstimateWithError(
            float(self.mean[i]), float(math.sqrt(max(self.cov[i, i], 0.0))), self.samples_used
        )

    def linear(self, coef: Sequence[float]) -> EstimateWithError:
        """Estimate of sum_i coef_i * mean_i."""
        c = np.asarray(coef, dtype=float)
        var = float(c @ self.cov @ c)
        return EstimateWithError(float(c @ self.mean), math.sqrt(max(var, 0.0)), self.samples_used)

    def ratio(self, num: int, den: int) -> EstimateWithError:
        """mean[num] / mean[den] with a first-order (delta method) error."""
        a, b = float(self.mean[num]), float(self.mean[den])
        if b == 0:
            raise ZeroDivisionError("denominator estimate is zero")
        r = a / b
        grad = np.zeros(len(self.mean))
        grad[num] += 1.0 / b
        grad[den] += -a / (b * b)
        var = float(grad @ self.cov @ grad)
        return EstimateWithError(r, math.sqrt(max(var, 0.0)), self.samples_used)


def _allocation(cfg: McConfig) -> np.ndarray:
    """samples per (stream, stratum), remainder spread in a fixed order."""
    cells = cfg.stream_count * cfg.strata
    base, extra = divmod(cfg.samples, cells)
    alloc = np.full(cells, base, dtype=np.int64)
    alloc[:extra] += 1
    return alloc.reshape(cfg.stream_count, cfg.strata)


def _run_stream(f: Integrand, seq: np.random.SeedSequence, counts: np.ndarray, strata: int):
    rng = np.random.default_rng(seq)
    sums: List[np.ndarray] = []
    outers: List[np.ndarray] = []
    for s in range(strata):
        remaining = int(counts[s])
        tot = None
        tot2 = None
        while remaining > 0:
            m = min(remaining, CHUNK)
            u0 = (s + rng.random(m)) / strata
            vals = np.asarray(f(rng, u0), dtype=float)
            if vals.ndim == 1:
                vals = vals[:, None]
            part = vals.sum(axis=0)
            part2 = vals.T @ vals
            tot = part if tot is None else tot + part
            tot2 = part2 if tot2 is None else tot2 + part2
            remaining -= m
        sums.append(tot)
        outers.append(tot2)
    return sums, outers


def integrate(f: Integrand, cfg: McConfig) -> McResult:
    """Stratified estimate of E[f] over the unit measure of the proposal."""
    if cfg.samples > cfg.max_samples:
        raise BudgetExceeded(f"{cfg.samples} samples requested, budget is {cfg.max_samples}")
    alloc = _allocation(cfg)
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.stream_count)
    jobs = [(f, seqs[i], alloc[i], cfg.strata) for i in range(cfg.stream_count)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda a: _run_stream(*a), jobs))
    else:
        parts = [_run_stream(*a) for a in jobs]

    mean = None
    cov = None
    for s in range(cfg.strata):
        n_s = int(alloc[:, s].sum())
        if n_s == 0:
            continue
        tot = None
        tot2 = None
        for i in range(cfg.stream_count):  # fixed reduction order
            a, b = parts[i][0][s], parts[i][1][s]
            if a is None:
                continue
            tot = a if tot is None else tot + a
            tot2 = b if tot2 is None else tot2 + b
        mu = tot / n_s
        if n_s > 1:
            c = (tot2 - n_s * np.outer(mu, mu)) / (n_s - 1)
        else:
            c = np.zeros_like(tot2)
        w = 1.0 / cfg.strata
        mean = w * mu if mean is None else mean + w * mu
        term = (w * w / n_s) * c
        cov = term if cov is None else cov + term
    return McResult(mean=mean, cov=cov, samples_used=int(alloc.sum()))


def grid_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    lows: Sequence[float],
    highs: Sequence[float],
    nodes: int,
    chunk: int = 1 << 18,
) -> EstimateWithError:
    """Tensor midpoint rule on a box of dimension <= 4.

    The error column is |Q(nodes) - Q(nodes / 2)|, a heuristic for
    discontinuous integrands rather than a bound.
    """
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    dim = len(lows)
    if dim > 4:
        raise BudgetExceeded("tensor grid supports dimension <= 4")
    if nodes < 2 or nodes % 2:
        raise ValueError("nodes must be an even integer >= 2")

    def rule(k: int) -> float:
        h = (highs - lows) / k
        axes = [lows[a] + h[a] * (np.arange(k) + 0.5) for a in range(dim)]
        total = 0.0
        n_pts = k ** dim
        for start in range(0, n_pts, chunk):
            idx = np.arange(start, min(start + chunk, n_pts))
            pts = np.empty((len(idx), dim))
            rem = idx
            for a in range(dim - 1, -1, -1):
                rem, r = np.divmod(rem, k)
                pts[:, a] = axes[a][r]
            total += float(np.sum(f(pts)))
        return total * float(np.prod(h))

    fine = rule(nodes)
    coarse = rule(nodes // 2)
    return EstimateWithError(fine, abs(fine - coarse), nodes ** dim)
