"""Indicator-product reformulations of c_n and their exhaustive recounts.

Vectors are stored axis-grouped: entry ``a * n + (i - 1)`` holds the axis-``a``
component of step (or position) ``i``, so for d = 2 the layout is
``(x_1..x_n; x_{n+1}..x_{2n})``.  Position 0 is the origin and is never a
variable.

Pair constraints read ``inner_sq <= |w_k - w_j|^2 <= (k - j)^2 + outer_slack``.
On integer vectors every ``inner_sq`` in (0, 1] and every ``outer_slack`` in
[0, 1) select the same points, because squared integer distances skip the
open intervals (0, 1) and (m^2, m^2 + 1).
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceeded
from .saw_enum import LatticeWalk

DEFAULT_NODE_LIMIT = 20_000_000


@dataclass(frozen=True)
class Thresholds:
    """Shell and box thresholds of the constraint domain."""

    inner_sq: Fraction = Fraction(1, 4)
    outer_slack: Fraction = Fraction(0)
    box_slack: Fraction = Fraction(0)

    def outer_sq(self, gap: int) -> Fraction:
        return Fraction(gap * gap) + self.outer_slack

    def box(self, l: int) -> Fraction:
        return Fraction(l) + self.box_slack


# Closed domain with the B(., 1/2) exclusion; lattice walks sit on its boundary.
LITERAL = Thresholds()
# Every threshold moved halfway between consecutive attainable integer values,
# so each lattice point of the domain is an interior point.
MIDPOINT = Thresholds(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2))


@dataclass(frozen=True)
class StepVector:
    dim: int
    length: int
    entries: Tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.dim * self.length:
            raise ValueError("entries must have length dim * length")

    def step(self, i: int) -> Tuple[int, ...]:
        """Displacement of step ``i`` (1-based)."""
        n = self.length
        return tuple(self.entries[a * n + i - 1] for a in range(self.dim))

    @classmethod
    def from_steps(cls, steps: Sequence[Sequence[int]], dim: Optional[int] = None) -> "StepVector":
        steps = [tuple(s) for s in steps]
        d = dim if dim is not None else (len(steps[0]) if steps else 1)
        n = len(steps)
        entries = tuple(steps[i][a] for a in range(d) for i in range(n))
        return cls(d, n, entries)

    @classmethod
    def from_walk(cls, walk: LatticeWalk) -> "StepVector":
        return cls.from_steps(walk.steps(), dim=walk.dim)

    def to_walk(self) -> LatticeWalk:
        pos = [0] * self.dim
        pts = [tuple(pos)]
        for i in range(1, self.length + 1):
            pos = [p + s for p, s in zip(pos, self.step(i))]
            pts.append(tuple(pos))
        return LatticeWalk(self.dim, tuple(pts))


@dataclass(frozen=True)
class SigmaVector:
    dim: int
    length: int
    entries: Tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.dim * self.length:
            raise ValueError("entries must have length dim * length")

    def block(self, i: int) -> Tuple[int, ...]:
        """Position block ``i``; block 0 is the fixed origin."""
        if i == 0:
            return (0,) * self.dim
        n = self.length
        return tuple(self.entries[a * n + i - 1] for a in range(self.dim))

    def in_box(self, box_slack: Fraction = Fraction(0)) -> bool:
        return all(
            abs(c) <= i + box_slack
            for i in range(1, self.length + 1)
            for c in self.block(i)
        )

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]]) -> "SigmaVector":
        blocks = [tuple(b) for b in blocks]
        d = len(blocks[0])
        n = len(blocks)
        return cls(d, n, tuple(blocks[i][a] for a in range(d) for i in range(n)))


@dataclass(frozen=True)
class PairConstraint:
    j: int
    k: int
    inner_sq: Fraction
    outer_sq: Fraction

    def holds(self, dist_sq) -> bool:
        return self.inner_sq <= dist_sq <= self.outer_sq


@dataclass(frozen=True)
class DomainSpec:
    dim: int
    length: int
    constraints: Tuple[PairConstraint, ...]
    box_bounds: Tuple[Fraction, ...]

    @classmethod
    def build(cls, d: int, n: int, thresholds: Thresholds = LITERAL) -> "DomainSpec":
        cons = tuple(
            PairConstraint(j, k, thresholds.inner_sq, thresholds.outer_sq(k - j))
            for j, k in pairs(n)
        )
        boxes = tuple(thresholds.box(l) for l in range(1, n + 1))
        return cls(d, n, cons, boxes)


def pairs(n: int) -> List[Tuple[int, int]]:
    """All (j, k) with 0 <= j < k <= n, in lexicographic order."""
    return [(j, k) for k in range(1, n + 1) for j in range(k)]


def sigma_from_x(x: StepVector) -> SigmaVector:
    d, n = x.dim, x.length
    arr = np.asarray(x.entries, dtype=np.int64).reshape(d, n)
    return SigmaVector(d, n, tuple(int(v) for v in np.cumsum(arr, axis=1).ravel()))


def x_from_sigma(sigma: SigmaVector) -> StepVector:
    d, n = sigma.dim, sigma.length
    arr = np.asarray(sigma.entries, dtype=np.int64).reshape(d, n)
    return StepVector(d, n, tuple(int(v) for v in np.diff(arr, axis=1, prepend=0).ravel()))


def transform_matrix(d: int, n: int) -> np.ndarray:
    """Integer matrix of the partial-sum map, block diagonal with one
    lower-triangular all-ones block per axis."""
    block = np.tril(np.ones((n, n), dtype=np.int64))
    return np.kron(np.eye(d, dtype=np.int64), block)


def _dist_sq(p: Sequence[int], q: Sequence[int]) -> int:
    return sum((a - b) * (a - b) for a, b in zip(p, q))


def x_indicator(
    x: StepVector,
    thresholds: Thresholds = LITERAL,
    adjacent_upper_only: bool = False,
) -> int:
    """1 iff every partial-sum shell constraint holds for ``x``.

    With ``adjacent_upper_only`` the upper bound is imposed only on pairs
    with k - j = 1.
    """
    d, n = x.dim, x.length
    steps = [x.step(i) for i in range(1, n + 1)]
    for k in range(1, n + 1):
        tail = [0] * d
        for j in range(k - 1, -1, -1):
            s = steps[j]
            for a in range(d):
                tail[a] += s[a]
            q = sum(t * t for t in tail)
            if q < thresholds.inner_sq:
                return 0
            if (k - j == 1 or not adjacent_upper_only) and q > thresholds.outer_sq(k - j):
                return 0
    return 1


def sigma_indicator(sigma: SigmaVector, thresholds: Thresholds = LITERAL) -> int:
    """1 iff sigma lies in the box and satisfies every pair constraint (origin included)."""
    if not sigma.in_box(thresholds.box_slack):
        return 0
    blocks = [sigma.block(i) for i in range(sigma.length + 1)]
    for j, k in pairs(sigma.length):
        q = _dist_sq(blocks[k], blocks[j])
        if not (thresholds.inner_sq <= q <= thresholds.outer_sq(k - j)):
            return 0
    return 1


def psi_jk(sigma: SigmaVector, j: int, k: int, thresholds: Thresholds = LITERAL) -> int:
    """Shell indicator of block k around block j times the boxes of every other block."""
    n = sigma.length
    if not 0 <= j < k <= n:
        raise ValueError(f"need 0 <= j < k <= {n}, got ({j}, {k})")
    q = _dist_sq(sigma.block(k), sigma.block(j))
    if not (thresholds.inner_sq <= q <= thresholds.outer_sq(k - j)):
        return 0
    for l in range(1, n + 1):
        if l in (j, k):
            continue
        if any(abs(c) > thresholds.box(l) for c in sigma.block(l)):
            return 0
    return 1


# ---------------------------------------------------------------- batch forms


def _blocks(points: np.ndarray, d: int, n: int) -> np.ndarray:
    """(m, d*n) axis-grouped -> (m, n + 1, d) with the origin prepended."""
    pts = np.asarray(points)
    m = pts.shape[0]
    blk = pts.reshape(m, d, n).transpose(0, 2, 1)
    return np.concatenate([np.zeros((m, 1, d), dtype=blk.dtype), blk], axis=1)


def _shell_ok(blk: np.ndarray, j: int, k: int, th: Thresholds) -> np.ndarray:
    diff = blk[:, k, :] - blk[:, j, :]
    q = np.einsum("ij,ij->i", diff, diff)
    return (q >= float(th.inner_sq)) & (q <= float(th.outer_sq(k - j)))


def _box_ok(blk: np.ndarray, l: int, th: Thresholds) -> np.ndarray:
    return np.all(np.abs(blk[:, l, :]) <= float(th.box(l)), axis=1)


def sigma_indicator_batch(points, d: int, n: int, thresholds: Thresholds = LITERAL) -> np.ndarray:
    """Vectorized :func:`sigma_indicator` for integer or real rows."""
    blk = _blocks(points, d, n)
    ok = np.ones(blk.shape[0], dtype=bool)
    for l in range(1, n + 1):
        ok &= _box_ok(blk, l, thresholds)
    for j, k in pairs(n):
        ok &= _shell_ok(blk, j, k, thresholds)
    return ok


def psi_jk_batch(
    points,
    d: int,
    n: int,
    j: int,
    k: int,
    thresholds: Thresholds = LITERAL,
    include_j_box: bool = False,
) -> np.ndarray:
    """Vectorized :func:`psi_jk`.

    ``include_j_box`` also confines block j to its box, which makes the
    continuum function integrable; the lattice identity does not need it.
    """
    if not 0 <= j < k <= n:
        raise ValueError(f"need 0 <= j < k <= {n}, got ({j}, {k})")
    blk = _blocks(points, d, n)
    ok = _shell_ok(blk, j, k, thresholds)
    for l in range(1, n + 1):
        if l == k or (l == j and not include_j_box):
            continue
        ok &= _box_ok(blk, l, thresholds)
    return ok


def box_points(d: int, n: int, pad: int = 0) -> np.ndarray:
    """Every integer sigma with block l in [-(l + pad), l + pad]^d, axis-grouped rows."""
    axes = []
    for a in range(d):
        for l in range(1, n + 1):
            axes.append(np.arange(-(l + pad), l + pad + 1, dtype=np.int64))
    if not axes:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


# ------------------------------------------------------------ exhaustive sums


class _Budget:
    def __init__(self, limit: Optional[int]):
        self.limit = limit
        self.nodes = 0

    def tick(self) -> None:
        self.nodes += 1
        if self.limit is not None and self.nodes > self.limit:
            raise BudgetExceeded(f"node budget of {self.limit} exceeded")


def count_by_x_sum(
    d: int,
    n: int,
    thresholds: Thresholds = LITERAL,
    node_limit: Optional[int] = DEFAULT_NODE_LIMIT,
) -> int:
    """Sum of :func:`x_indicator` over x in {-1, 0, 1}^{dn}.

    Steps are chosen one at a time from all 3^d candidates; a prefix is
    abandoned as soon as one of its shell constraints fails.
    """
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    candidates = list(itertools.product((-1, 0, 1), repeat=d))
    budget = _Budget(node_limit)
    steps: List[Tuple[int, ...]] = []

    def admissible(k: int) -> bool:
        tail = [0] * d
        for j in range(k - 1, -1, -1):
            s = steps[j]
            for a in range(d):
                tail[a] += s[a]
            q = sum(t * t for t in tail)
            if q < thresholds.inner_sq or q > thresholds.outer_sq(k - j):
                return False
        return True

    def descend(k: int) -> int:
        budget.tick()
        if k == n:
            return 1
        total = 0
        for c in candidates:
            steps.append(c)
            if admissible(k + 1):
                total += descend(k + 1)
            steps.pop()
        return total

    return descend(0)


def _sigma_walk(d: int, n: int, thresholds: Thresholds, node_limit: Optional[int]) -> Iterator[Tuple[int, ...]]:
    """Yield the final block of every admissible integer sigma."""
    budget = _Budget(node_limit)
    blocks: List[Tuple[int, ...]] = [(0,) * d]

    def descend(i: int):
        budget.tick()
        if i == n:
            yield blocks[-1]
            return
        prev = blocks[-1]
        lim = thresholds.box(i + 1)
        ranges = [
            [v for v in (p - 1, p, p + 1) if abs(v) <= lim]
            for p in prev
        ]
        for cand in itertools.product(*ranges):
            ok = True
            for j in range(i, -1, -1):
                q = _dist_sq(cand, blocks[j])
                if q < thresholds.inner_sq or q > thresholds.outer_sq(i + 1 - j):
                    ok = False
                    break
            if ok:
                blocks.append(cand)
                yield from descend(i + 1)
                blocks.pop()

    yield from descend(0)


def count_by_sigma_sum(
    d: int,
    n: int,
    thresholds: Thresholds = LITERAL,
    node_limit: Optional[int] = DEFAULT_NODE_LIMIT,
) -> int:
    """Sum of :func:`sigma_indicator` over the box prod [-i, i]^d.

    Candidates for block i are restricted to differences in {-1, 0, 1}^d
    from block i - 1, the image of the step box under the transform.
    """
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    return sum(1 for _ in _sigma_walk(d, n, thresholds, node_limit))


def msd_numerator_by_sigma(
    d: int,
    n: int,
    thresholds: Thresholds = LITERAL,
    node_limit: Optional[int] = DEFAULT_NODE_LIMIT,
) -> int:
    """Sum over admissible sigma of the squared norm of block n."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    return sum(sum(c * c for c in last) for last in _sigma_walk(d, n, thresholds, node_limit))


@dataclass(frozen=True)
class RecountRow:
    n: int
    method: str
    count: int
    elapsed_ms: float


def recount_table(d: int, n: int, node_limit: Optional[int] = DEFAULT_NODE_LIMIT) -> List[RecountRow]:
    """Counts of length-n walks by enumeration, x-form sum and sigma-form sum, timed."""
    from .saw_enum import enumerate_saws

    methods = (
        ("enum", lambda: enumerate_saws(d, n, node_limit=node_limit).counts[n]),
        ("x_sum", lambda: count_by_x_sum(d, n, node_limit=node_limit)),
        ("sigma_sum", lambda: count_by_sigma_sum(d, n, node_limit=node_limit)),
    )
    rows = []
    for method, fn in methods:
        t0 = time.perf_counter()
        c = fn()
        rows.append(RecountRow(n, method, c, (time.perf_counter() - t0) * 1e3))
    return rows
