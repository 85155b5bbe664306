"""Exact enumeration of self-avoiding walks on Z^d by pruned backtracking.

Counts and endpoint sums are kept as Python integers throughout, so
nothing overflows however large c_n gets.  Occupancy is a dense
bytearray over the box [-n, n]^d for d <= 3 and a set of linear indices
otherwise.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BudgetExceeded

LatticePoint = Tuple[int, ...]

DEFAULT_NODE_LIMIT = 50_000_000


@dataclass(frozen=True)
class LatticeWalk:
    dim: int
    points: Tuple[LatticePoint, ...]

    @property
    def length(self) -> int:
        return len(self.points) - 1

    @property
    def endpoint(self) -> LatticePoint:
        return self.points[-1]

    @classmethod
    def from_points(cls, points: Sequence[Sequence[int]]) -> "LatticeWalk":
        pts = tuple(tuple(int(c) for c in p) for p in points)
        if not pts:
            raise ValueError("a walk has at least one point")
        return cls(dim=len(pts[0]), points=pts)

    def steps(self) -> List[LatticePoint]:
        return [
            tuple(b - a for a, b in zip(p, q))
            for p, q in zip(self.points[:-1], self.points[1:])
        ]


@dataclass
class EnumerationResult:
    dim: int
    max_n: int
    counts: Dict[int, int]
    sq_end_sums: Dict[int, int]
    walks: Dict[int, List[LatticeWalk]] = field(default_factory=dict, repr=False)
    nodes: int = 0

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "max_n": self.max_n,
            "counts": {str(n): c for n, c in sorted(self.counts.items())},
            "sq_end_sums": {str(n): s for n, s in sorted(self.sq_end_sums.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnumerationResult":
        counts = {int(n): int(c) for n, c in data["counts"].items()}
        sq = {int(n): int(s) for n, s in data["sq_end_sums"].items()}
        return cls(dim=int(data["dim"]), max_n=max(counts), counts=counts, sq_end_sums=sq)

    def rows(self) -> List[Tuple[int, int, int]]:
        """(n, c_n, sum_sq_end) rows in increasing n."""
        return [(n, self.counts[n], self.sq_end_sums[n]) for n in sorted(self.counts)]


def is_self_avoiding(walk: LatticeWalk) -> bool:
    pts = walk.points
    if not pts or any(len(p) != walk.dim for p in pts):
        return False
    if any(pts[0]):
        return False
    for p, q in zip(pts[:-1], pts[1:]):
        if sum(abs(b - a) for a, b in zip(p, q)) != 1:
            return False
    return len(set(pts)) == len(pts)


class _Search:
    """Backtracking state for one dimension and one depth bound."""

    def __init__(self, d: int, n_max: int, node_limit: Optional[int], keep_upto: int = -1):
        self.d = d
        self.n_max = n_max
        self.node_limit = node_limit
        self.keep_upto = keep_upto
        self.width = 2 * n_max + 1
        self.strides = [self.width ** a for a in range(d)]
        self.origin = sum(n_max * s for s in self.strides)
        if d <= 3:
            self.occupied = bytearray(self.width ** d)
            self.dense = True
        else:
            self.occupied_set = set()
            self.dense = False
        self.counts = [0] * (n_max + 1)
        self.sq_sums = [0] * (n_max + 1)
        self.nodes = 0
        self.kept: Dict[int, List[Tuple[LatticePoint, ...]]] = {}
        self.coords = [0] * d
        self.path: List[LatticePoint] = []

    def _mark(self, idx: int, value: bool) -> None:
        if self.dense:
            self.occupied[idx] = 1 if value else 0
        elif value:
            self.occupied_set.add(idx)
        else:
            self.occupied_set.discard(idx)

    def _is_occupied(self, idx: int) -> bool:
        if self.dense:
            return self.occupied[idx] == 1
        return idx in self.occupied_set

    def run_from(self, prefix: Sequence[LatticePoint]) -> None:
        """Count every self-avoiding extension of ``prefix`` (a valid SAW)."""
        idx = self.origin
        for p in prefix:
            idx = self.origin + sum(c * s for c, s in zip(p, self.strides))
            self._mark(idx, True)
        self.coords = list(prefix[-1])
        self.path = [tuple(p) for p in prefix]
        sq = sum(c * c for c in self.coords)
        self._extend(len(prefix) - 1, idx, sq)

    def _extend(self, depth: int, idx: int, sq: int) -> None:
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise BudgetExceeded(
                f"node budget of {self.node_limit} exceeded at depth {depth}"
            )
        self.counts[depth] += 1
        self.sq_sums[depth] += sq
        if depth <= self.keep_upto:
            self.kept.setdefault(depth, []).append(tuple(self.path))
        if depth == self.n_max:
            return
        coords = self.coords
        for a in range(self.d):
            stride = self.strides[a]
            c = coords[a]
            for sgn in (1, -1):
                nidx = idx + sgn * stride
                if self._is_occupied(nidx):
                    continue
                self._mark(nidx, True)
                coords[a] = c + sgn
                if self.keep_upto >= 0:
                    self.path.append(tuple(coords))
                # |w + s e_a|^2 = |w|^2 + 2 s w_a + 1
                self._extend(depth + 1, nidx, sq + 2 * sgn * c + 1)
                if self.keep_upto >= 0:
                    self.path.pop()
                coords[a] = c
                self._mark(nidx, False)


def _signed_axis_images(points: Tuple[LatticePoint, ...], d: int) -> List[Tuple[LatticePoint, ...]]:
    """Images of a walk starting with +e_1 under maps sending e_1 to each of the 2d unit vectors."""
    images = []
    for a in range(d):
        for sgn in (1, -1):
            out = []
            for p in points:
                q = list(p)
                q[0], q[a] = q[a], q[0]
                q[a] *= sgn
                out.append(tuple(q))
            images.append(tuple(out))
    return images


def _prefixes(d: int, depth: int) -> List[Tuple[LatticePoint, ...]]:
    search = _Search(d, depth, node_limit=None, keep_upto=depth)
    origin = tuple([0] * d)
    search.run_from([origin])
    return search.kept.get(depth, [])


def _count_from_prefix(args) -> Tuple[List[int], List[int], int]:
    d, n_max, prefix, node_limit = args
    search = _Search(d, n_max, node_limit)
    search.run_from(prefix)
    return search.counts, search.sq_sums, search.nodes


def enumerate_saws(
    d: int,
    n_max: int,
    use_symmetry: bool = True,
    node_limit: Optional[int] = DEFAULT_NODE_LIMIT,
    materialize: Optional[int] = None,
    workers: int = 1,
    prefix_depth: int = 3,
) -> EnumerationResult:
    """Enumerate all SAWs of length <= ``n_max`` on Z^d.

    With ``use_symmetry`` the first step is fixed to +e_1 and every count for
    n >= 1 is multiplied by 2d.  ``materialize=k`` additionally stores the
    walks of every length <= k, which :func:`sample_uniform` needs.

    ``workers > 1`` partitions the search on walk prefixes of length
    ``prefix_depth`` and runs the subtrees in a process pool; the totals are
    reduced in prefix order and do not depend on the worker count.

    Raises :class:`BudgetExceeded` when more than ``node_limit`` search nodes
    would be visited.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    keep = -1 if materialize is None else min(materialize, n_max)
    origin = tuple([0] * d)

    if workers > 1 and keep < 0 and n_max > prefix_depth:
        counts, sq_sums, nodes = _parallel_counts(d, n_max, use_symmetry, node_limit, workers, prefix_depth)
        kept: Dict[int, List[Tuple[LatticePoint, ...]]] = {}
    else:
        search = _Search(d, n_max, node_limit, keep_upto=keep)
        if use_symmetry and n_max >= 1:
            first = tuple([1] + [0] * (d - 1))
            search.run_from([origin, first])
            # depth-0 node is the bare origin, not part of the +e_1 subtree
            search.counts[0] = 1
        else:
            search.run_from([origin])
        counts, sq_sums, nodes = search.counts, search.sq_sums, search.nodes
        kept = search.kept

    if use_symmetry and n_max >= 1:
        factor = 2 * d
        counts = [counts[0]] + [c * factor for c in counts[1:]]
        sq_sums = [sq_sums[0]] + [s * factor for s in sq_sums[1:]]
        if kept:
            expanded = {0: kept.get(0, [(origin,)])}
            for n, ws in kept.items():
                if n == 0:
                    continue
                expanded[n] = [img for w in ws for img in _signed_axis_images(w, d)]
            expanded.setdefault(0, [(origin,)])
            kept = expanded
    if keep >= 0:
        kept.setdefault(0, [(origin,)])

    walks = {n: [LatticeWalk(dim=d, points=w) for w in ws] for n, ws in kept.items()}
    return EnumerationResult(
        dim=d,
        max_n=n_max,
        counts={n: counts[n] for n in range(n_max + 1)},
        sq_end_sums={n: sq_sums[n] for n in range(n_max + 1)},
        walks=walks,
        nodes=nodes,
    )


def _parallel_counts(d, n_max, use_symmetry, node_limit, workers, prefix_depth):
    depth = max(1, min(prefix_depth, n_max))
    prefixes = _prefixes(d, depth)
    if use_symmetry:
        prefixes = [p for p in prefixes if p[1] == tuple([1] + [0] * (d - 1))]
    # shallow levels come straight from the prefix search
    shallow = _Search(d, depth, node_limit=None)
    shallow.run_from([tuple([0] * d)])
    counts = [0] * (n_max + 1)
    sq_sums = [0] * (n_max + 1)
    scale = 2 * d if use_symmetry else 1
    for n in range(depth):
        # the symmetry factor is applied by the caller, so undo it here
        counts[n] = shallow.counts[n] if n == 0 else shallow.counts[n] // scale
        sq_sums[n] = shallow.sq_sums[n] if n == 0 else shallow.sq_sums[n] // scale
    tasks = [(d, n_max, p, node_limit) for p in prefixes]
    nodes = shallow.nodes
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for c, s, k in pool.map(_count_from_prefix, tasks):
            nodes += k
            for n in range(depth, n_max + 1):
                counts[n] += c[n]
                sq_sums[n] += s[n]
    if node_limit is not None and nodes > node_limit:
        raise BudgetExceeded(f"node budget of {node_limit} exceeded ({nodes} nodes)")
    return counts, sq_sums, nodes


def mean_sq_displacement(result: EnumerationResult, n: int) -> Fraction:
    if n < 0 or n > result.max_n or n not in result.counts:
        raise ValueError(f"n={n} outside enumerated range 0..{result.max_n}")
    return Fraction(result.sq_end_sums[n], result.counts[n])


def sample_uniform(result: EnumerationResult, n: int, seed: int, size: Optional[int] = None):
    """Uniformly random member(s) of Omega_n; deterministic given ``seed``.

    Returns one :class:`LatticeWalk`, or a list of ``size`` independent draws.
    """
    walks = result.walks.get(n)
    if not walks:
        raise ValueError(f"walks of length {n} were not materialized")
    rng = np.random.default_rng(seed)
    if size is None:
        return walks[int(rng.integers(len(walks)))]
    return [walks[int(i)] for i in rng.integers(len(walks), size=size)]


def non_reversing_bound(d: int, n: int) -> int:
    """2d (2d-1)^(n-1), the number of non-reversing walks; 1 for n = 0."""
    if n == 0:
        return 1
    return 2 * d * (2 * d - 1) ** (n - 1)
