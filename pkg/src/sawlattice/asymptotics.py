"""Small-n probes of growth-rate and displacement scaling laws.

Every fit here is ordinary least squares in log space on exact data.  The
data have no noise, so the residual measures model misspecification at
small n and is the quantity to report; none of these numbers are
asymptotic estimates.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import DegenerateFit, InsufficientData

NIENHUIS_EXPONENT = 11.0 / 32.0


@dataclass(frozen=True)
class FitResult:
    model: str
    params: Dict[str, float]
    residual: float
    n_range: Tuple[int, int]
    checks: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.residual >= 0:
            raise ValueError("residual must be non-negative")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["n_range"] = list(self.n_range)
        return out


@dataclass(frozen=True)
class GrowthRow:
    n: int
    count: int
    root: float
    kesten_ratio: Optional[float]


def _positive_counts(counts: Mapping[int, int]) -> Dict[int, int]:
    # values keep their type: exact ints from enumeration, floats from models
    return {int(n): c for n, c in counts.items() if int(n) >= 1}


def connective_estimates(counts: Mapping[int, int]) -> List[GrowthRow]:
    """c_n^(1/n) and c_(n+2)/c_n for every n >= 1 in the table."""
    pos = _positive_counts(counts)
    if not pos or max(pos) < 3:
        raise InsufficientData("need counts up to at least n = 3")
    rows = []
    for n in sorted(pos):
        c = pos[n]
        ratio = pos[n + 2] / c if n + 2 in pos else None
        rows.append(GrowthRow(n, c, math.exp(math.log(c) / n), ratio))
    return rows


def kesten_ratios(counts: Mapping[int, int]) -> Dict[str, List[Tuple[int, float]]]:
    """c_(n+2)/c_n split by the parity of n."""
    out: Dict[str, List[Tuple[int, float]]] = {"even": [], "odd": []}
    for row in connective_estimates(counts):
        if row.kesten_ratio is not None:
            out["even" if row.n % 2 == 0 else "odd"].append((row.n, row.kesten_ratio))
    return out


def check_submultiplicative(counts: Mapping[int, int]) -> Tuple[bool, List[Tuple[int, int]]]:
    """Test c_(m+n) <= c_m c_n for all 1 <= m <= n with m + n in the table.

    Returns (holds, violating pairs).
    """
    pos = _positive_counts(counts)
    bad = []
    top = max(pos) if pos else 0
    for m in range(1, top + 1):
        for n in range(m, top + 1 - m):
            if m in pos and n in pos and m + n in pos and pos[m + n] > pos[m] * pos[n]:
                bad.append((m, n))
    return not bad, bad


def _select(series: Mapping[int, float], n_range: Optional[Tuple[int, int]], minimum: int):
    keys = sorted(k for k in series if k >= 1)
    if n_range is not None:
        lo, hi = n_range
        keys = [k for k in keys if lo <= k <= hi]
    if len(keys) < minimum:
        raise DegenerateFit(f"need at least {minimum} data points, got {len(keys)}")
    n = np.array(keys, dtype=float)
    y = np.array([float(series[k]) for k in keys])
    if np.any(y <= 0):
        raise DegenerateFit("log fit needs positive values")
    return keys, n, y


def _lstsq(X: np.ndarray, y: np.ndarray):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DegenerateFit("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    return beta, float(np.sqrt(np.mean(resid ** 2)))


def fit_nienhuis(
    counts: Mapping[int, int],
    n_range: Optional[Tuple[int, int]] = None,
    free_exponent: bool = False,
) -> FitResult:
    """Fit log c_n = log A + g log n + n log mu.

    g is fixed at 11/32 unless ``free_exponent``.  The residual is the RMS
    of the log-space residuals.
    """
    keys, n, c = _select(counts, n_range, 4)
    logc = np.log(c)
    if free_exponent:
        X = np.stack([np.ones_like(n), np.log(n), n], axis=1)
        beta, res = _lstsq(X, logc)
        log_a, g, log_mu = beta
    else:
        X = np.stack([np.ones_like(n), n], axis=1)
        beta, res = _lstsq(X, logc - NIENHUIS_EXPONENT * np.log(n))
        (log_a, log_mu), g = beta, NIENHUIS_EXPONENT
    return FitResult(
        model="nienhuis-free" if free_exponent else "nienhuis-fixed",
        params={"A": math.exp(log_a), "mu": math.exp(log_mu), "exponent": float(g)},
        residual=res,
        n_range=(keys[0], keys[-1]),
    )


def hammersley_welsh_envelope(counts: Mapping[int, int], mu: float, tol: float = 1e-12) -> FitResult:
    """Smallest c with c_n <= mu^n exp(c sqrt(n)) over the table (n >= 1).

    Values of |c| below ``tol`` are reported as 0 so that exact powers of
    mu do not produce rounding noise.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    pos = _positive_counts(counts)
    if not pos:
        raise InsufficientData("no counts with n >= 1")
    log_mu = math.log(mu)
    vals = {n: (math.log(c) - n * log_mu) / math.sqrt(n) for n, c in pos.items()}
    n_star = max(vals, key=lambda k: vals[k])
    c = vals[n_star]
    if abs(c) < tol:
        c = 0.0
    return FitResult(
        model="hammersley-welsh-envelope",
        params={"c": c, "mu": mu, "attained_at": float(n_star)},
        residual=0.0,
        n_range=(min(pos), max(pos)),
    )


def fit_flory(msd: Mapping[int, float], n_range: Optional[Tuple[int, int]] = None) -> FitResult:
    """Log-log slope of the mean squared displacement against n.

    Also records whether msd_n / n^2 is strictly decreasing on the range.
    """
    keys, n, m = _select(msd, n_range, 4)
    X = np.stack([np.ones_like(n), np.log(n)], axis=1)
    (b0, slope), res = _lstsq(X, np.log(m))
    scaled = m / n ** 2
    return FitResult(
        model="flory",
        params={"slope": float(slope), "prefactor": math.exp(b0)},
        residual=res,
        n_range=(keys[0], keys[-1]),
        checks={"msd_over_n2_decreasing": bool(np.all(np.diff(scaled) < 0))},
    )


def plot_rows(counts: Mapping[int, int], sq_end_sums: Mapping[int, int]) -> List[dict]:
    """Rows (n, c_n, c_n^(1/n), kesten_ratio, msd, msd/n^2) for n >= 1."""
    rows = []
    for n in sorted(k for k in counts if k >= 1):
        c = counts[n]
        msd = sq_end_sums[n] / c
        rows.append(
            {
                "n": n,
                "c_n": c,
                "root": c ** (1.0 / n),
                "kesten_ratio": counts[n + 2] / c if n + 2 in counts else None,
                "msd": msd,
                "msd_over_n2": msd / n ** 2,
            }
        )
    return rows
