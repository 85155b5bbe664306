"""Fourier-side kernels, their quadrature checks, and the Poisson estimates.

Frequencies use the same axis-grouped layout as the sigma vectors: entry
``a * n + (l - 1)`` is the axis-``a`` frequency of block l.

Two kernel variants are provided.  ``derived-consistent`` is the exact
transform of the continuum function

    psi_jk(sigma) = 1{1/2 <= |sigma_k - sigma_j| <= k - j}
                    * prod_{l != k} 1{sigma_l in [-l, l]^d}

(block j keeps its box so the function is integrable; the lattice identity
in :mod:`lattice_domain` does not need it).  Substituting
y = sigma_k - sigma_j gives

    psi^(xi) = annulus(|xi_k|) * prod_a ft_interval(j, xi_ja + xi_ka)
               * prod_{l != j,k} prod_a ft_interval(l, xi_la)

with no block-j factor when j = 0.  ``printed-literal`` keeps the printed
constants: l^2 and j^2 in place of (2l)^d and (2j)^d, and the unscaled
Bessel combination for d != 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np

from . import special
from .errors import BudgetExceeded
from .lattice_domain import (
    LITERAL,
    MIDPOINT,
    Thresholds,
    count_by_sigma_sum,
    msd_numerator_by_sigma,
    pairs,
    psi_jk_batch,
    sigma_indicator_batch,
)
from .mc import EstimateWithError, McConfig, McResult, integrate

DERIVED = "derived-consistent"
LITERAL_VARIANT = "printed-literal"
VARIANTS = (DERIVED, LITERAL_VARIANT)

MAX_TRUNCATION_N = 3


@dataclass(frozen=True)
class KernelId:
    n: int
    d: int
    j: int
    k: int
    variant: str = DERIVED

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if not 0 <= self.j < self.k <= self.n:
            raise ValueError(f"need 0 <= j < k <= n, got j={self.j}, k={self.k}, n={self.n}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


@dataclass(frozen=True)
class MollifierConfig:
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("mollifier width must be positive")

    def transform(self, v) -> np.ndarray:
        """Gaussian transform exp(-2 pi^2 eps^2 |v|^2) along the last axis."""
        v = np.asarray(v, dtype=float)
        return np.exp(-2.0 * math.pi ** 2 * self.eps ** 2 * np.sum(v * v, axis=-1))


def frequency_blocks(xi, n: int, d: int) -> np.ndarray:
    """(..., d*n) axis-grouped -> (..., n, d); block l is ``[..., l - 1, :]``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != d * n:
        raise ValueError(f"frequency must have last dimension {d * n}")
    if not np.all(np.isfinite(xi)):
        raise ValueError("frequency entries must be finite")
    lead = xi.shape[:-1]
    return np.swapaxes(xi.reshape(lead + (d, n)), -1, -2)


def support_volume(kid: KernelId) -> float:
    """Exact measure of the support of the continuum psi_jk."""
    shell = special.ball_volume(kid.d, kid.k - kid.j) - special.ball_volume(kid.d, 0.5)
    boxes = 1.0
    for l in range(1, kid.n + 1):
        if l != kid.k:
            boxes *= (2.0 * l) ** kid.d
    return shell * boxes


def psi_hat_analytic(kid: KernelId, xi) -> np.ndarray:
    """Closed-form transform of psi_jk at one or many frequencies."""
    blk = frequency_blocks(xi, kid.n, kid.d)
    n, d, j, k = kid.n, kid.d, kid.j, kid.k
    r = np.sqrt(np.sum(blk[..., k - 1, :] ** 2, axis=-1))
    literal = kid.variant == LITERAL_VARIANT
    out = np.asarray(special.annulus_brace(d, j, k, r, literal=literal), dtype=float)
    for l in range(1, n + 1):
        if l in (j, k):
            continue
        if literal:
            out = out * l * l * np.prod(special.sinc(2 * math.pi * l * blk[..., l - 1, :]), axis=-1)
        else:
            out = out * np.prod(special.ft_interval(l, blk[..., l - 1, :]), axis=-1)
    coupled = blk[..., j - 1, :] + blk[..., k - 1, :] if j > 0 else None
    if literal:
        # the printed j^2 prefactor also annihilates every j = 0 kernel
        if j == 0:
            return out * 0.0
        out = out * j * j * np.prod(special.sinc(2 * math.pi * j * coupled), axis=-1)
    elif j > 0:
        out = out * np.prod(special.ft_interval(j, coupled), axis=-1)
    return out if out.ndim else float(out)


# ----------------------------------------------------------- quadrature


def _box_halfwidths(n: int, d: int, th: Thresholds) -> np.ndarray:
    """Axis-grouped half-widths of prod_l [-box(l), box(l)]^d."""
    per_block = np.array([float(th.box(l)) for l in range(1, n + 1)])
    return np.tile(per_block, d)


def psi_hat_quadrature(kid: KernelId, xi, cfg: McConfig = McConfig()) -> Dict[str, EstimateWithError]:
    """Monte Carlo value of int psi_jk(sigma) exp(-2 pi i sigma.xi) d sigma.

    sigma is uniform on the box prod_l [-l, l]^d, which contains the support
    of psi_jk.  Points are used in antithetic pairs (sigma, -sigma); the
    support is symmetric, so the imaginary part cancels within each pair.
    Returns ``{"real": ..., "imag": ...}``.
    """
    n, d = kid.n, kid.d
    if d * n > 8:
        raise BudgetExceeded("direct quadrature supports d * n <= 8")
    xi = np.asarray(xi, dtype=float).reshape(-1)
    frequency_blocks(xi, n, d)
    half = _box_halfwidths(n, d, LITERAL)
    vol = float(np.prod(2 * half))

    def f(rng, u0):
        m = len(u0)
        u = rng.random((m, d * n))
        u[:, 0] = u0
        s = (2 * u - 1) * half
        ind_p = psi_jk_batch(s, d, n, kid.j, kid.k, include_j_box=True).astype(float)
        ind_m = psi_jk_batch(-s, d, n, kid.j, kid.k, include_j_box=True).astype(float)
        phase = 2 * math.pi * (s @ xi)
        c, sn = np.cos(phase), np.sin(phase)
        re = 0.5 * (ind_p * c + ind_m * c)
        im = 0.5 * (-ind_p * sn + ind_m * sn)
        return vol * np.stack([re, im], axis=1)

    res = integrate(f, cfg)
    return {"real": res.estimate(0), "imag": res.estimate(1)}


def _sequential_sampler(n: int, d: int, th: Thresholds, extra=None):
    """Integrand for vol(E_n) by sequential importance sampling.

    Block l is drawn uniformly from box(l) intersected with the cube of
    half-width sqrt(outer_sq(1)) around block l - 1, which contains every
    admissible next position.  The weight is the product of the cube
    volumes.  ``extra(blocks)`` appends further weighted outputs.
    """
    rho = math.sqrt(float(th.outer_sq(1)))

    def f(rng, u0):
        m = len(u0)
        prev = np.zeros((m, d))
        weight = np.ones(m)
        pts = np.empty((m, d * n))
        for l in range(1, n + 1):
            b = float(th.box(l))
            lo = np.maximum(prev - rho, -b)
            hi = np.minimum(prev + rho, b)
            u = rng.random((m, d))
            if l == 1:
                u[:, 0] = u0
            cur = lo + (hi - lo) * u
            weight *= np.prod(hi - lo, axis=1)
            for a in range(d):
                pts[:, a * n + l - 1] = cur[:, a]
            prev = cur
        w = weight * sigma_indicator_batch(pts, d, n, th)
        cols = [w]
        if extra is not None:
            cols.extend(c * w for c in extra(pts))
        return np.stack(cols, axis=1)

    return f


def volume_term(n: int, d: int, cfg: McConfig = McConfig(), thresholds: Thresholds = LITERAL) -> EstimateWithError:
    """Continuum volume of the constraint domain E_n in R^(d n).

    E_n is {sigma : |sigma_l|_inf <= box(l), inner_sq <= |sigma_k - sigma_j|^2
    <= outer_sq(k - j) for 0 <= j < k <= n}.  The value is an absolute volume,
    not a fraction of the box.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    return integrate(_sequential_sampler(n, d, thresholds), cfg).estimate(0)


def volume_grid(n: int, d: int, nodes: int = 48, thresholds: Thresholds = LITERAL) -> EstimateWithError:
    """Deterministic tensor-grid volume of E_n for d * n <= 4."""
    from .mc import grid_quadrature

    if d * n > 4:
        raise BudgetExceeded("grid volume supports d * n <= 4")
    half = _box_halfwidths(n, d, thresholds)
    return grid_quadrature(lambda p: sigma_indicator_batch(p, d, n, thresholds), -half, half, nodes)


# ------------------------------------------------------ truncated integral


def default_delta(n: int, d: int = 2) -> float:
    """Smallest first zero among the sinc factors and the Bessel arguments."""
    sinc_zero = 1.0 / (2.0 * n)
    bessel_zero = special.bessel_zero(d / 2.0, 1) / (2.0 * math.pi * n)
    return min(sinc_zero, bessel_zero)


@dataclass(frozen=True)
class TruncationReport:
    n: int
    d: int
    delta: float
    window: float
    inner: EstimateWithError
    tail: Optional[EstimateWithError]
    windowed_total: Optional[EstimateWithError]
    exact_total: Optional[EstimateWithError]

    def concentration(self) -> Optional[float]:
        """inner / (inner + tail) using the windowed tail."""
        if self.tail is None:
            return None
        return self.inner.value / (self.inner.value + self.tail.value)

    def concentration_exact(self) -> Optional[float]:
        """inner / full integral, the full integral being vol(E_n)."""
        if self.exact_total is None:
            return None
        return self.inner.value / self.exact_total.value

    def to_dict(self) -> dict:
        def e(x):
            return None if x is None else x.to_dict()

        return {
            "n": self.n,
            "d": self.d,
            "delta": self.delta,
            "window": self.window,
            "inner": e(self.inner),
            "tail": e(self.tail),
            "windowed_total": e(self.windowed_total),
            "exact_total": e(self.exact_total),
            "concentration": self.concentration(),
            "concentration_exact": self.concentration_exact(),
        }


def _convolution_integrand(n: int, d: int):
    """prod_{p < last} psi^_p(xi_p) * psi^_last(-sum xi_p) over the pair list.

    By Parseval this integrates over R^((P - 1) d n) to int prod psi_jk,
    which is vol(E_n).
    """
    kernels = [KernelId(n, d, j, k) for j, k in pairs(n)]
    width = d * n

    def g(xi: np.ndarray) -> np.ndarray:
        out = np.ones(xi.shape[0])
        acc = np.zeros((xi.shape[0], width))
        for p, kid in enumerate(kernels[:-1]):
            part = xi[:, p * width:(p + 1) * width]
            out *= psi_hat_analytic(kid, part)
            acc += part
        return out * psi_hat_analytic(kernels[-1], -acc)

    return g, (len(kernels) - 1) * width


def truncated_main_integral(
    n: int,
    d: int = 2,
    delta: Optional[float] = None,
    cfg: McConfig = McConfig(),
    window: Optional[float] = None,
    with_tail: Optional[bool] = None,
    volume_cfg: Optional[McConfig] = None,
) -> TruncationReport:
    """Integral of the kernel convolution over |xi|_inf <= delta.

    For n = 2 the complementary part is estimated on the shell
    delta < |xi|_inf <= window (default 2 delta), together with the unsplit
    integral on the same window and the exact full integral vol(E_n) from
    :func:`volume_term`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_TRUNCATION_N:
        raise BudgetExceeded(
            f"convolution dimension for n={n} exceeds the supported budget (n <= {MAX_TRUNCATION_N})"
        )
    if delta is None:
        delta = default_delta(n, d)
    if not delta > 0:
        raise ValueError("delta must be positive")
    g, dim = _convolution_integrand(n, d)
    if dim == 0:
        raise ValueError("n = 1 has a single kernel and no convolution")

    def cube(h: float, exclude: float = 0.0):
        vol = (2 * h) ** dim

        def f(rng, u0):
            x = rng.random((len(u0), dim))
            x[:, 0] = u0
            x = (2 * x - 1) * h
            val = g(x) * vol
            if exclude <= 0:
                return val
            outside = np.max(np.abs(x), axis=1) > exclude
            return np.stack([val * outside, val], axis=1)

        return f

    inner = integrate(cube(delta), cfg).estimate(0)
    if with_tail is None:
        with_tail = n == 2
    tail = total = exact = None
    if window is None:
        window = 2 * delta
    if with_tail:
        if window <= delta:
            raise ValueError("window must exceed delta")
        sub = McConfig(**{**cfg.to_dict(), "seed": cfg.seed + 1})
        res = integrate(cube(window, exclude=delta), sub)
        tail, total = res.estimate(0), res.estimate(1)
        exact = volume_term(n, d, volume_cfg or cfg)
    return TruncationReport(n, d, delta, window, inner, tail, total, exact)


# ------------------------------------------------------------ Poisson sum


@dataclass(frozen=True)
class PoissonReport:
    eps: float
    v_max: int
    partial_sums: List[EstimateWithError]
    smoothed_count: EstimateWithError
    deviations: List[EstimateWithError]
    increments: List[EstimateWithError]
    exact_count: int
    thresholds: str

    @property
    def estimate(self) -> EstimateWithError:
        return self.partial_sums[-1]

    @property
    def zero_frequency(self) -> EstimateWithError:
        return self.partial_sums[0]

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "v_max": self.v_max,
            "estimate": self.estimate.to_dict(),
            "zero_frequency": self.zero_frequency.to_dict(),
            "smoothed_count": self.smoothed_count.to_dict(),
            "partial_sums": [p.to_dict() for p in self.partial_sums],
            "deviations": [p.to_dict() for p in self.deviations],
            "exact_count": self.exact_count,
            "thresholds": self.thresholds,
        }


def _periodic_gaussian_partial(s: np.ndarray, v_max: int, eps: float) -> np.ndarray:
    """Columns V = 0..v_max of 1 + 2 sum_{m<=V} exp(-2 pi^2 eps^2 m^2) cos(2 pi m s)."""
    out = np.empty(s.shape + (v_max + 1,))
    acc = np.ones_like(s)
    out[..., 0] = acc
    for m in range(1, v_max + 1):
        acc = acc + 2.0 * math.exp(-2.0 * math.pi ** 2 * eps ** 2 * m * m) * np.cos(2 * math.pi * m * s)
        out[..., m] = acc
    return out


def _periodic_gaussian(s: np.ndarray, eps: float, reach: int = 6) -> np.ndarray:
    """sum_{p in Z} eta_eps(s - p), the V -> infinity limit of the above."""
    k = np.arange(-reach, reach + 1)
    diff = np.round(s)[..., None] + k - s[..., None]
    return np.exp(-diff * diff / (2 * eps * eps)).sum(-1) / (math.sqrt(2 * math.pi) * eps)


def poisson_recount(
    n: int = 2,
    d: int = 2,
    v_max: int = 6,
    moll: MollifierConfig = MollifierConfig(0.08),
    cfg: McConfig = McConfig(samples=400_000),
    thresholds: Thresholds = MIDPOINT,
    uniform_fraction: float = 0.1,
) -> PoissonReport:
    """Truncated Poisson sum of the mollified domain indicator.

    Poisson summation turns sum_p (1_E * eta)(p) into sum_v 1_E^(v) eta^(v).
    With a Gaussian eta the frequency cube |v|_inf <= V sums in closed form
    inside the integral, so one set of quadrature nodes serves every V:

        S_V = int_E prod_coords G_V(sigma_c) d sigma,
        G_V(s) = sum_{|m| <= V} exp(-2 pi^2 eps^2 m^2) exp(2 pi i m s).

    S_0 is vol(E); as V grows S_V tends to the eps-smoothed lattice count,
    reported alongside from the same samples, which tends to c_n as eps
    shrinks.  The default domain is the midpoint one, on which every lattice
    point of the domain is interior (on the closed domain every one of them
    sits on the boundary and the smoothed count undercounts).

    Nodes come from a mixture of narrow Gaussians on the lattice points of
    the box (weight 1 - uniform_fraction) and a uniform draw on the box.
    """
    if n != 2 or d != 2:
        raise ValueError("the Poisson recount is implemented for n = 2, d = 2 only")
    if v_max < 0:
        raise ValueError("v_max must be >= 0")
    eps = moll.eps
    half = _box_halfwidths(n, d, thresholds)
    dim = d * n
    lattice = [np.arange(-int(math.floor(h)), int(math.floor(h)) + 1) for h in half]
    box_vol = float(np.prod(2 * half))
    alpha = uniform_fraction
    norm = math.sqrt(2 * math.pi) * eps

    def f(rng, u0):
        m = len(u0)
        pick_uniform = u0 < alpha
        s = np.empty((m, dim))
        for c in range(dim):
            s[:, c] = rng.choice(lattice[c], size=m) + eps * rng.standard_normal(m)
        nu = int(pick_uniform.sum())
        s[pick_uniform] = (2 * rng.random((nu, dim)) - 1) * half
        comb = np.ones(m)
        for c in range(dim):
            diff = s[:, c, None] - lattice[c]
            comb *= np.exp(-diff * diff / (2 * eps * eps)).sum(1) / (norm * len(lattice[c]))
        inside_box = np.all(np.abs(s) <= half, axis=1)
        q = (1 - alpha) * comb + alpha * inside_box / box_vol
        w = sigma_indicator_batch(s, d, n, thresholds) / q
        partial = np.prod(_periodic_gaussian_partial(s, v_max, eps), axis=1)
        limit = np.prod(_periodic_gaussian(s, eps), axis=1)
        return np.concatenate([partial * w[:, None], (limit * w)[:, None]], axis=1)

    res = integrate(f, cfg)
    last = v_max + 1
    partial_sums = [res.estimate(v) for v in range(v_max + 1)]
    smoothed = res.estimate(last)
    deviations = []
    increments = []
    for v in range(v_max + 1):
        coef = np.zeros(v_max + 2)
        coef[v] = 1.0
        coef[last] = -1.0
        deviations.append(res.linear(coef))
        if v > 0:
            inc = np.zeros(v_max + 2)
            inc[v] = 1.0
            inc[v - 1] = -1.0
            increments.append(res.linear(inc))
    exact = count_by_sigma_sum(d, n)
    label = "midpoint" if thresholds == MIDPOINT else ("literal" if thresholds == LITERAL else str(thresholds))
    return PoissonReport(eps, v_max, partial_sums, smoothed, deviations, increments, exact, label)


# ------------------------------------------------------------------ MSD


def psi_n_hat(xi, n: int, variant: str = DERIVED) -> np.ndarray:
    """Transform of (|sigma_n|^2) * prod_l 1{sigma_l in [-l, l]^2}, d = 2.

    The derived variant uses the rule (x^2 f)^ = -f^'' / (4 pi^2) on the
    block-n interval factors; at xi = 0 it equals the exact box moment.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    d = 2
    blk = frequency_blocks(xi, n, d)
    last = blk[..., n - 1, :]
    if variant == LITERAL_VARIANT:
        out = np.ones(blk.shape[:-2])
        for l in range(1, n):
            out = out * special.sinc(math.pi * l * (blk[..., l - 1, 0] + blk[..., l - 1, 1]))
        c = math.pi * n
        bracket = c * c * (special.sinc_d2(c * last[..., 0]) + special.sinc_d2(c * last[..., 1]))
        out = out * bracket
        return out if out.ndim else float(out)
    out = np.ones(blk.shape[:-2])
    for l in range(1, n):
        out = out * np.prod(special.ft_interval(l, blk[..., l - 1, :]), axis=-1)
    f0 = special.ft_interval(n, last[..., 0])
    f1 = special.ft_interval(n, last[..., 1])
    m0 = special.ft_interval_moment2(n, last[..., 0])
    m1 = special.ft_interval_moment2(n, last[..., 1])
    out = out * (m0 * f1 + f0 * m1)
    return out if out.ndim else float(out)


def box_moment(n: int) -> Fraction:
    """int |sigma_n|^2 over prod_{l <= n} [-l, l]^2, exactly."""
    others = 1
    for l in range(1, n):
        others *= (2 * l) ** 2
    # int_{[-n,n]^2} (u^2 + v^2) = 2 * (2 n^3 / 3) * (2 n)
    return Fraction(others) * Fraction(8 * n ** 4, 3)


@dataclass(frozen=True)
class MsdReport:
    n: int
    d: int
    exact_ratio: Fraction
    numerator: int
    count: int
    continuum_ratio: Optional[EstimateWithError] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "exact_ratio": str(self.exact_ratio),
            "exact_ratio_float": float(self.exact_ratio),
            "numerator": self.numerator,
            "count": self.count,
            "continuum_ratio": None if self.continuum_ratio is None else self.continuum_ratio.to_dict(),
        }


def msd_ratio_report(n: int, d: int = 2, cfg: McConfig = McConfig(), thresholds: Thresholds = LITERAL) -> MsdReport:
    """Exact lattice MSD next to the zero-frequency continuum ratio.

    The continuum ratio is int_E |sigma_n|^2 / vol(E), estimated from one
    sample set with a delta-method error.  No relation between the two is
    asserted.
    """
    if n < 0 or n > 6:
        raise ValueError("msd_ratio_report supports 0 <= n <= 6")
    count = count_by_sigma_sum(d, n)
    num = msd_numerator_by_sigma(d, n)
    exact = Fraction(num, count)
    cont = None
    if n >= 1:
        def endpoint_sq(pts):
            blocks = pts.reshape(pts.shape[0], d, n)[:, :, n - 1]
            return [np.sum(blocks * blocks, axis=1)]

        res: McResult = integrate(_sequential_sampler(n, d, thresholds, extra=endpoint_sq), cfg)
        cont = res.ratio(1, 0)
    return MsdReport(n, d, exact, num, count, cont)
