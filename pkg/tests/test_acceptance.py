"""One test per acceptance criterion; each records a PASS/FAIL line that is
printed in the terminal summary."""
import math
import time
from fractions import Fraction

import numpy as np
import scipy.special as sp
from scipy import integrate, optimize

from conftest import naive_counts, record_criterion
from sawlattice import special
from sawlattice.asymptotics import check_submultiplicative, fit_flory, fit_nienhuis
from sawlattice.fourier import (
    KernelId,
    poisson_recount,
    psi_hat_analytic,
    psi_hat_quadrature,
    support_volume,
    volume_term,
)
from sawlattice.lattice_domain import (
    MIDPOINT,
    StepVector,
    box_points,
    count_by_sigma_sum,
    count_by_x_sum,
    msd_numerator_by_sigma,
    pairs,
    psi_jk_batch,
    sigma_from_x,
    sigma_indicator_batch,
    x_from_sigma,
)
from sawlattice.mc import McConfig
from sawlattice.saw_enum import enumerate_saws, mean_sq_displacement


def test_criterion_01_exact_counts():
    t0 = time.perf_counter()
    res = enumerate_saws(2, 7)
    got = [res.counts[n] for n in range(1, 8)]
    oracle = [naive_counts(2, n)[0] for n in range(1, 8)]
    elapsed = time.perf_counter() - t0
    ok = got == oracle == [4, 12, 36, 100, 284, 780, 2172] and elapsed < 60
    record_criterion(1, ok, f"c_1..c_7 = {got}, naive oracle agrees, {elapsed:.1f}s")
    assert ok


def test_criterion_02_triple_method_equivalence():
    mismatches = []
    for d, top in ((2, 6), (3, 4)):
        res = enumerate_saws(d, top)
        for n in range(top + 1):
            trio = (res.counts[n], count_by_x_sum(d, n), count_by_sigma_sum(d, n))
            if len(set(trio)) != 1:
                mismatches.append((d, n, trio))
    record_criterion(2, not mismatches, f"d=2 n<=6 and d=3 n<=4, mismatches: {mismatches}")
    assert not mismatches


def test_criterion_03_transform_round_trip():
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 9))
        x = StepVector(2, n, tuple(int(v) for v in rng.integers(-3, 4, size=2 * n)))
        bad += x_from_sigma(sigma_from_x(x)) != x
    record_criterion(3, bad == 0, f"10^4 random vectors, {bad} round-trip failures")
    assert bad == 0


def test_criterion_04_psi_product_identity():
    mismatches = 0
    checked = 0
    for n in range(1, 5):
        pts = box_points(2, n, pad=1 if n < 4 else 0)
        prod = np.ones(len(pts), dtype=bool)
        for j, k in pairs(n):
            prod &= psi_jk_batch(pts, 2, n, j, k)
        mismatches += int(np.sum(prod != sigma_indicator_batch(pts, 2, n)))
        checked += len(pts)
    record_criterion(4, mismatches == 0, f"{checked} integer points for n<=4, {mismatches} mismatches")
    assert mismatches == 0


def test_criterion_05_kernel_correctness():
    rng = np.random.default_rng(5)
    worst = 0.0
    failures = 0
    zero_err = 0.0
    for j, k in pairs(2):
        kid = KernelId(2, 2, j, k)
        exact = support_volume(kid)
        zero_err = max(zero_err, abs(psi_hat_analytic(kid, np.zeros(4)) - exact))
        for p in range(20):
            xi = rng.uniform(-0.5, 0.5, 4)
            q = psi_hat_quadrature(kid, xi, McConfig(samples=100_000, seed=1000 + p))
            z = abs(q["real"].value - psi_hat_analytic(kid, xi)) / q["real"].std_error
            worst = max(worst, z)
            failures += z > 3
    ok = failures == 0 and zero_err <= 1e-9
    record_criterion(5, ok, f"60 points, max |z| = {worst:.2f}, {failures} beyond 3 sigma, zero-freq error {zero_err:.1e}")
    assert ok


def test_criterion_06_special_functions():
    errs = []
    rng = np.random.default_rng(6)
    for _ in range(20):
        l, xi = rng.uniform(0.2, 4), rng.uniform(-2, 2)
        ref = integrate.quad(lambda x: math.cos(2 * math.pi * x * xi), -l, l, epsabs=1e-13, limit=200)[0]
        errs.append(abs(special.ft_interval(l, xi) - ref))
        v = rng.normal(size=2) * 0.6
        rho = float(np.linalg.norm(v))
        f = lambda t, r: r * math.cos(2 * math.pi * r * rho * math.cos(t))
        ref = integrate.dblquad(f, 0, 1, 0, 2 * math.pi, epsabs=1e-12, epsrel=1e-12)[0]
        errs.append(abs(special.ft_ball(2, v) - ref))
    transform_ok = max(errs) <= 1e-8
    z1 = optimize.brentq(sp.j1, 3, 4, xtol=1e-15)
    z2 = optimize.brentq(sp.j1, 6.5, 7.5, xtol=1e-15)
    zero_err = max(abs(special.bessel_zero(1, 1) - z1), abs(special.bessel_zero(1, 2) - z2))
    zeros_ok = zero_err <= 1e-8 and abs(z1 - 3.83171) < 1e-5 and abs(z2 - 7.01559) < 1e-5
    xs = np.linspace(0, 5, 201)
    table = special.bessel_zero_table(1, 10_000)
    sinc_err = np.max(np.abs(special.sinc_product(xs, 10_000) - special.sinc(2 * math.pi * xs)))
    direct = np.where(xs > 0, 2 * sp.j1(xs) / np.where(xs > 0, xs, 1), 1.0)
    bes_err = np.max(np.abs(special.bessel_product(xs, 10_000, table) - direct))
    ok = transform_ok and zeros_ok and sinc_err <= 1e-3 and bes_err <= 1e-3
    record_criterion(
        6, ok,
        f"transform err {max(errs):.1e}, zero err {zero_err:.1e}, product errs {sinc_err:.1e}/{bes_err:.1e}",
    )
    assert ok


def test_criterion_07_poisson_recount():
    rep = poisson_recount()  # eps = 0.08, V_max = 6, 4e5 mixture-importance nodes
    est = rep.estimate
    within = abs(est.value - 12) <= 1.2
    vol = volume_term(2, 2, McConfig(samples=400_000), thresholds=MIDPOINT)
    z0 = rep.zero_frequency
    zero_ok = abs(z0.value - vol.value) <= 3 * math.hypot(z0.std_error, vol.std_error)
    ok = within and zero_ok
    record_criterion(
        7, ok,
        f"S_6 = {est.value:.3f} +- {est.std_error:.3f} (target 12), "
        f"v=0 term {z0.value:.3f} +- {z0.std_error:.3f} vs volume {vol.value:.3f} +- {vol.std_error:.3f}",
    )
    assert ok


def test_criterion_08_mc_hygiene():
    e1 = volume_term(2, 2, McConfig(samples=50_000)).std_error
    e4 = volume_term(2, 2, McConfig(samples=200_000)).std_error
    ratio = e4 / e1
    a = volume_term(2, 2, McConfig(samples=50_000, seed=77, workers=1))
    b = volume_term(2, 2, McConfig(samples=50_000, seed=77, workers=4))
    ok = 0.375 <= ratio <= 0.625 and a == b
    record_criterion(8, ok, f"std_error ratio at 4x samples {ratio:.3f}, worker-independent: {a == b}")
    assert ok


def test_criterion_09_empirical_asymptotics():
    res = enumerate_saws(2, 10)
    sub_ok, bad = check_submultiplicative(res.counts)
    ratios = [res.counts[n + 2] / res.counts[n] for n in range(2, 9)]
    kesten_ok = all(a > b for a, b in zip(ratios, ratios[1:])) and all(6.9 < r < 8.5 for r in ratios)
    mu = fit_nienhuis(res.counts, (4, 10), free_exponent=True).params["mu"]
    msd = {n: res.sq_end_sums[n] / res.counts[n] for n in range(1, 11)}
    flory = fit_flory(msd, (4, 10))
    slope = flory.params["slope"]
    ok = sub_ok and kesten_ok and 2 < mu < 3 and 1.3 <= slope <= 1.6 and flory.checks["msd_over_n2_decreasing"]
    record_criterion(
        9, ok,
        f"submultiplicative {sub_ok}, Kesten {ratios[0]:.3f}..{ratios[-1]:.3f} decreasing {kesten_ok}, "
        f"mu_hat {mu:.4f}, Flory slope {slope:.4f}",
    )
    assert ok


def test_criterion_10_msd_cross_check():
    res = enumerate_saws(2, 6)
    diffs = [n for n in range(7) if msd_numerator_by_sigma(2, n) != res.sq_end_sums[n]]
    ratio = mean_sq_displacement(res, 2)
    sigma_ratio = Fraction(msd_numerator_by_sigma(2, 2), count_by_sigma_sum(2, 2))
    ok = not diffs and ratio == sigma_ratio == Fraction(8, 3)
    record_criterion(10, ok, f"n<=6 numerators agree (mismatch at {diffs}), n=2 ratio {sigma_ratio}")
    assert ok
