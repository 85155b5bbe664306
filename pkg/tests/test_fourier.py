import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from sawlattice import fourier
from sawlattice.errors import BudgetExceeded
from sawlattice.fourier import (
    DERIVED,
    LITERAL_VARIANT,
    KernelId,
    MollifierConfig,
    box_moment,
    msd_ratio_report,
    poisson_recount,
    psi_hat_analytic,
    psi_hat_quadrature,
    psi_n_hat,
    support_volume,
    truncated_main_integral,
    volume_grid,
    volume_term,
)
from sawlattice.lattice_domain import MIDPOINT, pairs
from sawlattice.mc import McConfig


def test_kernel_id_validation():
    with pytest.raises(ValueError):
        KernelId(2, 2, 2, 2)
    with pytest.raises(ValueError):
        KernelId(2, 2, 0, 3)
    with pytest.raises(ValueError):
        KernelId(2, 2, 0, 1, variant="other")
    with pytest.raises(ValueError):
        MollifierConfig(0.0)


def test_zero_frequency_examples():
    assert psi_hat_analytic(KernelId(2, 2, 1, 2), np.zeros(4)) == pytest.approx(3 * math.pi, abs=1e-12)
    for n in (1, 2, 3, 4):
        expected = math.pi * 0.75 * math.prod(4 * l * l for l in range(2, n + 1))
        assert psi_hat_analytic(KernelId(n, 2, 0, 1), np.zeros(2 * n)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n,d", [(2, 2), (3, 2), (2, 3), (4, 2), (2, 1)])
def test_zero_frequency_equals_support_volume(n, d):
    for j, k in pairs(n):
        kid = KernelId(n, d, j, k)
        shell = sympy.pi ** sympy.Rational(d, 2) / sympy.gamma(sympy.Rational(d, 2) + 1)
        exact = shell * ((k - j) ** d - sympy.Rational(1, 2) ** d)
        for l in range(1, n + 1):
            if l != k:
                exact *= (2 * l) ** d
        assert abs(psi_hat_analytic(kid, np.zeros(d * n)) - float(exact)) <= 1e-9 * float(exact)
        assert support_volume(kid) == pytest.approx(float(exact), rel=1e-12)


def test_decay_at_high_frequency():
    for j, k in pairs(2):
        for variant in (DERIVED, LITERAL_VARIANT):
            kid = KernelId(2, 2, j, k, variant)
            big = np.array([0.0, 0.0, 0.0, 0.0])
            vals = []
            for t in (10.3, 100.3, 1000.3):
                big[0] = t
                big[2] = t
                vals.append(abs(psi_hat_analytic(kid, big)))
            assert vals[-1] < 1e-3 and vals[-1] <= vals[0]


def test_literal_variant_constants():
    xi = np.array([0.11, -0.07, 0.05, 0.13])
    lit = psi_hat_analytic(KernelId(2, 2, 1, 2, LITERAL_VARIANT), xi)
    der = psi_hat_analytic(KernelId(2, 2, 1, 2, DERIVED), xi)
    # printed j^2 = 1 against the exact (2j)^2 = 4 for the block-1 box
    assert der == pytest.approx(4 * lit, rel=1e-12)
    assert psi_hat_analytic(KernelId(2, 2, 0, 1, LITERAL_VARIANT), xi) == 0.0


def test_analytic_vectorized():
    kid = KernelId(2, 2, 1, 2)
    xs = np.random.default_rng(0).uniform(-1, 1, (7, 4))
    batch = psi_hat_analytic(kid, xs)
    assert batch.shape == (7,)
    assert np.allclose(batch, [psi_hat_analytic(kid, x) for x in xs], rtol=0, atol=1e-14)


def test_quadrature_zero_frequency_is_volume():
    for j, k in pairs(2):
        kid = KernelId(2, 2, j, k)
        q = psi_hat_quadrature(kid, np.zeros(4), McConfig(samples=100_000))
        assert q["real"].within(support_volume(kid))
        assert q["imag"].value == 0.0


def test_quadrature_matches_analytic_on_random_points():
    rng = np.random.default_rng(123)
    for j, k in pairs(2):
        kid = KernelId(2, 2, j, k)
        for p in range(5):
            xi = rng.uniform(-0.5, 0.5, 4)
            q = psi_hat_quadrature(kid, xi, McConfig(samples=60_000, seed=100 + p))
            assert q["real"].within(psi_hat_analytic(kid, xi))


def test_quadrature_error_scaling():
    kid = KernelId(2, 2, 0, 1)
    xi = np.array([0.1, 0.2, -0.05, 0.15])
    e1 = psi_hat_quadrature(kid, xi, McConfig(samples=20_000))["real"].std_error
    e4 = psi_hat_quadrature(kid, xi, McConfig(samples=80_000))["real"].std_error
    assert 0.375 <= e4 / e1 <= 0.625


def test_quadrature_budget():
    with pytest.raises(BudgetExceeded):
        psi_hat_quadrature(KernelId(5, 2, 0, 1), np.zeros(10))


def test_volume_term_single_annulus():
    est = volume_term(1, 2, McConfig(samples=200_000))
    assert est.within(3 * math.pi / 4)


def test_volume_term_against_grid_and_monotone():
    mc = volume_term(2, 2, McConfig(samples=400_000))
    grid = volume_grid(2, 2, nodes=48)
    assert abs(mc.value - grid.value) <= 3 * math.hypot(mc.std_error, grid.std_error)
    assert volume_term(3, 2, McConfig(samples=100_000)).value > mc.value


def test_volume_term_reproducible():
    a = volume_term(2, 2, McConfig(samples=20_000, seed=4))
    b = volume_term(2, 2, McConfig(samples=20_000, seed=4, workers=4))
    assert a == b


def test_default_delta():
    assert fourier.default_delta(2) == pytest.approx(0.25)
    assert fourier.default_delta(3) == pytest.approx(1 / 6)


def test_truncation_vanishing_domain():
    rep = truncated_main_integral(2, delta=1e-3, cfg=McConfig(samples=4_000), with_tail=False)
    assert abs(rep.inner.value) < 1e-15


def test_truncation_split_additivity():
    rep = truncated_main_integral(2, cfg=McConfig(samples=200_000))
    combined = math.sqrt(rep.inner.std_error ** 2 + rep.tail.std_error ** 2 + rep.windowed_total.std_error ** 2)
    assert abs(rep.inner.value + rep.tail.value - rep.windowed_total.value) <= 3 * combined
    assert rep.concentration() >= 0.5


@pytest.mark.xfail(
    strict=True,
    reason="measured inner / full-integral ratio at the default delta is about 0.47; see decision log",
)
def test_truncation_concentration_against_exact_total():
    rep = truncated_main_integral(2, cfg=McConfig(samples=200_000))
    assert rep.concentration_exact() >= 0.5


def test_truncation_rejects_large_n():
    with pytest.raises(BudgetExceeded):
        truncated_main_integral(4, cfg=McConfig(samples=1000))


def test_poisson_recount_documented_configuration():
    rep = poisson_recount()
    assert rep.exact_count == 12
    assert abs(rep.estimate.value - 12) <= 1.2
    vol = volume_term(2, 2, McConfig(samples=400_000), thresholds=MIDPOINT)
    z = rep.zero_frequency
    assert abs(z.value - vol.value) <= 3 * math.hypot(z.std_error, vol.std_error)


def test_poisson_partial_sums_do_not_drift_beyond_noise():
    rep = poisson_recount(v_max=8, moll=MollifierConfig(0.05))
    for v in range(rep.v_max):
        before = abs(rep.deviations[v].value)
        after = abs(rep.deviations[v + 1].value)
        assert after <= before + 3 * rep.increments[v].std_error


def test_poisson_rejects_other_sizes():
    with pytest.raises(ValueError):
        poisson_recount(n=3)


def test_psi_n_hat_zero_frequency():
    assert psi_n_hat(np.zeros(2), 1) == pytest.approx(8 / 3, rel=1e-14)
    assert psi_n_hat(np.zeros(4), 2) == pytest.approx(512 / 3, rel=1e-14)
    u, v = sympy.symbols("u v")
    for n in (1, 2, 3):
        moment = sympy.integrate(u ** 2 + v ** 2, (u, -n, n), (v, -n, n))
        for l in range(1, n):
            moment *= (2 * l) ** 2
        assert box_moment(n) == Fraction(str(moment))
        assert psi_n_hat(np.zeros(2 * n), n) == pytest.approx(float(moment), rel=1e-12)


def test_psi_n_hat_decay_and_literal():
    far = np.array([0.0, 40.3, 0.0, 40.7])
    assert abs(psi_n_hat(far, 2)) < 1e-2 * psi_n_hat(np.zeros(4), 2)
    lit0 = psi_n_hat(np.zeros(4), 2, LITERAL_VARIANT)
    # printed form: two second derivatives of sinc(pi n xi) at 0, each -(pi n)^2 / 3
    assert lit0 == pytest.approx(-2 * (2 * math.pi) ** 2 / 3, rel=1e-12)


def test_psi_n_hat_against_quadrature():
    from scipy import integrate

    xi = np.array([0.13, 0.21, -0.08, 0.05])
    n = 2
    f = lambda y, x: (x * x + y * y) * math.cos(2 * math.pi * (x * xi[1] + y * xi[3]))
    last = integrate.dblquad(f, -n, n, -n, n, epsabs=1e-11)[0]
    first = (2 * np.sinc(2 * xi[0])) * (2 * np.sinc(2 * xi[2]))
    assert psi_n_hat(xi, 2) == pytest.approx(first * last, abs=1e-8)


def test_msd_ratio_report():
    r1 = msd_ratio_report(1, cfg=McConfig(samples=20_000))
    assert r1.exact_ratio == 1
    r2 = msd_ratio_report(2, cfg=McConfig(samples=50_000))
    assert r2.exact_ratio == Fraction(8, 3)
    assert r2.continuum_ratio.std_error > 0
    assert r2.to_dict()["exact_ratio"] == "8/3"
