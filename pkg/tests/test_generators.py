import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from copula_ccvar.errors import DomainError, ParameterError, UnattainableTauError
from copula_ccvar.generators import (
    ARCHIMEDEAN_FAMILIES,
    CopulaSpec,
    Family,
    copula_cdf,
    copula_density,
    f_aux,
    f_aux_mc,
    kendall_tau,
    phi,
    phi_inv,
    phi_prime,
    tail_dependence,
    tau_inverse,
    tau_range,
)
from copula_ccvar.sampling import sample_copula

from conftest import THETA_GRID, all_specs

SPECS = all_specs()


def spec_id(s):
    return str(s)


# mpmath versions of psi = phi^{-1}, written from the generator definitions
def mp_psi(spec):
    th = None if spec.theta is None else mp.mpf(spec.theta)
    fam = spec.family
    if fam is Family.INDEPENDENCE:
        return lambda s: mp.e ** (-s)
    if fam is Family.CLAYTON:
        return lambda s: (1 + s) ** (-1 / th)
    if fam is Family.FRANK:
        return lambda s: -mp.log(1 - (1 - mp.e ** (-th)) * mp.e ** (-s)) / th
    if fam is Family.GUMBEL:
        return lambda s: mp.e ** (-(s ** (1 / th)))
    if fam is Family.JOE:
        return lambda s: 1 - (1 - mp.e ** (-s)) ** (1 / th)
    return lambda s: (1 - th) / (mp.e ** s - th)


# ------------------------------------------------------------- examples


def test_phi_examples():
    assert phi(CopulaSpec("clayton", 2.0), 0.5) == pytest.approx(3.0, rel=1e-15)
    assert phi(CopulaSpec("independence"), 0.5) == pytest.approx(0.6931472, abs=1e-7)
    for spec in SPECS:
        assert phi(spec, 1.0) == 0.0


def test_phi_prime_examples():
    assert phi_prime(CopulaSpec("independence"), 0.5) == pytest.approx(-2.0, rel=1e-15)
    assert phi_prime(CopulaSpec("clayton", 1.0), 0.5) == pytest.approx(-4.0, rel=1e-15)
    assert phi_prime(CopulaSpec("gumbel", 1.0), math.exp(-1)) == pytest.approx(-math.e, rel=1e-14)


def test_phi_inv_examples():
    for spec in SPECS:
        assert phi_inv(spec, 0.0) == 1.0
    assert phi_inv(CopulaSpec("independence"), math.log(2)) == pytest.approx(0.5, rel=1e-15)
    assert phi_inv(CopulaSpec("clayton", 2.0), 3.0) == pytest.approx(0.5, rel=1e-15)


def test_domain_errors():
    spec = CopulaSpec("clayton", 1.0)
    with pytest.raises(DomainError):
        phi(spec, 0.0)
    with pytest.raises(DomainError):
        phi(spec, 1.5)
    with pytest.raises(DomainError):
        phi_inv(spec, -1.0)
    with pytest.raises(DomainError):
        phi_prime(spec, 1.0)


@pytest.mark.parametrize("family,theta", [("clayton", 0.0), ("clayton", -0.5), ("frank", -1.0), ("gumbel", 0.99),
                                          ("joe", 0.5), ("amh", 1.0), ("amh", -0.2), ("clayton", math.nan)])
def test_parameter_ranges(family, theta):
    with pytest.raises(ParameterError):
        CopulaSpec(family, theta)


def test_boundary_parameters_admitted():
    CopulaSpec("gumbel", 1.0)
    CopulaSpec("joe", 1.0)
    CopulaSpec("amh", 0.0)
    assert CopulaSpec("independence", 3.0).theta is None


def test_family_aliases():
    assert Family.parse("Ali-Mikhail-Haq") is Family.AMH
    assert Family.parse("indep") is Family.INDEPENDENCE


# ------------------------------------------------------------- round trip and monotonicity


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_round_trip_grid(spec):
    t = np.concatenate([np.geomspace(1e-6, 0.5, 40), 1 - np.geomspace(1e-6, 0.5, 40)])
    back = phi_inv(spec, phi(spec, t))
    np.testing.assert_allclose(back, t, rtol=1e-12, atol=0)


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_phi_decreasing_convex(spec):
    t = np.linspace(0.01, 0.99, 99)
    p = phi(spec, t)
    assert np.all(np.diff(p) < 0)
    dp = phi_prime(spec, t)
    assert np.all(dp < 0)
    assert np.all(np.diff(dp) > -1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_phi_prime_matches_mpmath(spec):
    f = mp_psi(spec)
    for t in (0.05, 0.3, 0.7, 0.95):
        with mp.workdps(30):
            # phi' = 1 / psi'(phi(t))
            ref = 1 / mp.diff(f, mp.mpf(float(phi(spec, t))))
        assert phi_prime(spec, t) == pytest.approx(float(ref), rel=1e-9)


# ------------------------------------------------------------- f_i


def test_f_aux_examples():
    assert f_aux(CopulaSpec("independence", dim=4), 2, 0.3) == pytest.approx(-0.3, rel=1e-15)
    assert f_aux(CopulaSpec("clayton", 1.0), 0, 0.5) == pytest.approx(-0.25, rel=1e-14)
    assert f_aux(CopulaSpec("clayton", 0.5), 1, 0.5) == pytest.approx(1.5, rel=1e-13)


def test_f_aux_index_range():
    with pytest.raises(DomainError):
        f_aux(CopulaSpec("clayton", 1.0, 3), 3, 0.5)


@pytest.mark.parametrize("spec", all_specs(dims=(6,)), ids=spec_id)
def test_f_aux_matches_mpmath_derivatives(spec):
    f = mp_psi(spec)
    for t in (0.1, 0.5, 0.9):
        s = mp.mpf(float(phi(spec, t)))
        for i in range(spec.dim):
            with mp.workdps(40):
                ref = float(mp.diff(f, s, i + 1))
            got = f_aux(spec, i, t)
            assert got == pytest.approx(ref, rel=1e-9), (i, t)


@pytest.mark.parametrize("spec", all_specs(dims=(4,)), ids=spec_id)
def test_f_aux_finite_differences(spec):
    # centred differences of psi at s=phi(t): a float-only cross-check.
    # Strong dependence pushes phi(t) towards 0 for fixed t, so fix s instead.
    s = 0.5
    t = float(phi_inv(spec, s))
    for i in range(3):
        k = i + 1
        h = 1e-3 * max(s, 0.1) * (4 if k > 2 else 1)
        grid = s + h * (np.arange(k + 1) - k / 2)
        vals = np.asarray(phi_inv(spec, grid), dtype=float)
        weights = [(-1) ** (k - j) * math.comb(k, j) for j in range(k + 1)]
        fd = float(np.dot(weights, vals)) / h ** k
        assert f_aux(spec, i, t) == pytest.approx(fd, rel=1e-5 if k < 3 else 5e-4)


@pytest.mark.parametrize("spec", all_specs(dims=(7,)), ids=spec_id)
def test_sign_alternation(spec):
    t = np.linspace(0.02, 0.98, 25)
    for i in range(spec.dim):
        assert np.all((-1) ** (i + 1) * f_aux(spec, i, t) > 0)


def test_f_aux_mc_examples():
    indep = CopulaSpec("independence")
    assert f_aux_mc(indep, 1, math.log(2), m=5, seed=0) == 0.5
    val, se = f_aux_mc(CopulaSpec("clayton", 1.0), 0, 1.0, m=10 ** 6, seed=1, return_stderr=True)
    assert abs(val - (-0.25)) < 3 * se
    spec = CopulaSpec("gumbel", 2.0)
    assert f_aux_mc(spec, 2, 0.4, m=1, seed=9) == f_aux_mc(spec, 2, 0.4, m=1, seed=9)


@pytest.mark.parametrize("family", ARCHIMEDEAN_FAMILIES, ids=str)
def test_f_aux_mc_agrees_with_closed_form(family):
    spec = CopulaSpec(family, THETA_GRID[family][1], 4)
    t = 0.4
    s = float(phi(spec, t))
    for i in range(3):
        val, se = f_aux_mc(spec, i, s, m=200_000, seed=i, return_stderr=True)
        assert abs(val - f_aux(spec, i, t)) < 4 * se


# ------------------------------------------------------------- tau and tail dependence


def test_tau_examples():
    assert kendall_tau(CopulaSpec("clayton", 2.0)) == pytest.approx(0.5, abs=1e-12)
    assert kendall_tau(CopulaSpec("gumbel", 2.0)) == pytest.approx(0.5, abs=1e-12)
    assert kendall_tau(CopulaSpec("frank", 1.0)) == pytest.approx(0.11002, abs=1e-5)
    assert kendall_tau(CopulaSpec("independence")) == 0.0


@pytest.mark.parametrize("theta", [1e-3, 0.05, 1.0, 7.0, 40.0])
def test_frank_tau_against_mpmath_debye(theta):
    d1 = mp.quad(lambda t: t / mp.expm1(t), [0, theta]) / theta
    ref = float(1 - 4 / mp.mpf(theta) * (1 - d1))
    assert kendall_tau(CopulaSpec("frank", theta)) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("theta", [1.0, 1.5, 2.0, 5.0, 30.0])
def test_joe_tau_against_digamma_form(theta):
    # the closed form has a removable singularity at theta=2; step off it slightly
    with mp.workdps(30):
        th = mp.mpf(theta)
        if theta == 2.0:
            th = th + mp.mpf("1e-12")
        ref = float(1 + 2 / (2 - th) * (mp.digamma(2) - mp.digamma(2 / th + 1)))
    assert kendall_tau(CopulaSpec("joe", theta)) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("theta", [0.0, 1e-3, 0.05, 0.5, 0.99])
def test_amh_tau_against_mpmath(theta):
    with mp.workdps(40):
        th = mp.mpf(theta)
        if theta == 0:
            ref = 0.0
        else:
            ref = float(1 - 2 * ((1 - th) ** 2 * mp.log(1 - th) + th) / (3 * th ** 2))
    assert kendall_tau(CopulaSpec("amh", theta)) == pytest.approx(ref, rel=1e-9, abs=1e-15)


def test_tau_inverse_examples():
    assert tau_inverse("clayton", 0.5) == pytest.approx(2.0, rel=1e-14)
    assert tau_inverse("gumbel", 0.5) == pytest.approx(2.0, rel=1e-14)
    # the 5-digit tau is itself rounded, so the exact tau is used for the 1e-6 check
    assert tau_inverse("frank", kendall_tau(CopulaSpec("frank", 1.0))) == pytest.approx(1.0, abs=1e-6)
    assert tau_inverse("frank", 0.11002) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("family", ARCHIMEDEAN_FAMILIES, ids=str)
def test_tau_inverse_round_trip(family):
    lo, hi, _ = tau_range(family)
    for tau in np.linspace(lo + 1e-3, min(hi, 0.95) - 1e-3, 12):
        th = tau_inverse(family, tau)
        assert kendall_tau(CopulaSpec(family, th)) == pytest.approx(tau, abs=1e-8)


def test_tau_inverse_unattainable():
    with pytest.raises(UnattainableTauError, match="1/3|0.333"):
        tau_inverse("amh", 0.5)
    with pytest.raises(UnattainableTauError):
        tau_inverse("clayton", -0.2)


def test_tail_dependence_examples():
    c = tail_dependence(CopulaSpec("clayton", 1.0))
    assert (c.lambda_lower, c.lambda_upper) == (pytest.approx(0.5, abs=1e-12), 0.0)
    g = tail_dependence(CopulaSpec("gumbel", 2.0))
    assert g.lambda_lower == 0.0
    assert g.lambda_upper == pytest.approx(2 - math.sqrt(2), abs=1e-12)
    for th in (0.5, 10.0):
        f = tail_dependence(CopulaSpec("frank", th))
        assert (f.lambda_lower, f.lambda_upper) == (0.0, 0.0)
    assert tail_dependence(CopulaSpec("amh", 0.5)).lambda_upper == 0.0


@pytest.mark.slow
@pytest.mark.parametrize("family", ARCHIMEDEAN_FAMILIES, ids=str)
def test_tau_matches_monte_carlo(family):
    spec = CopulaSpec(family, THETA_GRID[family][1], 2)
    u = sample_copula(spec, 10 ** 6, seed=11).data
    c = np.asarray(copula_cdf(spec, u))
    est = 4 * c.mean() - 1
    se = 4 * c.std(ddof=1) / math.sqrt(c.size)
    assert abs(est - kendall_tau(spec)) < 3 * se


# ------------------------------------------------------------- cdf and density


def test_cdf_examples():
    assert copula_cdf(CopulaSpec("clayton", 1.0), [0.5, 0.5]) == pytest.approx(1 / 3, rel=1e-14)
    assert copula_cdf(CopulaSpec("independence", dim=3), [0.5, 0.4, 0.5]) == pytest.approx(0.1, rel=1e-14)
    assert copula_cdf(CopulaSpec("clayton", 2.0), [0.5, 0.5]) == pytest.approx(7 ** -0.5, rel=1e-14)


@pytest.mark.parametrize("spec", all_specs(dims=(3,)), ids=spec_id)
def test_cdf_uniform_margins_and_zero(spec):
    for v in (0.01, 0.3, 0.77):
        assert copula_cdf(spec, [1.0, 1.0, v]) == pytest.approx(v, rel=1e-12)
        assert copula_cdf(spec, [v, 0.0, 0.5]) == 0.0


def test_cdf_dimension_check():
    with pytest.raises(DomainError):
        copula_cdf(CopulaSpec("clayton", 1.0, 3), [0.5, 0.5])


@pytest.mark.parametrize("family,theta,closed", [
    ("clayton", 2.0, lambda u, v, t: (u ** -t + v ** -t - 1) ** (-1 / t)),
    ("frank", 3.0, lambda u, v, t: -math.log1p(math.expm1(-t * u) * math.expm1(-t * v) / math.expm1(-t)) / t),
    ("gumbel", 1.7, lambda u, v, t: math.exp(-(((-math.log(u)) ** t + (-math.log(v)) ** t) ** (1 / t)))),
    ("joe", 2.2, lambda u, v, t: 1 - ((1 - u) ** t + (1 - v) ** t - (1 - u) ** t * (1 - v) ** t) ** (1 / t)),
    ("amh", 0.6, lambda u, v, t: u * v / (1 - t * (1 - u) * (1 - v))),
])
def test_cdf_table_closed_forms(family, theta, closed):
    spec = CopulaSpec(family, theta)
    for u, v in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.3), (0.97, 0.99)]:
        assert copula_cdf(spec, [u, v]) == pytest.approx(closed(u, v, theta), rel=1e-12)


def test_density_examples():
    assert copula_density(CopulaSpec("independence", dim=4), [0.2, 0.4, 0.6, 0.9]) == pytest.approx(1.0, rel=1e-14)
    assert copula_density(CopulaSpec("clayton", 1.0), [0.5, 0.5]) == pytest.approx(32 / 27, rel=1e-13)


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_density_matches_mixed_difference(spec):
    h = 1e-4
    for u, v in [(0.2, 0.3), (0.5, 0.5), (0.8, 0.6), (0.9, 0.95)]:
        c = lambda a, b: float(copula_cdf(spec, [a, b]))  # noqa: E731
        mixed = (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h)) / (4 * h * h)
        assert copula_density(spec, [u, v]) == pytest.approx(mixed, rel=1e-4, abs=1e-6)


@pytest.mark.parametrize("spec", [CopulaSpec("clayton", 0.7), CopulaSpec("frank", 4.0), CopulaSpec("gumbel", 1.5),
                                  CopulaSpec("joe", 1.6), CopulaSpec("amh", 0.7)], ids=spec_id)
def test_density_integrates_to_one(spec):
    from scipy import integrate

    val, err = integrate.dblquad(lambda v, u: float(copula_density(spec, [u, v])), 0, 1, 0, 1,
                                 epsabs=1e-9, epsrel=1e-9)
    assert val == pytest.approx(1.0, abs=1e-6)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_cdf_frechet_bounds(u, v, w):
    for spec in (CopulaSpec("clayton", 3.0, 3), CopulaSpec("joe", 2.0, 3), CopulaSpec("amh", 0.8, 3)):
        c = copula_cdf(spec, [u, v, w])
        assert max(u + v + w - 2, 0) - 1e-15 <= c <= min(u, v, w) + 1e-15
