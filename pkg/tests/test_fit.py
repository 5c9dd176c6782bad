import math
import warnings

import numpy as np
import pytest

from copula_ccvar import fit as fit_mod
from copula_ccvar.errors import BoundaryWarning, DomainError
from copula_ccvar.fit import (
    CopulaFit,
    FitMethod,
    average_kendall_tau,
    copula_loglik,
    empirical_copula,
    fit_copula_mle,
    gof_tail_distance,
    pseudo_observations,
    tail_lattice,
)
from copula_ccvar.generators import ARCHIMEDEAN_FAMILIES, CopulaSpec, tau_inverse
from copula_ccvar.sampling import UniformPanel, sample_copula

TRUE_THETA = {"clayton": 2.0, "frank": 5.0, "gumbel": 1.57, "joe": 2.0, "amh": 0.6}


def test_pseudo_observation_example():
    u = pseudo_observations(np.array([[3.1], [1.2], [7.5]]), min_rows=1).data
    np.testing.assert_allclose(u.ravel(), [0.5, 0.25, 0.75], rtol=1e-15)


def test_pseudo_observations_are_rank_permutations():
    x = np.random.default_rng(0).normal(size=(200, 3))
    u = pseudo_observations(x).data
    for j in range(3):
        np.testing.assert_allclose(np.sort(u[:, j]), np.arange(1, 201) / 201)
    # a monotone transform of a column changes nothing
    y = x.copy()
    y[:, 1] = np.exp(3 * y[:, 1]) + 5
    assert np.array_equal(pseudo_observations(y).data, u)


def test_pseudo_observations_ties_and_errors():
    u = pseudo_observations(np.array([[1.0], [2.0], [2.0], [3.0]]), min_rows=1).data.ravel()
    np.testing.assert_allclose(u, [0.2, 0.5, 0.5, 0.8])
    with pytest.raises(DomainError):
        pseudo_observations([np.arange(60.0), np.arange(61.0)])
    with pytest.raises(DomainError):
        pseudo_observations(np.zeros((10, 2)))
    panel = pseudo_observations([np.arange(60.0), np.arange(60.0)[::-1]])
    assert panel.dim == 2 and average_kendall_tau(panel) == pytest.approx(-1.0)


@pytest.mark.parametrize("family", ARCHIMEDEAN_FAMILIES, ids=str)
def test_mle_recovers_theta(family):
    spec = CopulaSpec(family, TRUE_THETA[family.value], 7)
    panel = sample_copula(spec, 5000, seed=21)
    fit = fit_copula_mle(panel, family)
    assert fit.spec.family is spec.family and fit.spec.dim == 7
    assert fit.stderr > 0
    assert abs(fit.theta - spec.theta) < 3 * fit.stderr
    # the optimum is at least as good as the tau-inverse start
    assert fit.loglik >= fit.start_loglik
    assert fit.loglik == pytest.approx(copula_loglik(fit.spec, panel), rel=1e-12)


def test_gumbel_standard_error_magnitude():
    panel = sample_copula(CopulaSpec("gumbel", 1.57, 7), 1360, seed=4)
    fit = fit_copula_mle(panel, "gumbel")
    assert fit.theta == pytest.approx(1.57, abs=0.05)
    assert 0.01 <= fit.stderr <= 0.05


@pytest.mark.parametrize("seed", range(4))
def test_independence_panel_fitted_as_gumbel(seed):
    panel = sample_copula(CopulaSpec("independence", dim=3), 5000, seed=seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = fit_copula_mle(panel, "gumbel")
    hit = any(issubclass(w.category, BoundaryWarning) for w in caught)
    assert abs(fit.theta - 1.0) < 3 * fit.stderr
    # Gumbel cannot express negative dependence, so a negative sample tau pins theta at 1
    if average_kendall_tau(panel) < 0:
        assert hit and fit.theta == pytest.approx(1.0, abs=1e-6)
    assert hit == (fit.theta - 1.0 < 1e-6)


def test_independence_family_cannot_be_fitted():
    with pytest.raises(DomainError):
        fit_copula_mle(sample_copula(CopulaSpec("independence"), 100, seed=0), "independence")


def test_fit_is_deterministic_and_method_is_recorded():
    panel = pseudo_observations(sample_copula(CopulaSpec("joe", 2.0, 3), 2000, seed=5).data)
    a = fit_copula_mle(panel, "joe", method="PML")
    b = fit_copula_mle(panel, "joe", method=FitMethod.PML)
    assert a == b and a.method is FitMethod.PML


def test_copula_fit_kv_round_trip():
    panel = sample_copula(CopulaSpec("frank", 5.0, 3), 2000, seed=6)
    fit = fit_copula_mle(panel, "frank")
    back = CopulaFit.from_kv(fit.to_kv(prefix="c."), prefix="c.")
    assert back.spec == fit.spec and back.stderr == fit.stderr and back.loglik == fit.loglik


def test_tail_lattice_shape():
    lat = tail_lattice(2, 0.8)
    assert lat.shape == (25, 2) and lat.min() == 0.8 and lat.max() == 1.0
    big = tail_lattice(7, 0.9)
    assert big.shape == (10_000, 7)
    assert np.array_equal(big, tail_lattice(7, 0.9))
    assert len({tuple(r) for r in big}) == 10_000
    with pytest.raises(DomainError):
        tail_lattice(2, 1.0)


def test_empirical_copula_counts():
    panel = UniformPanel(np.array([[0.1, 0.2], [0.5, 0.5], [0.9, 0.3]]))
    np.testing.assert_allclose(empirical_copula(panel, [[0.5, 0.5], [1.0, 1.0], [0.05, 1.0]]), [2 / 3, 1.0, 0.0])


def test_self_distance_is_zero(monkeypatch):
    spec = CopulaSpec("gumbel", 2.0, 3)
    panel = sample_copula(spec, 100, seed=0)
    from copula_ccvar.generators import copula_cdf

    monkeypatch.setattr(fit_mod, "empirical_copula", lambda p, w: np.asarray(copula_cdf(spec, w)))
    assert gof_tail_distance(panel, spec, 0.8) == 0.0


def test_tail_distance_shrinks_with_n():
    spec = CopulaSpec("clayton", 2.0, 3)
    dist = []
    # lattice errors are strongly correlated, so one panel is roughly one draw; average a few
    for n in (10 ** 3, 10 ** 4, 10 ** 5):
        vals = []
        for seed in range(5):
            panel = sample_copula(spec, n, seed=[n, seed])
            vals.append(gof_tail_distance(panel, fit_copula_mle(panel, "clayton").spec, 0.8))
        dist.append(np.mean(vals))
    assert dist[0] > dist[1] > dist[2]
    assert dist[0] / dist[2] > 3


def test_misspecified_family_has_larger_distance():
    panel = sample_copula(CopulaSpec("clayton", 2.0, 3), 10 ** 5, seed=8)
    good = gof_tail_distance(panel, fit_copula_mle(panel, "clayton").spec, 0.9)
    bad = gof_tail_distance(panel, fit_copula_mle(panel, "frank").spec, 0.9)
    assert bad > good


@pytest.mark.slow
def test_correct_family_usually_closest():
    wins = 0
    for fam in ARCHIMEDEAN_FAMILIES:
        tau = 0.25 if fam.value == "amh" else 0.5
        spec = CopulaSpec(fam, tau_inverse(fam, tau), 3)
        panel = sample_copula(spec, 10 ** 5, seed=30)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            dist = {g: gof_tail_distance(panel, fit_copula_mle(panel, g).spec, 0.8) for g in ARCHIMEDEAN_FAMILIES}
        wins += min(dist, key=dist.get) is fam
    assert wins >= 4
