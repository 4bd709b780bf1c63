"""Order statistics: Monte Carlo, moment quadrature, error curves and rescaled laws."""

import math
import warnings

import numpy as np
import pytest
from scipy import stats

from subfpt import asymptotics as A
from subfpt import extreme as E
from subfpt import models as M
from subfpt.errors import DivergenceWarning, DomainError
from subfpt.special_functions import Accuracy

HALF = M.HalfLine(1.0, 1.0)
SUB = A.lift_short_time(0.5, M.short_time_constants(HALF))
T_SCALE = SUB.C ** (1 / SUB.beta)


@pytest.fixture(scope="module")
def table():
    return M.subdiffusive_table(HALF, 0.5, f_min=1e-16)


def closed_pair():
    # scalar callables on the closed-form law
    sf = lambda t: float(M.survival_halfline_closed_form(t))
    cdf = lambda t: float(M.cdf_halfline_closed_form(t))
    return sf, cdf


def quad_pair():
    return E._model_callables(HALF, 0.5, Accuracy())


def order_stat_cdf(t, N, k):
    if t <= 0.0:
        return 0.0
    f, s = M.cdf_sf_subdiffusive(HALF, 0.5, t)
    return -math.expm1(E._log_tail_prob(f, s, N, k))


def chi2_pvalue(samples, edges, cdf):
    """Pearson test on fixed edges, merging bins with expected count below 5."""
    probs = np.diff([0.0] + [cdf(e) for e in edges] + [1.0])
    counts = np.histogram(samples, np.concatenate(([-np.inf], edges, [np.inf])))[0]
    exp = probs * samples.size
    obs_m, exp_m, o, e = [], [], 0.0, 0.0
    for ob, ex in zip(counts, exp):
        o += ob
        e += ex
        if e >= 5.0:
            obs_m.append(o)
            exp_m.append(e)
            o = e = 0.0
    obs_m[-1] += o
    exp_m[-1] += e
    obs_m, exp_m = np.array(obs_m), np.array(exp_m)
    chi2 = float(np.sum((obs_m - exp_m) ** 2 / exp_m))
    return stats.chi2.sf(chi2, obs_m.size - 1)


# -- Monte Carlo ------------------------------------------------------------

def test_single_draw_matches_law():
    s = E.mc_order_statistics(HALF, 0.5, 1, 1, 100_000, seed=1)
    assert stats.kstest(s.values, M.cdf_halfline_closed_form).statistic < 0.005


def test_fastest_of_100_matches_quadrature():
    s = E.mc_order_statistics(HALF, 0.5, 100, 1, 20_000, seed=2, method="direct")
    sf, cdf = closed_pair()
    exact = E.mean_fastest_quadrature(sf, 100, cdf=cdf, t_scale=T_SCALE)
    se = s.values.std(ddof=1) / math.sqrt(s.values.size)
    assert abs(s.values.mean() - exact) < 3 * se


@pytest.mark.parametrize("method", ["direct", "inverse_cdf"])
def test_joint_ordering(method, table):
    s = E.mc_order_statistics(HALF, 0.5, 50, 3, 3000, seed=3, method=method, table=table)
    assert s.joint.shape == (3000, 3)
    assert np.all(np.diff(s.joint, axis=1) >= 0)
    assert np.array_equal(s.values, s.joint[:, -1])


@pytest.mark.parametrize("method", ["direct", "inverse_cdf"])
def test_reproducible_across_threads(method, table):
    a = E.mc_order_statistics(HALF, 0.5, 30, 2, 3500, seed=7, method=method, threads=1, table=table)
    b = E.mc_order_statistics(HALF, 0.5, 30, 2, 3500, seed=7, method=method, threads=4, table=table)
    c = E.mc_order_statistics(HALF, 0.5, 30, 2, 3500, seed=8, method=method, threads=1, table=table)
    assert np.array_equal(a.joint, b.joint)
    assert not np.array_equal(a.joint, c.joint)


def test_direct_and_inverse_agree(table):
    a = E.mc_order_statistics(HALF, 0.5, 200, 2, 20_000, seed=4, method="direct")
    b = E.mc_order_statistics(HALF, 0.5, 200, 2, 20_000, seed=5, method="inverse_cdf", table=table)
    assert stats.ks_2samp(a.values, b.values).pvalue > 0.001


def test_other_model_direct():
    m = M.DriftInterval(0.3, 1.0, 1.0, 1.0)
    s = E.mc_order_statistics(m, 0.8, 20, 1, 2000, seed=6, method="direct")
    sf = lambda t: M.survival_subdiffusive(m, 0.8, t)
    exact = E.mean_fastest_quadrature(sf, 20, tail_exponent=math.inf, t_scale=0.1)
    se = s.values.std(ddof=1) / math.sqrt(s.values.size)
    assert abs(s.values.mean() - exact) < 4 * se


def test_mc_validation():
    with pytest.raises(DomainError):
        E.mc_order_statistics(HALF, 0.5, 5, 6, 10, seed=0)
    with pytest.raises(DomainError):
        E.mc_order_statistics(HALF, 0.5, 5, 1, 0, seed=0)
    with pytest.raises(DomainError):
        E.mc_order_statistics(HALF, 0.5, 5, 1, 10, seed=0, method="sorted")
    with pytest.raises(DomainError):
        E.OrderStatSample(k=1, N=2, values=np.array([1.0, -1.0]), seed=0)
    with pytest.raises(DomainError):
        E.ErrorReport([1, 2], "leading", [0.1])


# -- quadrature -------------------------------------------------------------

def test_exponential_minimum():
    sf = lambda t: math.exp(-t)
    assert E.mean_fastest_quadrature(sf, 3, tail_exponent=math.inf) == pytest.approx(1 / 3, rel=1e-10)
    assert E.mean_fastest_quadrature(sf, 3, m=2.0, tail_exponent=math.inf) == pytest.approx(2 / 9, rel=1e-10)
    # second fastest of 3 exponentials: 1/3 + 1/2
    assert E.mean_order_statistic_quadrature(sf, 3, 2, tail_exponent=math.inf) == pytest.approx(
        5 / 6, rel=1e-10)


def test_power_tail_remainder():
    # S(t) = (1 + t)^-1: E[T_N] = 1/(N - 1)
    sf = lambda t: 1.0 / (1.0 + t)
    cdf = lambda t: t / (1.0 + t)
    for N in (2, 3, 10):
        assert E.mean_fastest_quadrature(sf, N, cdf=cdf) == pytest.approx(1 / (N - 1), rel=1e-9)


def test_self_convergence():
    sf, cdf = closed_pair()
    a = E.mean_fastest_quadrature(sf, 1000, acc=Accuracy(rel_tol=1e-10), cdf=cdf, t_scale=T_SCALE)
    b = E.mean_fastest_quadrature(sf, 1000, acc=Accuracy(rel_tol=5e-11), cdf=cdf, t_scale=T_SCALE)
    assert math.isfinite(a) and abs(a / b - 1) < 1e-8


def test_divergence_flag():
    sf, cdf = closed_pair()
    with pytest.warns(DivergenceWarning):
        assert E.mean_fastest_quadrature(sf, 2, cdf=cdf, t_scale=T_SCALE) == math.inf
    with warnings.catch_warnings():
        warnings.simplefilter("error", DivergenceWarning)
        assert math.isfinite(E.mean_fastest_quadrature(sf, 10, cdf=cdf, t_scale=T_SCALE))


@pytest.mark.parametrize("N", [100, 1000])
def test_oracle_equivalence(N):
    sf, cdf = closed_pair()
    qs, qc = quad_pair()
    a = E.mean_fastest_quadrature(sf, N, cdf=cdf, t_scale=T_SCALE)
    b = E.mean_fastest_quadrature(qs, N, cdf=qc, t_scale=T_SCALE)
    assert a == pytest.approx(b, rel=1e-6)


def test_quadrature_validation():
    sf = lambda t: math.exp(-t)
    with pytest.raises(DomainError):
        E.mean_fastest_quadrature(sf, 2.5)
    with pytest.raises(DomainError):
        E.mean_order_statistic_quadrature(sf, 2, 3)
    with pytest.raises(DomainError):
        E.mean_fastest_quadrature(sf, 2, m=0.0)


# -- error curves -----------------------------------------------------------

def test_error_curve_higher_order_wins_at_1e5():
    reps = {r.approx_name: r for r in E.relative_error_curve(HALF, 0.5, [10 ** 5])}
    lead = reps["leading"].relative_errors[0]
    assert reps["lambert"].relative_errors[0] < lead
    assert reps["loglog"].relative_errors[0] < lead


def test_error_curve_alpha_one_decays():
    grid = [10 ** j for j in range(2, 9)]
    for rep in E.relative_error_curve(HALF, 1.0, grid):
        errs = np.array(rep.relative_errors)
        assert np.all(np.diff(errs[1:]) < 0), rep.approx_name
    # the leading term at alpha = 1 is L^2 / (4 K ln N)
    rep = E.relative_error_curve(HALF, 1.0, [10 ** 4], ("leading",))[0]
    assert rep.approx[0] == pytest.approx(0.25 / math.log(1e4), rel=1e-14)


def test_error_curve_unknown_name():
    with pytest.raises(DomainError):
        E.relative_error_curve(HALF, 1.0, [100], ("cubic",))


# -- rescaled density -------------------------------------------------------

def test_rescaled_density_sup_norm_decreases():
    sf, cdf = closed_pair()
    x = np.linspace(-6, 3, 91)
    sups = []
    for N in (100, 1000, 100_000):
        r = A.gumbel_rescaling(N, SUB)
        d = E.rescaled_density(sf, N, r, x, cdf=cdf)
        sups.append(np.max(np.abs(d - A.gumbel_density(x))))
    assert sups[0] > sups[1] > sups[2]


def test_rescaled_density_normalized():
    sf, cdf = closed_pair()
    r = A.gumbel_rescaling(1000, SUB)
    x = np.linspace(-12, 6, 721)
    d = E.rescaled_density(sf, 1000, r, x, cdf=cdf)
    assert np.all(d >= 0)
    assert np.trapezoid(d, x) >= 0.999


def test_rescaled_histogram_matches_density(table):
    N = 100
    r = A.gumbel_rescaling(N, SUB)
    s = E.mc_order_statistics(HALF, 0.5, N, 1, 100_000, seed=11, method="inverse_cdf", table=table)
    x = (s.values - r.b_N) / r.a_N
    edges = np.linspace(-4.0, 2.5, 29)
    p = chi2_pvalue(x, edges, lambda e: order_stat_cdf(r.a_N * e + r.b_N, N, 1))
    assert p > 0.01
    # the analytic density integrates to the same bin masses
    sf, cdf = closed_pair()
    mid = np.linspace(-1.0, 0.0, 201)
    mass = np.trapezoid(E.rescaled_density(sf, N, r, mid, cdf=cdf), mid)
    exact = order_stat_cdf(r.b_N, N, 1) - order_stat_cdf(r.b_N - r.a_N, N, 1)
    assert mass == pytest.approx(exact, rel=1e-5)


# -- variance and cv --------------------------------------------------------

def test_cv_shrinks_with_N(table):
    cvs, scaled = [], []
    for N in (100, 1000, 10_000):
        s = E.mc_order_statistics(HALF, 0.5, N, 1, 100_000, seed=N, method="inverse_cdf", table=table)
        vc = E.variance_and_cv(s)
        cvs.append(vc["cv"])
        scaled.append(math.log(N) ** (2 / SUB.beta) * vc["variance"])
    assert cvs[0] > cvs[1] > cvs[2]
    assert scaled[0] > scaled[1] > scaled[2]


def test_variance_of_constant_sample():
    s = E.OrderStatSample(k=1, N=1, values=np.full(10, 2.5), seed=0)
    assert E.variance_and_cv(s) == {"variance": 0.0, "cv": 0.0}
    with pytest.raises(DomainError):
        E.variance_and_cv(E.OrderStatSample(k=1, N=1, values=np.array([1.0]), seed=0))


# -- second order statistic -------------------------------------------------

N_K = 10_000


@pytest.fixture(scope="module")
def second_sample(table):
    return E.mc_order_statistics(HALF, 0.5, N_K, 2, 100_000, seed=2024, method="inverse_cdf",
                                 table=table)


def test_second_order_matches_finite_N_law(second_sample):
    r = A.gumbel_rescaling(N_K, SUB)
    x = (second_sample.values - r.b_N) / r.a_N
    edges = np.linspace(-3.0, 3.0, 29)
    p = chi2_pvalue(x, edges, lambda e: order_stat_cdf(r.a_N * e + r.b_N, N_K, 2))
    assert p > 0.01


def test_gap_matches_quadrature(second_sample):
    sf, cdf = closed_pair()
    e1 = E.mean_order_statistic_quadrature(sf, N_K, 1, cdf=cdf, t_scale=T_SCALE)
    e2 = E.mean_order_statistic_quadrature(sf, N_K, 2, cdf=cdf, t_scale=T_SCALE)
    gap = second_sample.joint[:, 1] - second_sample.joint[:, 0]
    se = gap.std(ddof=1) / math.sqrt(gap.size)
    assert abs(gap.mean() - (e2 - e1)) < 3 * se


@pytest.mark.xfail(strict=True, raises=AssertionError,
                   reason="at N=1e4 the rescaled second order statistic still has "
                          "mean 0.76 against the limit 0.42; the Gumbel-type limit is "
                          "approached at a rate of about 1/ln N")
def test_second_order_limit_law(second_sample):
    r = A.gumbel_rescaling(N_K, SUB)
    x = (second_sample.values - r.b_N) / r.a_N
    edges = np.linspace(-3.0, 3.0, 29)
    limit_cdf = lambda e: 1.0 - math.exp(-math.exp(e)) * (1.0 + math.exp(e))
    assert chi2_pvalue(x, edges, limit_cdf) > 0.01
