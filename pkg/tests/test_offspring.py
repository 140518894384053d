import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import branchlab as bl
from branchlab import _kernels
from branchlab.offspring import (CustomInfo, assumption_a, mean_gap,
                                 sample_offspring_many)
from branchlab.streams import CounterStream

ALL_SPECS = [
    bl.Geometric(0.5),
    bl.Geometric(0.3),
    bl.Poisson(1.0),
    bl.Poisson(2.5),
    bl.BirthDeath(2.0, 1.0),
    bl.LogSupercritical(),
    bl.StableCritical(1.5),
    bl.NeveuHarmonic(),
    bl.GeneralizedNeveu(0.5, 0.2),
    bl.LuriaDelbruck(1.0),
    bl.SibuyaOffspring(0.5),
]

INFINITE_MEAN = [bl.NeveuHarmonic(), bl.GeneralizedNeveu(0.5, 0.2),
                 bl.LuriaDelbruck(1.0), bl.SibuyaOffspring(0.5)]


# ---------------------------------------------------------------- pgf basics

@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family_name)
def test_pgf_normalization(spec):
    assert abs(bl.pgf_eval(spec, 1.0) - 1.0) <= 1e-12


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family_name)
def test_pgf_monotone_and_convex(spec):
    s = np.linspace(0.0, 1.0, 100)
    f = np.array([bl.pgf_eval(spec, x) for x in s])
    assert np.all(np.diff(f) >= -1e-12)
    assert np.all(np.diff(f, 2) >= -1e-10)


def test_pgf_domain_error():
    with pytest.raises(ValueError):
        bl.pgf_eval(bl.Geometric(0.5), 1.5)
    with pytest.raises(ValueError):
        bl.pgf_eval(bl.Geometric(0.5), -0.1)


def test_pgf_point_values():
    assert bl.pgf_eval(bl.NeveuHarmonic(), 0.0) == 0.0
    assert bl.pgf_eval(bl.StableCritical(1.5), 0.0) == pytest.approx(2.0 / 3.0, abs=1e-14)
    assert bl.pgf_eval(bl.LuriaDelbruck(1.0), 0.0) == pytest.approx(math.exp(-1.0), abs=1e-14)
    # geometric closed form p/(1 - q s), validated by the factorial moments
    assert bl.pgf_eval(bl.Geometric(0.5), 0.5) == pytest.approx(2.0 / 3.0, abs=1e-14)


def test_log_supercritical_series_matches_closed_form():
    spec = bl.LogSupercritical()
    # closed form at s = 0.5 equals the series sum 0.19314718056 (12 digits)
    assert bl.pgf_eval(spec, 0.5) == pytest.approx(0.19314718055995, abs=1e-12)
    # series/closed-form switchover is seamless
    for s in (0.2499, 0.25, 0.2501, 0.1, 0.01):
        brute = sum(4.0 / ((k - 1) * k * (k + 1)) * s ** k for k in range(2, 400))
        assert bl.pgf_eval(spec, s) == pytest.approx(brute, abs=1e-14)


def test_parameter_validation():
    for bad in (lambda: bl.Geometric(0.0), lambda: bl.Geometric(1.0),
                lambda: bl.Poisson(-1.0), lambda: bl.BirthDeath(0.0, 0.0),
                lambda: bl.StableCritical(1.0), lambda: bl.StableCritical(2.0),
                lambda: bl.GeneralizedNeveu(0.0, 0.1),
                lambda: bl.GeneralizedNeveu(0.9, 0.2),
                lambda: bl.LuriaDelbruck(0.0), lambda: bl.SibuyaOffspring(1.0)):
        with pytest.raises(ValueError):
            bad()
    with pytest.raises(ValueError):
        bl.ProcessParams(0.0, bl.Geometric(0.5))


@given(st.floats(min_value=0.01, max_value=0.99),
       st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=50, deadline=None)
def test_geometric_pgf_closed_form_property(p, s):
    assert bl.pgf_eval(bl.Geometric(p), s) == pytest.approx(
        p / (1.0 - (1.0 - p) * s), rel=1e-12)


# ----------------------------------------------------- pmf mass and tail sums

def test_partial_sums_plus_closed_tails_reach_one():
    """Sum p_k over k <= 1e7 plus the closed-form tail is 1 to 1e-9."""
    K = 10 ** 7
    k = np.arange(2, K + 1, dtype=np.float64)

    neveu_mass = np.sum(1.0 / (k * (k - 1.0))) + 1.0 / K
    assert neveu_mass == pytest.approx(1.0, abs=1e-9)

    logsuper_mass = np.sum(4.0 / ((k - 1.0) * k * (k + 1.0))) + 2.0 / (K * (K + 1.0))
    assert logsuper_mass == pytest.approx(1.0, abs=1e-9)

    # generalized harmonic: p0 + p1 + b * harmonic tail
    b, c = 0.5, 0.2
    gen_mass = c + (1.0 - b - c) + b * (np.sum(1.0 / (k * (k - 1.0))) + 1.0 / K)
    assert gen_mass == pytest.approx(1.0, abs=1e-9)

    # sibuya: strict tails are exact products; mass = 1 - P(xi > K)
    alpha = 0.5
    j = np.arange(1, K + 1, dtype=np.float64)
    tail = np.prod(1.0 - alpha / j)
    sib_pmf_sum = 1.0 - tail
    assert sib_pmf_sum + tail == pytest.approx(1.0, abs=1e-12)
    assert tail == pytest.approx(K ** -alpha / math.gamma(1.0 - alpha), rel=2e-4)

    # stable-critical: p0 + tail-product mass
    a = 1.5
    t1 = (a - 1.0) / a
    jj = np.arange(2, K + 1, dtype=np.float64)
    tailK = t1 * np.prod((jj - a) / jj)
    assert (1.0 / a) + (t1 - tailK) + tailK == pytest.approx(1.0, abs=1e-12)


def test_tail_tables_match_direct_products():
    tab = bl.SibuyaOffspring(0.5)._kernel_pack()[2]
    for kk in (1, 2, 17, 999, 10 ** 6):
        j = np.arange(1, kk + 1, dtype=np.float64)
        assert tab[kk] == pytest.approx(np.prod(1.0 - 0.5 / j), rel=1e-12)
    tab = bl.StableCritical(1.5)._kernel_pack()[2]
    assert tab[0] == tab[1] == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert tab[2] == pytest.approx((1.0 / 3.0) * (2 - 1.5) / 2, rel=1e-14)


def test_luria_delbruck_pmf_recursion_matches_pgf_series():
    # mpmath Taylor coefficients of exp(b(1-s)log(1-s)/s) at b = 1
    expected = [0.3678794412, 0.1839397206, 0.1072981703,
                0.06897739522, 0.04745389319]
    got = bl.LuriaDelbruck(1.0).pmf(4)
    assert got == pytest.approx(expected, rel=1e-8)
    assert got[0] == pytest.approx(math.exp(-1.0), rel=1e-12)


# --------------------------------------------------------------- samplers

def test_neveu_inversion_example():
    # tail P(xi >= k) = 1/(k-1); brute-force oracle for u = 0.25:
    # smallest k with 1/(k-1) < u is 6, so the draw is 5
    u = 0.25
    k = 2
    while 1.0 / (k - 1.0) >= u:
        k += 1
    assert k - 1 == 5
    assert _kernels._neveu_inv(0.25) == 5


def test_birth_death_draws_exact_support():
    spec = bl.BirthDeath(2.0, 1.0)
    draws = sample_offspring_many(spec, CounterStream(5), 30_000)
    vals, counts = np.unique(draws, return_counts=True)
    assert set(vals.tolist()) <= {0, 2}
    p0 = counts[vals == 0][0] / draws.size
    assert p0 == pytest.approx(1.0 / 3.0, abs=3 * math.sqrt(2.0 / 9.0 / draws.size))


def test_geometric_empirical_mean():
    draws = sample_offspring_many(bl.Geometric(0.5), CounterStream(11), 10 ** 5)
    assert abs(draws.mean() - 1.0) < 0.02


def test_log_super_inversion_matches_tails():
    draws = sample_offspring_many(bl.LogSupercritical(), CounterStream(13), 10 ** 5)
    assert draws.min() >= 2
    for kk in (2, 3, 10, 100):
        emp = (draws >= kk).mean()
        target = 2.0 / ((kk - 1.0) * kk)
        se = math.sqrt(target * (1 - target) / draws.size)
        assert abs(emp - target) <= 4 * se + 1e-12


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family_name)
def test_sampler_matches_pgf(spec):
    """Empirical pgf over 1e5 draws vs pgf_eval at s in {0.3, 0.6, 0.9}."""
    draws = sample_offspring_many(spec, CounterStream(101), 10 ** 5)
    zs = draws.astype(np.float64)
    for s in (0.3, 0.6, 0.9):
        with np.errstate(under="ignore"):
            vals = np.where(zs > 5000.0, 0.0, s ** np.minimum(zs, 5000.0))
        emp = vals.mean()
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(emp - bl.pgf_eval(spec, s)) <= 3.0 * se


def test_poisson_sampler_large_mu_exact():
    # exercises the transformed-rejection branch
    spec = bl.Poisson(80.0)
    draws = sample_offspring_many(spec, CounterStream(3), 200_000)
    assert abs(draws.mean() - 80.0) < 3 * math.sqrt(80.0 / draws.size)
    assert abs(draws.var() - 80.0) < 4 * 80.0 * math.sqrt(2.0 / draws.size)


def test_custom_pmf_table_sampling():
    pmf = np.array([0.25, 0.5, 0.25])
    spec = bl.Custom(pgf=lambda s: 0.25 + 0.5 * s + 0.25 * s * s, sampler=pmf)
    draws = sample_offspring_many(spec, CounterStream(17), 50_000)
    freqs = np.bincount(draws, minlength=3) / draws.size
    assert freqs == pytest.approx(pmf, abs=0.01)


def test_custom_callable_sampler():
    spec = bl.Custom(pgf=lambda s: s ** 2,
                     sampler=lambda stream: 2)
    st_ = CounterStream(1)
    assert bl.sample_offspring(spec, st_) == 2


# ------------------------------------------------------------- moments

def test_moment_profiles():
    prof = bl.moment_profile(bl.ProcessParams(1.0, bl.Geometric(0.5)))
    assert prof.lam == pytest.approx(0.0, abs=1e-15)
    assert prof.tau2 == pytest.approx(2.0, rel=1e-12)
    assert prof.second_moment_finite

    prof = bl.moment_profile(bl.ProcessParams(1.0, bl.Poisson(1.0)))
    assert prof.lam == pytest.approx(0.0, abs=1e-15)
    assert prof.tau2 == pytest.approx(1.0, rel=1e-12)

    prof = bl.moment_profile(bl.ProcessParams.birth_death(2.0, 1.0))
    assert prof.lam == pytest.approx(1.0, rel=1e-12)
    assert prof.tau2 == pytest.approx(4.0, rel=1e-12)

    prof = bl.moment_profile(bl.ProcessParams(1.0, bl.NeveuHarmonic()))
    assert math.isinf(prof.mean_m) and math.isinf(prof.lam)
    assert not prof.second_moment_finite

    prof = bl.moment_profile(bl.ProcessParams(1.0, bl.StableCritical(1.5)))
    assert prof.mean_m == 1.0 and math.isinf(prof.tau2)

    prof = bl.moment_profile(bl.ProcessParams(1.0, bl.LogSupercritical()))
    assert prof.mean_m == 3.0 and math.isinf(prof.tau2)


def test_custom_moment_probe_flags_approximate():
    spec = bl.Custom(pgf=lambda s: 0.25 + 0.5 * s + 0.25 * s * s)
    prof = bl.moment_profile(bl.ProcessParams(1.0, spec))
    assert prof.approximate
    assert prof.mean_m == pytest.approx(1.0, abs=1e-6)
    assert prof.tau2 == pytest.approx(0.5, abs=1e-4)
    # infinite-mean custom law is detected
    neveu_like = bl.Custom(pgf=lambda s: bl.pgf_eval(bl.NeveuHarmonic(), s))
    prof = bl.moment_profile(bl.ProcessParams(1.0, neveu_like))
    assert math.isinf(prof.mean_m)


# ------------------------------------------------- slowly varying L and tails

def test_slowly_varying_L_values():
    assert bl.slowly_varying_L(bl.NeveuHarmonic(), math.e ** 2) == pytest.approx(3.0, rel=1e-12)
    assert bl.slowly_varying_L(bl.LuriaDelbruck(0.7), 1.0) == pytest.approx(
        1.0 - math.exp(-0.7), rel=1e-12)
    assert bl.slowly_varying_L(bl.GeneralizedNeveu(0.5, 0.2), math.e) == pytest.approx(
        1.3, rel=1e-12)
    assert bl.slowly_varying_L(bl.SibuyaOffspring(0.5), 100.0) == pytest.approx(10.0, rel=1e-12)
    with pytest.raises(ValueError):
        bl.slowly_varying_L(bl.NeveuHarmonic(), 0.5)


@pytest.mark.parametrize("spec", INFINITE_MEAN, ids=lambda s: s.family_name)
def test_L_strictly_increasing_for_infinite_mean(spec):
    xs = np.geomspace(1.0, 1e10, 60)
    vals = [bl.slowly_varying_L(spec, x) for x in xs]
    assert np.all(np.diff(vals) > 0)


def test_L_generic_form_agrees_with_closed_form():
    for spec in INFINITE_MEAN:
        for x in (2.0, 1e3, 1e6):
            generic = x * spec._one_minus_pgf(1.0 - 1.0 / x)
            assert bl.slowly_varying_L(spec, x) == pytest.approx(generic, rel=1e-9)


def test_tail_constants_closed_forms():
    tc = bl.tail_constants(bl.NeveuHarmonic())
    assert (tc.A, tc.B) == (1.0, 1.0) and tc.provenance == "closed_form"
    tc = bl.tail_constants(bl.GeneralizedNeveu(0.5, 0.2))
    assert tc.A == pytest.approx(0.5) and tc.B == pytest.approx(0.8)
    tc = bl.tail_constants(bl.LuriaDelbruck(2.0))
    assert tc.A == pytest.approx(2.0) and tc.B == pytest.approx(0.0)
    tc = bl.tail_constants(bl.SibuyaOffspring(0.5))
    assert math.isinf(tc.A)


def test_tail_constants_numeric_extrapolation():
    spec = bl.Custom(pgf=lambda s: bl.pgf_eval(bl.GeneralizedNeveu(0.5, 0.2), s))
    tc = bl.tail_constants(spec)
    assert tc.provenance == "numeric_extrapolation"
    assert tc.A == pytest.approx(0.5, abs=1e-6)
    assert tc.B == pytest.approx(0.8, abs=1e-4)
    assert tc.uncertainty is not None and tc.uncertainty < 1e-3

    explosive = bl.Custom(pgf=lambda s: bl.pgf_eval(bl.SibuyaOffspring(0.5), s))
    tc = bl.tail_constants(explosive)
    assert math.isinf(tc.A)

    with pytest.raises(ValueError):
        bl.tail_constants(bl.Geometric(0.5))


# ----------------------------------------------------- extinction / explosion

def test_extinction_probabilities():
    assert bl.extinction_probability(bl.ProcessParams.birth_death(2.0, 1.0)) == pytest.approx(0.5, abs=1e-10)
    assert bl.extinction_probability(bl.ProcessParams(1.0, bl.StableCritical(1.5))) == 1.0
    assert bl.extinction_probability(bl.ProcessParams(1.0, bl.NeveuHarmonic())) == 0.0
    # Luria-Delbrueck with b = 1 has the exact fixed point 1/2
    q = bl.extinction_probability(bl.ProcessParams(1.0, bl.LuriaDelbruck(1.0)))
    assert q == pytest.approx(0.5, abs=1e-10)
    spec = bl.LuriaDelbruck(1.0)
    assert abs(bl.pgf_eval(spec, q) - q) <= 1e-10
    # generalized harmonic: q = 1 - exp(-c/b)
    q = bl.extinction_probability(bl.ProcessParams(1.0, bl.GeneralizedNeveu(0.5, 0.2)))
    assert q == pytest.approx(1.0 - math.exp(-0.4), rel=1e-12)
    # subcritical and critical lines die out
    assert bl.extinction_probability(bl.ProcessParams(1.0, bl.Geometric(0.7))) == 1.0
    assert bl.extinction_probability(bl.ProcessParams(1.0, bl.Poisson(1.0))) == 1.0
    # supercritical bisection branch (no closed form)
    q = bl.extinction_probability(bl.ProcessParams(1.0, bl.Poisson(2.0)))
    assert abs(bl.pgf_eval(bl.Poisson(2.0), q) - q) <= 1e-10
    assert q < 1.0


def test_extinction_minimality_scan():
    for params, q in ((bl.ProcessParams.birth_death(2.0, 1.0), 0.5),
                      (bl.ProcessParams(1.0, bl.LuriaDelbruck(1.0)), 0.5)):
        spec = params.offspring
        xs = np.linspace(1e-6, q - 1e-6, 1000)
        gaps = np.array([bl.pgf_eval(spec, x) - x for x in xs])
        assert np.all(gaps > 0)  # no fixed point strictly below q


def test_non_explosion_verdicts():
    assert bl.check_non_explosion(bl.ProcessParams(1.0, bl.LuriaDelbruck(1.0))) is bl.Verdict.NON_EXPLOSIVE
    assert bl.check_non_explosion(bl.ProcessParams(1.0, bl.SibuyaOffspring(0.5))) is bl.Verdict.EXPLOSIVE
    assert bl.check_non_explosion(bl.ProcessParams(1.0, bl.Geometric(0.3))) is bl.Verdict.NON_EXPLOSIVE


def test_non_explosion_numeric_probe_on_custom_laws():
    neveu_like = bl.Custom(pgf=lambda s: bl.pgf_eval(bl.NeveuHarmonic(), s))
    assert bl.check_non_explosion(bl.ProcessParams(1.0, neveu_like)) is bl.Verdict.NON_EXPLOSIVE
    sib_like = bl.Custom(pgf=lambda s: bl.pgf_eval(bl.SibuyaOffspring(0.5), s))
    assert bl.check_non_explosion(bl.ProcessParams(1.0, sib_like)) is bl.Verdict.EXPLOSIVE


# ------------------------------------------------ pgf/Laplace asymptotics

@pytest.mark.parametrize("spec", [bl.Geometric(0.5), bl.Poisson(1.0),
                                  bl.BirthDeath(2.0, 1.0)],
                         ids=lambda s: s.family_name)
def test_mean_gap_ratio_decreases_to_zero(spec):
    """((1-s)m - (1-f(s)))/(1-s)^{1.5} at s = 1 - 2^{-k} is decreasing to 0."""
    ratios = []
    for k in range(4, 21):
        w = 2.0 ** -k
        ratios.append(mean_gap(spec, 1.0 - w) / w ** 1.5)
    diffs = np.diff(ratios)
    assert np.all(diffs <= 1e-10)
    assert ratios[-1] < ratios[0] / 100


def test_assumption_a_consistency():
    """(1-s)^alpha L((1-s)^{-1}) equals the mean gap for the carrying laws."""
    for spec in (bl.Geometric(0.5), bl.Poisson(2.0), bl.BirthDeath(2.0, 1.0),
                 bl.StableCritical(1.5), bl.LogSupercritical()):
        alpha, L = assumption_a(spec)
        for w in (1e-2, 1e-5, 1e-8):
            lhs = mean_gap(spec, 1.0 - w)
            rhs = w ** alpha * L(1.0 / w)
            assert lhs == pytest.approx(rhs, rel=1e-9), spec.family_name


# ----------------------------------------------------------- serialization

def test_spec_json_round_trip():
    for spec in ALL_SPECS:
        blob = json.dumps(bl.spec_to_json(spec))
        back = bl.spec_from_json(json.loads(blob))
        assert back == spec
    with pytest.raises(ValueError):
        bl.spec_from_json({"family": "zeta"})
    with pytest.raises(TypeError):
        bl.spec_to_json(bl.Custom(pgf=lambda s: s))


def test_custom_metadata_used_when_present():
    spec = bl.Custom(pgf=lambda s: bl.pgf_eval(bl.NeveuHarmonic(), s),
                     metadata=CustomInfo(mean=math.inf, factorial2=math.inf,
                                         tail_A=1.0, tail_B=1.0))
    tc = bl.tail_constants(spec)
    assert (tc.A, tc.B) == (1.0, 1.0)
    prof = bl.moment_profile(bl.ProcessParams(1.0, spec))
    assert math.isinf(prof.mean_m) and not prof.approximate
