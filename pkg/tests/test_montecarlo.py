import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from markedhawkes.errors import BadReference, OutOfRange
from markedhawkes.model import DiscreteMarks, ExponentialKernel, ModelSpec, UnitStepShot, zero_kernel
from markedhawkes.montecarlo import (
    Checks, ExperimentConfig, Functional, kolmogorov_sf, ks_normal, mean_intensity_check, normal_cdf, rescale,
    run_experiment, sup_deviation,
)
from markedhawkes.scenarios import exponential_single
from markedhawkes.simulate import simulate_path

ONE = DiscreteMarks((1.0,))


# -- KS machinery against scipy --------------------------------------------------


@given(lam=st.floats(0.05, 3.0))
def test_kolmogorov_sf_matches_scipy(lam):
    assert kolmogorov_sf(lam) == pytest.approx(stats.kstwobign.sf(lam), abs=1e-12)


def test_normal_cdf_matches_scipy():
    x = np.linspace(-5, 5, 101)
    assert np.allclose(normal_cdf(x, 0.3, 2.0), stats.norm.cdf(x, 0.3, math.sqrt(2.0)), atol=1e-15)


@given(seed=st.integers(0, 10**6), n=st.integers(100, 600))
def test_ks_statistic_matches_scipy(seed, n):
    x = np.random.default_rng(seed).normal(0.2, 1.5, n)
    d, _ = ks_normal(x, 0.0, 2.0)
    assert d == pytest.approx(stats.kstest(x, "norm", args=(0.0, math.sqrt(2.0))).statistic, abs=1e-12)


def test_ks_null_and_degenerate_samples():
    x = np.random.default_rng(1).normal(0.0, 1.0, 5000)
    assert ks_normal(x, 0.0, 1.0)[1] > 1e-3
    d, p = ks_normal(np.zeros(200), 0.0, 1.0)
    assert d >= 0.5 and p < 1e-10


def test_ks_errors():
    with pytest.raises(BadReference):
        ks_normal(np.zeros(200), 0.0, 0.0)
    with pytest.raises(ValueError):
        ks_normal(np.zeros(50), 0.0, 1.0)


# -- functionals -------------------------------------------------------------------


def test_functional_names_and_validation():
    assert Functional("hawkes_count").name == "hawkes_count"
    assert Functional("total_count", atom=1).name == "total_count[atom=1]"
    assert Functional("hawkes_count", weights=(1.0, 2.0)).name == "hawkes_count[f=1.0,2.0]"
    with pytest.raises(ValueError):
        Functional("nonsense")
    with pytest.raises(ValueError):
        Functional("hawkes_count", atom=0, weights=(1.0,))


def test_rescale_refuses_beyond_horizon():
    spec = exponential_single()
    path = simulate_path(spec, 10.0, seed=1)
    with pytest.raises(OutOfRange):
        rescale(spec, path, 20.0, (0.5, 1.0), Functional("hawkes_count"), 1.0)


def test_rescale_of_counts_is_exact():
    spec = exponential_single()
    path = simulate_path(spec, 100.0, seed=3)
    X = rescale(spec, path, 100.0, (0.5, 1.0), Functional("hawkes_count"), 1.0)
    n = path.hawkes_times
    assert X[1] == pytest.approx((n.size - 100.0) / 10.0)
    assert X[0] == pytest.approx((np.sum(n <= 50.0) - 50.0) / 10.0)


def test_sup_deviation_sees_jumps():
    spec = exponential_single()
    path = simulate_path(spec, 50.0, seed=2)
    fn = Functional("hawkes_count")
    s = sup_deviation(spec, path, 50.0, fn, 1.0)
    final = abs(path.hawkes_times.size / 50.0 - 1.0)
    assert s >= final


# -- experiments ------------------------------------------------------------------


def small(spec, **kw):
    base = dict(spec=spec, T_list=(50.0,), replicas=400, functionals=(Functional("immigration_count"),), seed=7)
    return ExperimentConfig(**(base | kw))


def test_poisson_immigration_variance_within_four_se():
    spec = ModelSpec(2.0, ONE, ONE, zero_kernel())
    rep = run_experiment(small(spec)).report("immigration_count", 50.0)
    assert abs(rep.var[-1] - 2.0) < 4 * rep.se_var[-1]
    assert rep.reference_rate == 2.0 and rep.passed


def test_wrong_reference_fails():
    spec = ModelSpec(2.0, ONE, ONE, zero_kernel())
    cfg = small(spec, reference_override={"immigration_count": 3.0})
    assert not run_experiment(cfg).passed


def test_reports_identical_across_workers():
    spec = exponential_single(shot=UnitStepShot())
    fns = (Functional("hawkes_count"), Functional("cumulative_intensity"), Functional("shot_total"))
    a = run_experiment(small(spec, replicas=24, functionals=fns, workers=1))
    b = run_experiment(small(spec, replicas=24, functionals=fns, workers=2))
    assert a.to_json() == b.to_json() and a.to_csv() == b.to_csv()


def test_two_replica_smoke():
    rep = run_experiment(small(exponential_single(), replicas=2, T_list=(10.0, 20.0)))
    assert len(rep.reports) == 2 and all(r.ks_stat is None for r in rep.reports)


def test_atom_functional_reference():
    marks = DiscreteMarks((0.5, 0.5))
    spec = ModelSpec(1.0, marks, marks, ExponentialKernel((0.3, 0.7), 1.0))
    fn = Functional("total_count", atom=0)
    rep = run_experiment(small(spec, replicas=4, functionals=(fn,),
                               checks={fn.name: Checks(None, None, None, None)})).report(fn.name, 50.0)
    assert rep.reference_rate == pytest.approx(2.18, rel=1e-9)
    assert rep.drift == pytest.approx(1.0, rel=1e-9)


def test_lln_mode_reports_quantiles():
    cfg = small(exponential_single(), mode="lln", T_list=(20.0, 80.0), replicas=30,
                functionals=(Functional("hawkes_count"),))
    rep = run_experiment(cfg)
    q = [r.sup_quantiles["q50"] for r in rep.reports]
    assert len(rep.verdicts) == 1 and rep.verdicts[0].passed == (q[1] < q[0])


def test_experiment_config_validation():
    spec = exponential_single()
    for kw in (dict(grid=(0.5, 0.25)), dict(replicas=1), dict(mode="xyz"), dict(T_list=())):
        with pytest.raises(ValueError):
            small(spec, **kw)


def test_mean_intensity_check_runs():
    rep = mean_intensity_check(exponential_single(stationary=False), 20.0, 60, np.linspace(1, 20, 5), seed=1)
    assert rep.max_abs_z < 6 and math.isfinite(rep.compensator_se)
