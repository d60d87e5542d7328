import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from markedhawkes.errors import InvalidKernel, InvalidSpec, Unstable
from markedhawkes.model import (
    BoxcarKernel, ConstantMu0, DiscreteMarks, ExponentialKernel, ExponentialMu0, HumpKernel, ModelSpec,
    PowerKernel, SaturatingShot, UnitStepShot, WindowShot, ZeroMu0, branching_ratio, describe, immigrant_mass,
    require_stable, stationary_mu0, validate, zero_kernel,
)
from markedhawkes.rng import substream
from oracles import quad

ONE = DiscreteMarks((1.0,))


def spec_with(kernel, marks=ONE, **kw):
    return ModelSpec(lambda_I=1.0, nu_I=marks, nu_H=marks, kernel=kernel, **kw)


# -- branching ratio --------------------------------------------------------


def test_branching_ratio_zero_kernel():
    assert branching_ratio(spec_with(zero_kernel())) == 0.0


def test_branching_ratio_single_exponential_atom():
    assert branching_ratio(spec_with(ExponentialKernel(0.5, 1.0))) == pytest.approx(0.5, abs=1e-15)


def test_branching_ratio_two_atoms():
    marks = DiscreteMarks((0.5, 0.5))
    assert branching_ratio(spec_with(ExponentialKernel((0.2, 0.6), 1.0), marks)) == pytest.approx(0.4, abs=1e-15)


@given(p=st.floats(0, 1), a=st.lists(st.floats(0, 2), min_size=3, max_size=3),
       q1=st.lists(st.floats(0.01, 1), min_size=3, max_size=3),
       q2=st.lists(st.floats(0.01, 1), min_size=3, max_size=3))
def test_branching_ratio_linear_in_mixture_weights(p, a, q1, q2):
    n1 = np.asarray(q1) / sum(q1)
    n2 = np.asarray(q2) / sum(q2)
    k = ExponentialKernel(tuple(a), 1.0)
    mix = DiscreteMarks(tuple(p * n1 + (1 - p) * n2))
    r = branching_ratio(spec_with(k, mix))
    r1 = branching_ratio(spec_with(k, DiscreteMarks(tuple(n1))))
    r2 = branching_ratio(spec_with(k, DiscreteMarks(tuple(n2))))
    assert r == pytest.approx(p * r1 + (1 - p) * r2, abs=1e-12)


def test_require_stable_raises_at_one():
    with pytest.raises(Unstable):
        require_stable(spec_with(ExponentialKernel(1.0, 1.0)))


# -- kernels ----------------------------------------------------------------

KERNELS = [
    ExponentialKernel(0.7, 1.3),
    PowerKernel(0.6, 2.0, 2.5),
    BoxcarKernel(0.4, 1.7),
    HumpKernel(0.8, 2.0),
]


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.family)
def test_kernel_l1_and_integral_match_quadrature(k):
    assert k.l1(0) == pytest.approx(quad(lambda t: float(k.phi(t, 0)), 0, 50) + quad(lambda t: float(k.phi(t, 0)), 50),
                                    rel=1e-8)
    for t in (0.3, 1.0, 4.0):
        assert float(k.integral(t, 0)) == pytest.approx(quad(lambda s: float(k.phi(s, 0)), 0, t), rel=1e-9, abs=1e-14)


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.family)
def test_kernel_moment_matches_quadrature(k):
    theta = 1.2
    expect = quad(lambda t: t**theta * float(k.phi(t, 0)), 0, 10) + quad(lambda t: t**theta * float(k.phi(t, 0)), 10)
    assert k.moment(theta, 0) == pytest.approx(expect, rel=1e-6)


def test_power_moment_diverges_beyond_tail_index():
    assert PowerKernel(0.5, 1.0, 2.5).moment(1.5, 0) == math.inf


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.family)
def test_majorant_dominates_and_is_nonincreasing_on_probe_grid(k):
    t = np.linspace(0.0, 20.0, 1000)
    phi = np.asarray(k.phi(t, 0), dtype=float)
    maj = np.asarray(k.majorant(t, 0), dtype=float)
    assert np.all(phi >= 0) and np.all(maj >= phi - 1e-15)
    assert np.all(np.diff(maj) <= 1e-15)
    # the majorant is the running supremum from the right
    run_sup = np.maximum.accumulate(phi[::-1])[::-1]
    assert np.allclose(maj, np.maximum(run_sup, maj), atol=1e-15)
    for i in range(0, 1000, 97):
        assert k.majorant_scalar(float(t[i]), k.event_params(0)) == pytest.approx(maj[i], abs=1e-15)


@given(a=st.floats(0, 3), b=st.floats(0.05, 5), t=st.floats(0, 50))
def test_hump_majorant_is_running_sup(a, b, t):
    k = HumpKernel(a, b)
    s = np.linspace(t, t + 60 / b, 4000)
    assert float(k.majorant(t, 0)) >= np.max(k.phi(s, 0)) - 1e-12
    assert float(k.majorant(t, 0)) >= float(k.phi(t, 0))


def test_invalid_kernel_parameters():
    with pytest.raises(InvalidKernel):
        ExponentialKernel(-0.1, 1.0)
    with pytest.raises(InvalidKernel):
        PowerKernel(0.5, 1.0, 1.0)
    with pytest.raises(InvalidKernel):
        BoxcarKernel(0.5, 0.0)


def test_per_mark_parameters_must_match_label_count():
    with pytest.raises(InvalidSpec):
        spec_with(ExponentialKernel((0.1, 0.2, 0.3), 1.0), DiscreteMarks((0.5, 0.5)))


# -- marks ------------------------------------------------------------------


def test_discrete_marks_validation():
    with pytest.raises(InvalidSpec):
        DiscreteMarks((0.5, 0.4))
    with pytest.raises(InvalidSpec):
        DiscreteMarks((1.5, -0.5))
    with pytest.raises(InvalidSpec):
        DiscreteMarks(())


def test_discrete_marks_sampling_frequencies():
    d = DiscreteMarks((0.2, 0.5, 0.3))
    x = np.asarray(d.draw_many(substream(1, 0, "hawkes_marks"), 100_000))
    freq = np.bincount(x, minlength=3) / x.size
    se = np.sqrt(np.asarray(d.probs) * (1 - np.asarray(d.probs)) / x.size)
    assert np.all(np.abs(freq - d.probs) < 4 * se)


def test_expect_handles_vector_integrands():
    d = DiscreteMarks((0.25, 0.75))
    t = np.array([0.0, 1.0])
    k = ExponentialKernel((1.0, 2.0), 1.0)
    got = d.expect(lambda u: k.phi(t, u))
    assert np.allclose(got, [1.75, 1.75 * math.exp(-1)])


# -- exogenous intensity and shots ----------------------------------------


def test_mu0_families():
    assert ZeroMu0().l1 == 0.0
    assert ConstantMu0(2.0).l1 == math.inf and ConstantMu0(0.0).l1 == 0.0
    e = ExponentialMu0(3.0, 2.0)
    assert e.l1 == pytest.approx(1.5)
    assert float(e.integral(1.0)) == pytest.approx(quad(e.value, 0, 1.0))
    assert e.lp(2) == pytest.approx(quad(lambda t: e.value(t) ** 2))


def test_shot_families():
    assert UnitStepShot(2.0).psi_inf(0) == 2.0
    s = SaturatingShot(1.0, 1.0)
    assert float(s.psi(1.0, 0)) == pytest.approx(1 - math.exp(-1))
    assert float(s.tail(1.0, 0)) == pytest.approx(math.exp(-1))
    w = WindowShot(1.0, 2.0)
    assert w.psi_inf(0) == 0.0 and float(w.psi(1.0, 0)) == 1.0 and float(w.psi(2.0, 0)) == 0.0


def test_stationary_mu0_for_unit_exponential():
    mu = stationary_mu0(spec_with(ExponentialKernel(0.5, 1.0)))
    assert mu.c == pytest.approx(1.0, abs=1e-14) and mu.b == 1.0


def test_stationary_mu0_needs_exponential_kernel():
    with pytest.raises(InvalidSpec):
        stationary_mu0(spec_with(PowerKernel(0.5, 1.0, 2.5)))


def test_immigrant_mass_uses_immigrant_law():
    spec = ModelSpec(1.0, DiscreteMarks((1.0, 0.0)), DiscreteMarks((0.0, 1.0)), ExponentialKernel((0.2, 0.6), 1.0))
    assert immigrant_mass(spec) == pytest.approx(0.2)
    assert branching_ratio(spec) == pytest.approx(0.6)


# -- spec invariants --------------------------------------------------------


@pytest.mark.parametrize("kw", [dict(lambda_I=0.0), dict(alpha=1.0), dict(theta0=0.5), dict(theta1=1.0)])
def test_modelspec_rejects_bad_parameters(kw):
    base = dict(lambda_I=1.0, nu_I=ONE, nu_H=ONE, kernel=ExponentialKernel(0.5, 1.0))
    with pytest.raises(InvalidSpec):
        ModelSpec(**(base | kw))


def test_spec_hash_is_stable_and_sensitive():
    a = spec_with(ExponentialKernel(0.5, 1.0))
    b = spec_with(ExponentialKernel(0.5, 1.0))
    c = spec_with(ExponentialKernel(0.5000001, 1.0))
    assert a.spec_hash == b.spec_hash != c.spec_hash
    assert describe(a)["kernel"]["type"] == "ExponentialKernel"
    assert ModelSpec(1, ONE, ONE, ExponentialKernel(0.5, 1.0)).spec_hash == a.spec_hash


# -- validate ----------------------------------------------------------------


def test_validate_stable_exponential_passes():
    rep = validate(spec_with(ExponentialKernel(0.5, 1.0)))
    assert rep.status("stability") == "pass" and rep.passed


def test_validate_flags_critical_kernel():
    assert validate(spec_with(ExponentialKernel(1.0, 1.0))).status("stability") == "fail"


def test_validate_zero_kernel_all_pass():
    rep = validate(spec_with(zero_kernel(), shot=UnitStepShot()))
    assert all(c.status == "pass" for c in rep.checks)


def test_validate_power_kernel_time_moment():
    assert validate(spec_with(PowerKernel(0.5, 1.0, 2.5), theta0=1.2)).status("kernel.time_moment.H") == "pass"
    assert validate(spec_with(PowerKernel(0.5, 1.0, 2.5), theta0=2.0)).status("kernel.time_moment.H") == "fail"


@given(a=st.floats(0, 1.5), b=st.floats(0.1, 4))
def test_validate_is_pure(a, b):
    spec = spec_with(ExponentialKernel(a, b), shot=SaturatingShot(1.0, b))
    assert validate(spec).to_json() == validate(spec_with(ExponentialKernel(a, b), shot=SaturatingShot(1.0, b))).to_json()
