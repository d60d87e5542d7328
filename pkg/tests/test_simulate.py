import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from markedhawkes.errors import OutOfRange
from markedhawkes.microbes import PopulationIntegralToxin, build_model, single_offspring_boxcar
from markedhawkes.model import (
    BoxcarKernel, ConstantMu0, DiscreteMarks, ExponentialKernel, HumpKernel, ModelSpec, PowerKernel, UnitStepShot,
    zero_kernel,
)
from markedhawkes.simulate import (
    HAWKES, IMMIGRATION, PathRecord, counting, cumulative_intensity, intensity_at, shot_noise_at, simulate_path,
)

ONE = DiscreteMarks((1.0,))


def single(m=0.5, **kw):
    return ModelSpec(1.0, ONE, ONE, ExponentialKernel(m, 1.0), **kw)


def hand_path(times, origins, marks=None, horizon=10.0):
    n = len(times)
    return PathRecord(np.asarray(times, float), np.asarray(origins, np.uint8),
                      np.asarray(marks if marks is not None else [0] * n, np.uint32),
                      horizon, 0, 0, "", 0, 0)


def test_pure_poisson_when_kernel_vanishes():
    path = simulate_path(ModelSpec(1.0, ONE, ONE, zero_kernel()), 1e4, seed=3)
    assert path.hawkes_times.size == 0
    assert abs(path.immigration_times.size / 1e4 - 1.0) < 3e-2


def test_long_run_hawkes_rate():
    path = simulate_path(single(), 1e4, seed=5)
    # Var N_H(T) ~ 5 T, so the rate has standard error sqrt(5/T)
    assert abs(path.hawkes_times.size / 1e4 - 1.0) < 4 * math.sqrt(5 / 1e4)


def test_same_seed_same_bytes_different_seed_differs():
    spec = single()
    a = simulate_path(spec, 200.0, seed=1)
    b = simulate_path(spec, 200.0, seed=1)
    c = simulate_path(spec, 200.0, seed=2)
    assert a.to_bytes() == b.to_bytes() and a == b
    assert a != c
    assert simulate_path(spec, 200.0, seed=1, path_index=1) != a


def test_byte_round_trip():
    path = simulate_path(ModelSpec(1.0, DiscreteMarks((0.3, 0.7)), DiscreteMarks((0.3, 0.7)),
                                   ExponentialKernel((0.2, 0.6), 1.0)), 100.0, seed=9)
    back = PathRecord.from_bytes(path.to_bytes())
    assert back == path
    assert np.array_equal(back.mark_ids, path.mark_ids)


def test_events_sorted_with_immigrants_first_on_ties():
    path = simulate_path(single(0.8), 300.0, seed=4)
    assert np.all(np.diff(path.times) >= 0)
    assert np.array_equal(np.lexsort((path.origins, path.times)), np.arange(len(path)))
    assert np.all(path.times <= path.horizon)


def test_csv_lists_every_event():
    path = simulate_path(single(), 50.0, seed=1)
    lines = path.to_csv().splitlines()
    assert lines[1] == "time,origin,mark" and len(lines) == 2 + len(path)


@pytest.mark.parametrize("kernel", [PowerKernel(0.75, 1.0, 2.5), BoxcarKernel(0.5, 1.0), HumpKernel(0.5, 2.0)],
                         ids=lambda k: k.family)
def test_general_kernels_have_right_rate(kernel):
    spec = ModelSpec(1.0, ONE, ONE, kernel, theta0=1.2)
    counts = [simulate_path(spec, 200.0, seed=11, path_index=r).hawkes_times.size for r in range(40)]
    # E N_H(T) <= T ||R_I||; start-up deficit is small here
    mean = np.mean(counts) / 200.0
    assert 0.8 < mean <= 1.0 + 4 * np.std(counts) / 200 / math.sqrt(40)
    path = simulate_path(spec, 100.0, seed=1)
    assert 0 < path.acceptance_ratio <= 1


def test_acceptance_ratio_bounds():
    path = simulate_path(single(), 200.0, seed=2)
    assert 0 < path.acceptance_ratio <= 1 and path.proposed >= path.accepted


def test_mark_frequencies_match_hawkes_law():
    marks_H = DiscreteMarks((0.2, 0.8))
    spec = ModelSpec(1.0, DiscreteMarks((0.5, 0.5)), marks_H, ExponentialKernel((0.5, 0.5), 1.0))
    path = simulate_path(spec, 5000.0, seed=8)
    ids = path.mark_ids[path.origins == HAWKES]
    freq = np.mean(ids == 1)
    se = math.sqrt(0.2 * 0.8 / ids.size)
    assert abs(freq - 0.8) < 4 * se
    imm = path.mark_ids[path.origins == IMMIGRATION]
    assert abs(np.mean(imm == 1) - 0.5) < 4 * math.sqrt(0.25 / imm.size)


# -- functionals ---------------------------------------------------------------


def test_intensity_without_events_is_mu0():
    spec = single(mu0=ConstantMu0(0.7))
    assert intensity_at(spec, hand_path([], []), 3.0) == 0.7


def test_intensity_after_one_event():
    spec = single()
    path = hand_path([1.0], [HAWKES])
    assert intensity_at(spec, path, 2.0) == pytest.approx(0.5 * math.exp(-1), abs=1e-15)
    assert intensity_at(spec, path, 2.0) == pytest.approx(0.18394, abs=1e-5)


def test_intensity_is_left_limit():
    spec = single()
    path = hand_path([1.0, 2.0], [IMMIGRATION, HAWKES])
    assert intensity_at(spec, path, 2.0) == pytest.approx(0.5 * math.exp(-1))
    assert intensity_at(spec, path, 2.0 + 1e-12) == pytest.approx(0.5 * math.exp(-1) + 0.5, rel=1e-9)


def test_out_of_range():
    path = hand_path([1.0], [HAWKES], horizon=5.0)
    with pytest.raises(OutOfRange):
        intensity_at(single(), path, 6.0)
    with pytest.raises(OutOfRange):
        counting(path, -1.0)


def test_cumulative_intensity_closed_form_matches_riemann():
    spec = ModelSpec(1.0, ONE, ONE, HumpKernel(0.5, 2.0))
    path = simulate_path(spec, 30.0, seed=1)
    exact = cumulative_intensity(spec, path, 30.0)
    grid = np.arange(0.0, 30.0, 1e-3) + 5e-4
    riemann = 1e-3 * sum(intensity_at(spec, path, float(s)) for s in grid)
    assert exact == pytest.approx(riemann, rel=1e-3)


def test_shot_noise_zero_and_unit():
    spec = single(shot=UnitStepShot(0.0))
    path = simulate_path(spec, 50.0, seed=2)
    assert shot_noise_at(spec, path, None, 50.0) == (0.0, 0.0)
    unit = UnitStepShot()
    sH, sI = shot_noise_at(spec, path, unit, 30.0)
    assert sH == counting(path, 30.0) and sI == counting(path, 30.0, origin=IMMIGRATION)


def test_population_integral_shot_on_hand_path():
    spec = build_model(single_offspring_boxcar(toxin=PopulationIntegralToxin(), integration_samples=100))
    from markedhawkes.microbes import MicrobeMark
    tox = (PopulationIntegralToxin(),)
    m1 = MicrobeMark("I", 1, (2.0,), tox)
    m2 = MicrobeMark("H", 1, (0.5,), tox)
    path = PathRecord(np.array([1.0, 2.0]), np.array([0, 1], np.uint8), np.array([0, 1], np.uint32),
                      10.0, 0, 0, "", 1, 1, mark_table=(m1, m2))
    sH, sI = shot_noise_at(spec, path, None, 2.5)
    assert sI == pytest.approx(min(1.5, 2.0)) and sH == pytest.approx(min(0.5, 0.5))


def test_counting_predicates():
    path = hand_path([0.5, 1.0, 2.0, 3.0], [HAWKES, HAWKES, IMMIGRATION, HAWKES], [0, 1, 0, 1])
    assert counting(hand_path([], []), 5.0) == 0
    assert counting(path, 5.0) == 3
    assert counting(path, 5.0, lambda u: True) == 3
    assert counting(path, 5.0, lambda u: u == 1) == 2
    assert counting(path, 1.0) == 2


@given(seed=st.integers(0, 2**32 - 1))
def test_compensator_never_negative_and_counts_consistent(seed):
    spec = single(0.7)
    path = simulate_path(spec, 20.0, seed=seed)
    assert cumulative_intensity(spec, path, 20.0) >= 0
    assert counting(path, 20.0) + counting(path, 20.0, origin=IMMIGRATION) == len(path)


def test_microbe_paths_have_no_hawkes_events_without_budding():
    from markedhawkes.microbes import BoxcarBudding
    spec = build_model(single_offspring_boxcar(gamma_H=BoxcarBudding(0.0), gamma_I=BoxcarBudding(0.0),
                                       integration_samples=100))
    path = simulate_path(spec, 200.0, seed=1)
    assert path.hawkes_times.size == 0 and path.immigration_times.size > 100
