"""Acceptance suite: ten criteria, each printing one PASS/FAIL line.

Tolerances are the stated ones; nothing here is tuned to make a run pass.
"""

import math

import numpy as np
import pytest
import yaml

from markedhawkes import limits
from markedhawkes.cli import main
from markedhawkes.microbes import PopulationIntegralToxin, build_model, progeny_constants, single_offspring_boxcar
from markedhawkes.microbes import population_integral_constants
from markedhawkes.model import DiscreteMarks, ExponentialKernel, ModelSpec, SaturatingShot, WindowShot
from markedhawkes.model import stationary_mu0
from markedhawkes.montecarlo import Checks, ExperimentConfig, Functional, mean_intensity_check, run_experiment
from markedhawkes.resolvent import GridFunction, build_table, l1_and_tail, solve_resolvent
from markedhawkes.scenarios import exponential_single, exponential_two_atom, power_single
from markedhawkes.simulate import simulate_path
from oracles import exponential_resolvent, multitype_count_covariance

pytestmark = pytest.mark.slow

NO_CHECKS = Checks(None, None, None, None, None)


@pytest.fixture
def report(capsys):
    def emit(tag: str, ok: bool, detail: str) -> bool:
        with capsys.disabled():
            print(f"\n{tag}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok
    return emit


def within(observed, expected, rel):
    return abs(observed - expected) <= rel * abs(expected)


# -- A1 ------------------------------------------------------------------------------


def test_a1_resolvent_oracle(report):
    parts, ok = [], True
    for a, b in ((0.5, 1.0), (0.9, 1.0)):
        errs = []
        for h in (2e-3, 1e-3):
            R = solve_resolvent(GridFunction.sample(lambda t: a * np.exp(-b * t), h, 40.0))
            errs.append(float(np.max(np.abs(R.values - exponential_resolvent(a, b, R.t)))))
        ratio = errs[0] / errs[1]
        ok &= errs[1] < 1e-5 and ratio >= 3.5
        parts.append(f"a={a}: err {errs[1]:.2e}, halving ratio {ratio:.2f}")
    assert report("A1 resolvent oracle", ok, "; ".join(parts))


# -- A2 ------------------------------------------------------------------------------


def test_a2_l1_identities(report):
    cases = [
        ("exp m=0.5", exponential_single(stationary=False), dict(h=1e-3, horizon=40.0)),
        ("exp m=0.9", exponential_single(0.9, stationary=False), dict(h=1e-3, horizon=200.0)),
        ("exp two-atom", ModelSpec(1.0, DiscreteMarks((1.0, 0.0)), DiscreteMarks((0.5, 0.5)),
                                   ExponentialKernel((0.3, 0.7), 1.0)), dict(h=1e-3, horizon=60.0)),
        ("power m=0.2", power_single(a=0.3), dict(h=0.01, horizon=1000.0)),
        ("power m=0.5", power_single(a=0.75), dict(h=0.01, horizon=1000.0)),
        ("power m=0.7", power_single(a=1.05), dict(h=0.01, horizon=1000.0)),
    ]
    parts, ok = [], True
    for name, spec, grid in cases:
        t = build_table(spec, **grid)
        m = spec.nu_H.expect(lambda u: spec.kernel.l1(u))
        phi_I = spec.nu_I.expect(lambda u: spec.kernel.l1(u))
        eH, eI = abs(t.l1_RH - m / (1 - m)), abs(t.l1_RI - phi_I / (1 - m))
        ok &= eH < 1e-3 and eI < 1e-3
        parts.append(f"{name}: |dR_H| {eH:.1e}, |dR_I| {eI:.1e}")
    assert report("A2 L1 identities", ok, "; ".join(parts))


# -- A3 ------------------------------------------------------------------------------


def test_a3_mean_intensity(report):
    spec = exponential_single(stationary=False)
    rep = mean_intensity_check(spec, 200.0, 2000, np.linspace(10.0, 200.0, 20), seed=11)
    comp_z = rep.compensator_mean / rep.compensator_se
    assert report("A3 mean intensity", rep.passed,
                  f"max |z| over 20 probes {rep.max_abs_z:.2f} (limit 4); compensator z {comp_z:.2f}")


# -- A4 ------------------------------------------------------------------------------


def test_a4_flln(report):
    spec = exponential_single(stationary=False)
    fns = (Functional("hawkes_count"), Functional("shot_H"))
    rep = run_experiment(ExperimentConfig(spec, (50.0, 200.0, 800.0), 200, functionals=fns, seed=3, mode="lln"))
    detail = "; ".join(f"{v.name.split(':')[0]} medians {v.detail}" for v in rep.verdicts)
    assert report("A4 FLLN", rep.passed and len(rep.verdicts) == 2, detail)


# -- A5, A6 (single atom), A7 share one run -------------------------------------------------

GRID = (0.25, 0.5, 0.75, 1.0)


@pytest.fixture(scope="module")
def single_run():
    spec = exponential_single(shot=SaturatingShot(1.0, 1.0))
    fns = (Functional("cumulative_intensity"), Functional("total_count"), Functional("shot_total"))
    cfg = ExperimentConfig(spec, (500.0,), 10_000, GRID, fns, seed=20240501, checks={f.name: NO_CHECKS for f in fns})
    return spec, run_experiment(cfg)


def test_a5_cumulative_intensity_clt(report, single_run):
    spec, rep = single_run
    r = rep.report("cumulative_intensity", 500.0)
    var, cov = r.var[3], r.cov[1][3]
    ok_v, ok_c, ok_ks = within(var, 2.0, 0.10), within(cov, 1.0, 0.15), r.ks_p > 0.01
    assert limits.sigma_Z2(spec) == pytest.approx(2.0, rel=1e-12)
    assert report("A5 cumulative-intensity CLT", ok_v and ok_c and ok_ks,
                  f"var {var:.4f} vs 2.0 +-10%; cov(0.5,1) {cov:.4f} vs 1.0 +-15%; KS p {r.ks_p:.3g} > 0.01")


def batch_means_variances(spec, horizon, batch, seed):
    """Per-label Hawkes count variance rates from batch means on one long path."""
    path = simulate_path(spec, horizon, seed)
    hawkes = path.origins == 1
    nb = int(horizon // batch)
    out = []
    for k in range(len(spec.nu_H.probs)):
        sel = path.times[hawkes & (path.mark_ids == k)]
        counts = np.bincount((sel // batch).astype(int), minlength=nb)[:nb]
        out.append((float(np.var(counts, ddof=1) / batch), float(np.var(counts, ddof=1) / batch * math.sqrt(2 / nb))))
    return out


def test_a6_point_measure_clt(report, single_run):
    spec, rep = single_run
    r = rep.report("total_count", 500.0)
    ok_total = within(r.var[3], 8.0, 0.10)
    parts = [f"total count var {r.var[3]:.4f} vs 8.0 +-10%"]

    two = exponential_two_atom()
    # reference values by two routes before the acceptance run
    analytic = [limits.measure_clt_variance(two, limits.indicator(k)) for k in (0, 1)]
    _, _, C_H = multitype_count_covariance([0.5, 0.5], [[0.15, 0.35], [0.15, 0.35]])
    brute = batch_means_variances(two, 500_000.0, 500.0, seed=77)
    ok_ref = all(abs(analytic[k] - C_H[k, k]) < 1e-9 for k in (0, 1))
    ok_ref &= all(abs(analytic[k] - brute[k][0]) <= 4 * brute[k][1] for k in (0, 1))
    parts.append("references " + ", ".join(f"{analytic[k]:.4f}/{C_H[k, k]:.4f}/{brute[k][0]:.4f}" for k in (0, 1)))

    fns = tuple(Functional("hawkes_count", atom=k) for k in (0, 1))
    checks = {f.name: Checks(None, None, None, None, 3.0) for f in fns}
    atoms = run_experiment(ExperimentConfig(two, (500.0,), 10_000, GRID, fns, seed=20240502, checks=checks))
    ok_atoms = True
    for k, f in enumerate(fns):
        a = atoms.report(f.name, 500.0)
        drift_ok = a.passed
        var_ok = within(a.var[3], analytic[k], 0.10)
        ok_atoms &= drift_ok and var_ok
        assert a.drift == pytest.approx(0.5, rel=1e-9)
        parts.append(f"atom {k}: var {a.var[3]:.4f} vs {analytic[k]:.4f} +-10%, drift {a.verdicts[0].detail} (limit 3)")
    assert report("A6 point-measure CLT", ok_total and ok_ref and ok_atoms, "; ".join(parts))


def test_a7_shot_noise_clt(report, single_run):
    spec, rep = single_run
    ref = limits.shot_clt_variances(spec).total
    var = rep.report("shot_total", 500.0).var[3]
    ok_sat = within(var, ref, 0.10)
    window = exponential_single(shot=WindowShot(1.0, 1.0))
    fn = Functional("shot_total")
    w = run_experiment(ExperimentConfig(window, (500.0,), 2000, GRID, (fn,), seed=20240503,
                                        checks={fn.name: NO_CHECKS})).report(fn.name, 500.0)
    ok_win = w.var[3] < 0.05
    assert report("A7 shot-noise CLT", ok_sat and ok_win,
                  f"saturating var {var:.4f} vs {ref:.4f} +-10%; compact-support var {w.var[3]:.4f} < 0.05")


# -- A8 ------------------------------------------------------------------------------


def test_a8_microbes(report):
    params = single_offspring_boxcar(toxin=PopulationIntegralToxin())
    spec = build_model(params)
    spec = spec.replace(mu0=stationary_mu0(spec))
    prog = progeny_constants(params)
    pop = population_integral_constants(params)
    shot_ref = limits.shot_clt_variances(spec).total

    fns = (Functional("total_count"), Functional("shot_total"))
    checks = {fns[0].name: Checks(None, None, None, None, 3.0), fns[1].name: NO_CHECKS}
    rep = run_experiment(ExperimentConfig(spec, (500.0,), 4000, (0.5, 1.0), fns, seed=20240504, checks=checks))
    count, shot = rep.report(fns[0].name, 500.0), rep.report(fns[1].name, 500.0)

    results = {
        "progeny drift 2 (analytic)": abs(prog.drift - 2.0) < 1e-12,
        f"progeny drift (MC, {count.verdicts[0].detail})": count.passed,
        f"progeny var {count.var[1]:.3f} vs stated 8.0 +-10%": within(count.var[1], 8.0, 0.10),
        f"progeny var {count.var[1]:.3f} vs cluster value {prog.total_variance:.3f} +-10%":
            within(count.var[1], prog.total_variance, 0.10),
        f"population-integral constant {pop.total_variance:.6f} vs shot variance {shot_ref:.6f} within 1e-6":
            abs(pop.total_variance - shot_ref) <= 1e-6,
        f"population-integral var {shot.var[1]:.3f} vs {pop.total_variance:.3f} +-10%":
            within(shot.var[1], pop.total_variance, 0.10),
    }
    detail = "; ".join(f"{k}: {'ok' if v else 'FAIL'}" for k, v in results.items())
    assert report("A8 microbes", all(results.values()), detail)


# -- A9 ------------------------------------------------------------------------------


def test_a9_tail_decay(report):
    table = build_table(power_single(a=0.75), h=0.01, horizon=1000.0)
    slope = l1_and_tail(table.RH).tail_fit
    assert report("A9 tail decay", slope <= -1.2, f"fitted slope {slope:.3f} <= -1.2")


# -- A10 -----------------------------------------------------------------------------


def test_a10_determinism(report, tmp_path):
    doc = {"seed": 5, "model": {"lambda_I": 1.0, "kernel": {"family": "exponential", "a": 0.5, "b": 1.0},
                                "mu0": {"family": "stationary"}, "shot": {"family": "saturating"}},
           "experiment": {"T": [100, 200], "replicas": 300,
                          "functionals": [{"kind": "cumulative_intensity"}, {"kind": "total_count"},
                                          {"kind": "shot_total"}]}}
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump(doc))
    names = ("report.json", "report.csv")
    same = True
    for cmd in ("verify-clt", "verify-lln"):
        outs = []
        for i, threads in enumerate(("1", "1", "2")):
            d = tmp_path / f"{cmd}-{i}"
            main([cmd, "--config", str(cfg), "--out", str(d), "--threads", threads])
            outs.append(tuple((d / n).read_bytes() for n in names))
        same &= outs[0] == outs[1] == outs[2]
    assert report("A10 determinism", same, "verify-clt and verify-lln: repeat and 1 vs 2 threads byte-identical")
