"""Drift, variance and correlation constants of the law of large numbers and
central limit theorems, all per unit time.

Every CLT variance is computed from the Gaussian white-noise representation
of the limit: the Hawkes white noise ``W_H`` has intensity
``lambda_I ||R_I|| dt nu_H(du)``, the immigration white noise ``W_I`` has
intensity ``lambda_I dt nu_I(du)``, they are independent, and the
cumulative-intensity limit is ``sigma_Z B_Z = W_H(||R||) + W_I(||R||)``.

Constants can be taken from a :class:`~markedhawkes.resolvent.ResolventTable`
(grid values) or, when no table is given, from the closed-form L1 identities
``||R_I|| = ||phi_I|| / (1 - m)`` and ``||R(u)|| = ||phi(u)|| / (1 - m)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable

import numpy as np

from .errors import NotStandardForm
from .model import DiscreteMarks, ModelSpec, ShotShape, describe, immigrant_mass, require_stable


class _Norms:
    """L1 norms of the resolvents used by every constant."""

    def __init__(self, spec: ModelSpec, table=None):
        self.spec = spec
        self.m = require_stable(spec)
        k = spec.kernel
        if table is None:
            self.l1_RH = self.m / (1.0 - self.m)
            self.l1_RI = immigrant_mass(spec) / (1.0 - self.m)
            self._per_mark = None
        else:
            self.l1_RH = table.l1_RH
            self.l1_RI = table.l1_RI
            self._per_mark = dict(table.l1_per_mark) if table.l1_per_mark else None
        self._scale = 1.0 + self.l1_RH
        self._k = k

    def R(self, u) -> float:
        """``||R(u)||_1``."""
        if self._per_mark is not None and not isinstance(u, (tuple, list)) and int(u) in self._per_mark:
            return self._per_mark[int(u)]
        return self._k.l1(u) * self._scale


def _as_fn(f) -> Callable[[Any], float]:
    if callable(f):
        return f
    if np.ndim(f) == 0:
        c = float(f)
        return lambda u: c
    vals = tuple(float(v) for v in f)
    return lambda u: vals[int(u)]


def indicator(labels) -> Callable[[Any], float]:
    """Mark functional ``1{u in labels}`` for discrete marks."""
    s = {int(labels)} if np.ndim(labels) == 0 else {int(k) for k in labels}
    return lambda u: 1.0 if int(u) in s else 0.0


# ---------------------------------------------------------------------------
# Law of large numbers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Drifts:
    hawkes_drift: float
    immigration_drift: float
    shot_drift_H: float | None
    shot_drift_I: float | None
    hawkes_drift_atoms: tuple[float, ...] | None
    immigration_drift_atoms: tuple[float, ...] | None


def lln_drifts(spec: ModelSpec, table=None, shot: ShotShape | None = None) -> Drifts:
    """Per-unit-time drifts of the counting measures and the shot noises."""
    nm = _Norms(spec, table)
    lam = spec.lambda_I
    rate_H = lam * nm.l1_RI
    shot = shot if shot is not None else spec.shot
    sH = sI = None
    if shot is not None:
        sH = spec.nu_H.expect(shot.psi_inf) * rate_H
        sI = spec.nu_I.expect(shot.psi_inf) * lam
    atoms_H = atoms_I = None
    if isinstance(spec.nu_H, DiscreteMarks):
        atoms_H = tuple(rate_H * p for p in spec.nu_H.probs)
        atoms_I = tuple(lam * p for p in spec.nu_I.probs)
    return Drifts(rate_H, lam, sH, sI, atoms_H, atoms_I)


# ---------------------------------------------------------------------------
# Central limit theorems
# ---------------------------------------------------------------------------


def sigma_Z2(spec: ModelSpec, table=None) -> float:
    """Variance rate of the cumulative-intensity limit.

    ``lambda_I (||R_I|| nu_H(||phi||^2) + nu_I(||phi||^2)) / (1 - m)^2``.
    """
    nm = _Norms(spec, table)
    k = spec.kernel
    aH = spec.nu_H.expect(lambda u: k.l1(u) ** 2)
    aI = spec.nu_I.expect(lambda u: k.l1(u) ** 2)
    return spec.lambda_I * (nm.l1_RI * aH + aI) / (1.0 - nm.m) ** 2


def sigma_Z(spec: ModelSpec, table=None) -> float:
    return math.sqrt(sigma_Z2(spec, table))


def sigma_Z2_white_noise(spec: ModelSpec, table=None) -> float:
    """Same constant written as ``Var(W_H(||R||) + W_I(||R||))``."""
    nm = _Norms(spec, table)
    lam = spec.lambda_I
    return lam * nm.l1_RI * spec.nu_H.expect(lambda u: nm.R(u) ** 2) + lam * spec.nu_I.expect(lambda u: nm.R(u) ** 2)


def cross_term(spec: ModelSpec, f, table=None) -> float:
    """``Cov(W_H(f), sigma_Z B_Z) = lambda_I ||R_I|| nu_H(f ||R||)``."""
    nm = _Norms(spec, table)
    fn = _as_fn(f)
    return spec.lambda_I * nm.l1_RI * spec.nu_H.expect(lambda u: fn(u) * nm.R(u))


def measure_clt_variance(spec: ModelSpec, f=1.0, table=None) -> float:
    """Variance rate of the rescaled Hawkes error ``N_H(f)``.

    The limit is ``W_H(f + nu_H(f) ||R||) + nu_H(f) W_I(||R||)``.
    """
    nm = _Norms(spec, table)
    fn = _as_fn(f)
    lam = spec.lambda_I
    mean_f = spec.nu_H.expect(fn)
    vH = spec.nu_H.expect(lambda u: (fn(u) + mean_f * nm.R(u)) ** 2)
    vI = spec.nu_I.expect(lambda u: nm.R(u) ** 2)
    return max(0.0, lam * nm.l1_RI * vH + lam * mean_f**2 * vI)


def total_count_clt_variance(spec: ModelSpec, f=1.0, table=None) -> float:
    """Variance rate of the rescaled error of ``N_I(f) + N_H(f)``.

    The limit is ``W_I(f + nu_H(f)||R||) + W_H(f + nu_H(f)||R||)``; for an
    unmarked standard Hawkes process with ``f = 1`` this is ``lambda/(1-m)^3``.
    """
    nm = _Norms(spec, table)
    fn = _as_fn(f)
    lam = spec.lambda_I
    mean_f = spec.nu_H.expect(fn)
    g = lambda u: (fn(u) + mean_f * nm.R(u)) ** 2  # noqa: E731
    return lam * spec.nu_I.expect(g) + lam * nm.l1_RI * spec.nu_H.expect(g)


@dataclass(frozen=True)
class ShotVariances:
    var_I: float
    var_H: float
    cov_IH: float
    total: float


def shot_clt_variances(spec: ModelSpec, shot: ShotShape | None = None, table=None) -> ShotVariances:
    """Variance rates of the rescaled immigrant and Hawkes shot noises.

    Only the terminal impact ``psi(inf, u)`` enters the limit.
    """
    shot = shot if shot is not None else spec.shot
    if shot is None:
        raise ValueError("no shot shape given and the model carries none")
    nm = _Norms(spec, table)
    lam = spec.lambda_I
    pinf = shot.psi_inf
    pH = spec.nu_H.expect(pinf)
    var_I = lam * spec.nu_I.expect(lambda u: pinf(u) ** 2)
    var_H = (lam * nm.l1_RI * spec.nu_H.expect(lambda u: (pinf(u) + pH * nm.R(u)) ** 2)
             + lam * pH**2 * spec.nu_I.expect(lambda u: nm.R(u) ** 2))
    cov = lam * pH * spec.nu_I.expect(lambda u: pinf(u) * nm.R(u))
    total = (lam * spec.nu_I.expect(lambda u: (pinf(u) + pH * nm.R(u)) ** 2)
             + lam * nm.l1_RI * spec.nu_H.expect(lambda u: (pinf(u) + pH * nm.R(u)) ** 2))
    return ShotVariances(var_I, var_H, cov, total)


# ---------------------------------------------------------------------------
# Standard (constant base rate) marked Hawkes processes
# ---------------------------------------------------------------------------


def _require_standard(spec: ModelSpec) -> None:
    if describe(spec.nu_I) != describe(spec.nu_H):
        raise NotStandardForm("a constant base rate corresponds to immigrant marks distributed like Hawkes marks")
    if not math.isfinite(spec.mu0.l1):
        raise NotStandardForm("exogenous intensity beyond the base rate must be integrable")


@dataclass(frozen=True)
class StandardHawkesConstants:
    """Limit of the total count of a standard marked Hawkes process.

    ``coef_*`` are the Brownian coefficients ``sqrt(lambda)``,
    ``sqrt(lambda m / (1 - m))`` and ``sigma_Z``.  ``cov_*`` and ``corr_*``
    come from the white-noise representation; ``printed_corr_*`` are the
    correlation values as usually displayed alongside this limit, kept for
    comparison only.
    """

    drift: float
    coef_I: float
    coef_H: float
    sigma_Z: float
    sigmaZ2: float
    cov_IZ: float
    cov_HZ: float
    corr_IZ: float | None
    corr_HZ: float | None
    printed_corr_IZ: float | None
    printed_corr_HZ: float | None
    total_variance: float
    total_variance_closed: float


def standard_hawkes_constants(spec: ModelSpec, table=None) -> StandardHawkesConstants:
    """Constants for the total count ``N_I + N_H`` when ``nu_I = nu_H``."""
    _require_standard(spec)
    nm = _Norms(spec, table)
    lam, m = spec.lambda_I, nm.m
    s2 = sigma_Z2(spec, table)
    s = math.sqrt(s2)
    vI, vH = lam, lam * nm.l1_RI
    ER = spec.nu_H.expect(nm.R)
    cov_IZ = lam * ER
    cov_HZ = vH * ER
    corr = lambda c, v: c / math.sqrt(v * s2) if v > 0 and s2 > 0 else None  # noqa: E731
    printed_IZ = math.sqrt(lam) / s / (1 - m) if s > 0 else None
    printed_HZ = math.sqrt(lam) / s * math.sqrt(m) / (1 - m) ** 1.5 if s > 0 else None
    total = vI + vH + s2 + 2 * cov_IZ + 2 * cov_HZ
    closed = total_count_clt_variance(spec, 1.0, table)
    return StandardHawkesConstants(
        drift=lam * (1 + nm.l1_RI), coef_I=math.sqrt(vI), coef_H=math.sqrt(vH), sigma_Z=s, sigmaZ2=s2,
        cov_IZ=cov_IZ, cov_HZ=cov_HZ, corr_IZ=corr(cov_IZ, vI), corr_HZ=corr(cov_HZ, vH),
        printed_corr_IZ=printed_IZ, printed_corr_HZ=printed_HZ,
        total_variance=total, total_variance_closed=closed,
    )


@dataclass(frozen=True)
class ComponentConstants:
    """Limit of one component ``N_k`` of a multivariate Hawkes process with common intensity."""

    drift: float
    ck2: float
    cm2: float
    cm2_printed: float
    cov_km: float
    corr_km: float | None
    corr_km_printed: float | None
    total_variance: float


def common_intensity_components(spec: ModelSpec, table=None) -> tuple[ComponentConstants, ...]:
    """Per-label constants ``N_k = N_I({k}) + N_H({k})`` for discrete standard models.

    The component limit is ``c_k B_k + c_m p_k B_m`` with ``c_m = sigma_Z``
    and ``c_k^2 = lambda p_k / (1 - m)``.
    """
    _require_standard(spec)
    if not isinstance(spec.nu_H, DiscreteMarks):
        raise NotStandardForm("components need a discrete mark space")
    nm = _Norms(spec, table)
    lam, m = spec.lambda_I, nm.m
    k = spec.kernel
    s2 = sigma_Z2(spec, table)
    unweighted = sum(k.l1(i) for i in range(spec.nu_H.size))
    m2 = spec.nu_H.expect(lambda u: k.l1(u) ** 2)
    cm2_printed = lam * m2 / abs(1 - unweighted) ** 3 if unweighted != 1 else math.inf
    out = []
    for i, p in enumerate(spec.nu_H.probs):
        ck2 = lam * p / (1 - m)
        cov = lam * (1 + nm.l1_RI) * p * nm.R(i)
        corr = cov / math.sqrt(ck2 * s2) if ck2 > 0 and s2 > 0 else None
        printed = math.sqrt(ck2 / s2) * k.l1(i) if s2 > 0 else None
        total = ck2 + p * p * s2 + 2 * p * cov
        out.append(ComponentConstants(lam * p / (1 - m), ck2, s2, cm2_printed, cov, corr, printed, total))
    return tuple(out)


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------


class LimitConstants:
    """Flat, ordered collection of named constants (``None`` when undefined)."""

    def __init__(self, values: dict[str, float | None]):
        self._values = dict(values)

    def __getattr__(self, name):
        try:
            return self.__dict__["_values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def __getitem__(self, name):
        return self._values[name]

    def __contains__(self, name):
        return name in self._values

    def as_dict(self) -> dict[str, float | None]:
        return dict(self._values)

    def to_json(self) -> str:
        clean = {k: (None if v is None or (isinstance(v, float) and not math.isfinite(v)) else float(v))
                 for k, v in self._values.items()}
        return json.dumps(clean, indent=1, sort_keys=True) + "\n"


def compute_constants(spec: ModelSpec, table=None) -> LimitConstants:
    """Every constant that is defined for ``spec``."""
    nm = _Norms(spec, table)
    d = lln_drifts(spec, table)
    v: dict[str, float | None] = {
        "branching_ratio": nm.m,
        "l1_RH": nm.l1_RH,
        "l1_RI": nm.l1_RI,
        "hawkes_drift": d.hawkes_drift,
        "immigration_drift": d.immigration_drift,
        "shot_drift_H": d.shot_drift_H,
        "shot_drift_I": d.shot_drift_I,
        "sigmaZ2": sigma_Z2(spec, table),
        "sigmaZ2_white_noise": sigma_Z2_white_noise(spec, table),
        "var_hawkes_count": measure_clt_variance(spec, 1.0, table),
        "var_immigration_count": spec.lambda_I,
        "var_total_count": total_count_clt_variance(spec, 1.0, table),
    }
    if spec.shot is not None:
        sv = shot_clt_variances(spec, spec.shot, table)
        v.update(shot_var_I=sv.var_I, shot_var_H=sv.var_H, shot_cov_IH=sv.cov_IH, shot_var_total=sv.total)
    else:
        v.update(shot_var_I=None, shot_var_H=None, shot_cov_IH=None, shot_var_total=None)
    if isinstance(spec.nu_H, DiscreteMarks):
        for k in range(spec.nu_H.size):
            v[f"hawkes_drift_atom{k}"] = d.hawkes_drift_atoms[k]
            v[f"var_hawkes_atom{k}"] = measure_clt_variance(spec, indicator(k), table)
            v[f"var_total_atom{k}"] = total_count_clt_variance(spec, indicator(k), table)
    try:
        c = standard_hawkes_constants(spec, table)
    except NotStandardForm:
        pass
    else:
        for key, val in asdict(c).items():
            v[f"standard_{key}"] = val
    return LimitConstants(v)
