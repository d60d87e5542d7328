"""Budding microbes in a host as a marked Hawkes system.

A mark ``(origin, k, y, toxins)`` records a litter of ``k`` microbes with
life-lengths ``y_1..y_k``.  The kernel sums the budding rates of the litter,
``phi(t, u) = sum_j gamma(t, y_j)``, and the shot shape sums their cumulative
toxin functions, ``psi(t, u) = sum_j T_j(t, y_j)``.

Life-length laws come with Gauss quadrature rules, so the norm integrals and
(for litters of at most three) every mark integral used by ``limits`` are
evaluated by deterministic quadrature rather than Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import ClassVar

import numpy as np
from scipy import special
from scipy.integrate import quad

from .errors import ConditionViolated, InvalidKernel, InvalidParams, Unstable
from .model import Kernel, ModelSpec, Mu0, SampledMarks, ShotShape, ZeroMu0

_QUAD_NODES = 64  # one-dimensional norm integrals
_TENSOR_NODES = 24  # per life-length in the mark quadrature rule
_MAX_TENSOR_LITTER = 3


# ---------------------------------------------------------------------------
# Life-length laws
# ---------------------------------------------------------------------------


class LifeLaw:
    family: ClassVar[str] = "abstract"

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def rule(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Gauss nodes and weights for ``E[f(y)]``."""
        raise NotImplementedError

    def survival(self, t) -> np.ndarray:
        raise NotImplementedError

    def moment(self, k: int) -> float:
        raise NotImplementedError

    def expect(self, fn, n: int = _QUAD_NODES) -> float:
        y, w = self.rule(n)
        return float(np.dot(w, np.asarray(fn(y), dtype=float) * np.ones_like(y)))


@dataclass(frozen=True)
class ExponentialLife(LifeLaw):
    mean: float = 1.0
    family: ClassVar[str] = "exponential"

    def __post_init__(self):
        if not self.mean > 0:
            raise InvalidParams("exponential life needs mean > 0")

    def draw(self, rng, n):
        return rng.exponential(self.mean, n)

    def rule(self, n):
        x, w = np.polynomial.laguerre.laggauss(n)
        return self.mean * x, w

    def survival(self, t):
        return np.exp(-np.asarray(t, dtype=float) / self.mean)

    def moment(self, k):
        return math.factorial(k) * self.mean**k


@dataclass(frozen=True)
class UniformLife(LifeLaw):
    a: float = 0.0
    b: float = 1.0
    family: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not (0 <= self.a < self.b):
            raise InvalidParams("uniform life needs 0 <= a < b")

    def draw(self, rng, n):
        return rng.uniform(self.a, self.b, n)

    def rule(self, n):
        x, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * (self.b - self.a) * (x + 1.0) + self.a, 0.5 * w

    def survival(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip((self.b - t) / (self.b - self.a), 0.0, 1.0)

    def moment(self, k):
        return (self.b ** (k + 1) - self.a ** (k + 1)) / ((k + 1) * (self.b - self.a))


@dataclass(frozen=True)
class PointLife(LifeLaw):
    y: float = 1.0
    family: ClassVar[str] = "point"

    def __post_init__(self):
        if not self.y > 0:
            raise InvalidParams("point life needs y > 0")

    def draw(self, rng, n):
        return np.full(n, float(self.y))

    def rule(self, n):
        return np.array([float(self.y)]), np.array([1.0])

    def survival(self, t):
        return (np.asarray(t, dtype=float) < self.y).astype(float)

    def moment(self, k):
        return float(self.y) ** k


# ---------------------------------------------------------------------------
# Budding rates gamma(t, y), zero for t >= y
# ---------------------------------------------------------------------------


class Budding:
    family: ClassVar[str] = "abstract"

    def shape(self, t):
        """Rate at age ``t`` ignoring death."""
        raise NotImplementedError

    def shape_integral(self, t):
        raise NotImplementedError

    def shape_majorant(self, t):
        return self.shape(t)

    def shape_moment(self, theta: float, y: float) -> float:
        raise NotImplementedError

    @property
    def bound(self) -> float:
        raise NotImplementedError

    def rate(self, t, y):
        t = np.asarray(t, dtype=float)
        return np.where(t < y, self.shape(t), 0.0)

    def majorant(self, t, y):
        """``sup_{s >= t} gamma(s, y)``."""
        t = np.asarray(t, dtype=float)
        return np.where(t < y, self.shape_majorant(t), 0.0)

    def integral(self, t, y):
        return self.shape_integral(np.minimum(np.asarray(t, dtype=float), y))

    def l1(self, y):
        return self.shape_integral(y)


@dataclass(frozen=True)
class BoxcarBudding(Budding):
    """Constant rate ``c`` while alive."""

    c: float
    family: ClassVar[str] = "boxcar"

    def __post_init__(self):
        if not (0 <= self.c < math.inf):
            raise InvalidKernel("boxcar budding needs a finite rate c >= 0")

    def shape(self, t):
        return self.c * np.ones_like(t)

    def shape_integral(self, t):
        return self.c * np.asarray(t, dtype=float)

    def shape_moment(self, theta, y):
        return self.c * y ** (theta + 1.0) / (theta + 1.0)

    @property
    def bound(self):
        return self.c


@dataclass(frozen=True)
class DecayBudding(Budding):
    """Rate ``c exp(-r t)`` while alive: budding slows with age."""

    c: float
    r: float = 1.0
    family: ClassVar[str] = "decay"

    def __post_init__(self):
        if not (0 <= self.c < math.inf) or not self.r > 0:
            raise InvalidKernel("decay budding needs finite c >= 0 and r > 0")

    def shape(self, t):
        return self.c * np.exp(-self.r * np.asarray(t, dtype=float))

    def shape_integral(self, t):
        return self.c / self.r * -np.expm1(-self.r * np.asarray(t, dtype=float))

    def shape_moment(self, theta, y):
        a = theta + 1.0
        return self.c * special.gamma(a) * special.gammainc(a, self.r * y) / self.r**a

    @property
    def bound(self):
        return self.c


@dataclass(frozen=True)
class HumpBudding(Budding):
    """Rate ``c r t exp(1 - r t)``: low while growing, peak ``c`` at age ``1/r``, then senescence."""

    c: float
    r: float = 1.0
    family: ClassVar[str] = "hump"

    def __post_init__(self):
        if not (0 <= self.c < math.inf) or not self.r > 0:
            raise InvalidKernel("hump budding needs finite c >= 0 and r > 0")

    def shape(self, t):
        t = np.asarray(t, dtype=float)
        return self.c * self.r * t * np.exp(1.0 - self.r * t)

    def shape_integral(self, t):
        x = self.r * np.asarray(t, dtype=float)
        return self.c * math.e / self.r * (1.0 - np.exp(-x) * (1.0 + x))

    def majorant(self, t, y):
        t = np.asarray(t, dtype=float)
        peak = np.minimum(1.0 / self.r, y)
        return np.where(t < y, self.shape(np.maximum(t, peak)), 0.0)

    def shape_moment(self, theta, y):
        a = theta + 2.0
        return self.c * math.e * self.r * special.gamma(a) * special.gammainc(a, self.r * y) / self.r**a

    @property
    def bound(self):
        return self.c


# ---------------------------------------------------------------------------
# Toxin cumulative functions T(t, y), constant for t >= y
# ---------------------------------------------------------------------------


class Toxin:
    family: ClassVar[str] = "abstract"

    def value(self, t, y):
        raise NotImplementedError

    def total(self, y):
        """``T(y, y)``."""
        return self.value(y, y)


@dataclass(frozen=True)
class UnitToxin(Toxin):
    """``T = 1`` from birth: the toxin total counts microbes."""

    family: ClassVar[str] = "unit"

    def value(self, t, y):
        return (np.asarray(t, dtype=float) >= 0).astype(float)

    def total(self, y):
        return np.ones_like(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class PopulationIntegralToxin(Toxin):
    """``T(t, y) = min(t, y)``: the toxin total is the integral of the population."""

    family: ClassVar[str] = "population_integral"

    def value(self, t, y):
        return np.minimum(np.asarray(t, dtype=float), y)

    def total(self, y):
        return np.asarray(y, dtype=float)


@dataclass(frozen=True)
class RateToxin(Toxin):
    """Release at rate ``r exp(-kappa s)`` while alive."""

    r: float = 1.0
    kappa: float = 0.0
    family: ClassVar[str] = "rate"

    def value(self, t, y):
        s = np.minimum(np.asarray(t, dtype=float), y)
        if self.kappa == 0:
            return self.r * s
        return self.r / self.kappa * -np.expm1(-self.kappa * s)


@dataclass(frozen=True)
class DeathReleaseToxin(Toxin):
    """Amount ``theta`` released at death."""

    theta: float = 1.0
    family: ClassVar[str] = "death_release"

    def value(self, t, y):
        return self.theta * (np.asarray(t, dtype=float) >= y)


# ---------------------------------------------------------------------------
# Marks and mark laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MicrobeMark:
    origin: str  # "H" or "I"
    k: int
    y: tuple[float, ...]
    toxins: tuple[Toxin, ...] = field(repr=False)

    def __post_init__(self):
        if self.k < 1 or len(self.y) != self.k or any(v <= 0 for v in self.y):
            raise InvalidParams("a litter needs k >= 1 positive life-lengths")


def _check_litter(p: tuple[float, ...], name: str) -> tuple[float, ...]:
    p = tuple(float(v) for v in p)
    if not p or any(v < 0 or not math.isfinite(v) for v in p) or abs(sum(p) - 1.0) > 1e-12:
        raise InvalidParams(f"{name} must be a finite probability vector over litter sizes 1..K")
    return p


@dataclass(frozen=True)
class LitterSampler:
    """Draws marks of one origin: litter size from ``p`` (index 0 is size 1), iid lives."""

    origin: str
    p: tuple[float, ...]
    life: LifeLaw
    toxin: Toxin

    def _make(self, ys) -> MicrobeMark:
        ys = tuple(float(v) for v in ys)
        return MicrobeMark(self.origin, len(ys), ys, (self.toxin,) * len(ys))

    def draw_many(self, rng, n):
        cdf = np.cumsum(self.p)
        cdf[-1] = 1.0
        ks = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), len(self.p) - 1) + 1
        lives = self.life.draw(rng, int(ks.sum())).tolist()
        out, pos = [], 0
        for k in ks.tolist():
            out.append(self._make(lives[pos:pos + k]))
            pos += k
        return out

    def quadrature(self):
        """Tensor Gauss rule over (k, y_1..y_k) for litters of at most three."""
        if len(self.p) > _MAX_TENSOR_LITTER:
            return None
        y1, w1 = self.life.rule(_TENSOR_NODES)
        marks, weights = [], []
        for k, pk in enumerate(self.p, start=1):
            if pk == 0:
                continue
            grids = np.meshgrid(*([y1] * k), indexing="ij")
            wgrid = np.ones_like(grids[0])
            for g in np.meshgrid(*([w1] * k), indexing="ij"):
                wgrid = wgrid * g
            for idx in np.ndindex(grids[0].shape):
                marks.append(self._make(g[idx] for g in grids))
                weights.append(pk * wgrid[idx])
        return marks, np.asarray(weights)


# ---------------------------------------------------------------------------
# Kernel, shot and exogenous intensity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MicrobeKernel(Kernel):
    """``phi(t, u) = sum_j gamma_origin(t, y_j)``."""

    gamma_H: Budding
    gamma_I: Budding
    family: ClassVar[str] = "microbe"

    def _g(self, u: MicrobeMark) -> Budding:
        return self.gamma_H if u.origin == "H" else self.gamma_I

    def phi(self, t, u):
        g = self._g(u)
        return sum(g.rate(t, y) for y in u.y)

    def majorant(self, t, u):
        g = self._g(u)
        return sum(g.majorant(t, y) for y in u.y)

    def integral(self, t, u):
        g = self._g(u)
        return sum(g.integral(t, y) for y in u.y)

    def l1(self, u):
        g = self._g(u)
        return float(sum(g.l1(y) for y in u.y))

    def sup(self, u):
        return float(self._g(u).bound * u.k)

    def moment(self, theta, u):
        g = self._g(u)
        return float(sum(g.shape_moment(theta, y) for y in u.y))

    def event_params(self, u):
        return (self._g(u), u.y)

    def exponential_profile(self, dist):
        sampler = getattr(dist, "sampler", None)
        if not isinstance(sampler, LitterSampler) or not isinstance(sampler.life, ExponentialLife):
            return None
        g = self.gamma_H if sampler.origin == "H" else self.gamma_I
        mean_k = sum(k * p for k, p in enumerate(sampler.p, start=1))
        if isinstance(g, BoxcarBudding):
            return mean_k * g.c, 1.0 / sampler.life.mean
        if isinstance(g, DecayBudding):
            return mean_k * g.c, g.r + 1.0 / sampler.life.mean
        return None

    def phi_scalar(self, age, params):
        g, ys = params
        return float(sum(g.rate(age, y) for y in ys))

    def majorant_scalar(self, age, params):
        g, ys = params
        return float(sum(g.majorant(age, y) for y in ys))

    def mean_profile(self, t, dist):
        sampler = getattr(dist, "sampler", None)
        if isinstance(sampler, LitterSampler):
            g = self.gamma_H if sampler.origin == "H" else self.gamma_I
            mean_k = sum(k * p for k, p in enumerate(sampler.p, start=1))
            t = np.asarray(t, dtype=float)
            return mean_k * g.shape(t) * sampler.life.survival(t)
        return super().mean_profile(t, dist)


@dataclass(frozen=True)
class BoxcarFastKernel(MicrobeKernel):
    """Same as :class:`MicrobeKernel` with a float-only path for boxcar budding."""

    def phi_scalar(self, age, params):
        g, ys = params
        return g.c * sum(1 for y in ys if age < y)

    majorant_scalar = phi_scalar


@dataclass(frozen=True)
class MicrobeShot(ShotShape):
    """``psi(t, u) = sum_j T_j(t, y_j)``."""

    family: ClassVar[str] = "microbe"

    def psi(self, t, u):
        return sum(tx.value(t, y) for tx, y in zip(u.toxins, u.y))

    def psi_inf(self, u):
        return float(sum(tx.total(y) for tx, y in zip(u.toxins, u.y)))

    def tail(self, t, u):
        return self.psi_inf(u) - self.psi(t, u)


@dataclass(frozen=True)
class AncestorMu0(Mu0):
    """Budding rate of the microbes present at time zero (deterministic lives)."""

    gamma: Budding
    lives: tuple[float, ...]
    family: ClassVar[str] = "ancestors"

    def value(self, t):
        out = sum(self.gamma.rate(t, y) for y in self.lives)
        return float(out) if np.ndim(t) == 0 else np.asarray(out, dtype=float) * np.ones(np.shape(t))

    def majorant(self, t):
        out = sum(self.gamma.majorant(t, y) for y in self.lives)
        return float(out) if np.ndim(t) == 0 else np.asarray(out, dtype=float) * np.ones(np.shape(t))

    def integral(self, t):
        return sum(self.gamma.integral(t, y) for y in self.lives) + 0.0 * np.asarray(t, dtype=float)

    @property
    def l1(self):
        return float(sum(self.gamma.l1(y) for y in self.lives))

    @property
    def sup(self):
        return float(self.gamma.bound * len(self.lives))

    def lp(self, p):
        if not self.lives:
            return 0.0
        pts = sorted(set(self.lives))
        return float(quad(lambda s: self.value(s) ** p, 0.0, max(pts), points=pts[:-1], limit=200)[0])


# ---------------------------------------------------------------------------
# Parameters and model construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MicrobeParams:
    p_H: tuple[float, ...]
    p_I: tuple[float, ...]
    life_H: LifeLaw
    life_I: LifeLaw
    gamma_H: Budding
    gamma_I: Budding
    toxin: Toxin = field(default_factory=UnitToxin)
    toxin_I: Toxin | None = None
    lambda_I: float = 1.0
    ancestors: tuple[float, ...] = ()
    alpha: float = 2.0
    theta0: float = 2.0
    theta1: float = 2.0
    integration_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p_H", _check_litter(self.p_H, "p_H"))
        object.__setattr__(self, "p_I", _check_litter(self.p_I, "p_I"))
        object.__setattr__(self, "ancestors", tuple(float(v) for v in self.ancestors))
        if any(v <= 0 for v in self.ancestors):
            raise InvalidParams("ancestor life-lengths must be positive")
        if not self.lambda_I > 0:
            raise InvalidParams("lambda_I must be positive")

    def toxin_of(self, origin: str) -> Toxin:
        return self.toxin if origin == "H" or self.toxin_I is None else self.toxin_I

    def with_toxin(self, toxin: Toxin) -> "MicrobeParams":
        return replace(self, toxin=toxin, toxin_I=None)


def build_model(params: MicrobeParams) -> ModelSpec:
    """The marked Hawkes system whose intensity is the total budding rate."""
    nu = {
        o: SampledMarks(LitterSampler(o, getattr(params, f"p_{o}"), getattr(params, f"life_{o}"), params.toxin_of(o)),
                        integration_samples=params.integration_samples, seed=params.seed)
        for o in ("H", "I")
    }
    both_boxcar = isinstance(params.gamma_H, BoxcarBudding) and isinstance(params.gamma_I, BoxcarBudding)
    kernel_cls = BoxcarFastKernel if both_boxcar else MicrobeKernel
    mu0: Mu0 = AncestorMu0(params.gamma_I, params.ancestors) if params.ancestors else ZeroMu0()
    return ModelSpec(
        lambda_I=params.lambda_I, nu_I=nu["I"], nu_H=nu["H"],
        kernel=kernel_cls(params.gamma_H, params.gamma_I), mu0=mu0, shot=MicrobeShot(),
        alpha=params.alpha, theta0=params.theta0, theta1=params.theta1,
    )


# ---------------------------------------------------------------------------
# Norms and limit constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OriginNorms:
    """Integrals for one origin.  ``*_2`` entries are root-mean-square norms."""

    g1: float  # mean litter size
    g2: float  # second factorial moment of the litter size
    gamma_1: float
    gamma_2: float
    toxin_1: float
    toxin_2: float
    gamma_toxin: float
    life_1: float
    life_2: float


@dataclass(frozen=True)
class MicrobeNorms:
    H: OriginNorms
    I: OriginNorms  # noqa: E741

    @property
    def branching_ratio(self) -> float:
        return self.H.g1 * self.H.gamma_1


def _finite(name: str, v: float) -> float:
    if not math.isfinite(v):
        raise InvalidParams(f"{name} diverges")
    return float(v)


def _origin_norms(p, life: LifeLaw, gamma: Budding, toxin: Toxin) -> OriginNorms:
    ks = np.arange(1, len(p) + 1)
    pv = np.asarray(p)
    g1 = float(np.dot(ks, pv))
    g2 = float(np.dot(ks * (ks - 1), pv))
    gl = lambda y: gamma.l1(y)  # noqa: E731
    tt = lambda y: toxin.total(y)  # noqa: E731
    return OriginNorms(
        g1=g1, g2=g2,
        gamma_1=_finite("gamma L1 norm", life.expect(gl)),
        gamma_2=math.sqrt(_finite("gamma L2 norm", life.expect(lambda y: gl(y) ** 2))),
        toxin_1=_finite("toxin L1 norm", life.expect(tt)),
        toxin_2=math.sqrt(_finite("toxin L2 norm", life.expect(lambda y: tt(y) ** 2))),
        gamma_toxin=_finite("gamma-toxin product", life.expect(lambda y: gl(y) * tt(y))),
        life_1=_finite("life mean", life.expect(lambda y: y)),
        life_2=math.sqrt(_finite("life second moment", life.expect(lambda y: y**2))),
    )


def norms(params: MicrobeParams) -> MicrobeNorms:
    return MicrobeNorms(
        H=_origin_norms(params.p_H, params.life_H, params.gamma_H, params.toxin_of("H")),
        I=_origin_norms(params.p_I, params.life_I, params.gamma_I, params.toxin_of("I")),
    )


@dataclass(frozen=True)
class BuddingToxinConstants:
    """Drifts and Brownian coefficients of (integrated budding rate, toxin total).

    The Hawkes-side Brownian pair enters with weight ``sqrt(weight_H)``;
    ``var_*`` and ``cov_BT`` are the resulting per-unit-time variances.
    """

    drift_B: float
    drift_T: float
    weight_H: float
    cH1_sq: float
    cH2_sq: float
    cI1_sq: float
    cI2_sq: float
    corr_H: float | None
    corr_I: float | None
    var_B: float
    var_T: float
    cov_BT: float


def _stable(nm: MicrobeNorms) -> float:
    m = nm.branching_ratio
    if m >= 1:
        raise Unstable(f"mean budding per microbe {m:.6g} >= 1")
    return m


def budding_toxin_constants(params: MicrobeParams) -> BuddingToxinConstants:
    nm = norms(params)
    m = _stable(nm)
    H, I = nm.H, nm.I  # noqa: E741
    lam = params.lambda_I
    d = 1.0 - m
    c = H.g1 * H.toxin_1 / d  # budding-to-toxin feedback
    drift_B = lam * I.g1 * I.gamma_1 / d
    drift_T = lam * I.g1 * (I.toxin_1 + H.g1 * (I.gamma_1 * H.toxin_1 - H.gamma_1 * I.toxin_1)) / d

    def pair(o: OriginNorms):
        c1 = (o.g1 * o.gamma_2**2 + o.g2 * o.gamma_1**2) / d**2
        c2 = (o.g1 * (o.toxin_2 + c * o.gamma_2) ** 2 + o.g2 * (o.toxin_1 + c * o.gamma_1) ** 2
              + 2.0 * c * o.g1 * (o.gamma_toxin - o.toxin_2 * o.gamma_2))
        cov = ((o.g1 * o.gamma_toxin + o.g2 * o.gamma_1 * o.toxin_1) / d
               + H.g1 * H.toxin_1 * (o.g1 * o.gamma_2**2 + o.g2 * o.gamma_1**2) / d**2)
        corr = cov / math.sqrt(c1 * c2) if c1 > 0 and c2 > 0 else None
        return c1, max(c2, 0.0), cov, corr

    h1, h2, hcov, hcorr = pair(H)
    i1, i2, icov, icorr = pair(I)
    w = drift_B
    return BuddingToxinConstants(
        drift_B=drift_B, drift_T=drift_T, weight_H=w,
        cH1_sq=h1, cH2_sq=h2, cI1_sq=i1, cI2_sq=i2, corr_H=hcorr, corr_I=icorr,
        var_B=w * h1 + lam * i1, var_T=w * h2 + lam * i2, cov_BT=w * hcov + lam * icov,
    )


@dataclass(frozen=True)
class CountLikeConstants:
    drift: float
    cH2_sq: float
    cI2_sq: float
    weight_H: float
    total_variance: float


def progeny_constants(params: MicrobeParams) -> CountLikeConstants:
    """Total progeny (every microbe ever present) with unit toxins."""
    nm = norms(params.with_toxin(UnitToxin()))
    m = _stable(nm)
    H, I = nm.H, nm.I  # noqa: E741
    lam = params.lambda_I
    d = 1.0 - m
    drift = lam * I.g1 * (1.0 + H.g1 * (I.gamma_1 - H.gamma_1)) / d

    def c2(o: OriginNorms) -> float:
        return (o.g1 * (1.0 + H.g1 * o.gamma_2 / d) ** 2 + o.g2 * (1.0 + H.g1 * o.gamma_1 / d) ** 2
                + 2.0 * H.g1 * o.g1 / d * (o.gamma_1 - o.gamma_2))

    w = lam * I.g1 * I.gamma_1 / d
    h, i = c2(H), c2(I)
    return CountLikeConstants(drift, h, i, w, w * h + lam * i)


def population_integral_constants(params: MicrobeParams) -> CountLikeConstants:
    """Integral of the living population, toxins ``min(t, y)``."""
    if not params.alpha > 1.5:
        raise ConditionViolated(f"the population integral needs alpha > 3/2, got {params.alpha}")
    nm = norms(params.with_toxin(PopulationIntegralToxin()))
    m = _stable(nm)
    H, I = nm.H, nm.I  # noqa: E741
    lam = params.lambda_I
    d = 1.0 - m
    drift = lam * I.g1 * (I.life_1 + H.g1 * (I.gamma_1 * H.life_1 - H.gamma_1 * I.life_1)) / d
    c = H.g1 * H.life_1 / d

    def c2(o: OriginNorms) -> float:
        # o.gamma_toxin is the integral of y ||gamma(y)|| here
        return (o.g1 * (o.life_2 + c * o.gamma_2) ** 2 + o.g2 * (o.life_1 + c * o.gamma_1) ** 2
                + 2.0 * c * o.g1 * (o.gamma_toxin - o.life_2 * o.gamma_2))

    w = lam * I.g1 * I.gamma_1 / d
    h, i = c2(H), c2(I)
    return CountLikeConstants(drift, h, i, w, w * h + lam * i)


def single_offspring_boxcar(**overrides) -> MicrobeParams:
    """Single offspring, boxcar budding at rate 0.5, exponential lives of mean 1."""
    base = dict(p_H=(1.0,), p_I=(1.0,), life_H=ExponentialLife(1.0), life_I=ExponentialLife(1.0),
                gamma_H=BoxcarBudding(0.5), gamma_I=BoxcarBudding(0.5))
    base.update(overrides)
    return MicrobeParams(**base)
