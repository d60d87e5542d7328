"""Domain types for marked Hawkes systems with homogeneous immigration.

A system is described by a :class:`ModelSpec`: an immigration rate, the mark
laws of immigrant and self-excited events, a kernel ``phi(t, u)`` giving the
rate contributed at age ``t`` by an event with mark ``u``, a deterministic
exogenous intensity ``mu0`` and (optionally) a shot shape ``psi(t, u)``.

Discrete marks are integer labels ``0..d-1``.  Kernel and shot families
accept either a scalar parameter (mark independent) or one value per label.
Continuous marks are produced by a sampler object (see ``microbes``).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, ClassVar, Sequence

import numpy as np
from scipy import special

from .errors import InvalidKernel, InvalidSpec, Unstable
from .rng import substream

ArrayLike = Any


def describe(obj) -> Any:
    """Canonical JSON-able description of a (nested) dataclass value."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            if f.metadata.get("describe", True):
                out[f.name] = describe(getattr(obj, f.name))
        return out
    if isinstance(obj, (list, tuple)):
        return [describe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [describe(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): describe(v) for k, v in sorted(obj.items())}
    return obj


def _pick(param, u):
    """Per-label parameter lookup; scalars broadcast over every mark."""
    if isinstance(param, tuple):
        return np.asarray(param, dtype=float)[u]
    return param


def _n_labels(*params) -> int | None:
    sizes = {len(p) for p in params if isinstance(p, tuple)}
    if len(sizes) > 1:
        raise InvalidSpec(f"per-mark parameter tuples disagree in length: {sorted(sizes)}")
    return sizes.pop() if sizes else None


def _as_param(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return tuple(float(x) for x in v)
    return float(v)


# ---------------------------------------------------------------------------
# Mark distributions
# ---------------------------------------------------------------------------


class MarkDistribution:
    """Law of the marks attached to one event stream."""

    def nodes(self) -> tuple[list, np.ndarray]:
        """Integration nodes and weights (weights sum to one)."""
        raise NotImplementedError

    def draw_many(self, rng: np.random.Generator, n: int) -> Sequence:
        raise NotImplementedError

    def expect(self, fn: Callable[[Any], Any]):
        """Integral of ``fn`` against the distribution.

        ``fn`` may return a scalar or an array (vector-valued integrand).
        """
        marks, weights = self.nodes()
        total = None
        for u, w in zip(marks, weights):
            v = w * np.asarray(fn(u), dtype=float)
            total = v if total is None else total + v
        if total is None:
            return 0.0
        return float(total) if total.ndim == 0 else total

    def expect_with_se(self, fn: Callable[[Any], float]) -> tuple[float, float]:
        """Integral plus its Monte Carlo standard error (0 for exact rules)."""
        return self.expect(fn), 0.0

    @property
    def is_exact(self) -> bool:
        return True


@dataclass(frozen=True)
class DiscreteMarks(MarkDistribution):
    """Finitely many labelled atoms ``0..d-1`` with probabilities ``probs``."""

    probs: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", tuple(float(x) for x in p))
        if p.ndim != 1 or p.size == 0:
            raise InvalidSpec("discrete mark law needs at least one atom")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidSpec(f"mark probabilities must be finite and nonnegative: {self.probs}")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidSpec(f"mark probabilities sum to {p.sum()!r}, not 1")

    @property
    def size(self) -> int:
        return len(self.probs)

    @property
    def atoms(self) -> list[tuple[int, float]]:
        return [(k, p) for k, p in enumerate(self.probs)]

    def prob(self, k: int) -> float:
        return self.probs[k]

    def nodes(self):
        p = np.asarray(self.probs)
        keep = np.flatnonzero(p > 0)
        return [int(k) for k in keep], p[keep]

    @cached_property
    def _cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def draw_many(self, rng, n):
        idx = np.searchsorted(self._cdf, rng.random(n), side="right")
        return np.minimum(idx, self.size - 1).tolist()


@dataclass(frozen=True)
class SampledMarks(MarkDistribution):
    """Marks produced by a sampler; integrals by fixed-seed Monte Carlo.

    The sampler must provide ``draw_many(rng, n)``.  If it also provides
    ``quadrature()`` returning ``(marks, weights)`` (or ``None``), that rule
    replaces the Monte Carlo average for integration.
    """

    sampler: Any
    integration_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.integration_samples < 2:
            raise InvalidSpec("integration_samples must be at least 2")

    def draw_many(self, rng, n):
        return self.sampler.draw_many(rng, n)

    @cached_property
    def _quadrature(self):
        q = getattr(self.sampler, "quadrature", None)
        return q() if q is not None else None

    @property
    def is_exact(self) -> bool:
        return self._quadrature is not None

    @cached_property
    def integration_marks(self) -> list:
        rng = substream(self.seed, 0, "integration")
        return list(self.sampler.draw_many(rng, self.integration_samples))

    def nodes(self):
        if self._quadrature is not None:
            marks, w = self._quadrature
            return list(marks), np.asarray(w, dtype=float)
        m = self.integration_marks
        return m, np.full(len(m), 1.0 / len(m))

    def expect_with_se(self, fn):
        if self.is_exact:
            return self.expect(fn), 0.0
        vals = np.fromiter((fn(u) for u in self.integration_marks), dtype=float)
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


class Kernel:
    """Excitation kernel ``phi(t, u) >= 0``.

    ``majorant(t, u)`` must equal ``sup_{s >= t} phi(s, u)``; the simulator
    relies on it being non-increasing in ``t``.
    """

    family: ClassVar[str] = "abstract"

    def phi(self, t, u):
        raise NotImplementedError

    def majorant(self, t, u):
        return self.phi(t, u)

    def integral(self, t, u):
        """``int_0^t phi(s, u) ds``; families without a closed form raise."""
        raise NotImplementedError

    def l1(self, u) -> float:
        raise NotImplementedError

    def sup(self, u) -> float:
        raise NotImplementedError

    def moment(self, theta: float, u) -> float:
        """``int_0^inf t**theta phi(t, u) dt`` (may be ``inf``)."""
        raise NotImplementedError

    # vectorised forms over events (ages[i] paired with marks[i])
    def phi_events(self, ages: np.ndarray, marks) -> np.ndarray:
        return np.array([self.phi(a, u) for a, u in zip(ages, marks)], dtype=float)

    def integral_events(self, ages: np.ndarray, marks) -> np.ndarray:
        return np.array([self.integral(a, u) for a, u in zip(ages, marks)], dtype=float)

    def mean_profile(self, t: np.ndarray, dist: MarkDistribution) -> np.ndarray:
        """``int phi(t, u) dist(du)`` on an array of times."""
        t = np.asarray(t, dtype=float)
        return np.asarray(dist.expect(lambda u: self.phi(t, u)), dtype=float) * np.ones_like(t)

    @property
    def common_decay(self) -> float | None:
        """Decay rate ``b`` when ``phi = a(u) exp(-b t)`` with ``b`` shared."""
        return None

    def decay_hint(self) -> float | None:
        """Rough exponential decay rate of the kernel, if it has one."""
        return None

    def exponential_profile(self, dist: MarkDistribution) -> tuple[float, float] | None:
        """``(A, b)`` when the mean kernel ``int phi(t, u) dist(du)`` equals ``A exp(-b t)``."""
        b = self.common_decay
        if b is None:
            return None
        return float(dist.expect(self.sup)), float(b)

    def n_labels(self) -> int | None:
        return None

    # scalar hooks used by the thinning loop: parameters are resolved once per
    # event so that evaluating phi costs a few float operations
    def event_params(self, u) -> tuple:
        return (u,)

    def phi_scalar(self, age: float, params: tuple) -> float:
        return float(self.phi(age, params[0]))

    def majorant_scalar(self, age: float, params: tuple) -> float:
        return float(self.majorant(age, params[0]))


@dataclass(frozen=True)
class ExponentialKernel(Kernel):
    """``phi(t, k) = a_k exp(-b_k t)``."""

    a: float | tuple[float, ...]
    b: float | tuple[float, ...] = 1.0
    family: ClassVar[str] = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "a", _as_param(self.a))
        object.__setattr__(self, "b", _as_param(self.b))
        if np.any(np.asarray(self.a) < 0) or np.any(np.asarray(self.b) <= 0):
            raise InvalidKernel("exponential kernel needs a >= 0 and b > 0")

    def phi(self, t, u):
        return _pick(self.a, u) * np.exp(-_pick(self.b, u) * t)

    def integral(self, t, u):
        a, b = _pick(self.a, u), _pick(self.b, u)
        return a / b * -np.expm1(-b * t)

    def l1(self, u):
        return float(_pick(self.a, u) / _pick(self.b, u))

    def sup(self, u):
        return float(_pick(self.a, u))

    def moment(self, theta, u):
        a, b = _pick(self.a, u), _pick(self.b, u)
        return float(a * special.gamma(theta + 1) / b ** (theta + 1))

    def phi_events(self, ages, marks):
        return self.phi(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int))

    def integral_events(self, ages, marks):
        return self.integral(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int))

    @property
    def common_decay(self):
        return None if isinstance(self.b, tuple) else self.b

    def decay_hint(self):
        return float(np.min(self.b))

    def n_labels(self):
        return _n_labels(self.a, self.b)

    def event_params(self, u):
        return (float(_pick(self.a, u)), float(_pick(self.b, u)))

    def phi_scalar(self, age, params):
        return params[0] * math.exp(-params[1] * age)

    majorant_scalar = phi_scalar


@dataclass(frozen=True)
class PowerKernel(Kernel):
    """``phi(t, k) = a_k (1 + b_k t)^(-p_k)`` with ``p_k > 1``."""

    a: float | tuple[float, ...]
    b: float | tuple[float, ...] = 1.0
    p: float | tuple[float, ...] = 2.5
    family: ClassVar[str] = "power"

    def __post_init__(self):
        for name in ("a", "b", "p"):
            object.__setattr__(self, name, _as_param(getattr(self, name)))
        if np.any(np.asarray(self.a) < 0) or np.any(np.asarray(self.b) <= 0):
            raise InvalidKernel("power kernel needs a >= 0 and b > 0")
        if np.any(np.asarray(self.p) <= 1):
            raise InvalidKernel("power kernel needs p > 1 for integrability")

    def phi(self, t, u):
        return _pick(self.a, u) * (1.0 + _pick(self.b, u) * t) ** (-_pick(self.p, u))

    def integral(self, t, u):
        a, b, p = _pick(self.a, u), _pick(self.b, u), _pick(self.p, u)
        return a / (b * (p - 1.0)) * (1.0 - (1.0 + b * t) ** (1.0 - p))

    def l1(self, u):
        a, b, p = _pick(self.a, u), _pick(self.b, u), _pick(self.p, u)
        return float(a / (b * (p - 1.0)))

    def sup(self, u):
        return float(_pick(self.a, u))

    def moment(self, theta, u):
        a, b, p = _pick(self.a, u), _pick(self.b, u), _pick(self.p, u)
        if theta >= p - 1.0:
            return math.inf
        return float(a * b ** (-theta - 1.0) * special.beta(theta + 1.0, p - theta - 1.0))

    def phi_events(self, ages, marks):
        return self.phi(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int))

    def integral_events(self, ages, marks):
        return self.integral(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int))

    def n_labels(self):
        return _n_labels(self.a, self.b, self.p)

    def event_params(self, u):
        return (float(_pick(self.a, u)), float(_pick(self.b, u)), float(_pick(self.p, u)))

    def phi_scalar(self, age, params):
        return params[0] * (1.0 + params[1] * age) ** -params[2]

    majorant_scalar = phi_scalar


@dataclass(frozen=True)
class BoxcarKernel(Kernel):
    """``phi(t, k) = a_k 1{t < y_k}``."""

    a: float | tuple[float, ...]
    y: float | tuple[float, ...] = 1.0
    family: ClassVar[str] = "boxcar"

    def __post_init__(self):
        object.__setattr__(self, "a", _as_param(self.a))
        object.__setattr__(self, "y", _as_param(self.y))
        if np.any(np.asarray(self.a) < 0) or np.any(np.asarray(self.y) <= 0):
            raise InvalidKernel("boxcar kernel needs a >= 0 and y > 0")

    def phi(self, t, u):
        return _pick(self.a, u) * (np.asarray(t) < _pick(self.y, u))

    def integral(self, t, u):
        return _pick(self.a, u) * np.minimum(t, _pick(self.y, u))

    def l1(self, u):
        return float(_pick(self.a, u) * _pick(self.y, u))

    def sup(self, u):
        return float(_pick(self.a, u))

    def moment(self, theta, u):
        return float(_pick(self.a, u) * _pick(self.y, u) ** (theta + 1.0) / (theta + 1.0))

    def phi_events(self, ages, marks):
        return self.phi(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int)).astype(float)

    def integral_events(self, ages, marks):
        return self.integral(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int))

    def n_labels(self):
        return _n_labels(self.a, self.y)

    def event_params(self, u):
        return (float(_pick(self.a, u)), float(_pick(self.y, u)))

    def phi_scalar(self, age, params):
        return params[0] if age < params[1] else 0.0

    majorant_scalar = phi_scalar


@dataclass(frozen=True)
class HumpKernel(Kernel):
    """``phi(t, k) = a_k b_k^2 t exp(-b_k t)``: rises to a peak at ``1/b`` then decays.

    Total mass is ``a_k``.  Not monotone, so the majorant differs from phi
    before the peak.
    """

    a: float | tuple[float, ...]
    b: float | tuple[float, ...] = 1.0
    family: ClassVar[str] = "hump"

    def __post_init__(self):
        object.__setattr__(self, "a", _as_param(self.a))
        object.__setattr__(self, "b", _as_param(self.b))
        if np.any(np.asarray(self.a) < 0) or np.any(np.asarray(self.b) <= 0):
            raise InvalidKernel("hump kernel needs a >= 0 and b > 0")

    def phi(self, t, u):
        a, b = _pick(self.a, u), _pick(self.b, u)
        return a * b * b * t * np.exp(-b * t)

    def majorant(self, t, u):
        b = _pick(self.b, u)
        return self.phi(np.maximum(t, 1.0 / b), u)

    def integral(self, t, u):
        a, b = _pick(self.a, u), _pick(self.b, u)
        return a * (1.0 - np.exp(-b * t) * (1.0 + b * t))

    def l1(self, u):
        return float(_pick(self.a, u))

    def sup(self, u):
        return float(_pick(self.a, u) * _pick(self.b, u) / math.e)

    def moment(self, theta, u):
        a, b = _pick(self.a, u), _pick(self.b, u)
        return float(a * special.gamma(theta + 2.0) / b**theta)

    def phi_events(self, ages, marks):
        return self.phi(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int))

    def integral_events(self, ages, marks):
        return self.integral(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int))

    def decay_hint(self):
        return float(np.min(self.b))

    def n_labels(self):
        return _n_labels(self.a, self.b)

    def event_params(self, u):
        return (float(_pick(self.a, u)), float(_pick(self.b, u)))

    def phi_scalar(self, age, params):
        a, b = params
        return a * b * b * age * math.exp(-b * age)

    def majorant_scalar(self, age, params):
        return self.phi_scalar(max(age, 1.0 / params[1]), params)


def zero_kernel() -> ExponentialKernel:
    return ExponentialKernel(a=0.0, b=1.0)


# ---------------------------------------------------------------------------
# Shot shapes
# ---------------------------------------------------------------------------


class ShotShape:
    """Impact ``psi(t, u)`` of an event at age ``t``; ``psi_inf(u)`` its total."""

    family: ClassVar[str] = "abstract"

    def psi(self, t, u):
        raise NotImplementedError

    def psi_inf(self, u) -> float:
        raise NotImplementedError

    def tail(self, t, u):
        return self.psi_inf(u) - self.psi(t, u)

    def psi_events(self, ages, marks) -> np.ndarray:
        return np.array([self.psi(a, u) for a, u in zip(ages, marks)], dtype=float)

    def n_labels(self) -> int | None:
        return None


@dataclass(frozen=True)
class UnitStepShot(ShotShape):
    """``psi(t, k) = c_k`` for every age ``t >= 0`` (counting when ``c = 1``)."""

    c: float | tuple[float, ...] = 1.0
    family: ClassVar[str] = "unit"

    def __post_init__(self):
        object.__setattr__(self, "c", _as_param(self.c))

    def psi(self, t, u):
        return _pick(self.c, u) * (np.asarray(t) >= 0)

    def psi_inf(self, u):
        return float(_pick(self.c, u))

    def psi_events(self, ages, marks):
        return self.psi(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int)).astype(float)

    def n_labels(self):
        return _n_labels(self.c)


@dataclass(frozen=True)
class SaturatingShot(ShotShape):
    """``psi(t, k) = c_k (1 - exp(-r_k t))``."""

    c: float | tuple[float, ...] = 1.0
    r: float | tuple[float, ...] = 1.0
    family: ClassVar[str] = "saturating"

    def __post_init__(self):
        object.__setattr__(self, "c", _as_param(self.c))
        object.__setattr__(self, "r", _as_param(self.r))
        if np.any(np.asarray(self.r) <= 0):
            raise InvalidSpec("saturating shot needs r > 0")

    def psi(self, t, u):
        return _pick(self.c, u) * -np.expm1(-_pick(self.r, u) * np.asarray(t, dtype=float))

    def psi_inf(self, u):
        return float(_pick(self.c, u))

    def psi_events(self, ages, marks):
        return self.psi(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int))

    def n_labels(self):
        return _n_labels(self.c, self.r)


@dataclass(frozen=True)
class WindowShot(ShotShape):
    """``psi(t, k) = c_k 1{t < w_k}``: compact support, ``psi_inf = 0``."""

    c: float | tuple[float, ...] = 1.0
    w: float | tuple[float, ...] = 1.0
    family: ClassVar[str] = "window"

    def __post_init__(self):
        object.__setattr__(self, "c", _as_param(self.c))
        object.__setattr__(self, "w", _as_param(self.w))

    def psi(self, t, u):
        return _pick(self.c, u) * (np.asarray(t) < _pick(self.w, u))

    def psi_inf(self, u):
        return 0.0

    def psi_events(self, ages, marks):
        return self.psi(np.asarray(ages, dtype=float), np.asarray(marks, dtype=int)).astype(float)

    def n_labels(self):
        return _n_labels(self.c, self.w)


def zero_shot() -> UnitStepShot:
    return UnitStepShot(c=0.0)


# ---------------------------------------------------------------------------
# Exogenous intensity
# ---------------------------------------------------------------------------


class Mu0:
    """Deterministic exogenous intensity ``mu0(t) >= 0``."""

    family: ClassVar[str] = "abstract"

    def value(self, t):
        raise NotImplementedError

    def majorant(self, t):
        """``sup_{s >= t} mu0(s)``; must be non-increasing."""
        return self.value(t)

    def integral(self, t):
        raise NotImplementedError

    @property
    def l1(self) -> float:
        raise NotImplementedError

    @property
    def sup(self) -> float:
        raise NotImplementedError

    def lp(self, p: float) -> float:
        """``int |mu0|^p``."""
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroMu0(Mu0):
    family: ClassVar[str] = "zero"

    def value(self, t):
        return 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else 0.0

    def integral(self, t):
        return self.value(t)

    @property
    def l1(self):
        return 0.0

    @property
    def sup(self):
        return 0.0

    def lp(self, p):
        return 0.0


@dataclass(frozen=True)
class ConstantMu0(Mu0):
    """Constant exogenous rate; not integrable unless ``c == 0``."""

    c: float
    family: ClassVar[str] = "constant"

    def value(self, t):
        return self.c + 0.0 * np.asarray(t, dtype=float) if np.ndim(t) else self.c

    def integral(self, t):
        return self.c * np.asarray(t, dtype=float) if np.ndim(t) else self.c * t

    @property
    def l1(self):
        return 0.0 if self.c == 0 else math.inf

    @property
    def sup(self):
        return self.c

    def lp(self, p):
        return 0.0 if self.c == 0 else math.inf


@dataclass(frozen=True)
class ExponentialMu0(Mu0):
    """``mu0(t) = c exp(-b t)``."""

    c: float
    b: float = 1.0
    family: ClassVar[str] = "exponential"

    def __post_init__(self):
        if self.b <= 0:
            raise InvalidSpec("exponential mu0 needs b > 0")

    def value(self, t):
        return self.c * np.exp(-self.b * t) if np.ndim(t) else self.c * math.exp(-self.b * t)

    def integral(self, t):
        return self.c / self.b * -np.expm1(-self.b * np.asarray(t, dtype=float))

    @property
    def l1(self):
        return self.c / self.b

    @property
    def sup(self):
        return self.c

    def lp(self, p):
        return self.c**p / (p * self.b)


# ---------------------------------------------------------------------------
# Model specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Complete description of a marked Hawkes system with immigration."""

    lambda_I: float
    nu_I: MarkDistribution
    nu_H: MarkDistribution
    kernel: Kernel
    mu0: Mu0 = field(default_factory=ZeroMu0)
    shot: ShotShape | None = None
    alpha: float = 2.0
    theta0: float = 2.0
    theta1: float = 2.0

    def __post_init__(self):
        for name in ("lambda_I", "alpha", "theta0", "theta1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.lambda_I > 0 and math.isfinite(self.lambda_I)):
            raise InvalidSpec(f"lambda_I must be positive and finite, got {self.lambda_I}")
        if self.mu0.sup < 0:
            raise InvalidSpec("mu0 must be nonnegative")
        if not self.alpha > 1:
            raise InvalidSpec(f"alpha must exceed 1, got {self.alpha}")
        a = self.alpha
        if not self.theta0 > a / (2 * a - 2):
            raise InvalidSpec(f"theta0 must exceed alpha/(2 alpha - 2) = {a / (2 * a - 2):.6g}")
        if not self.theta1 > (2 * a - 1) / (2 * a - 2):
            raise InvalidSpec(f"theta1 must exceed (2 alpha - 1)/(2 alpha - 2) = {(2 * a - 1) / (2 * a - 2):.6g}")
        sizes = {d.size for d in (self.nu_I, self.nu_H) if isinstance(d, DiscreteMarks)}
        if isinstance(self.nu_I, DiscreteMarks) != isinstance(self.nu_H, DiscreteMarks):
            raise InvalidSpec("nu_I and nu_H must both be discrete or both be sampled")
        if len(sizes) > 1:
            raise InvalidSpec("nu_I and nu_H must live on the same label set")
        if sizes:
            d = sizes.pop()
            for part in (self.kernel, self.shot):
                n = part.n_labels() if part is not None else None
                if n is not None and n != d:
                    raise InvalidSpec(f"{type(part).__name__} has {n} per-mark parameters but the mark space has {d} labels")

    @property
    def discrete(self) -> bool:
        return isinstance(self.nu_H, DiscreteMarks)

    @property
    def n_labels(self) -> int | None:
        return self.nu_H.size if self.discrete else None

    def describe(self) -> dict:
        return describe(self)

    @cached_property
    def spec_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ModelSpec":
        return dataclasses.replace(self, **changes)


def _finite_l1(spec: ModelSpec, u) -> float:
    v = spec.kernel.l1(u)
    if not math.isfinite(v) or v < 0:
        raise InvalidKernel(f"kernel L1 norm is {v!r} at mark {u!r}")
    return v


def branching_ratio(spec: ModelSpec) -> float:
    """Mean kernel mass ``int ||phi(u)||_1 nu_H(du)``; stability iff < 1."""
    return float(spec.nu_H.expect(lambda u: _finite_l1(spec, u)))


def immigrant_mass(spec: ModelSpec) -> float:
    """``int ||phi(u)||_1 nu_I(du)``."""
    return float(spec.nu_I.expect(lambda u: _finite_l1(spec, u)))


def require_stable(spec: ModelSpec) -> float:
    m = branching_ratio(spec)
    if m >= 1:
        raise Unstable(f"branching ratio {m:.6g} >= 1: resolvent L1 norms m/(1-m) diverge")
    return m


def stationary_mu0(spec: ModelSpec) -> ExponentialMu0:
    """Exogenous intensity equal to the mean impact of a stationary past.

    Needs mean kernels ``A_i exp(-b t)`` (shared ``b``) for both mark laws.
    The result is ``(lambda_I A_I + z* A_H) / b * exp(-b t)`` with
    ``z* = lambda_I ||R_I||_1`` the stationary Hawkes rate; with it the mean
    intensity is constant in time, which removes the start-up transient.
    """
    prof_I = spec.kernel.exponential_profile(spec.nu_I)
    prof_H = spec.kernel.exponential_profile(spec.nu_H)
    if prof_I is None or prof_H is None or not math.isclose(prof_I[1], prof_H[1], rel_tol=1e-12):
        raise InvalidSpec("stationary_mu0 needs exponential mean kernels with a shared decay rate")
    m = require_stable(spec)
    rate_H = spec.lambda_I * immigrant_mass(spec) / (1.0 - m)
    b = prof_H[1]
    return ExponentialMu0(c=float((spec.lambda_I * prof_I[0] + rate_H * prof_H[0]) / b), b=float(b))


# ---------------------------------------------------------------------------
# Validation of the standing moment conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    status: str  # "pass" | "fail" | "warn"
    value: float | None
    note: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def status(self, name: str) -> str:
        for c in self.checks:
            if c.name == name:
                return c.status
        raise KeyError(name)

    def to_json(self) -> str:
        return json.dumps([dataclasses.asdict(c) for c in self.checks], sort_keys=True, indent=1)


_PROBE = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 400)])


def _safe(fn) -> float:
    try:
        v = float(fn())
    except (OverflowError, ZeroDivisionError, FloatingPointError, ValueError):
        return math.inf
    return v if not math.isnan(v) else math.inf


def validate(spec: ModelSpec) -> ValidationReport:
    """Check the parts of the moment conditions that can be checked.

    Suprema over infinite horizons are probed on a fixed geometric grid, so
    such checks only ever yield ``pass`` or ``warn`` -- never a proof.
    """
    a2 = 2.0 * spec.alpha
    checks: list[Check] = []
    k = spec.kernel

    m = _safe(lambda: spec.nu_H.expect(k.l1))
    checks.append(Check("stability", "pass" if m < 1 else "fail", m, "branching ratio must be < 1"))

    with np.errstate(all="ignore"):
        for tag, dist in (("H", spec.nu_H), ("I", spec.nu_I)):
            mom = _safe(lambda: dist.expect(lambda u: k.sup(u) ** a2 + k.l1(u) ** a2))
            checks.append(Check(f"kernel.mark_moment.{tag}", "pass" if math.isfinite(mom) else "fail", mom,
                                "nu(||phi||_inf^2a + ||phi||_1^2a)"))
            tm = _safe(lambda: dist.expect(lambda u: k.moment(spec.theta0, u)))
            checks.append(Check(f"kernel.time_moment.{tag}", "pass" if math.isfinite(tm) else "fail", tm,
                                "int t^theta0 phi_i(t) dt"))

        mu_ok = math.isfinite(spec.mu0.sup) and math.isfinite(spec.mu0.lp(a2))
        checks.append(Check("mu0.moment", "pass" if mu_ok else "fail", _safe(lambda: spec.mu0.lp(a2)),
                            "sup mu0^2a + ||mu0||_2a^2a"))
        checks.append(Check("mu0.integrable", "pass" if math.isfinite(spec.mu0.l1) else "warn",
                            _safe(lambda: spec.mu0.l1), "drift constants assume int mu0 < inf"))

        if spec.shot is not None:
            s = spec.shot
            for tag, dist in (("H", spec.nu_H), ("I", spec.nu_I)):
                probe = _safe(lambda: np.max(dist.expect(lambda u: np.abs(s.psi(_PROBE, u)) ** a2)))
                checks.append(Check(f"shot.psi_moment.{tag}", "warn" if not math.isfinite(probe) else "pass", probe,
                                    "sup_t nu(|psi(t)|^2a) on probe grid"))
                tail = _safe(lambda: np.max(_PROBE ** spec.theta1 * np.abs(
                    dist.expect(lambda u: np.abs(s.tail(_PROBE, u))))))
                checks.append(Check(f"shot.tail.{tag}", "pass" if math.isfinite(tail) else "warn", tail,
                                    "t^theta1 |psi^c| on probe grid (advisory)"))
    return ValidationReport(tuple(checks))
