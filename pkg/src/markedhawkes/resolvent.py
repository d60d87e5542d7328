"""Volterra resolvents and the mean intensity on uniform time grids.

The resolvent equation ``R = phi + R * phi`` is discretised with trapezoid
product integration.  The unknown ``R[i]`` enters the i-th equation only
through the end-point weight ``h phi[0] / 2``, so it is isolated and the grid
is filled forward.  The history sums ``sum_{0<j<i} R[j] phi[i-j]`` are
accumulated by divide-and-conquer FFT convolution, which keeps the solve at
``O(n log^2 n)`` instead of ``O(n^2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import fftconvolve

from .errors import GridMismatch, HorizonTooShort, InvalidSpec, StepTooCoarse, Unstable
from .model import DiscreteMarks, ModelSpec, branching_ratio

_BASE_BLOCK = 64
_NEG_TOL = 1e-8
_MAX_TAIL = 0.05  # largest tolerated extrapolated share of the mass


@dataclass(frozen=True)
class GridFunction:
    """Samples ``values[i] ~ f(i h)`` for ``i = 0..n``."""

    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if not self.h > 0:
            raise InvalidSpec(f"grid step must be positive, got {self.h}")
        if v.ndim != 1 or v.size < 2:
            raise InvalidSpec("grid function needs at least two samples")
        if not np.all(np.isfinite(v)):
            raise InvalidSpec("grid function has non-finite values")

    @classmethod
    def sample(cls, fn, h: float, horizon: float) -> "GridFunction":
        n = int(round(horizon / h))
        return cls(h, np.asarray(fn(np.arange(n + 1) * h), dtype=float) * np.ones(n + 1))

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def horizon(self) -> float:
        return self.n * self.h

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    def mass(self) -> float:
        """Trapezoid integral over the whole grid."""
        v = self.values
        return float(self.h * (v.sum() - 0.5 * (v[0] + v[-1])))

    def at(self, t) -> np.ndarray:
        """Linear interpolation; times beyond the horizon are not allowed."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon * (1 + 1e-12)):
            raise GridMismatch("interpolation time outside the grid")
        return np.interp(t, self.t, self.values)

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.t, self.values]), delimiter=",",
                   header="t,value", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        h = float(data[1, 0] - data[0, 0])
        return cls(h, data[:, 1])


def _same_grid(a: GridFunction, b: GridFunction) -> None:
    if a.n != b.n or not math.isclose(a.h, b.h, rel_tol=1e-12):
        raise GridMismatch(f"grids differ: (h={a.h}, n={a.n}) vs (h={b.h}, n={b.n})")


def trapezoid_convolution(f: np.ndarray, g: np.ndarray, h: float) -> np.ndarray:
    """``(f * g)(t_i) = int_0^{t_i} f(t_i - s) g(s) ds`` by the trapezoid rule."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    n = f.size
    full = fftconvolve(f, g)[:n]
    out = h * (full - 0.5 * (f * g[0] + f[0] * g))
    out[0] = 0.0
    return out


def solve_resolvent(phi: GridFunction) -> GridFunction:
    """Solve ``R = phi + R * phi`` forward on the grid of ``phi``."""
    p = phi.values
    h = phi.h
    if np.any(p < 0):
        raise InvalidSpec("kernel grid must be nonnegative")
    diag = 1.0 - 0.5 * h * p[0]
    if diag <= 0.0:
        raise StepTooCoarse(f"h * phi(0) / 2 = {0.5 * h * p[0]:.6g} >= 1; reduce the step")
    mass = phi.mass()
    if mass >= 1.0:
        raise Unstable(f"discrete kernel mass {mass:.6g} >= 1: the identity ||R_H|| = m/(1-m) has no finite solution")

    n = p.size
    R = np.zeros(n)
    S = np.zeros(n)  # S[i] = sum_{j=1}^{i-1} R[j] phi[i-j]
    R[0] = p[0]
    head = 0.5 * h * R[0]

    def base(lo: int, hi: int) -> None:
        for i in range(max(lo, 1), hi):
            jl = max(lo, 1)
            if i > jl:
                S[i] += np.dot(R[jl:i], p[i - jl:0:-1])
            R[i] = (p[i] * (1.0 + head) + h * S[i]) / diag

    def solve(lo: int, hi: int) -> None:
        if hi - lo <= _BASE_BLOCK:
            base(lo, hi)
            return
        mid = (lo + hi) // 2
        solve(lo, mid)
        jlo = max(lo, 1)
        if mid > jlo:
            conv = fftconvolve(R[jlo:mid], p[: hi - jlo])
            S[mid:hi] += conv[mid - jlo: hi - jlo]
        solve(mid, hi)

    solve(0, n)
    return GridFunction(h, R)


def solve_cross_resolvent(phi_I: GridFunction, RH: GridFunction) -> GridFunction:
    """``R_I = phi_I + R_H * phi_I`` (a convolution, no equation to solve)."""
    _same_grid(phi_I, RH)
    return GridFunction(phi_I.h, phi_I.values + trapezoid_convolution(RH.values, phi_I.values, phi_I.h))


def mark_resolvent(phi_u: GridFunction, RH: GridFunction) -> GridFunction:
    """Mean cumulative response ``R(., u) = phi(., u) + R_H * phi(., u)``."""
    return solve_cross_resolvent(phi_u, RH)


def mean_intensity_grid(mu0: np.ndarray, lambda_I: float, RH: GridFunction, RI: GridFunction) -> GridFunction:
    """``E[Z] = mu0 + R_H * mu0 + lambda_I int_0^t R_I``."""
    _same_grid(RH, RI)
    mu0 = np.asarray(mu0, dtype=float)
    drift = lambda_I * cumulative_trapezoid(RI.values, dx=RI.h, initial=0.0)
    return GridFunction(RH.h, mu0 + trapezoid_convolution(RH.values, mu0, RH.h) + drift)


class L1Tail(NamedTuple):
    l1: float
    tail_fit: float


def _decade_block(n_points: int) -> int:
    return max(2, n_points // 10)


def l1_and_tail(g: GridFunction, theta: float | None = None) -> L1Tail:
    """Total mass with a geometric tail correction, and the fitted tail slope.

    The last tenth of the grid is split into two equal blocks with masses
    ``m1, m2``; beyond the horizon the mass is continued geometrically with
    ratio ``q = m2 / m1``.  If that continuation exceeds 5% of the grid mass
    (or the blocks do not decay) the horizon is reported as too short.  ``tail_fit`` is the least-squares slope of
    ``log int_t^inf g`` against ``log t`` over the final factor of ten in
    ``t`` (log-spaced sample points), so power-law tails read off directly.
    ``theta`` is accepted for symmetry with the decay bound and is unused by
    the computation.
    """
    v = g.values
    if np.any(v < -_NEG_TOL * max(1.0, float(np.max(np.abs(v))))):
        raise InvalidSpec("l1_and_tail expects a nonnegative grid function")
    total = g.mass()
    if total == 0.0 and not np.any(v):
        return L1Tail(0.0, math.nan)

    n = g.n
    k = _decade_block(n + 1)
    start = n - k
    # tail mass from each grid point to the horizon
    cum = cumulative_trapezoid(v, dx=g.h, initial=0.0)
    to_end = cum[-1] - cum
    last = to_end[start]
    if last > 0.1 * total:
        raise HorizonTooShort(
            f"last tenth of the grid carries {last / total:.3g} of the mass (limit 0.1); extend the horizon")

    half = k // 2
    m1 = to_end[n - 2 * half] - to_end[n - half]
    m2 = to_end[n - half]
    tail = 0.0
    if m1 > 0 and m2 > 0 and m2 < m1:
        q = m2 / m1
        tail = m2 * q / (1.0 - q)
    if tail > _MAX_TAIL * total or (m2 >= m1 > 0):
        raise HorizonTooShort(
            f"extrapolated mass beyond the horizon is {tail / total:.3g} of the grid mass; extend the horizon")
    l1 = total + tail

    survival = to_end + tail
    t = g.t
    lo = max(g.horizon / 10.0, g.h)
    idx = np.unique(np.round(np.geomspace(lo, g.horizon, 64) / g.h).astype(int))
    idx = idx[(idx > 0) & (idx <= n) & (survival[np.minimum(idx, n)] > 0)]
    if idx.size < 3:
        return L1Tail(l1, math.nan)
    slope = np.polyfit(np.log(t[idx]), np.log(survival[idx]), 1)[0]
    return L1Tail(float(l1), float(slope))


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResolventTable:
    """Grid resolvents of one model plus the mean intensity."""

    RH: GridFunction
    RI: GridFunction
    per_mark: dict
    meanZ: GridFunction
    l1_RH: float
    l1_RI: float
    l1_per_mark: dict
    phi_H_mass: float
    spec_hash: str = ""

    @property
    def h(self) -> float:
        return self.RH.h

    @property
    def horizon(self) -> float:
        return self.RH.horizon

    def manifest(self) -> dict:
        return {
            "h": self.h,
            "horizon": self.horizon,
            "n": self.RH.n,
            "l1_RH": self.l1_RH,
            "l1_RI": self.l1_RI,
            "l1_per_mark": {str(k): v for k, v in sorted(self.l1_per_mark.items())},
            "phi_H_mass": self.phi_H_mass,
            "spec_hash": self.spec_hash,
            "files": ["RH.csv", "RI.csv", "meanZ.csv"] + [f"R_mark_{k}.csv" for k in sorted(self.per_mark)],
        }

    def write(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.RH.to_csv(d / "RH.csv")
        self.RI.to_csv(d / "RI.csv")
        self.meanZ.to_csv(d / "meanZ.csv")
        for k, g in sorted(self.per_mark.items()):
            g.to_csv(d / f"R_mark_{k}.csv")
        (d / "manifest.json").write_text(json.dumps(self.manifest(), indent=1, sort_keys=True) + "\n")
        return d

    @classmethod
    def read(cls, directory) -> "ResolventTable":
        d = Path(directory)
        man = json.loads((d / "manifest.json").read_text())
        per = {int(k): GridFunction.from_csv(d / f"R_mark_{k}.csv") for k in man["l1_per_mark"]}
        return cls(
            RH=GridFunction.from_csv(d / "RH.csv"),
            RI=GridFunction.from_csv(d / "RI.csv"),
            per_mark=per,
            meanZ=GridFunction.from_csv(d / "meanZ.csv"),
            l1_RH=man["l1_RH"],
            l1_RI=man["l1_RI"],
            l1_per_mark={int(k): v for k, v in man["l1_per_mark"].items()},
            phi_H_mass=man["phi_H_mass"],
            spec_hash=man["spec_hash"],
        )


def default_horizon(spec: ModelSpec) -> float:
    """At least 40, and about 20 e-folding times of the resolvent.

    The resolvent decays roughly like ``exp(-(1 - m) t / tau)`` where ``tau``
    is the mean age at which the kernel fires.
    """
    m = branching_ratio(spec)
    if m >= 1:
        raise Unstable(f"branching ratio {m:.6g} >= 1: the identity ||R_H|| = m/(1-m) has no finite solution")
    rate = spec.kernel.decay_hint()
    if rate is None:
        if m == 0:
            return 40.0
        first = spec.nu_H.expect(lambda u: spec.kernel.moment(1.0, u))
        if not math.isfinite(first):
            return 1000.0
        rate = m / first
    return float(max(40.0, 20.0 / (rate * (1.0 - m))))


def _mark_grid(spec: ModelSpec, dist, t: np.ndarray) -> np.ndarray:
    return spec.kernel.mean_profile(t, dist)


def build_table(spec: ModelSpec, h: float = 1e-3, horizon: float | None = None) -> ResolventTable:
    """Solve every resolvent of ``spec`` on a common grid."""
    m = branching_ratio(spec)
    if m >= 1:
        raise Unstable(f"branching ratio {m:.6g} >= 1: the identity ||R_H|| = m/(1-m) has no finite solution")
    H = default_horizon(spec) if horizon is None else float(horizon)
    n = int(round(H / h))
    t = np.arange(n + 1) * h

    phi_H = GridFunction(h, _mark_grid(spec, spec.nu_H, t))
    phi_I = GridFunction(h, _mark_grid(spec, spec.nu_I, t))
    RH = solve_resolvent(phi_H)
    RI = solve_cross_resolvent(phi_I, RH)

    per_mark: dict[int, GridFunction] = {}
    l1_per: dict[int, float] = {}
    if isinstance(spec.nu_H, DiscreteMarks):
        for k in range(spec.nu_H.size):
            phi_k = GridFunction(h, np.asarray(spec.kernel.phi(t, k), dtype=float) * np.ones_like(t))
            per_mark[k] = mark_resolvent(phi_k, RH)
            l1_per[k] = _safe_l1(per_mark[k])

    mu0 = np.asarray(spec.mu0.value(t), dtype=float) * np.ones_like(t)
    meanZ = mean_intensity_grid(mu0, spec.lambda_I, RH, RI)
    return ResolventTable(
        RH=RH, RI=RI, per_mark=per_mark, meanZ=meanZ,
        l1_RH=_safe_l1(RH), l1_RI=_safe_l1(RI), l1_per_mark=l1_per,
        phi_H_mass=_safe_l1(phi_H), spec_hash=spec.spec_hash,
    )


def _safe_l1(g: GridFunction) -> float:
    return l1_and_tail(g).l1


def mean_intensity(spec: ModelSpec, table: ResolventTable) -> GridFunction:
    """Mean intensity ``E[Z(t)]`` on the table's grid."""
    t = table.RH.t
    mu0 = np.asarray(spec.mu0.value(t), dtype=float) * np.ones_like(t)
    return mean_intensity_grid(mu0, spec.lambda_I, table.RH, table.RI)
