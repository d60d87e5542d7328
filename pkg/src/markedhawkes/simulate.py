"""Exact simulation by thinning, and functionals of simulated paths.

Immigrants form a homogeneous Poisson stream generated up front.  Hawkes
events are proposed from a dominating rate that is constant between updates
and equals ``mu0`` majorant plus the kernel majorants of all retained past
events; a proposal at ``t`` is accepted with probability ``Z(t-)/bound``.
The dominating rate is refreshed at every proposal (tightening it) and raised
by ``majorant(0, u)`` whenever an event arrives.

Kernels of the form ``a(u) exp(-b t)`` with a shared ``b`` use an O(1)
recursive intensity update; every other kernel keeps an explicit list of past
events, pruning an event once its majorant falls below ``eps * lambda_I``
(its contribution is removed from both the intensity and the bound).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import IntensityBlowup, OutOfRange
from .model import DiscreteMarks, ModelSpec, ShotShape
from .rng import BufferedDraws, MarkFeed, substream

IMMIGRATION = 0
HAWKES = 1
FORMAT_VERSION = 1
_RECORD = np.dtype([("time", "<f8"), ("origin", "u1"), ("mark", "<u4")])
_BOUND_RTOL = 1e-12


class ThinningBoundViolated(AssertionError):
    """The intensity exceeded its dominating rate (a majorant is wrong)."""


@dataclass(frozen=True)
class Event:
    time: float
    mark: Any
    origin: int  # IMMIGRATION or HAWKES


@dataclass(frozen=True, eq=False)
class PathRecord:
    """One realisation on ``[0, horizon]``.

    Events are stored column-wise, time ordered, immigrants first at equal
    times.  ``mark_ids`` are labels for discrete marks and indices into
    ``mark_table`` otherwise.
    """

    times: np.ndarray
    origins: np.ndarray
    mark_ids: np.ndarray
    horizon: float
    seed: int
    path_index: int
    spec_hash: str
    accepted: int
    proposed: int
    mark_table: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("times", "origins", "mark_ids"):
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return self.times.size

    def __eq__(self, other) -> bool:
        return isinstance(other, PathRecord) and self.to_bytes() == other.to_bytes()

    def mark(self, i: int):
        mid = int(self.mark_ids[i])
        return mid if self.mark_table is None else self.mark_table[mid]

    def marks_of(self, idx: np.ndarray):
        """Marks of the events ``idx`` in the form kernels accept."""
        if self.mark_table is None:
            return self.mark_ids[idx].astype(np.int64)
        return [self.mark_table[int(k)] for k in self.mark_ids[idx]]

    @property
    def events(self) -> list[Event]:
        return [Event(float(self.times[i]), self.mark(i), int(self.origins[i])) for i in range(len(self))]

    def select(self, origin: int) -> np.ndarray:
        return np.flatnonzero(self.origins == origin)

    @property
    def hawkes_times(self) -> np.ndarray:
        return self.times[self.origins == HAWKES]

    @property
    def immigration_times(self) -> np.ndarray:
        return self.times[self.origins == IMMIGRATION]

    @property
    def acceptance_ratio(self) -> float:
        return self.accepted / self.proposed if self.proposed else 1.0

    # -- serialisation ----------------------------------------------------
    def _header(self) -> str:
        return (f"# markedhawkes-path v{FORMAT_VERSION} horizon={self.horizon!r} seed={self.seed} "
                f"path_index={self.path_index} spec_hash={self.spec_hash} "
                f"accepted={self.accepted} proposed={self.proposed}")

    def to_bytes(self) -> bytes:
        """Header line then packed little-endian (f8 time, u1 origin, u4 mark) records."""
        rec = np.empty(len(self), dtype=_RECORD)
        rec["time"], rec["origin"], rec["mark"] = self.times, self.origins, self.mark_ids
        return (self._header() + "\n").encode() + rec.tobytes()

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self._header() + "\n")
        buf.write("time,origin,mark\n")
        for t, o, k in zip(self.times.tolist(), self.origins.tolist(), self.mark_ids.tolist()):
            buf.write(f"{t!r},{'I' if o == IMMIGRATION else 'H'},{k}\n")
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "PathRecord":
        head, _, body = blob.partition(b"\n")
        fields = dict(kv.split("=", 1) for kv in head.decode().split()[3:])
        rec = np.frombuffer(body, dtype=_RECORD)
        return cls(
            times=rec["time"].copy(), origins=rec["origin"].copy(), mark_ids=rec["mark"].copy(),
            horizon=float(fields["horizon"]), seed=int(fields["seed"]), path_index=int(fields["path_index"]),
            spec_hash=fields["spec_hash"], accepted=int(fields["accepted"]), proposed=int(fields["proposed"]),
        )


# ---------------------------------------------------------------------------
# Thinning
# ---------------------------------------------------------------------------


def _immigrants(spec: ModelSpec, horizon: float, seed: int, path_index: int):
    rng = substream(seed, path_index, "immigration")
    n = int(rng.poisson(spec.lambda_I * horizon))
    times = np.sort(rng.uniform(0.0, horizon, n))
    marks = list(spec.nu_I.draw_many(rng, n)) if n else []
    return times.tolist(), marks


def _violated(z: float, bound: float, t: float) -> ThinningBoundViolated:
    return ThinningBoundViolated(f"intensity {z!r} exceeds thinning bound {bound!r} at t={t!r}")


def _thin_exponential(spec, b, horizon, imm_t, imm_u, draws, feed, cap):
    """Thinning for ``phi = a(u) exp(-b t)``: the kernel sum decays as one exponential."""
    kernel, mu0 = spec.kernel, spec.mu0
    amp: dict = {}

    def a_of(u):
        if not isinstance(u, int):
            return kernel.event_params(u)[0]
        v = amp.get(u)
        if v is None:
            v = amp[u] = kernel.event_params(u)[0]
        return v

    out_t, out_u = [], []
    proposed = 0
    t = 0.0
    S = 0.0  # kernel sum at time t (just after any event at t)
    bound = mu0.majorant(0.0)
    i, n_imm = 0, len(imm_t)
    exp = math.exp
    while True:
        cand = t + draws.exponential() / bound if bound > 0 else math.inf
        if i < n_imm and imm_t[i] <= cand:
            s = imm_t[i]
            S = S * exp(-b * (s - t)) + a_of(imm_u[i])
            t = s
            i += 1
            bound = mu0.majorant(t) + S
            if bound > cap:
                raise IntensityBlowup(f"thinning bound {bound:.3g} exceeds cap {cap:.3g}")
            continue
        if cand > horizon:
            break
        proposed += 1
        S = S * exp(-b * (cand - t))
        t = cand
        z = mu0.value(t) + S
        if z > bound * (1.0 + _BOUND_RTOL):
            raise _violated(z, bound, t)
        if draws.uniform() * bound <= z:
            u = feed.next()
            out_t.append(t)
            out_u.append(u)
            S += a_of(u)
        bound = mu0.majorant(t) + S
        if bound > cap:
            raise IntensityBlowup(f"thinning bound {bound:.3g} exceeds cap {cap:.3g}")
    return out_t, out_u, proposed


def _thin_general(spec, horizon, imm_t, imm_u, draws, feed, cap, eps):
    """Thinning with an explicit list of retained past events."""
    kernel, mu0 = spec.kernel, spec.mu0
    phi_s, maj_s = kernel.phi_scalar, kernel.majorant_scalar
    drop_below = eps * spec.lambda_I
    act_t: list[float] = []
    act_p: list[tuple] = []

    out_t, out_u = [], []
    proposed = 0
    t = 0.0
    bound = mu0.majorant(0.0)
    i, n_imm = 0, len(imm_t)
    while True:
        cand = t + draws.exponential() / bound if bound > 0 else math.inf
        if i < n_imm and imm_t[i] <= cand:
            t = imm_t[i]
            p = kernel.event_params(imm_u[i])
            act_t.append(t)
            act_p.append(p)
            bound += maj_s(0.0, p)
            i += 1
            if bound > cap:
                raise IntensityBlowup(f"thinning bound {bound:.3g} exceeds cap {cap:.3g}")
            continue
        if cand > horizon:
            break
        proposed += 1
        t = cand
        z = mu0.value(t)
        new_bound = mu0.majorant(t)
        keep_t, keep_p = [], []
        for s, p in zip(act_t, act_p):
            age = t - s
            mj = maj_s(age, p)
            if mj < drop_below:
                continue
            keep_t.append(s)
            keep_p.append(p)
            new_bound += mj
            z += phi_s(age, p)
        act_t, act_p = keep_t, keep_p
        if z > bound * (1.0 + _BOUND_RTOL):
            raise _violated(z, bound, t)
        if draws.uniform() * bound <= z:
            u = feed.next()
            p = kernel.event_params(u)
            out_t.append(t)
            out_u.append(u)
            act_t.append(t)
            act_p.append(p)
            new_bound += maj_s(0.0, p)
        bound = new_bound
        if bound > cap:
            raise IntensityBlowup(f"thinning bound {bound:.3g} exceeds cap {cap:.3g}")
    return out_t, out_u, proposed


def simulate_path(spec: ModelSpec, horizon: float, seed: int, path_index: int = 0,
                  eps: float = 1e-12, cap: float = 1e9) -> PathRecord:
    """Sample the immigrant and Hawkes events of ``spec`` on ``[0, horizon]``.

    The result is a deterministic function of ``(spec, horizon, seed,
    path_index)``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    imm_t, imm_u = _immigrants(spec, horizon, seed, path_index)
    draws = BufferedDraws(substream(seed, path_index, "hawkes"))
    feed = MarkFeed(spec.nu_H, substream(seed, path_index, "hawkes_marks"))
    b = spec.kernel.common_decay
    if b is not None:
        h_t, h_u, proposed = _thin_exponential(spec, b, horizon, imm_t, imm_u, draws, feed, cap)
    else:
        h_t, h_u, proposed = _thin_general(spec, horizon, imm_t, imm_u, draws, feed, cap, eps)

    times = np.concatenate([np.asarray(imm_t, dtype=float), np.asarray(h_t, dtype=float)])
    origins = np.concatenate([np.zeros(len(imm_t), np.uint8), np.ones(len(h_t), np.uint8)])
    marks = list(imm_u) + list(h_u)
    order = np.lexsort((origins, times))
    if isinstance(spec.nu_H, DiscreteMarks):
        mark_ids = np.asarray(marks, dtype=np.uint32).reshape(-1)[order]
        table = None
    else:
        table = tuple(marks[k] for k in order)
        mark_ids = np.arange(len(marks), dtype=np.uint32)
    return PathRecord(
        times=times[order], origins=origins[order], mark_ids=mark_ids, horizon=float(horizon),
        seed=int(seed), path_index=int(path_index), spec_hash=spec.spec_hash,
        accepted=len(h_t), proposed=proposed, mark_table=table,
    )


# ---------------------------------------------------------------------------
# Path functionals
# ---------------------------------------------------------------------------


def _check_time(path: PathRecord, t: float) -> None:
    if t < 0 or t > path.horizon:
        raise OutOfRange(f"t={t!r} outside [0, {path.horizon!r}]")


def intensity_at(spec: ModelSpec, path: PathRecord, t: float) -> float:
    """Left-limit intensity ``Z(t-)``: events at exactly ``t`` are excluded."""
    _check_time(path, t)
    k = int(np.searchsorted(path.times, t, side="left"))
    z = float(spec.mu0.value(float(t)))
    if k:
        idx = np.arange(k)
        z += float(np.sum(spec.kernel.phi_events(t - path.times[:k], path.marks_of(idx))))
    return z


def intensity_many(spec: ModelSpec, path: PathRecord, ts) -> np.ndarray:
    return np.array([intensity_at(spec, path, float(t)) for t in np.atleast_1d(ts)])


def cumulative_intensity(spec: ModelSpec, path: PathRecord, t: float, h_int: float = 0.01) -> float:
    """``int_0^t Z(s-) ds``; closed form when the kernel has one, else a Riemann sum."""
    _check_time(path, t)
    k = int(np.searchsorted(path.times, t, side="left"))
    base = float(spec.mu0.integral(float(t)))
    if k == 0:
        return base
    ages = t - path.times[:k]
    marks = path.marks_of(np.arange(k))
    try:
        return base + float(np.sum(spec.kernel.integral_events(ages, marks)))
    except NotImplementedError:
        grid = np.arange(0.0, t, h_int)
        return h_int * float(sum(intensity_at(spec, path, float(s)) for s in grid))


def shot_noise_at(spec: ModelSpec, path: PathRecord, shot: ShotShape | None, t: float) -> tuple[float, float]:
    """``(S_H(t), S_I(t))``: ``psi(t - s_j, u_j)`` summed over events with ``s_j <= t``."""
    _check_time(path, t)
    shot = shot if shot is not None else spec.shot
    k = int(np.searchsorted(path.times, t, side="right"))
    if k == 0 or shot is None:
        return 0.0, 0.0
    vals = np.asarray(shot.psi_events(t - path.times[:k], path.marks_of(np.arange(k))), dtype=float)
    hawk = path.origins[:k] == HAWKES
    return float(vals[hawk].sum()), float(vals[~hawk].sum())


def counting(path: PathRecord, t: float, mark_predicate: Callable[[Any], bool] | None = None,
             origin: int = HAWKES) -> int:
    """Number of events of ``origin`` with time ``<= t`` whose mark satisfies the predicate."""
    _check_time(path, t)
    k = int(np.searchsorted(path.times, t, side="right"))
    idx = np.flatnonzero(path.origins[:k] == origin)
    if mark_predicate is None:
        return int(idx.size)
    return int(sum(1 for i in idx if mark_predicate(path.mark(int(i)))))
