"""Counter-based random substreams.

Every random draw in the package comes from a Philox generator keyed by
``(seed, path_index, role)``.  Two replicas never share a stream, and a
replica's stream does not depend on how replicas are scheduled, so results
are bitwise reproducible under any worker count.
"""

from __future__ import annotations

import numpy as np

ROLES = {
    "immigration": 0,
    "hawkes": 1,
    "hawkes_marks": 2,
    "integration": 3,
    "reference": 4,
}

_BLOCK = 2048


def substream(seed: int, path_index: int, role: str) -> np.random.Generator:
    """Return the Philox generator for one (seed, path, role) triple."""
    if role not in ROLES:
        raise KeyError(f"unknown stream role {role!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(path_index), ROLES[role]))
    return np.random.Generator(np.random.Philox(ss))


class BufferedDraws:
    """Scalar standard-exponential and uniform draws served from blocks.

    Pulling one number at a time from a numpy Generator costs about a
    microsecond; the thinning loop needs two per proposal, so draws are
    generated in fixed-size blocks and handed out as Python floats.
    """

    __slots__ = ("_rng", "_exp", "_ie", "_unif", "_iu")

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._exp: list[float] = []
        self._ie = 0
        self._unif: list[float] = []
        self._iu = 0

    def exponential(self) -> float:
        if self._ie >= len(self._exp):
            self._exp = self._rng.standard_exponential(_BLOCK).tolist()
            self._ie = 0
        v = self._exp[self._ie]
        self._ie += 1
        return v

    def uniform(self) -> float:
        if self._iu >= len(self._unif):
            self._unif = self._rng.random(_BLOCK).tolist()
            self._iu = 0
        v = self._unif[self._iu]
        self._iu += 1
        return v


class MarkFeed:
    """Marks drawn in blocks from a distribution's ``draw_many``."""

    __slots__ = ("_dist", "_rng", "_buf", "_i", "_block")

    def __init__(self, dist, rng: np.random.Generator, block: int = 256):
        self._dist = dist
        self._rng = rng
        self._buf: list = []
        self._i = 0
        self._block = block

    def next(self):
        if self._i >= len(self._buf):
            self._buf = list(self._dist.draw_many(self._rng, self._block))
            self._i = 0
        m = self._buf[self._i]
        self._i += 1
        return m
