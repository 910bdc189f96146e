"""Disjoint, well-separated integer sets of positive lower density.

Construction (interval ladder): intervals ``I_i = [c_i, 2c_i)`` for i >= 1,
with ``c_1 = 4 max d_j`` and ``c_{i+1} = 2c_i + G_{i+1}``.  Interval i belongs
to set ``j = v2(i) + 1`` (so set j owns every ``2^j``-th interval) and holds
the progression ``c_i, c_i + d_j, ...``.  Each set has a single parameter
``p_j = max(s_j, l_j, p_{j-1} + 1)``; strides are ``d_j = 2p_j`` rounded up
to a power of two and gaps are ``G_i = 2 max_{j <= min(i, P)} p_j``.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from .dyadic import frac_to_json
from .errors import PreconditionError


def _pow2_ceil(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class SeparatedFamily:
    pairs: Tuple[Tuple[int, int], ...]
    p: Tuple[int, ...]
    d: Tuple[int, ...]
    H: int
    starts: Tuple[int, ...]  # c_1, c_2, ... up to the first start >= H

    @property
    def size(self) -> int:
        return len(self.pairs)

    def owner(self, i: int) -> int:
        """Set index (1-based) owning interval i, or 0 if none."""
        j = (i & -i).bit_length()
        return j if j <= self.size else 0

    def gap(self, i: int) -> int:
        return 2 * max(self.p[: min(i, self.size)])

    @property
    def ratio(self) -> Fraction:
        """Bound on ``c_{i+1} / c_i``."""
        return 2 + Fraction(2 * max(self.p), self.starts[0]) if self.p else Fraction(2)

    def certified_density(self, j: int) -> Fraction:
        """Lower bound on ``#(A_j ∩ [0,N)) / N`` for ``N >= burn_in(j)``."""
        self._check(j)
        return 1 / (2 * self.d[j - 1] * self.ratio ** (2 ** j))

    def burn_in(self, j: int) -> int:
        """``2 c_{2^{j-1}}``: past the end of the first interval of set j."""
        self._check(j)
        return 2 * self.interval_start(2 ** (j - 1))

    def interval_start(self, i: int) -> int:
        c = self.starts[0]
        for q in range(2, i + 1):
            c = 2 * c + self.gap(q)
        return c

    def _check(self, j: int) -> None:
        if not 1 <= j <= self.size:
            raise PreconditionError(f"unknown set index {j}")

    def members(self, j: int, H: int | None = None) -> List[int]:
        self._check(j)
        H = self.H if H is None else H
        d = self.d[j - 1]
        out: List[int] = []
        for i, c in enumerate(self.starts, start=1):
            if c >= H:
                break
            if self.owner(i) == j:
                out.extend(range(c, min(2 * c, H), d))
        return out

    def to_json(self, with_members: bool = True) -> dict:
        out = {"pairs": [list(pr) for pr in self.pairs], "p": list(self.p), "d": list(self.d), "H": self.H,
               "interval_starts": list(self.starts),
               "certified_density": [frac_to_json(self.certified_density(j)) for j in range(1, self.size + 1)],
               "burn_in": [self.burn_in(j) for j in range(1, self.size + 1)]}
        if with_members:
            out["members"] = [self.members(j) for j in range(1, self.size + 1)]
        return out


def build_family(pairs: Sequence[Tuple[int, int]], H: int) -> SeparatedFamily:
    pairs = tuple((int(s), int(l)) for s, l in pairs)
    for s, l in pairs:
        if s < 1 or l < 0:
            raise PreconditionError("need s >= 1 and l >= 0")
    p: List[int] = []
    for s, l in pairs:
        p.append(max(s, l, p[-1] + 1 if p else 0))
    d = [_pow2_ceil(2 * q) for q in p]
    if not pairs:
        return SeparatedFamily((), (), (), H, ())
    c = 4 * max(d)
    starts = [c]
    i = 1
    while c < H:
        i += 1
        c = 2 * c + 2 * max(p[: min(i, len(p))])
        starts.append(c)
    if starts[0] >= H:
        raise PreconditionError(f"horizon {H} ends before the first interval at {starts[0]}")
    return SeparatedFamily(pairs, tuple(p), tuple(d), H, tuple(starts))


def members(family: SeparatedFamily, j: int, H: int) -> List[int]:
    return family.members(j, H)


def verify_family(family: SeparatedFamily, H: int | None = None, chunk: int = 2048) -> dict:
    """Exhaustive pairwise check of disjointness, separation and the floor ``min A_j >= l_j``."""
    H = family.H if H is None else H
    vals, labels = [], []
    floor_ok = True
    for j in range(1, family.size + 1):
        m = family.members(j, H)
        if m and m[0] < family.pairs[j - 1][1]:
            floor_ok = False
        vals.extend(m)
        labels.extend([j] * len(m))
    v = np.asarray(vals, dtype=np.int64)
    s = np.asarray([family.pairs[j - 1][0] for j in labels], dtype=np.int64)
    disjoint = len(set(vals)) == len(vals)
    separated = True
    worst = None
    for a in range(0, len(v), chunk):
        dv = np.abs(v[a:a + chunk, None] - v[None, :])
        need = s[a:a + chunk, None] + s[None, :]
        same = np.arange(a, min(a + chunk, len(v)))[:, None] == np.arange(len(v))[None, :]
        bad = (dv < need) & ~same
        if bad.any():
            separated = False
            r, c = np.argwhere(bad)[0]
            worst = (int(v[a + r]), int(v[c]))
            break
    return {"disjoint": disjoint, "separated": separated, "floor": floor_ok,
            "pairs_checked": len(v) * (len(v) - 1) // 2, "witness": worst}


@dataclass
class DensityCurve:
    """Prefix counts ``#(A ∩ [0,N))`` for ``0 <= N <= H``."""

    H: int
    points: Tuple[int, ...]  # sorted members below H

    def count(self, N: int) -> int:
        return bisect_left(self.points, N)

    def density(self, N: int) -> Fraction:
        if N < 1:
            raise PreconditionError("density needs N >= 1")
        return Fraction(self.count(N), N)

    def counts(self) -> np.ndarray:
        arr = np.zeros(self.H + 1, dtype=np.int64)
        if self.points:
            np.add.at(arr, np.asarray(self.points, dtype=np.int64) + 1, 1)
        return np.cumsum(arr)

    def min_density(self, lo: int, hi: int | None = None) -> Tuple[Fraction, int]:
        """Exact ``min_{lo <= N <= hi} count(N)/N`` and an argmin.

        Between members the count is constant, so the minimum sits at a
        member (just before it is counted) or at an end of the range.
        """
        hi = self.H if hi is None else hi
        lo = max(lo, 1)
        if lo > hi:
            raise PreconditionError("empty range")
        cands = {lo, hi}
        cands.update(a for a in self.points if lo <= a <= hi)
        best = min(cands, key=lambda N: (self.density(N), N))
        return self.density(best), best

    def rows(self):
        """``(N, count, density)`` for ``1 <= N <= H``."""
        c = self.counts()
        for N in range(1, self.H + 1):
            yield N, int(c[N]), Fraction(int(c[N]), N)


def prefix_density(points: Sequence[int], H: int) -> DensityCurve:
    pts = tuple(sorted(a for a in set(points) if 0 <= a < H))
    return DensityCurve(H, pts)
