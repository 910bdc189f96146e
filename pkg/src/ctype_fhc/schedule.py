"""Parameter schedules: block sizes per generation and the τ sequence.

A generation ``k`` groups the blocks ``n`` with ``n_k <= n < n_{k+1}``, where
``n_0 = 0`` and ``n_k = 2**(k-1)``.  All blocks of generation ``k`` have size
``Delta[k]`` and share the weight-profile parameters ``eta[k]``, ``delta[k]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .errors import ScheduleError

R_MODES = ("one", "ctype")


def gen_start(k: int) -> int:
    """First block index ``n_k`` of generation ``k``."""
    if k < 0:
        raise ValueError("generation index must be non-negative")
    return 0 if k == 0 else 1 << (k - 1)


def generation_of(n: int) -> int:
    """Generation containing block ``n``."""
    if n < 0:
        raise ValueError("block index must be non-negative")
    return n.bit_length()


@dataclass(frozen=True)
class Schedule:
    """Declarative description of an operator.

    ``tau`` is one of ``{"table": [...]}``, ``{"rule": "affine", "slope": a,
    "offset": c}`` (giving ``τ_m = c + a*m``) or ``{"rule": "synthesized",
    "L": L}``; the last is resolved against the block structure when the
    operator is derived.
    """

    kind: str = "canonical"
    K_max: int = 3
    beta: Optional[int] = None
    delta: Optional[Tuple[int, ...]] = None
    eta: Optional[Tuple[int, ...]] = None
    Delta: Optional[Tuple[int, ...]] = None
    tau: dict = field(default_factory=lambda: {"rule": "affine", "slope": 1, "offset": 1})
    R: str = "one"

    def __post_init__(self):
        for name in ("delta", "eta", "Delta"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(int(v) for v in val))

    # constructors -----------------------------------------------------
    @classmethod
    def canonical(cls, K_max: int = 3, tau: Optional[dict] = None, R: str = "one") -> "Schedule":
        return cls(kind="canonical", K_max=K_max, beta=8, tau=tau or {"rule": "affine", "slope": 1, "offset": 1}, R=R)

    @classmethod
    def geometric(cls, beta: int, K_max: int = 3, tau: Optional[dict] = None, R: str = "one") -> "Schedule":
        return cls(kind="geometric", K_max=K_max, beta=beta, tau=tau or {"rule": "affine", "slope": 1, "offset": 1}, R=R)

    # derived data -----------------------------------------------------
    @property
    def n_blocks(self) -> int:
        """Number of materialized blocks, ``n_{K_max+1}``."""
        return gen_start(self.K_max + 1)

    def generation_params(self) -> Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]:
        """``(delta, eta, Delta)`` for generations ``0..K_max``."""
        K = self.K_max
        if self.kind in ("canonical", "geometric"):
            beta = 8 if self.kind == "canonical" else self.beta
            if beta is None:
                raise ScheduleError("geometric schedule needs beta")
            if self.kind == "canonical" and self.beta not in (None, 8):
                raise ScheduleError("canonical schedule has beta = 8")
            d = tuple(beta ** k for k in range(K + 1))
            return d, d, tuple(beta ** (k + 1) for k in range(K + 1))
        if self.kind == "explicit":
            if self.delta is None or self.eta is None or self.Delta is None:
                raise ScheduleError("explicit schedule needs delta, eta and Delta tables")
            if min(len(self.delta), len(self.eta), len(self.Delta)) < K + 1:
                raise ScheduleError(f"explicit tables must cover generations 0..{K}")
            return self.delta[: K + 1], self.eta[: K + 1], self.Delta[: K + 1]
        raise ScheduleError(f"unknown schedule kind {self.kind!r}")

    def tau_values(self, count: int) -> Optional[Tuple[int, ...]]:
        """First ``count`` values of τ, or None for a synthesized rule."""
        t = self.tau
        if "table" in t:
            table = tuple(int(v) for v in t["table"])
            if len(table) < count:
                raise ScheduleError(f"tau table has {len(table)} entries, {count} needed")
            return table[:count]
        rule = t.get("rule")
        if rule == "affine":
            a, c = int(t.get("slope", 1)), int(t.get("offset", 1))
            return tuple(c + a * m for m in range(count))
        if rule == "synthesized":
            return None
        raise ScheduleError(f"unknown tau rule {t!r}")

    # validation -------------------------------------------------------
    def validate(self) -> None:
        """Raise ScheduleError naming the first violated constraint."""
        if not isinstance(self.K_max, int) or self.K_max < 0:
            raise ScheduleError("K_max must be a non-negative integer")
        if self.R not in R_MODES:
            raise ScheduleError(f"R must be one of {R_MODES}, got {self.R!r}")
        if self.kind == "geometric":
            b = self.beta
            if not isinstance(b, int) or b < 4 or b % 2:
                raise ScheduleError("geometric beta must be an even integer >= 4 "
                                    "(Delta(k+1) multiple of 2 Delta(k) needs beta even; "
                                    "2 delta + eta < Delta needs beta > 3)")
        delta, eta, Delta = self.generation_params()
        for name, seq in (("delta", delta), ("eta", eta), ("Delta", Delta)):
            if any(v <= 0 for v in seq):
                raise ScheduleError(f"{name} must consist of positive integers")
            for k in range(1, len(seq)):
                if seq[k] <= seq[k - 1]:
                    raise ScheduleError(f"{name} must be increasing: {name}({k}) <= {name}({k - 1})")
        ratio = Fraction(eta[0], Delta[0])
        for k in range(len(Delta)):
            if not 2 * delta[k] + eta[k] < Delta[k]:
                raise ScheduleError(f"2*delta(k) + eta(k) < Delta(k) fails at k={k}: "
                                    f"2*{delta[k]} + {eta[k]} >= {Delta[k]}")
            if k + 1 < len(Delta) and Delta[k + 1] % (2 * Delta[k]):
                raise ScheduleError(f"Delta(k+1) is a multiple of 2*Delta(k) fails at k={k}")
            if Fraction(eta[k], Delta[k]) != ratio:
                raise ScheduleError(f"eta(k)/Delta(k) = eta(0)/Delta(0) fails at k={k}")
        tau = self.tau_values(self.n_blocks)
        if tau is not None:
            check_tau(tau)

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        out = {"kind": self.kind, "K_max": self.K_max, "tau": dict(self.tau), "R": self.R}
        if self.beta is not None:
            out["beta"] = self.beta
        for name in ("delta", "eta", "Delta"):
            if getattr(self, name) is not None:
                out[name] = list(getattr(self, name))
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Schedule":
        known = {"kind", "K_max", "beta", "delta", "eta", "Delta", "tau", "R"}
        extra = set(obj) - known
        if extra:
            raise ScheduleError(f"unknown schedule fields: {sorted(extra)}")
        kw = dict(obj)
        kw.setdefault("tau", {"rule": "affine", "slope": 1, "offset": 1})
        sched = cls(**kw)
        if sched.kind == "canonical" and sched.beta is None:
            sched = cls(**{**kw, "beta": 8})
        return sched

    @classmethod
    def load(cls, path) -> "Schedule":
        return cls.from_json(json.loads(Path(path).read_text()))


def check_tau(tau: Sequence[int]) -> None:
    """τ must be a strictly increasing sequence of positive integers."""
    for m, t in enumerate(tau):
        if not isinstance(t, int) or t <= 0:
            raise ScheduleError(f"tau({m}) = {t!r} is not a positive integer")
        if m and t <= tau[m - 1]:
            raise ScheduleError(f"tau must be increasing: tau({m}) = {t} <= tau({m - 1}) = {tau[m - 1]}")
