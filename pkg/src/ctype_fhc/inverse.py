"""Gain thresholds, τ synthesis and inverse-orbit profiling.

The block action ``P_l T^{-j} P_l`` involves only the weights and the ``-1``
recurrence, so the thresholds ``J_l`` are computed before τ is chosen; τ is
then the least increasing sequence meeting the two growth inequalities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from .certificates import log2_gain_table
from .dyadic import ZERO, Dyadic, FinVec, frac_to_json
from .errors import PreconditionError
from .operator import OperatorSpec


def compute_S(spec: OperatorSpec, l: int) -> int:
    """``S_l = Σ_{l' <= l} (2Δ_{l'} + l')``."""
    return sum(2 * spec.Delta_n(q) + q for q in range(l + 1))


@dataclass
class GainCertificate:
    """Every ``j >= J`` has least block gain at least ``2^S``."""

    l: int
    S: int
    J: int
    window: tuple
    period: int
    log2_factor: int

    def to_json(self) -> dict:
        return {"l": self.l, "S": self.S, "J": self.J, "window": list(self.window),
                "period": self.period, "log2_factor": self.log2_factor}


def certify_J(spec: OperatorSpec, l: int) -> GainCertificate:
    """Least J with ``log2 g(j) >= S_l`` for all ``j >= J``.

    With ``log2 g(j) = η q + mw(r)`` for ``j = qΔ + r``, no j with
    ``q >= ceil((S - min mw) / η)`` fails; scanning q downward from there
    finds the last failure.  The window ``[J, J + 2Δ)`` is then re-checked and
    extended by the exact factor ``2^{2η}`` per period.
    """
    eta, delta, D = spec._profile(l)
    S = compute_S(spec, l)
    mw = log2_gain_table(spec, l)
    q = -(-(S - int(mw.min())) // eta)
    J = 0
    while q > 0:
        q -= 1
        bad = np.nonzero(eta * q + mw < S)[0]
        if bad.size:
            J = q * D + int(bad[-1]) + 1
            break
    js = np.arange(J, J + 2 * D)
    if not (eta * (js // D) + mw[js % D] >= S).all():
        raise AssertionError("gain window check failed")
    return GainCertificate(l, S, max(J, 1), (max(J, 1), J + 2 * D - 1), 2 * D, 2 * eta)


def brute_force_J(spec: OperatorSpec, l: int, j_max: int) -> int:
    """Last failing j plus one, from a direct minimum over every block offset."""
    eta, delta, D = spec._profile(l)
    from .certificates import block_shift_costs

    a = block_shift_costs(spec, l)
    S = compute_S(spec, l)
    last = -1
    for j in range(j_max + 1):
        # coefficient that starts at offset o collects a[o], a[o-1], ..., a[o-j+1]
        idx = (np.arange(D)[:, None] - np.arange(j)[None, :]) % D
        g = a[idx].sum(axis=1).min() if j else 0
        if g < S:
            last = j
    return max(last + 1, 1)


def tau_lower_bounds(spec: OperatorSpec, l: int, J: int) -> tuple:
    """The two lower bounds on τ_l: the growth margin and the density ratio."""
    S = compute_S(spec, l)
    eta, delta = spec.eta_n(l), spec.delta_n(l)
    first = S + 2 * eta + delta + 2 * l + 3
    # J / (τ - l - S - δ - 3) <= 2^-l with a positive denominator
    second = J * 2 ** l + l + S + delta + 3
    return first, second


def tau_conditions_hold(spec: OperatorSpec, l: int, J: int, tau_l: int) -> tuple:
    """Substitute τ_l back into both inequalities (exact)."""
    S = compute_S(spec, l)
    eta, delta = spec.eta_n(l), spec.delta_n(l)
    first = tau_l >= S + 2 * eta + delta + 2 * l + 3
    den = tau_l - l - S - delta - 3
    second = den > 0 and Fraction(J, den) <= Fraction(1, 2 ** l)
    return first, second


@dataclass
class TauSchedule:
    values: List[int]
    binding: List[str]
    J: List[int]
    S: List[int]

    @property
    def L(self) -> int:
        return len(self.values) - 1

    def extended(self, count: int) -> tuple:
        """First ``count`` values, continuing by +1 past the synthesized range."""
        out = list(self.values[:count])
        while len(out) < count:
            out.append(out[-1] + 1)
        return tuple(out)

    def to_json(self) -> dict:
        return {"tau": list(self.values), "binding": list(self.binding), "J": list(self.J), "S": list(self.S)}


def synthesize_tau(spec: OperatorSpec, L: int) -> TauSchedule:
    """Least increasing τ_0..τ_L meeting both inequalities, each tagged with its binding bound."""
    values, binding, Js, Ss = [], [], [], []
    for l in range(L + 1):
        J = certify_J(spec, l).J
        first, second = tau_lower_bounds(spec, l, J)
        cands = [("growth-margin", first), ("density-ratio", second)]
        if values:
            cands.append(("increasing", values[-1] + 1))
        tag, val = max(cands, key=lambda c: c[1])
        values.append(val)
        binding.append(tag)
        Js.append(J)
        Ss.append(compute_S(spec, l))
        if not all(tau_conditions_hold(spec, l, J, val)):
            raise AssertionError(f"synthesized tau_{l} fails substitution")
    return TauSchedule(values, binding, Js, Ss)


# inverse orbits ----------------------------------------------------------

def anchor_block(spec: OperatorSpec, x: FinVec) -> int:
    """Least ``l >= 1`` with ``‖P_l x‖ >= 2^{-l} ‖x - P_0 x‖``."""
    rest = x.restrict(spec.b(1), spec.dim).norm()
    if not rest:
        raise PreconditionError("x lives in block 0; no anchor block")
    for l in spec.blocks_of(x):
        if l >= 1 and spec.proj_block(x, l).norm() >= rest.scale2(-l):
            return l
    raise AssertionError("unreachable: the heaviest block always qualifies")


@dataclass
class ScarcityTrace:
    l0: int
    H: int
    count: int
    threshold: Dyadic
    norms: list = field(repr=False, default_factory=list)
    chain: list = field(default_factory=list)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.count, self.H) if self.H else Fraction(0)

    def to_json(self, with_norms: bool = False) -> dict:
        out = {"l0": self.l0, "H": self.H, "count": self.count,
               "fraction": frac_to_json(self.fraction),
               "threshold": self.threshold.to_json(), "chain": self.chain}
        if with_norms:
            out["norms"] = [d.to_json() for d in self.norms]
        return out


def inverse_orbit_norms(spec: OperatorSpec, x: FinVec, H: int) -> list:
    """``‖T^{-j} x‖`` for ``j < H`` by stepping the inverse."""
    out = []
    y = x
    for j in range(H):
        out.append(y.norm())
        if j + 1 < H:
            y = spec.apply_T_inv(y)
    return out


def scarcity_profile(spec: OperatorSpec, x: FinVec, H: int, chain: bool = True) -> ScarcityTrace:
    """Share of ``j < H`` with ``‖T^{-j} x‖ >= (3/4) ‖P_{l0} x‖``.

    The share is reported, not asserted.  When ``chain`` is set the anchor
    chain ``(l_m, j_m, s_m)`` is extracted while its defining minimum is
    attained below H, taking the smallest candidate at each choice.
    """
    l0 = anchor_block(spec, x)
    threshold = Dyadic(3, -2) * spec.proj_block(x, l0).norm()
    norms = inverse_orbit_norms(spec, x, H)
    count = sum(1 for d in norms if d >= threshold)
    trace = ScarcityTrace(l0, H, count, threshold, norms)
    if chain:
        trace.chain = extract_chain(spec, x, l0, H)
    return trace


def _depth_to(spec: OperatorSpec, n: int, l: int) -> Optional[int]:
    """s >= 1 with ``φ^s(n) = l``, if any."""
    s = 0
    while n > l:
        n = spec.phi(n)
        s += 1
    return s if n == l and s >= 1 else None


def extract_chain(spec: OperatorSpec, x: FinVec, l0: int, H: int) -> list:
    S_target = spec.proj_block(x, l0).norm()
    records = []
    anchor = l0
    while True:
        desc = {}
        for n in spec.blocks_of(x):
            if n == 0:
                continue
            s = _depth_to(spec, n, anchor)
            if s is not None:
                desc[n] = s
        if not desc:
            break
        comps = {n: spec.proj_block(x, n) for n in desc}
        own = spec.proj_block(x, anchor)
        found = None
        for j in range(H):
            own_n = spec.proj_block(own, anchor).norm()
            parts = {n: spec.proj_block(v, anchor).norm() for n, v in comps.items()}
            by_s: dict = {}
            for n, val in parts.items():
                by_s[desc[n]] = by_s.get(desc[n], ZERO) + val
            if sum(by_s.values(), ZERO) > own_n.scale2(-2):
                s_m = min(s for s, val in by_s.items() if val > own_n.scale2(-s - 2))
                l_m = min(n for n in parts if desc[n] == s_m and parts[n] > own_n.scale2(-n - s_m - 3))
                found = (l_m, j, s_m)
                break
            own = spec.apply_T_inv(own)
            comps = {n: spec.apply_T_inv(v) for n, v in comps.items()}
        if found is None:
            break
        l_m, j_m, s_m = found
        lhs = spec.proj_block(x, l_m).norm().scale2(compute_S(spec, l_m))
        records.append({"l": l_m, "j": j_m, "s": s_m, "mass_condition": lhs >= S_target})
        anchor = l_m
    return records


@dataclass
class GrowthCurve:
    l: int
    norms: list
    floors: list
    ok: bool

    def to_json(self) -> dict:
        return {"l": self.l, "ok": self.ok, "norms": [d.to_json() for d in self.norms]}


def inverse_orbit_growth(spec: OperatorSpec, l: int, H: int) -> GrowthCurve:
    """``‖T^{-j} e_{b_l}‖`` for ``j < H``, each compared with ``2^{η⌊j/Δ⌋-δ}``."""
    eta, delta, D = spec._profile(l)
    norms = inverse_orbit_norms(spec, FinVec.basis(spec.b(l)), H)
    floors = [eta * (j // D) - delta for j in range(H)]
    ok = all(d >= Dyadic.pow2(f) for d, f in zip(norms, floors))
    return GrowthCurve(l, norms, floors, ok)
