"""Exact verifiers and finite certificates for the operator's quantitative claims.

Every "for all k" statement is reduced to a finite one: an exhaustive check
over one period window plus the exact scalar relation
``T^{2Δ} = 2**(-2η)`` on the enclosing section.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np

from .dyadic import ONE, ZERO, Dyadic, FinVec, pow2_le
from .errors import HorizonExceeded, PreconditionError
from .operator import OperatorSpec


@dataclass
class CheckResult:
    """Outcome of one verifier; ``witness`` holds the first counterexample."""

    statement: str
    passed: bool
    details: dict = field(default_factory=dict)
    witness: Optional[dict] = None

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        out = {"statement": self.statement, "passed": self.passed, "details": self.details}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def decay_slope(spec: OperatorSpec) -> Fraction:
    """Orbit decay exponent ``η⁽⁰⁾ / (3Δ⁽⁰⁾)``."""
    return Fraction(spec.gen_eta[0], 3 * spec.gen_Delta[0])


# periodicity -------------------------------------------------------------

def check_eigen_period(spec: OperatorSpec, n: int, samples: Optional[List[int]] = None) -> CheckResult:
    """``T^{2Δ_n} e_k = (R_n^{-1} W_n)^2 e_k`` for k in block n, by plain iteration."""
    name = "eigen-periodicity of block basis vectors"
    if not spec.compatibility_holds(n):
        return CheckResult(name, False, {"n": n}, {"reason": "compatibility equation fails", "n": n})
    lo, hi = spec.b(n), spec.b(n + 1)
    ks = range(lo, hi) if samples is None else samples
    P = spec.period(n)
    scalar = Dyadic.pow2(spec.log2_period_scalar(n))
    checked = 0
    for k in ks:
        if not lo <= k < hi:
            raise PreconditionError(f"index {k} is not in block {n}")
        e = FinVec.basis(k)
        got = spec.power(e, P, method="step")
        if got != e.scale(scalar):
            return CheckResult(name, False, {"n": n}, {"k": k, "got": got.to_json()})
        checked += 1
    return CheckResult(name, True, {"n": n, "period": P, "scalar": scalar.to_json(), "checked": checked})


def check_section_period(spec: OperatorSpec, x: FinVec, n: int) -> CheckResult:
    """``T^{2Δ_n} x = 2^{-2η_n} x`` for x supported below ``b_{n+1}``."""
    name = "scalar periodicity of finite sections"
    if x.support_max >= spec.b(n + 1):
        raise PreconditionError(f"support of x leaves [0, b_{n + 1})")
    P = spec.period(n)
    scalar = Dyadic.pow2(-2 * spec.eta_n(n))
    got = spec.power(x, P, method="step")
    ok = got == x.scale(scalar)
    return CheckResult(name, ok, {"n": n, "period": P, "scalar": scalar.to_json()},
                       None if ok else {"got": got.to_json()})


# invertibility -----------------------------------------------------------

def check_invertibility(spec: OperatorSpec, L: int) -> CheckResult:
    """Exact check of the hypotheses that make the inverse bounded.

    For ``m <= L``: ``sup_{φ(n)=m} |v_n| = 2^{-τ_m} <= 2^{-m}``; for ``l <= L``:
    the chain sum ``Σ_m Π_{s<=m} |v_{φ^s(l)}|`` is at most 2.
    """
    name = "invertibility hypotheses"
    if spec.r_mode != "one":
        return CheckResult(name, False, {}, {"reason": "R_n is not identically 1"})
    tau = spec.tau
    if tau is None:
        raise PreconditionError("spec has no tau schedule")
    L = min(L, spec.n_blocks - 1)
    for m in range(L + 1):
        if tau[m] <= 0 or (m and tau[m] <= tau[m - 1]):
            return CheckResult(name, False, {"L": L}, {"reason": "tau not increasing positive", "m": m})
        if tau[m] < m:
            return CheckResult(name, False, {"L": L}, {"reason": "2^-tau_m > 2^-m", "m": m, "tau_m": tau[m]})
    worst = ZERO
    for l in range(L + 1):
        total, prod, q = ZERO, ONE, l
        while q:
            prod = prod * spec.v(q)
            total = total + prod
            q = spec.phi(q)
        if total > Dyadic(2):
            return CheckResult(name, False, {"L": L}, {"reason": "chain sum exceeds 2", "l": l, "sum": total.to_json()})
        worst = max(worst, total)
    return CheckResult(name, True, {"L": L, "max_chain_sum": worst.to_json()})


def check_inv_contraction(spec: OperatorSpec, x: FinVec) -> CheckResult:
    lhs = spec.apply_T_inv(x).norm()
    rhs = x.norm().scale2(1)
    ok = lhs <= rhs
    return CheckResult("inverse norm at most 2", ok, {"lhs": lhs.to_json(), "rhs": rhs.to_json()},
                       None if ok else {"x": x.to_json()})


# orbit decay -------------------------------------------------------------

@dataclass
class DecayCertificate:
    """``‖T^k y‖ <= 2^{-rate k}`` for every ``k >= k0``.

    Checked exactly on ``[k0, k0 + period)`` and extended by the exact
    per-period factor ``2**log2_period_scalar``.
    """

    rate_num: int
    rate_den: int
    k0: int
    window_checked: tuple
    period: int
    log2_period_scalar: int
    generation: int
    valid: bool

    @property
    def rate(self) -> Fraction:
        return Fraction(self.rate_num, self.rate_den)

    def to_json(self) -> dict:
        return {"rate": [self.rate_num, self.rate_den], "k0": self.k0, "window_checked": list(self.window_checked),
                "period": self.period, "log2_period_scalar": self.log2_period_scalar,
                "generation": self.generation, "valid": self.valid}


def _log2_upper(d: Dyadic) -> float:
    return math.log2(d.m) + d.e if d.m > 0 else -math.inf


def _last_failing_q(f: Dyadic, r: int, rate: Fraction, c: Fraction) -> int:
    """Largest q >= 0 with ``f > 2^{c q - rate r}``, or -1."""
    if not f:
        return -1
    est = (_log2_upper(f) + float(rate * r)) / float(c)
    q = max(-1, math.floor(est) + 1)
    while q >= 0 and pow2_le(f, c * q - rate * r):
        q -= 1
    while not pow2_le(f, c * (q + 1) - rate * (r)):
        q += 1
    return q


def decay_certificate_vec(spec: OperatorSpec, y: FinVec) -> DecayCertificate:
    """Smallest ``k0`` with ``‖T^k y‖ <= 2^{-rate k}`` for all ``k >= k0``."""
    rate = decay_slope(spec)
    if y.is_zero():
        return DecayCertificate(rate.numerator, rate.denominator, 0, (0, 0), 1, 0, 0, True)
    N = spec.block_of(y.support_max)
    K = spec.gen_of(N)
    P = spec.period(N)
    lps = spec.log2_period_scalar(N)
    c = Fraction(-lps) - rate * P  # exponent slack gained per period
    norms = [spec.power(y, r).norm() for r in range(P)]
    k0 = 0
    for r, f in enumerate(norms):
        q = _last_failing_q(f, r, rate, c)
        if q >= 0:
            k0 = max(k0, q * P + r + 1)
    valid = c > 0
    for k in range(k0, k0 + P):
        if not pow2_le(spec.power(y, k).norm(), -rate * k):
            valid = False
            break
    return DecayCertificate(rate.numerator, rate.denominator, k0, (k0, k0 + P - 1), P, lps, K, valid)


def decay_holds_at(spec: OperatorSpec, y: FinVec, k: int, method: str = "section") -> bool:
    """Recompute ``‖T^k y‖ <= 2^{-rate k}`` from scratch."""
    return pow2_le(spec.power(y, k, method=method).norm(), -decay_slope(spec) * k)


class BasisNorms:
    """Exact norms and range upper bounds for ``‖T^k e_{b_n}‖``.

    For ``k < Δ_n`` the orbit is a single weighted basis vector.  For
    ``Δ_n <= k < 2Δ_n`` it splits into a copy of the orbit of ``e_{b_{φ(n)}}``
    and a copy of the block's own start; the two live in different blocks so
    their norms add.
    """

    def __init__(self, spec: OperatorSpec):
        self.spec = spec
        self._full: Dict[int, Dyadic] = {}

    def _coef(self, n: int):
        s = self.spec
        lw = s.log2_W(n)
        own = Dyadic.pow2(lw + s.log2_Rinv(n))
        anc = Dyadic.pow2(lw) * s.v(n) if n else ZERO
        return own, anc

    def _max_prefix(self, n: int, a: int, b: int) -> int:
        # the weight prefix falls then rises, so its maximum sits at an end
        s = self.spec
        return max(s.log2_prefix(n, a), s.log2_prefix(n, b - 1))

    def exact(self, n: int, k: int) -> Dyadic:
        s = self.spec
        q, r = divmod(k, s.period(n))
        out = self._exact_base(n, r)
        return out.scale2(q * s.log2_period_scalar(n))

    def _exact_base(self, n: int, r: int) -> Dyadic:
        s = self.spec
        D = s.Delta_n(n)
        if r < D:
            return Dyadic.pow2(s.log2_prefix(n, r))
        t = r - D
        own, anc = self._coef(n)
        out = abs(own) * Dyadic.pow2(s.log2_prefix(n, t))
        if n:
            out = out + abs(anc) * self.exact(s.phi(n), t)
        return out

    def upper(self, n: int, a: int, b: int) -> Dyadic:
        """Upper bound for ``max_{a <= k < b} ‖T^k e_{b_n}‖``, any ``0 <= a < b``."""
        s = self.spec
        P = s.period(n)
        lps = s.log2_period_scalar(n)
        qa, ra = divmod(a, P)
        qb = (b - 1) // P
        if qa != qb:
            # the per-period factor is at most 1, so the first period dominates
            return self.full_period(n).scale2(qa * lps)
        return self._upper_base(n, ra, ra + b - a).scale2(qa * lps)

    def full_period(self, n: int) -> Dyadic:
        hit = self._full.get(n)
        if hit is None:
            hit = self._upper_base(n, 0, self.spec.period(n))
            self._full[n] = hit
        return hit

    def _upper_base(self, n: int, a: int, b: int) -> Dyadic:
        s = self.spec
        D = s.Delta_n(n)
        best = ZERO
        if a < D:
            best = Dyadic.pow2(self._max_prefix(n, a, min(b, D)))
        if b > D:
            ta, tb = max(a, D) - D, b - D
            own, anc = self._coef(n)
            part = abs(own) * Dyadic.pow2(self._max_prefix(n, ta, tb))
            if n:
                part = part + abs(anc) * self.upper(s.phi(n), ta, tb)
            best = max(best, part)
        return best


def basis_decay_from(spec: OperatorSpec, n: int, k0: int = 0, norms: Optional[BasisNorms] = None,
                     max_splits: int = 1 << 20) -> bool:
    """Certify ``‖T^k e_{b_n}‖ <= 2^{-rate k}`` for every ``k >= k0``.

    The window ``[k0, k0 + 2Δ_n)`` is covered by ranges whose upper bound is
    compared with the bound at the range's right end (the bound decreases);
    failing ranges are halved down to single steps, which are exact.
    """
    norms = norms or BasisNorms(spec)
    rate = decay_slope(spec)
    P = spec.period(n)
    if Fraction(-spec.log2_period_scalar(n)) < rate * P:
        return False
    stack = [(k0, k0 + P)]
    splits = 0
    while stack:
        a, b = stack.pop()
        if b - a == 1:
            if not pow2_le(norms.exact(n, a), -rate * a):
                return False
            continue
        if pow2_le(norms.upper(n, a, b), -rate * (b - 1)):
            continue
        splits += 1
        if splits > max_splits:
            raise HorizonExceeded("range splitting budget exhausted")
        mid = (a + b) // 2
        stack.append((mid, b))
        stack.append((a, mid))
    return True


def basis_decay_threshold(spec: OperatorSpec, n: int, norms: Optional[BasisNorms] = None) -> int:
    """Smallest k0 with ``‖T^k e_{b_n}‖ <= 2^{-rate k}`` for all ``k >= k0``."""
    norms = norms or BasisNorms(spec)
    rate = decay_slope(spec)
    P = spec.period(n)
    c = Fraction(-spec.log2_period_scalar(n)) - rate * P
    if c <= 0:
        raise PreconditionError("per-period factor does not beat the decay rate")
    if basis_decay_from(spec, n, 0, norms):
        return 0
    k0 = 0
    for r in range(P):
        q = _last_failing_q(norms.exact(n, r), r, rate, c)
        if q >= 0:
            k0 = max(k0, q * P + r + 1)
    return k0


@dataclass
class BasisDecayCertificate:
    K: int
    blocks: tuple
    rate_num: int
    rate_den: int
    C: Dyadic
    proof_condition: bool  # 2^{η_K / 3} > C + 1
    certified: bool

    def to_json(self) -> dict:
        return {"K": self.K, "blocks": list(self.blocks), "rate": [self.rate_num, self.rate_den],
                "C": self.C.to_json(), "proof_condition": self.proof_condition, "certified": self.certified}


def _orbit_sup(spec: OperatorSpec, N: int, norms: BasisNorms) -> Dyadic:
    """``max_{m <= N} max_{j < 2Δ_m} ‖T^j e_{b_m}‖``, exactly."""
    best = ZERO
    for m in range(min(N, spec.n_blocks - 1) + 1):
        for j in range(spec.period(m)):
            best = max(best, norms.exact(m, j))
    return best


def decay_certificate_basis(spec: OperatorSpec, K0: int, N: int) -> BasisDecayCertificate:
    """Smallest generation ``K >= K0`` whose first N blocks decay at the base rate for all k.

    The blocks checked are ``[n_K, n_K + N)``; ``n_{K+1} - n_K > N`` keeps them
    inside generation K.  The constant C of the textbook argument is
    recomputed and the condition ``2^{η_K/3} > C + 1`` reported.
    """
    norms = BasisNorms(spec)
    C = _orbit_sup(spec, N, norms)
    for K in range(K0, spec.K_max + 1):
        nK = spec.n_k(K)
        if spec.n_k(K + 1) - nK <= N:
            continue
        blocks = tuple(range(nK, nK + N))
        if all(basis_decay_from(spec, n, 0, norms) for n in blocks):
            eta = spec.gen_eta[K]
            c1 = C + ONE
            proof = pow2_le(c1 * c1 * c1, eta) and c1 * c1 * c1 != Dyadic.pow2(eta)
            rate = decay_slope(spec)
            return BasisDecayCertificate(K, blocks, rate.numerator, rate.denominator, C, proof, True)
    raise HorizonExceeded(f"no generation in [{K0}, {spec.K_max}] certifies {N} blocks")


# inverse bounds ----------------------------------------------------------

def cross_block_bound(spec: OperatorSpec, l: int, s: int, n: int, j: int, x: FinVec) -> CheckResult:
    """``‖P_l T^{-j} P_n x‖ <= 2^{j - τ_{l+s-1}} ‖P_n x‖`` for ``φ^s(n) = l``, ``n != 0``.

    The details also record the variant ``2^{j - τ_l + s - 1}``.
    """
    if s < 1 or n == 0:
        raise PreconditionError("need s >= 1 and n != 0")
    q = n
    for _ in range(s):
        q = spec.phi(q)
    if q != l:
        raise PreconditionError(f"φ^{s}({n}) = {q}, not {l}")
    px = spec.proj_block(x, n)
    lhs = spec.proj_block(spec.power(px, -j), l).norm()
    base = px.norm()
    tau = spec.tau
    proof_rhs = base.scale2(j - tau[l + s - 1])
    printed_rhs = base.scale2(j - tau[l] + s - 1)
    ok = lhs <= proof_rhs
    return CheckResult("cross-block inverse bound", ok,
                       {"l": l, "s": s, "n": n, "j": j, "lhs": lhs.to_json(), "rhs": proof_rhs.to_json(),
                        "printed_variant_rhs": printed_rhs.to_json(), "printed_variant_passed": lhs <= printed_rhs},
                       None if ok else {"x": x.to_json()})


def block_shift_costs(spec: OperatorSpec, l: int) -> np.ndarray:
    """``a[t] = log2`` of the factor picked up by ``T^{-1}`` leaving offset t of block l."""
    eta, delta, D = spec._profile(l)
    t = np.arange(D)
    a = np.zeros(D, dtype=np.int64)
    a[(t >= 1) & (t <= eta)] = 1
    a[(t >= D - 2 * delta) & (t < D - delta)] = 1
    a[t >= D - delta] = -1
    return a


def min_window_sums(a: np.ndarray) -> np.ndarray:
    """``mw[r]`` = least sum of r cyclically consecutive entries, r in [0, len(a))."""
    D = len(a)
    pref = np.concatenate(([0], np.cumsum(np.concatenate((a, a)))))
    mw = np.zeros(D, dtype=np.int64)
    ends = np.arange(D, 2 * D)  # window (end - r, end], end ranges over one cycle
    for r in range(1, D):
        mw[r] = (pref[ends + 1] - pref[ends + 1 - r]).min()
    return mw


@dataclass
class GainProfile:
    """Exact ``log2`` of the least coefficient of ``P_l T^{-j} P_l``.

    The block action is monomial: ``T^{-1}`` moves each coefficient one slot
    down (wrapping with a sign at the block start), so the gain at j is
    ``η⌊j/Δ⌋ + mw(j mod Δ)``.
    """

    l: int
    generation: int
    Delta: int
    eta: int
    delta: int
    log2_gains: list
    floor_ok: bool
    period_ok: bool

    @property
    def period(self) -> int:
        return 2 * self.Delta

    @property
    def log2_factor(self) -> int:
        return 2 * self.eta

    def gain(self, j: int) -> Dyadic:
        return Dyadic.pow2(self.log2_gains[j])

    def to_json(self) -> dict:
        return {"l": self.l, "generation": self.generation, "Delta": self.Delta, "eta": self.eta,
                "delta": self.delta, "period": self.period, "log2_factor": self.log2_factor,
                "log2_gains": list(self.log2_gains), "floor_ok": self.floor_ok, "period_ok": self.period_ok}


def log2_gain_table(spec: OperatorSpec, l: int) -> np.ndarray:
    """``log2 g(j)`` for ``j`` in one block length; extend with ``+η`` per block length."""
    return min_window_sums(block_shift_costs(spec, l))


def gain_profile(spec: OperatorSpec, l: int, j_max: int) -> GainProfile:
    eta, delta, D = spec._profile(l)
    mw = log2_gain_table(spec, l)
    js = np.arange(j_max + 1)
    g = eta * (js // D) + mw[js % D]
    floor = eta * (js // D) - delta
    floor_ok = bool((g >= floor).all())
    P = 2 * D
    period_ok = bool((g[P:] == g[:-P] + 2 * eta).all()) if j_max >= P else True
    return GainProfile(l, spec.gen_of(l), D, eta, delta, [int(v) for v in g], floor_ok, period_ok)


def block_inverse_power(spec: OperatorSpec, l: int, j: int, x: FinVec) -> FinVec:
    """``P_l T^{-j} P_l x`` by iterating the inverse and projecting."""
    y = spec.proj_block(x, l)
    for _ in range(j):
        y = spec.apply_T_inv(y)
    return spec.proj_block(y, l)


def verify_gain_floor(spec: OperatorSpec, l: int, j_max: int) -> CheckResult:
    """Exact check, by iteration, of ``‖P_l T^{-j} P_l e_m‖ >= 2^{η⌊j/Δ⌋-δ}`` for all m, j."""
    eta, delta, D = spec._profile(l)
    lo, hi = spec.b(l), spec.b(l + 1)
    vecs = {m: FinVec.basis(m) for m in range(lo, hi)}
    for j in range(j_max + 1):
        bound = Dyadic.pow2(eta * (j // D) - delta)
        for m, v in vecs.items():
            p = spec.proj_block(v, l)
            if len(p) > 1:
                return CheckResult("block gain floor", False, {"l": l}, {"reason": "not monomial", "m": m, "j": j})
            if p.norm() < bound:
                return CheckResult("block gain floor", False, {"l": l}, {"m": m, "j": j, "norm": p.norm().to_json()})
        if j < j_max:
            vecs = {m: spec.apply_T_inv(v) for m, v in vecs.items()}
    return CheckResult("block gain floor", True, {"l": l, "j_max": j_max})
