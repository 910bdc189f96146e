"""Generalized C-type operators on finitely supported vectors.

The operator acts on basis vectors by

    e_k            -> w_{k+1} e_{k+1}                      (k inside a block)
    e_{b_{n+1}-1}  -> v_n e_{b_{φ(n)}} - R_n^{-1} e_{b_n}   (end of block n >= 1)
    e_{b_1-1}      -> -R_0^{-1} e_0

with ``φ(n) = n - n_k`` on generation ``k``, ``v_n = 2**-τ_{φ(n)}`` and the
four-branch weight profile (½ on the first η slots, 1 in the middle, ½ on
the next δ, 2 on the last δ).  Powers are evaluated with a block-jump kernel
that walks each basis vector to the end of its block in one step and uses
the exact eigen-periodicity ``T^{2Δ_n} e_k = (R_n^{-1} W_n)^2 e_k``.
"""
from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from .dyadic import ONE, ZERO, Dyadic, FinVec
from .errors import (BudgetExceeded, HorizonExceeded, InvertibilityError,
                     PreconditionError, ScheduleError)
from .schedule import Schedule, check_tau, gen_start, generation_of

_CACHE_LIMIT = 1 << 15


def _pow2(k: int) -> Dyadic:
    return Dyadic.pow2(k)


def _accumulate(out: dict, src: dict, coef: Dyadic) -> None:
    for i, c in src.items():
        c = coef * c
        if i in out:
            s = out[i] + c
            if s:
                out[i] = s
            else:
                del out[i]
        else:
            out[i] = c


class OperatorSpec:
    """Fully derived operator data for a validated schedule.

    Construct through :func:`derive_structure`.  ``tau`` may be None for a
    structure-only spec (block geometry and weights, no ``v``), which is
    what τ synthesis works on.
    """

    def __init__(self, schedule: Schedule, tau: Optional[Sequence[int]] = None, check: bool = True):
        if check:
            schedule.validate() if tau is None else _validate_geometry(schedule)
        self.schedule = schedule
        self.K_max = schedule.K_max
        self.r_mode = schedule.R
        self.gen_delta, self.gen_eta, self.gen_Delta = schedule.generation_params()
        self.n_blocks = schedule.n_blocks
        self.n_bounds = tuple(gen_start(k) for k in range(self.K_max + 2))
        starts = [0]
        for k in range(self.K_max + 1):
            starts.append(starts[-1] + (self.n_bounds[k + 1] - self.n_bounds[k]) * self.gen_Delta[k])
        self.gen_b = tuple(starts)  # b_{n_k} for k = 0..K_max+1
        self.dim = starts[-1]
        if tau is None:
            tau = schedule.tau_values(self.n_blocks)
        elif check:
            check_tau(tau)
        if tau is not None:
            tau = tuple(int(t) for t in tau)
            if len(tau) < self.n_blocks:
                raise ScheduleError(f"tau needs {self.n_blocks} values, got {len(tau)}")
        self.tau = tau
        self._fwd_cache: Dict = {}
        self._inv_cache: Dict = {}

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_fwd_cache"] = {}
        state["_inv_cache"] = {}
        return state

    def __repr__(self) -> str:
        return f"OperatorSpec({self.schedule.kind}, K_max={self.K_max}, R={self.r_mode!r}, dim={self.dim})"

    # block geometry ---------------------------------------------------
    def n_k(self, k: int) -> int:
        return gen_start(k)

    def gen_of(self, n: int) -> int:
        self._check_block(n)
        return generation_of(n)

    def _check_block(self, n: int) -> None:
        if not 0 <= n < self.n_blocks:
            raise HorizonExceeded(f"block {n} is outside the horizon [0, {self.n_blocks})")

    def b(self, n: int) -> int:
        """Block boundary ``b_n`` for ``0 <= n <= n_blocks``."""
        if not 0 <= n <= self.n_blocks:
            raise HorizonExceeded(f"b_{n} is outside the horizon")
        if n == self.n_blocks:
            return self.dim
        k = generation_of(n)
        return self.gen_b[k] + (n - self.n_bounds[k]) * self.gen_Delta[k]

    def Delta_n(self, n: int) -> int:
        return self.gen_Delta[self.gen_of(n)]

    def eta_n(self, n: int) -> int:
        return self.gen_eta[self.gen_of(n)]

    def delta_n(self, n: int) -> int:
        return self.gen_delta[self.gen_of(n)]

    def block_of(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise HorizonExceeded(f"index {i} is outside the horizon [0, {self.dim})")
        k = bisect_right(self.gen_b, i) - 1
        return self.n_bounds[k] + (i - self.gen_b[k]) // self.gen_Delta[k]

    def phi(self, n: int) -> int:
        self._check_block(n)
        if n == 0:
            return 0
        return n - gen_start(generation_of(n))

    def m_depth(self, l: int) -> int:
        s = 0
        while l:
            l = self.phi(l)
            s += 1
        return s

    def ancestors(self, n: int) -> list:
        """``[φ(n), φ²(n), ..., 0]`` (empty for ``n = 0``)."""
        out = []
        while n:
            n = self.phi(n)
            out.append(n)
        return out

    # weights ----------------------------------------------------------
    def _profile(self, n: int):
        k = generation_of(n)
        return self.gen_eta[k], self.gen_delta[k], self.gen_Delta[k]

    def log2_weight(self, i: int) -> int:
        """``log2 w_i`` for ``i >= 1`` (always -1, 0 or 1)."""
        if i < 1:
            raise PreconditionError("weights are indexed from 1")
        n = self.block_of(i)
        t = i - self.b(n)
        if t == 0:
            raise PreconditionError(f"w_{i} is not defined at a block start")
        eta, delta, Delta = self._profile(n)
        if t <= eta:
            return -1
        if t < Delta - 2 * delta:
            return 0
        if t < Delta - delta:
            return -1
        return 1

    def weight(self, i: int) -> Dyadic:
        return _pow2(self.log2_weight(i))

    def log2_prefix(self, n: int, t: int) -> int:
        """``log2`` of ``w_{b_n+1} ... w_{b_n+t}`` for ``0 <= t < Δ_n``."""
        eta, delta, Delta = self._profile(n)
        if t <= eta:
            return -t
        if t < Delta - 2 * delta:
            return -eta
        if t < Delta - delta:
            return -eta - (t - (Delta - 2 * delta) + 1)
        return -eta - delta + (t - (Delta - delta) + 1)

    def log2_W(self, n: int) -> int:
        eta, delta, Delta = self._profile(n)
        return self.log2_prefix(n, Delta - 1)

    # v, R and periods -------------------------------------------------
    def _need_tau(self) -> None:
        if self.tau is None:
            raise PreconditionError("this structure-only spec has no tau schedule")

    def v(self, n: int) -> Dyadic:
        """``v_n = 2**-τ_{φ(n)}`` for ``n >= 1``."""
        if n < 1:
            raise PreconditionError("v is indexed from 1")
        self._need_tau()
        return _pow2(-self.tau[self.phi(n)])

    def log2_Rinv(self, n: int) -> int:
        self._check_block(n)
        if self.r_mode == "one":
            return 0
        return -self.log2_W(n)  # R_n = W_n

    def R(self, n: int) -> Dyadic:
        return _pow2(-self.log2_Rinv(n))

    def log2_period_scalar(self, n: int) -> int:
        """``log2 (R_n^{-1} W_n)^2``: ``T^{2Δ_n}`` acts on block ``n`` by this power of two."""
        return 2 * (self.log2_Rinv(n) + self.log2_W(n))

    def period(self, n: int) -> int:
        return 2 * self.Delta_n(n)

    def compatibility_holds(self, n: int) -> bool:
        """Exact check of ``R_n^{-1}W_n = (R_φ^{-1}W_φ)^{Δ_n/Δ_φ}``."""
        if n == 0:
            return True
        p = self.phi(n)
        ratio, rem = divmod(self.Delta_n(n), self.Delta_n(p))
        if rem:
            return False
        lhs = _pow2(self.log2_Rinv(n)) * _pow2(self.log2_W(n))
        rhs = (_pow2(self.log2_Rinv(p)) * _pow2(self.log2_W(p))) ** ratio
        return lhs == rhs

    def invertibility_supported(self) -> bool:
        if self.r_mode != "one" or self.tau is None:
            return False
        tau = self.tau
        if any(tau[m] <= tau[m - 1] for m in range(1, len(tau))) or tau[0] < 1:
            return False
        # sup over φ^{-1}(m) of |v_n| is 2**-τ_m; it must not exceed 2**-m
        return all(tau[m] >= m for m in range(self.n_blocks))

    def _need_inverse(self) -> None:
        if not self.invertibility_supported():
            raise InvertibilityError("inverse needs R_n = 1 and sup_{φ(n)=m} |v_n| <= 2**-m "
                                     "with τ increasing")

    # single steps -----------------------------------------------------
    def apply_T(self, x: FinVec) -> FinVec:
        self._need_tau()
        out: dict = {}
        for i, c in x.items():
            n = self.block_of(i)
            end = self.b(n + 1) - 1
            if i < end:
                _accumulate(out, {i + 1: c}, self.weight(i + 1))
            else:
                if n >= 1:
                    _accumulate(out, {self.b(self.phi(n)): c}, self.v(n))
                _accumulate(out, {self.b(n): c}, -_pow2(self.log2_Rinv(n)))
        return FinVec._wrap(out)

    def inverse_image_of_block_start(self, n: int) -> dict:
        """``T^{-1} e_{b_n}`` as an index -> coefficient dict."""
        out = {self.b(n + 1) - 1: -ONE}
        prod = ONE
        q = n
        for _ in range(self.m_depth(n)):
            prod = prod * self.v(q)
            q = self.phi(q)
            _accumulate(out, {self.b(q + 1) - 1: ONE}, -prod)
        return out

    def apply_T_inv(self, x: FinVec) -> FinVec:
        self._need_inverse()
        out: dict = {}
        for i, c in x.items():
            n = self.block_of(i)
            if i > self.b(n):
                _accumulate(out, {i - 1: c}, _pow2(-self.log2_weight(i)))
            else:
                _accumulate(out, self.inverse_image_of_block_start(n), c)
        return FinVec._wrap(out)

    # block-jump kernels -----------------------------------------------
    def _cache_put(self, cache: dict, key, value) -> None:
        if len(cache) >= _CACHE_LIMIT:
            cache.clear()
        cache[key] = value

    def forward_from_block_start(self, n: int, k: int) -> dict:
        """``T^k e_{b_n}`` (k >= 0) as a dict; do not mutate the result."""
        P = self.period(n)
        q, r = divmod(k, P)
        base = self._fwd_base(n, r)
        if q:
            s = _pow2(q * self.log2_period_scalar(n))
            if s != ONE:
                return {i: s * c for i, c in base.items()}
        return base

    def _fwd_base(self, n: int, r: int) -> dict:
        Delta = self.Delta_n(n)
        bn = self.b(n)
        if r < Delta:
            return {bn + r: _pow2(self.log2_prefix(n, r))}
        key = (n, r)
        hit = self._fwd_cache.get(key)
        if hit is not None:
            return hit
        t = r - Delta
        lw = self.log2_W(n)
        out = {bn + t: -_pow2(lw + self.log2_Rinv(n) + self.log2_prefix(n, t))}
        if n >= 1:
            coef = _pow2(lw) * self.v(n)
            for i, c in self.forward_from_block_start(self.phi(n), t).items():
                out[i] = coef * c  # lower blocks: disjoint from block n
        self._cache_put(self._fwd_cache, key, out)
        return out

    def backward_from_block_start(self, n: int, r: int) -> dict:
        """``T^{-r} e_{b_n}`` (r >= 0) as a dict; do not mutate the result."""
        P = self.period(n)
        q, rr = divmod(r, P)
        base = self._inv_base(n, rr)
        if q:
            s = _pow2(-q * self.log2_period_scalar(n))
            if s != ONE:
                return {i: s * c for i, c in base.items()}
        return base

    def _backward_from_block_end(self, q: int, s: int) -> dict:
        Delta = self.Delta_n(q)
        o = Delta - 1
        end = self.b(q) + o
        P = 2 * Delta
        qq, ss = divmod(s, P)
        if ss <= o:
            e = self.log2_prefix(q, o - ss) - self.log2_prefix(q, o)
            e -= qq * self.log2_period_scalar(q)
            return {end - ss: _pow2(e)}
        scale = _pow2(-self.log2_prefix(q, o) - qq * self.log2_period_scalar(q))
        return {i: scale * c for i, c in self.backward_from_block_start(q, ss - o).items()}

    def _inv_base(self, n: int, r: int) -> dict:
        if r == 0:
            return {self.b(n): ONE}
        key = (n, r)
        hit = self._inv_cache.get(key)
        if hit is not None:
            return hit
        s = r - 1
        out: dict = {}
        for idx, c in self.inverse_image_of_block_start(n).items():
            _accumulate(out, self._backward_from_block_end(self.block_of(idx), s), c)
        self._cache_put(self._inv_cache, key, out)
        return out

    def power(self, x: FinVec, k: int, method: str = "jump") -> FinVec:
        """Exact ``T^k x`` for any integer ``k``.

        ``method`` is ``"jump"`` (block-jump kernel), ``"section"`` (reduce
        modulo the period of the smallest enclosing section, then step) or
        ``"step"`` (plain iteration).
        """
        if k == 0:
            return x
        self._need_tau()
        if k < 0:
            self._need_inverse()
        if method == "step":
            return self._iterate(x, k)
        if method == "section":
            return self._section_power(x, k)
        if method != "jump":
            raise ValueError(f"unknown method {method!r}")
        out: dict = {}
        for i, c in x.items():
            n = self.block_of(i)
            o = i - self.b(n)
            lp = self.log2_prefix(n, o)
            if k > 0:
                _accumulate(out, self.forward_from_block_start(n, k + o), c.scale2(-lp))
            else:
                j = -k
                if j <= o:
                    e = self.log2_prefix(n, o - j) - lp
                    _accumulate(out, {i - j: c}, _pow2(e))
                else:
                    _accumulate(out, self.backward_from_block_start(n, j - o), c.scale2(-lp))
        return FinVec._wrap(out)

    def _iterate(self, x: FinVec, k: int) -> FinVec:
        step = self.apply_T if k > 0 else self.apply_T_inv
        for _ in range(abs(k)):
            x = step(x)
        return x

    def _section_power(self, x: FinVec, k: int) -> FinVec:
        if x.is_zero():
            return x
        N = self.block_of(x.support_max)
        P = self.period(N)
        q, r = divmod(abs(k), P)
        e = q * self.log2_period_scalar(N)
        y = x.scale(_pow2(e if k > 0 else -e))
        return self._iterate(y, r if k > 0 else -r)

    # projections ------------------------------------------------------
    def proj_block(self, x: FinVec, n: int) -> FinVec:
        return x.restrict(self.b(n), self.b(n + 1))

    def proj_set(self, x: FinVec, blocks: Iterable[int]) -> FinVec:
        out = FinVec.zero()
        for n in sorted(set(blocks)):
            out = out + self.proj_block(x, n)
        return out

    def blocks_of(self, x: FinVec) -> list:
        """Sorted block indices meeting the support of x."""
        return sorted({self.block_of(i) for i in x})


def _validate_geometry(schedule: Schedule) -> None:
    # validate everything except the τ rule (an explicit τ was supplied)
    patched = Schedule(**{**schedule.__dict__, "tau": {"rule": "synthesized"}})
    patched.validate()


def derive_structure(schedule: Schedule, tau: Optional[Sequence[int]] = None) -> OperatorSpec:
    """Validate a schedule and derive the operator data.

    A synthesized τ rule is resolved here via
    :func:`ctype_fhc.inverse.synthesize_tau`; values beyond its horizon ``L``
    continue by +1 steps.
    """
    if tau is not None:
        return OperatorSpec(schedule, tau=tau)
    schedule.validate()
    if schedule.tau_values(schedule.n_blocks) is not None:
        return OperatorSpec(schedule)
    from .inverse import synthesize_tau

    structure = OperatorSpec(schedule)
    L = int(schedule.tau.get("L", structure.n_blocks - 1))
    sched = synthesize_tau(structure, min(L, structure.n_blocks - 1))
    return OperatorSpec(schedule, tau=sched.extended(structure.n_blocks))


# functional surface -------------------------------------------------------

def weight(spec: OperatorSpec, i: int) -> Dyadic:
    return spec.weight(i)


def block_product_W(spec: OperatorSpec, n: int) -> Dyadic:
    """Direct product ``Π_{b_n < j < b_{n+1}} w_j`` (empty product is 1)."""
    out = ONE
    for j in range(spec.b(n) + 1, spec.b(n + 1)):
        out = out * spec.weight(j)
    return out


def m_depth(spec: OperatorSpec, l: int) -> int:
    return spec.m_depth(l)


def apply_T(spec: OperatorSpec, x: FinVec) -> FinVec:
    return spec.apply_T(x)


def apply_T_inv(spec: OperatorSpec, x: FinVec) -> FinVec:
    return spec.apply_T_inv(x)


def apply_T_power(spec: OperatorSpec, x: FinVec, k: int, method: str = "jump") -> FinVec:
    return spec.power(x, k, method=method)


def proj_block(spec: OperatorSpec, x: FinVec, n: int) -> FinVec:
    return spec.proj_block(x, n)


def proj_set(spec: OperatorSpec, x: FinVec, blocks: Iterable[int]) -> FinVec:
    return spec.proj_set(x, blocks)


# dense finite-section oracle ----------------------------------------------

def finite_section_matrix(spec: OperatorSpec, N: int, budget: int = 4096) -> np.ndarray:
    """Dense ``b_N x b_N`` object array of Dyadic read off the defining formula.

    Column ``k`` holds the coordinates of ``T e_k``.  The span of
    ``{e_k : k < b_N}`` is invariant because ``φ(n) < n``.
    """
    size = spec.b(N)
    if size > budget:
        raise BudgetExceeded(f"section size {size} exceeds the budget {budget}")
    M = np.full((size, size), ZERO, dtype=object)
    for n in range(N):
        lo, hi = spec.b(n), spec.b(n + 1)
        eta, delta, Delta = spec.gen_eta[spec.gen_of(n)], spec.gen_delta[spec.gen_of(n)], hi - lo
        for k in range(lo, hi - 1):
            t = k + 1 - lo
            if t <= eta or Delta - 2 * delta <= t < Delta - delta:
                w = Dyadic(1, -1)
            elif t < Delta - 2 * delta:
                w = ONE
            else:
                w = Dyadic(2)
            M[k + 1, k] = w
        rinv = Dyadic(1) if spec.r_mode == "one" else Dyadic.pow2(eta)
        if n >= 1:
            p = n - gen_start(n.bit_length())
            M[spec.b(p), hi - 1] = M[spec.b(p), hi - 1] + Dyadic.pow2(-spec.tau[p])
        M[lo, hi - 1] = M[lo, hi - 1] - rinv
    return M


class SectionOracle:
    """Matrix-side evaluation of powers on a finite section.

    Negative powers use an inverse obtained by exact Gauss-Jordan elimination
    over rationals, independent of the closed inverse formula.
    """

    def __init__(self, M: np.ndarray):
        self.M = M
        self.size = M.shape[0]
        self._cols = self._columns(M)
        self._inv_cols = None

    @staticmethod
    def _columns(M: np.ndarray) -> list:
        size = M.shape[0]
        return [[(r, M[r, k]) for r in range(size) if M[r, k]] for k in range(size)]

    def matvec(self, x: FinVec, inverse: bool = False) -> FinVec:
        cols = self.inverse_columns() if inverse else self._cols
        out: dict = {}
        for k, c in x.items():
            if k >= self.size:
                raise HorizonExceeded(f"index {k} outside the section of size {self.size}")
            _accumulate(out, dict(cols[k]), c)
        return FinVec._wrap(out)

    def power(self, x: FinVec, k: int) -> FinVec:
        for _ in range(abs(k)):
            x = self.matvec(x, inverse=k < 0)
        return x

    def inverse_matrix(self) -> np.ndarray:
        cols = self.inverse_columns()
        Minv = np.full((self.size, self.size), ZERO, dtype=object)
        for k, col in enumerate(cols):
            for r, c in col:
                Minv[r, k] = c
        return Minv

    def inverse_columns(self) -> list:
        if self._inv_cols is None:
            self._inv_cols = self._columns(_exact_inverse(self.M))
        return self._inv_cols


def _exact_inverse(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    A = [[M[i, j].to_fraction() for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise InvertibilityError("finite section is singular")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        row = [v / p for v in A[col]]
        A[col] = row
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], row)]
    out = np.full((n, n), ZERO, dtype=object)
    for i in range(n):
        for j in range(n):
            q = A[i][n + j]
            if q:
                out[i, j] = Dyadic.from_fraction(q)
    return out
