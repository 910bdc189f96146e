"""Truncated frequently hypercyclic vectors and their visit estimates.

For each target ``y^{(j)}`` and each m in the j-th separated set, a block
vector ``x^{(m)}`` is placed near the end of the blocks
``n_{k_m} + n`` (``n < n_{j+1}``).  After exactly m steps its leading part
lands on ``y^{(j)}``; the other block vectors are either still doubling in
the trailing weight-2 region (m > M) or already decaying (m < M).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence

from .certificates import BasisNorms, basis_decay_from, basis_decay_threshold, decay_slope
from .dyadic import ONE, ZERO, Dyadic, FinVec, frac_to_json, pow2_bounds, pow2_le
from .errors import HorizonExceeded, PlanError, PreconditionError
from .operator import OperatorSpec
from .sets import DensityCurve, SeparatedFamily, build_family, prefix_density


# dense corpus ------------------------------------------------------------

def _level_values(L: int) -> List[Fraction]:
    """``c / 2^{L-1}`` with ``|value| <= L``, ordered 0, 1, -1, 2, -2, ... in c."""
    scale = 1 << (L - 1)
    out = [Fraction(0)]
    for c in range(1, L * scale + 1):
        out += [Fraction(c, scale), Fraction(-c, scale)]
    return out


def enumerate_dense() -> Iterator[FinVec]:
    """All finitely supported dyadic vectors, each exactly once.

    Level L lists vectors supported in ``[0, L)`` with coordinates in
    ``2^{-(L-1)} Z`` bounded by L, by largest support index and then by the
    coordinate order of :func:`_level_values`.  Every dyadic vector appears at
    some level, so the sequence is dense in l1.
    """
    seen = set()
    for L in itertools.count(1):
        vals = _level_values(L)
        nonzero = vals[1:]
        for top in range(-1, L):
            if top < 0:
                cands = [FinVec.zero()]
            else:
                cands = (FinVec({top: lead, **{i: c for i, c in enumerate(rest) if c}})
                         for lead in nonzero
                         for rest in itertools.product(vals, repeat=top))
            for v in cands:
                if v not in seen:
                    seen.add(v)
                    yield v


@dataclass
class DenseCorpus:
    """Targets ``y^{(1)}, y^{(2)}, ...`` with ``deg y^{(j)} < b_{n_{j+1}}``."""

    vectors: List[FinVec]

    def __getitem__(self, j: int) -> FinVec:
        if j < 1:
            raise IndexError("targets are indexed from 1")
        return self.vectors[j - 1]

    def __len__(self) -> int:
        return len(self.vectors)

    def to_json(self) -> list:
        return [v.to_json() for v in self.vectors]


def degree_limit(spec: OperatorSpec, j: int) -> int:
    """``b_{n_{j+1}}``: targets of index j must live below it."""
    nb = spec.n_k(j + 1)
    if nb > spec.n_blocks:
        raise HorizonExceeded(f"n_{j + 1} = {nb} is beyond the block horizon")
    return spec.b(nb)


def gen_dense_corpus(spec: OperatorSpec, J_max: int) -> DenseCorpus:
    """First ``J_max`` targets of the dense enumeration.

    A vector whose degree is too large for the current slot is deferred to
    the first later slot that admits it; the limits grow, so nothing is lost.
    """
    src = enumerate_dense()
    pending: List[FinVec] = []
    out: List[FinVec] = []
    for j in range(1, J_max + 1):
        limit = degree_limit(spec, j)
        pick = next((v for v in pending if v.support_max < limit), None)
        if pick is not None:
            pending.remove(pick)
        while pick is None:
            v = next(src)
            if v.support_max < limit:
                pick = v
            else:
                pending.append(v)
        out.append(pick)
    return DenseCorpus(out)


# plan --------------------------------------------------------------------

@dataclass
class TargetPlan:
    j: int
    y: FinVec
    N: int
    s: int
    l: int
    tau_star: int  # inf{2^{-τ_n} : n < n_{j+1}} = 2^{-tau_star}
    decay_start: int  # max_r of the decay threshold of e_{b_r}, r < n_{j+1}
    Delta: int
    eta: int

    @property
    def offset(self) -> int:
        """``2N Δ^{(j)}``, subtracted from the placement distance."""
        return 2 * self.N * self.Delta

    def to_json(self) -> dict:
        return {"j": self.j, "y": self.y.to_json(), "N": self.N, "s": self.s, "l": self.l,
                "tau_star": self.tau_star, "decay_start": self.decay_start}


@dataclass
class FHCPlan:
    targets: Dict[int, TargetPlan]
    family: SeparatedFamily
    H: int
    k: Dict[int, int]  # m -> k_m
    rate: Fraction

    @property
    def J(self) -> int:
        return max(self.targets) if self.targets else 0

    def members(self, j: int) -> List[int]:
        return self.family.members(j, self.H)

    def epsilon(self, J: int) -> dict:
        """Brackets for ``2^{-J} + 2^{-(s_J-1)} + 2^{-rate s_J} / (1 - 2^{-rate})``.

        ``tail`` bounds the effect of the terms left out of the truncated
        vector (m >= H, or targets beyond J).
        """
        s = self.targets[J].s
        lo_s, hi_s = pow2_bounds(-self.rate * s)
        lo_r, hi_r = pow2_bounds(-self.rate)
        base = Fraction(1, 2 ** J) + Fraction(2, 2 ** s)
        lo = base + lo_s / (1 - lo_r)
        hi = base + hi_s / (1 - hi_r)
        tail = Fraction(2, 2 ** s) + Fraction(1, 2 ** J) * hi_s / (1 - hi_r)
        return {"lo": lo, "hi": hi, "tail": tail}

    def to_json(self) -> dict:
        return {"targets": [t.to_json() for t in self.targets.values()], "H": self.H,
                "k": {str(m): k for m, k in sorted(self.k.items())},
                "rate": frac_to_json(self.rate),
                "family": self.family.to_json(with_members=False),
                "members": {str(j): self.members(j) for j in self.targets}}


def plan_from_json(spec: OperatorSpec, obj: dict) -> FHCPlan:
    """Rebuild a plan from ``FHCPlan.to_json`` output; constants are taken as given, not re-derived."""
    targets = {}
    for t in obj["targets"]:
        j = int(t["j"])
        targets[j] = TargetPlan(j, FinVec.from_json(t["y"]), int(t["N"]), int(t["s"]), int(t["l"]),
                                int(t["tau_star"]), int(t["decay_start"]), spec.gen_Delta[j], spec.gen_eta[j])
    H = int(obj["H"])
    family = build_family([(t.s, t.l) for t in targets.values()], H)
    ks = {int(m): int(k) for m, k in obj["k"].items()}
    for j in targets:
        for m in family.members(j, H):
            if m not in ks:
                raise PlanError(f"plan has no generation for member m = {m}")
    return FHCPlan(targets, family, H, ks, decay_slope(spec))


def _least(pred, lo: int) -> int:
    """Least integer >= lo satisfying a monotone predicate."""
    if pred(lo):
        return lo
    hi = max(lo + 1, 2 * lo)
    while not pred(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _plan_target(spec: OperatorSpec, j: int, y: FinVec, norms: BasisNorms) -> TargetPlan:
    if y.support_max >= degree_limit(spec, j):
        raise PreconditionError(f"deg y^({j}) is not below b_(n_{j + 1})")
    if spec.K_max < j:
        raise HorizonExceeded(f"generation {j} is beyond the horizon")
    D, eta = spec.gen_Delta[j], spec.gen_eta[j]
    rate = decay_slope(spec)
    Y = y.norm()
    nj1 = spec.n_k(j + 1)
    tau_star = max(spec.tau[n] for n in range(nj1))

    def small(exp) -> bool:
        # ‖y‖ 2^{exp} 2^{tau_star} <= 2^{-j}
        return not Y or pow2_le(Y, -j - tau_star - exp)

    N = _least(lambda N: small(-(2 * N * D - (2 * N + 1) * eta)), 1)
    A = (2 * N + 1) * D
    B = (2 * N + 1) * eta
    decay_start = max(basis_decay_threshold(spec, r, norms) for r in range(nj1))
    s = _least(lambda s: small(-(s - A - B - 1)) and small(-rate * s + B + 1) and s - A >= decay_start, A + 1)
    l = _least(lambda l: small(-(l - A - B - 2)), A + 1)
    return TargetPlan(j, y, N, s, l, tau_star, decay_start, D, eta)


def _choose_k(spec: OperatorSpec, tp: TargetPlan, m: int, cache: dict, norms: BasisNorms) -> int:
    need_eta = (2 * tp.N + 1) * tp.Delta
    nj1 = spec.n_k(tp.j + 1)
    for k in range(spec.K_max + 1):
        nk = spec.n_k(k)
        if not (nk + nj1 < spec.n_k(k + 1) and spec.gen_eta[k] >= need_eta and spec.gen_delta[k] >= m):
            continue
        key = (k, nj1)
        if key not in cache:
            cache[key] = all(basis_decay_from(spec, q, 0, norms) for q in range(nk, nk + nj1))
        if cache[key]:
            return k
    raise PlanError(f"no generation k <= {spec.K_max} satisfies the placement condition for m = {m}: "
                    f"needs delta(k) >= {m} and eta(k) >= {need_eta}")


def choose_plan(spec: OperatorSpec, corpus: DenseCorpus, J: int, H: Optional[int] = None) -> FHCPlan:
    """Smallest constants N_j, s_j, l_j, then k_m, for targets 1..J.

    When H is None it is set just past the first certified density window of
    set J (``burn_in + 1``).
    """
    norms = BasisNorms(spec)
    targets = {j: _plan_target(spec, j, corpus[j], norms) for j in range(1, J + 1)}
    pairs = [(t.s, t.l) for t in targets.values()]
    if not pairs:
        return FHCPlan({}, build_family([], 1), H or 0, {}, decay_slope(spec))
    probe = build_family(pairs, 1 << 62)
    if H is None:
        H = probe.burn_in(J) + 1
    family = build_family(pairs, H)
    cache: dict = {}
    ks: Dict[int, int] = {}
    for j, tp in targets.items():
        for m in family.members(j, H):
            ks[m] = _choose_k(spec, tp, m, cache, norms)
    return FHCPlan(targets, family, H, ks, decay_slope(spec))


# construction ------------------------------------------------------------

def placement(spec: OperatorSpec, plan: FHCPlan, j: int, m: int, i: int) -> tuple:
    """``(index, distance)`` where coordinate i of y^{(j)} is planted for m."""
    tp = plan.targets[j]
    n = spec.block_of(i)
    d = m - i + spec.b(n) - tp.offset
    k = plan.k[m]
    if d < 1:
        raise PlanError(f"placement distance {d} < 1 for m={m}, i={i}")
    return spec.b(spec.n_k(k) + n + 1) - d, d


def build_block_vector(spec: OperatorSpec, plan: FHCPlan, j: int, m: int) -> FinVec:
    tp = plan.targets[j]
    k = plan.k[m]
    out = {}
    for i, yi in tp.y.items():
        n = spec.block_of(i)
        idx, d = placement(spec, plan, j, m, i)
        # y_i 2^{-(d - 2Nη - 1)} / (v_{n_k+n} Π_{t=b_n+1}^{i} w_t)
        e = -(d - 2 * tp.N * tp.eta - 1) - spec.log2_prefix(n, i - spec.b(n))
        out[idx] = yi.scale2(e) * spec.v(spec.n_k(k) + n).inverse()
    return FinVec._wrap(out)


def term_norm_bound(spec: OperatorSpec, plan: FHCPlan, j: int, m: int) -> Dyadic:
    """``‖y‖ 2^{-(m - (2N+1)Δ - (2N+1)η - 1)} 2^{tau_star}``."""
    tp = plan.targets[j]
    A, B = (2 * tp.N + 1) * tp.Delta, (2 * tp.N + 1) * tp.eta
    return tp.y.norm().scale2(-(m - A - B - 1) + tp.tau_star)


@dataclass
class Assembly:
    x: FinVec
    terms: Dict[int, FinVec]
    owner: Dict[int, int]
    norm: Dyadic
    term_bounds_ok: bool
    tail_bound: Fraction

    def __repr__(self) -> str:
        # the tail bound can exceed the interpreter's int-to-str digit limit
        return f"Assembly(terms={len(self.terms)}, support={len(self.x)}, norm={self.norm})"

    def to_json(self) -> dict:
        return {"x": self.x.to_json(), "norm": self.norm.to_json(), "norm_at_most_one": self.norm <= ONE,
                "term_bounds_ok": self.term_bounds_ok,
                "tail_bound": frac_to_json(self.tail_bound),
                "terms": {str(m): self.owner[m] for m in sorted(self.terms)}}


def assemble_fhc(spec: OperatorSpec, plan: FHCPlan, H: Optional[int] = None) -> Assembly:
    """Sum of ``x^{(m)}`` over targets ``j <= J`` and ``m`` in set j below H.

    ``tail_bound`` bounds the norm of everything left out: the terms with
    m >= H (geometric in m) and the targets beyond J (at most ``2^{-j}`` each).
    """
    H = plan.H if H is None else H
    terms, owner = {}, {}
    ok = True
    tail = Fraction(1, 2 ** plan.J) if plan.J else Fraction(1)
    x = FinVec.zero()
    for j, tp in plan.targets.items():
        for m in plan.family.members(j, H):
            t = build_block_vector(spec, plan, j, m)
            terms[m], owner[m] = t, j
            ok &= t.norm() <= term_norm_bound(spec, plan, j, m)
            x = x + t
        tail += 2 * term_norm_bound(spec, plan, j, H).to_fraction()
    return Assembly(x, terms, owner, x.norm(), ok, tail)


# visits ------------------------------------------------------------------

@dataclass
class Visit:
    M: int
    distance: Dyadic
    own_term: Dyadic
    later_terms: Dyadic
    earlier_terms: Dyadic
    recovery_exact: bool
    shift_identity: bool
    passed: bool

    def to_json(self) -> dict:
        return {"M": self.M, "distance": self.distance.to_json(), "own_term": self.own_term.to_json(),
                "later_terms": self.later_terms.to_json(), "earlier_terms": self.earlier_terms.to_json(),
                "recovery_exact": self.recovery_exact, "shift_identity": self.shift_identity,
                "passed": self.passed}


@dataclass
class VisitReport:
    J: int
    H: int
    eps: dict
    visits: List[Visit]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.visits)

    def to_json(self) -> dict:
        return {"J": self.J, "H": self.H, "passed": self.passed,
                "eps": {k: frac_to_json(v) for k, v in self.eps.items()},
                "visits": [v.to_json() for v in self.visits]}


def visit_check(spec: OperatorSpec, plan: FHCPlan, asm: Assembly, J: int, H: Optional[int] = None) -> VisitReport:
    """Exact ``‖T^M x - y^{(J)}‖`` for every M in set J below H.

    A visit passes when the distance is at most the lower bracket of ε_J.
    The distance is split into the term ``m = M`` and the sums over later
    and earlier terms; by the triangle inequality the parts bound the total.
    """
    H = plan.H if H is None else H
    eps = plan.epsilon(J)
    y = plan.targets[J].y
    visits = []
    for M in plan.family.members(J, H):
        dist = (spec.power(asm.x, M) - y).norm()
        c1 = c2 = c3 = ZERO
        recovered = shifted = True
        for m, term in asm.terms.items():
            img = spec.power(term, M)
            if m == M:
                c1 = (img - y).norm()
                recovered = all(img[i] == yi for i, yi in y.items())
            elif m > M:
                c2 = c2 + img.norm()
                expect = FinVec._wrap({p + M: c.scale2(M) for p, c in term.items()})
                shifted &= img == expect
            else:
                c3 = c3 + img.norm()
        ok = dist <= eps["lo"] and recovered
        visits.append(Visit(M, dist, c1, c2, c3, recovered, shifted, ok))
    return VisitReport(J, H, eps, visits)


def density_profile(spec: OperatorSpec, x: FinVec, y: FinVec, radius, H: int) -> tuple:
    """Visit set ``{n < H : ‖T^n x - y‖ <= radius}`` and its prefix densities, by stepping T."""
    r = Fraction(radius.to_fraction() if isinstance(radius, Dyadic) else radius)
    if r <= 0:
        raise PreconditionError("radius must be positive")
    visits = []
    z = x
    for n in range(H):
        if (z - y).norm() <= r:
            visits.append(n)
        if n + 1 < H:
            z = spec.apply_T(z)
    return visits, prefix_density(visits, H)
