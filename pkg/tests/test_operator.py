import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctype_fhc.dyadic import ZERO, Dyadic, FinVec
from ctype_fhc.errors import HorizonExceeded, InvertibilityError, ScheduleError
from ctype_fhc.operator import (SectionOracle, apply_T, apply_T_inv, apply_T_power, block_product_W, derive_structure,
                                finite_section_matrix, m_depth, proj_block, proj_set, weight)
from ctype_fhc.sampling import random_finvec
from ctype_fhc.schedule import Schedule, gen_start, generation_of

HALF = Dyadic(1, -1)


# schedules ---------------------------------------------------------------

def test_block_boundaries(canonical):
    assert [canonical.b(n) for n in range(1, 5)] == [8, 72, 584, 1096]
    assert canonical.phi(3) == 1
    assert [gen_start(k) for k in range(5)] == [0, 1, 2, 4, 8]
    assert [generation_of(n) for n in range(9)] == [0, 1, 2, 2, 3, 3, 3, 3, 4]


def test_phi_structure(canonical):
    for n in range(1, canonical.n_blocks):
        p = canonical.phi(n)
        assert p < n
        assert canonical.Delta_n(n) % (2 * canonical.Delta_n(p)) == 0
    # every l < 4 has preimages in each later generation
    for k in range(3, canonical.schedule.K_max + 1):
        hits = {canonical.phi(n) for n in range(gen_start(k), gen_start(k + 1))}
        assert set(range(4)) <= hits


@pytest.mark.parametrize("bad, msg", [
    (dict(kind="geometric", beta=3), "even integer"),
    (dict(kind="geometric", beta=6, tau={"table": [3, 3]}), "tau"),
    (dict(kind="explicit", delta=[2, 4], eta=[1, 2], Delta=[4, 8]), "2\\*delta"),
    (dict(kind="explicit", delta=[1, 2], eta=[1, 3], Delta=[8, 16]), "eta\\(k\\)/Delta\\(k\\)"),
    (dict(kind="explicit", delta=[1, 1], eta=[1, 2], Delta=[8, 16]), "increasing"),
    (dict(kind="explicit", delta=[1, 2], eta=[1, 2], Delta=[8, 24]), "multiple"),
    (dict(kind="canonical", R="other"), "R must be"),
])
def test_validation_names_violation(bad, msg):
    kw = {"K_max": 1, **bad}
    with pytest.raises(ScheduleError, match=msg):
        Schedule(**kw).validate()


def test_geometric_constraint_example():
    Schedule.geometric(8, K_max=2).validate()


def test_schedule_json_round_trip():
    s = Schedule.geometric(4, K_max=5, tau={"rule": "synthesized", "L": 3})
    assert Schedule.from_json(s.to_json()) == s
    with pytest.raises(ScheduleError):
        Schedule.from_json({"kind": "canonical", "bogus": 1})


def test_explicit_schedule_matches_canonical():
    d = [8 ** k for k in range(3)]
    e = derive_structure(Schedule(kind="explicit", K_max=2, delta=d, eta=d, Delta=[8 * v for v in d]))
    c = derive_structure(Schedule.canonical(K_max=2))
    assert [e.b(n) for n in range(5)] == [c.b(n) for n in range(5)]
    x = FinVec({3: 1, 70: -2, 600: Dyadic(3, -2)})
    assert e.power(x, 77) == c.power(x, 77)


# weights and scalars -----------------------------------------------------

def test_weight_branches(canonical):
    assert weight(canonical, 1) == HALF
    assert weight(canonical, 5) == 1
    assert weight(canonical, 7) == 2


def test_block_products(canonical):
    assert block_product_W(canonical, 0) == HALF
    assert block_product_W(canonical, 1) == Dyadic.pow2(-8)


def test_m_depth(canonical):
    assert m_depth(canonical, 1) == 1
    assert m_depth(canonical, 3) == 2
    assert m_depth(canonical, 0) == 0


def test_v_and_compatibility(canonical):
    tau = canonical.tau
    for n in range(1, canonical.n_blocks):
        assert canonical.v(n) == Dyadic.pow2(-tau[canonical.phi(n)])
        assert canonical.compatibility_holds(n)


# action ------------------------------------------------------------------

def test_forward_examples(canonical):
    t0 = canonical.tau[0]
    assert apply_T(canonical, FinVec.basis(7)) == FinVec({0: -1})
    assert apply_T(canonical, FinVec.basis(0)) == FinVec({1: HALF})
    assert apply_T(canonical, FinVec.basis(71)) == FinVec({0: Dyadic.pow2(-t0), 8: -1})


def test_inverse_examples(canonical):
    t0 = canonical.tau[0]
    assert apply_T_inv(canonical, FinVec.basis(0)) == FinVec({7: -1})
    assert apply_T_inv(canonical, FinVec.basis(8)) == FinVec({7: -Dyadic.pow2(-t0), 71: -1})
    assert apply_T_inv(canonical, FinVec.basis(5)) == FinVec({4: 1})


def test_power_examples(canonical):
    x = FinVec({0: 3, 2: Dyadic(-1, -3), 7: 5})
    assert apply_T_power(canonical, x, 16) == x.scale(Dyadic(1, -2))
    e3 = FinVec.basis(3)
    assert apply_T_power(canonical, e3, -16) == e3.scale(4)
    y = e3
    for _ in range(16):
        y = apply_T_inv(canonical, y)
    assert y == e3.scale(4)
    z = e3
    for _ in range(16):
        z = apply_T(canonical, z)
    assert z == e3.scale(Dyadic(1, -2))


def test_projections(canonical):
    assert proj_block(canonical, FinVec.basis(8), 1) == FinVec.basis(8)
    x = FinVec({0: 1, 9: 2, 100: 3})
    assert proj_set(canonical, x, [0, 2]) == FinVec({0: 1, 100: 3})
    assert canonical.blocks_of(x) == [0, 1, 2]


def test_section_matrix_block0(canonical):
    M = finite_section_matrix(canonical, 1)
    assert M.shape == (8, 8)
    for k in range(7):
        assert M[k + 1, k] == weight(canonical, k + 1)
    assert M[0, 7] == -1
    nz = {(r, c) for r in range(8) for c in range(8) if M[r, c] != ZERO}
    assert nz == {(k + 1, k) for k in range(7)} | {(0, 7)}


def test_section_period_oracle(canonical):
    oracle = SectionOracle(finite_section_matrix(canonical, 2))
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = random_finvec(rng, 72, nnz=6)
        assert oracle.power(x, 128) == x.scale(Dyadic.pow2(-16))
        assert canonical.power(x, 128) == x.scale(Dyadic.pow2(-16))


def test_section_inverse_is_exact(toy_small):
    oracle = SectionOracle(finite_section_matrix(toy_small, 4))
    assert oracle.size == 148
    assert oracle.inverse_matrix().shape == (148, 148)
    for k in range(0, oracle.size, 7):
        e = FinVec.basis(k)
        assert oracle.matvec(oracle.matvec(e), inverse=True) == e
        assert toy_small.apply_T_inv(e) == oracle.matvec(e, inverse=True)


def test_ctype_mode_is_periodic_and_not_inverted():
    spec = derive_structure(Schedule.canonical(K_max=2, R="ctype"))
    for n in range(3):
        assert spec.log2_period_scalar(n) == 0
    e = FinVec.basis(3)
    assert spec.power(e, 16, method="step") == e
    x = FinVec({10: 1, 40: Dyadic(3, -1)})
    assert spec.power(x, 128, method="step") == x
    with pytest.raises(InvertibilityError):
        spec.apply_T_inv(e)


def test_horizon(canonical2):
    with pytest.raises(HorizonExceeded):
        canonical2.apply_T(FinVec.basis(1096))


def test_full_round_trip(canonical):
    for k in range(canonical.dim):
        e = FinVec.basis(k)
        assert canonical.apply_T(canonical.apply_T_inv(e)) == e


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(-300, 300))
def test_power_methods_agree(seed, k):
    spec = derive_structure(Schedule.canonical(K_max=3))
    x = random_finvec(np.random.default_rng(seed), 584, nnz=4)
    a = spec.power(x, k, method="jump")
    assert a == spec.power(x, k, method="step")
    assert a == spec.power(x, k, method="section")
    assert spec.power(a, -k) == x


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(-40, 40))
def test_oracle_agreement_toy(seed, k):
    spec = derive_structure(Schedule.geometric(4, K_max=3))
    oracle = _toy_oracle()
    x = random_finvec(np.random.default_rng(seed), 148, nnz=4)
    assert spec.power(x, k) == oracle.power(x, k)


_ORACLE = {}


def _toy_oracle():
    if "toy" not in _ORACLE:
        _ORACLE["toy"] = SectionOracle(finite_section_matrix(derive_structure(Schedule.geometric(4, K_max=3)), 4))
    return _ORACLE["toy"]


def test_pickle_drops_caches(canonical):
    import pickle

    canonical.power(FinVec.basis(3), 1000)
    clone = pickle.loads(pickle.dumps(canonical))
    assert clone.power(FinVec.basis(3), 1000) == canonical.power(FinVec.basis(3), 1000)
    assert clone.tau == canonical.tau
