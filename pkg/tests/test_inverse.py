import json
from fractions import Fraction
from pathlib import Path

import pytest

from ctype_fhc.dyadic import Dyadic, FinVec
from ctype_fhc.errors import PreconditionError
from ctype_fhc.inverse import (anchor_block, brute_force_J, certify_J, compute_S, extract_chain,
                               inverse_orbit_growth, inverse_orbit_norms, scarcity_profile, synthesize_tau,
                               tau_conditions_hold, tau_lower_bounds)
from ctype_fhc.operator import derive_structure
from ctype_fhc.schedule import Schedule

DATA = Path(__file__).parent / "data"


def test_S_values(canonical, toy):
    assert [compute_S(canonical, l) for l in range(3)] == [16, 145, 1171]
    assert compute_S(toy, 0) == 8


@pytest.mark.parametrize("l, j_max", [(0, 200), (1, 1300)])
def test_J_matches_brute_force(canonical, l, j_max):
    cert = certify_J(canonical, l)
    assert cert.J == brute_force_J(canonical, l, j_max)
    assert cert.J < j_max


def test_J_toy(toy):
    assert certify_J(toy, 0).J == brute_force_J(toy, 0, 200) == 35


def test_J_does_not_depend_on_tau(canonical):
    other = derive_structure(Schedule.canonical(K_max=3, tau={"rule": "synthesized", "L": 2}))
    assert other.tau != canonical.tau
    assert [certify_J(other, l).J for l in range(3)] == [certify_J(canonical, l).J for l in range(3)]
    assert [certify_J(canonical, l).J for l in range(3)] == [131, 1226, 9812]


def test_tau_synthesis(canonical):
    ts = synthesize_tau(canonical, 2)
    assert ts.values == [151, 2609, 40488]
    assert ts.binding == ["density-ratio"] * 3
    assert ts.values[0] == max(22, ts.J[0] + 20)
    for l, val in enumerate(ts.values):
        assert all(tau_conditions_hold(canonical, l, ts.J[l], val))
        # least: one below fails
        assert not all(tau_conditions_hold(canonical, l, ts.J[l], val - 1))
        assert val == max(tau_lower_bounds(canonical, l, ts.J[l]))
    assert ts.extended(5) == (151, 2609, 40488, 40489, 40490)


def test_scarcity_e8(canonical):
    trace = scarcity_profile(canonical, FinVec.basis(8), 300)
    assert trace.l0 == 1
    dips = [j for j, d in enumerate(trace.norms) if d < trace.threshold]
    assert dips == [4, 5, 6, 7, 10]
    assert trace.fraction == Fraction(59, 60)
    assert trace.threshold == Dyadic(3, -2)


def test_scarcity_pinned_rows(canonical):
    pin = json.loads((DATA / "scarcity_random.json").read_text())
    for row in pin["rows"]:
        x = FinVec.from_json(row["x"])
        trace = scarcity_profile(canonical, x, pin["H"], chain=False)
        assert (trace.l0, trace.count) == (row["l0"], row["count"]), row["seed"]


def test_orbit_norms_match_jump_kernel(canonical):
    x = FinVec({9: 1, 100: Dyadic(-3, -2), 600: 5})
    norms = inverse_orbit_norms(canonical, x, 120)
    for j in range(0, 120, 13):
        assert norms[j] == canonical.power(x, -j).norm()


def test_growth_curve(canonical):
    for l in (0, 1):
        curve = inverse_orbit_growth(canonical, l, 300)
        assert curve.ok
        assert curve.norms[0] == 1


def test_anchor_block(canonical):
    with pytest.raises(PreconditionError):
        anchor_block(canonical, FinVec({0: 1, 7: 2}))
    assert anchor_block(canonical, FinVec({8: 1, 584: 1})) == 1
    assert anchor_block(canonical, FinVec({8: 1, 584: 4})) == 3


def test_chain_pinned(toy_small):
    spec = toy_small
    x = FinVec({6: 4, 16: 1, 109: 2, 512: 2})
    l0 = anchor_block(spec, x)
    assert l0 == 1
    chain = extract_chain(spec, x, l0, 400)
    assert chain == [{"l": 3, "j": 26, "s": 1, "mass_condition": True}]
    # independent check with the jump kernel: first j where the descendants outweigh a quarter
    own, rest = spec.proj_block(x, 1), spec.proj_block(x, 3) + spec.proj_block(x, 5)
    first = next(j for j in range(400)
                 if spec.proj_block(spec.power(rest, -j), 1).norm()
                 > spec.proj_block(spec.power(own, -j), 1).norm().scale2(-2))
    assert first == 26


def test_chain_empty_without_descendants(canonical):
    assert extract_chain(canonical, FinVec.basis(8), 1, 300) == []
