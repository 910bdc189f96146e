"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

All comparisons are exact (tolerance zero) unless a criterion states a
bound.  ``pytest tests/test_acceptance.py`` prints one PASS/FAIL line per
criterion in the terminal summary.
"""
import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from ctype_fhc.certificates import (block_inverse_power, check_inv_contraction, decay_certificate_vec, decay_slope,
                                    gain_profile, verify_gain_floor)
from ctype_fhc.dyadic import Dyadic, FinVec, pow2_le
from ctype_fhc.fhc import DenseCorpus, assemble_fhc, choose_plan, density_profile, visit_check
from ctype_fhc.inverse import brute_force_J, certify_J, compute_S, scarcity_profile, synthesize_tau, tau_conditions_hold
from ctype_fhc.operator import SectionOracle, block_product_W, derive_structure, finite_section_matrix
from ctype_fhc.sampling import random_finvec
from ctype_fhc.schedule import Schedule
from ctype_fhc.sets import build_family, prefix_density, verify_family

DATA = Path(__file__).parent / "data"
criterion = pytest.mark.criterion


@criterion(1, "inverse formula is exact on every basis vector below 1096, under 10 s")
def test_c01_inverse_exactness(canonical2):
    spec = canonical2
    assert spec.dim == 1096
    t0 = time.perf_counter()
    for k in range(spec.dim):
        e = FinVec.basis(k)
        assert spec.apply_T(spec.apply_T_inv(e)) == e, k
        assert spec.apply_T_inv(spec.apply_T(e)) == e, k
    assert time.perf_counter() - t0 < 10


@criterion(2, "section-matrix powers match the jump kernel, 100 vectors, powers to +-128, under 30 s")
def test_c02_oracle_equivalence(canonical):
    spec = canonical
    t0 = time.perf_counter()
    oracle = SectionOracle(finite_section_matrix(spec, 2))
    assert oracle.size == 72
    rng = np.random.default_rng(2)
    for _ in range(100):
        x = random_finvec(rng, 72, nnz=5)
        fwd = bwd = x
        for k in range(1, 129):
            fwd = oracle.matvec(fwd)
            bwd = oracle.matvec(bwd, inverse=True)
            assert spec.power(x, k) == fwd, (x, k)
            assert spec.power(x, -k) == bwd, (x, -k)
    assert time.perf_counter() - t0 < 30


@criterion(3, "T^(2 Delta_k) x = 2^(-2 eta_k) x exactly, 50 vectors per generation k <= 2")
def test_c03_periodicity(canonical):
    spec = canonical
    rng = np.random.default_rng(3)
    for k in range(3):
        lo, hi = spec.b(spec.n_k(k)), spec.b(spec.n_k(k + 1))
        P = 2 * spec.gen_Delta[k]
        scalar = Dyadic.pow2(-2 * spec.gen_eta[k])
        for _ in range(50):
            x = random_finvec(rng, hi, nnz=4) + random_finvec(rng, hi, nnz=1, lo=lo)
            assert spec.power(x, P, method="step") == x.scale(scalar)


@criterion(4, "W_n = 2^(-eta_n) for n < 8")
def test_c04_w_law(canonical):
    spec = canonical
    for n in range(8):
        direct = Fraction(1)
        for i in range(spec.b(n) + 1, spec.b(n + 1)):
            direct *= spec.weight(i).to_fraction()
        assert direct == Fraction(1, 2 ** spec.eta_n(n))
        assert block_product_W(spec, n) == Dyadic.pow2(-spec.eta_n(n))


@criterion(5, "decay certificates for e0, e8 and a random vector at slope 1/24; 200 spot checks each, under 60 s")
def test_c05_decay_certificates(canonical):
    spec = canonical
    t0 = time.perf_counter()
    rate = decay_slope(spec)
    assert rate == Fraction(1, 24)
    rng = np.random.default_rng(5)
    for y in (FinVec.basis(0), FinVec.basis(8), random_finvec(rng, 72, nnz=4)):
        cert = decay_certificate_vec(spec, y)
        assert cert.valid and cert.rate == rate
        if cert.k0:
            assert not pow2_le(spec.power(y, cert.k0 - 1).norm(), -rate * (cert.k0 - 1))
        for k in rng.integers(cert.k0, cert.k0 + 20 * cert.period, size=200):
            k = int(k)
            assert pow2_le(spec.power(y, k, method="section").norm(), -rate * k), (y, k)
    assert time.perf_counter() - t0 < 60


@criterion(6, "inverse norm <= 2 on 500 vectors; block gain floor and period relation for l in {0,1}, j < 4 Delta")
def test_c06_inverse_bounds(canonical):
    spec = canonical
    rng = np.random.default_rng(6)
    for _ in range(500):
        assert check_inv_contraction(spec, random_finvec(rng, spec.dim, nnz=6))
    for l in (0, 1):
        D, eta = spec.Delta_n(l), spec.eta_n(l)
        assert verify_gain_floor(spec, l, 4 * D - 1)
        prof = gain_profile(spec, l, 4 * D - 1)
        assert prof.floor_ok and prof.period_ok
        # period relation on the iterated block action itself
        for j in range(2 * D):
            for m in (spec.b(l), spec.b(l) + D // 2, spec.b(l + 1) - 1):
                e = FinVec.basis(m)
                a = block_inverse_power(spec, l, j, e)
                b = block_inverse_power(spec, l, j + 2 * D, e)
                assert b == a.scale(Dyadic.pow2(2 * eta))


@criterion(7, "three separated sets to 1e5: disjoint, separated, floors, densities above certified, under 60 s")
def test_c07_separated_sets():
    t0 = time.perf_counter()
    H = 10 ** 5
    fam = build_family([(3, 5), (7, 2), (16, 16)], H)
    rep = verify_family(fam, H)
    assert rep["disjoint"] and rep["separated"] and rep["floor"]
    checked = 0
    for j in range(1, 4):
        start = fam.burn_in(j)
        if start > H:
            continue
        curve = prefix_density(fam.members(j), H)
        low, _ = curve.min_density(start, H)
        assert low >= fam.certified_density(j), j
        checked += 1
    assert checked == 3
    assert time.perf_counter() - t0 < 60


@pytest.fixture(scope="module")
def fhc_run(toy):
    y = FinVec({0: 1, 5: Dyadic(-1, -1)})
    t0 = time.perf_counter()
    plan = choose_plan(toy, DenseCorpus([y]), 1)
    asm = assemble_fhc(toy, plan)
    rep = visit_check(toy, plan, asm, 1)
    return toy, y, plan, asm, rep, time.perf_counter() - t0


@criterion(8, "toy FHC vector: every visit in A(s1,l1) below H lands within eps_1, exact recovery, under 10 min")
def test_c08_fhc_visits(fhc_run):
    spec, y, plan, asm, rep, elapsed = fhc_run
    assert len(y) <= 2
    assert len(rep.visits) >= 3
    assert asm.norm <= 1 and asm.term_bounds_ok
    eps = plan.epsilon(1)
    assert eps["lo"] <= eps["hi"] < Fraction(1, 2) + Fraction(1, 10 ** 6)
    for v in rep.visits:
        assert v.recovery_exact and v.shift_identity, v.M
        assert v.distance <= eps["lo"], v.M
        assert v.distance <= v.own_term + v.later_terms + v.earlier_terms
    assert elapsed < 600


@pytest.mark.slow
@criterion(10, "contrast: inverse scarcity fraction >= oracle pin; forward visit density >= certified bound")
def test_c10_contrast(fhc_run):
    spec, y, plan, asm, rep, _ = fhc_run
    pin = json.loads((DATA / "contrast.json").read_text())
    assert pin["H"] == plan.H
    trace = scarcity_profile(spec, asm.x, plan.H, chain=False)
    assert trace.l0 == pin["l0"]
    assert trace.fraction >= Fraction(pin["count"], pin["H"])
    visits, curve = density_profile(spec, asm.x, y, plan.epsilon(1)["lo"], plan.H)
    assert set(plan.members(1)) <= set(visits)
    start = plan.family.burn_in(1)
    assert start <= plan.H
    low, _ = curve.min_density(start, plan.H)
    assert low >= plan.family.certified_density(1)


@criterion(9, "tau synthesis meets both growth inequalities for l <= 2; S0 = 16, S1 = 145; J0 matches brute force")
def test_c09_tau_synthesis(canonical):
    structure = derive_structure(Schedule.canonical(K_max=3, tau={"rule": "synthesized", "L": 2}))
    ts = synthesize_tau(structure, 2)
    for l in range(3):
        assert all(tau_conditions_hold(structure, l, ts.J[l], ts.values[l]))
    assert compute_S(canonical, 0) == 16 and compute_S(canonical, 1) == 145
    J0 = certify_J(canonical, 0).J
    assert J0 == brute_force_J(canonical, 0, 160)
    assert ts.values[0] == max(22, J0 + 20)
    assert all(b > a for a, b in zip(ts.values, ts.values[1:]))
