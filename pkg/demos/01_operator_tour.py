"""
A tour of the operator on its canonical schedule
================================================

Everything below is exact: coordinates are dyadic rationals, and every
equality printed is an equality of numbers, not of floats.

Run with ``python demos/01_operator_tour.py``.
"""
import numpy as np

from ctype_fhc import Dyadic, FinVec, Schedule, SectionOracle, derive_structure, finite_section_matrix
from ctype_fhc.certificates import check_inv_contraction, decay_certificate_vec, decay_slope
from ctype_fhc.sampling import random_finvec

spec = derive_structure(Schedule.canonical(K_max=3))
print(spec)

# Blocks grow geometrically.  Block n owns the coordinates [b_n, b_{n+1}).
print("block boundaries:", [spec.b(n) for n in range(spec.n_blocks + 1)])
print("parents phi(n):  ", [spec.phi(n) for n in range(spec.n_blocks)])

# Inside a block T acts as a weighted shift; the last coordinate wraps back
# with a -1 and leaks a small multiple of e_{b_phi(n)} into the parent.
e0, e71 = FinVec.basis(0), FinVec.basis(71)
print("T e0  =", spec.apply_T(e0))
print("T e71 =", spec.apply_T(e71))
print("T^-1 e8 =", spec.apply_T_inv(FinVec.basis(8)))

# %%
# Periodicity: after 2 Delta steps a block comes back scaled by 2^(-2 eta).
x = FinVec({0: 3, 2: Dyadic(-1, -3), 7: 5})
print("T^16 x == x / 4 :", spec.power(x, 16) == x.scale(Dyadic(1, -2)))

# %%
# The jump kernel and the dense section matrix are independent computations.
oracle = SectionOracle(finite_section_matrix(spec, 2))
rng = np.random.default_rng(0)
y = random_finvec(rng, 72, nnz=5)
print("section matrix agrees at k = 100:", oracle.power(y, 100) == spec.power(y, 100))

# %%
# Forward orbits of finitely supported vectors decay at a certified slope.
cert = decay_certificate_vec(spec, FinVec.basis(8))
print(f"decay slope {decay_slope(spec)}: ||T^k e8|| <= 2^(-k/24) for all k >= {cert.k0}")

# ... while T^-1 never more than doubles a norm.
print("||T^-1 z|| <= 2 ||z|| on a random z:", bool(check_inv_contraction(spec, random_finvec(rng, spec.dim, nnz=6))))
