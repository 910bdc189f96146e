"""
Building a truncated frequently hypercyclic vector
==================================================

On the small geometric schedule (beta = 4) the constants of the construction
are small enough to plant one target, ``y = e0 - e5/2``, and watch the forward
orbit come back to it along a set of positive lower density.
"""
from ctype_fhc import Dyadic, FinVec, Schedule, derive_structure
from ctype_fhc.fhc import DenseCorpus, assemble_fhc, choose_plan, density_profile, visit_check
from ctype_fhc.sampling import approx_decimal

spec = derive_structure(Schedule.geometric(4, K_max=9, tau={"rule": "synthesized", "L": 3}))
y = FinVec({0: 1, 5: Dyadic(-1, -1)})

plan = choose_plan(spec, DenseCorpus([y]), 1)
t = plan.targets[1]
print(f"constants: N = {t.N}, s = {t.s}, l = {t.l}; horizon H = {plan.H}")
print("visit set A below H:", plan.members(1))
print("generations used:", plan.k)

# %%
# x is a finite sum of planted copies of y, one per member m of A.
asm = assemble_fhc(spec, plan)
print(f"x has {len(asm.x)} nonzero coordinates, ||x|| = {approx_decimal(asm.norm)}")

# %%
# At every member M, T^M x reproduces y exactly on its support and the
# rest of the orbit is tiny.
eps = plan.epsilon(1)
rep = visit_check(spec, plan, asm, 1)
for v in rep.visits:
    print(f"M = {v.M}: ||T^M x - y|| = {approx_decimal(v.distance)}  (exact recovery: {v.recovery_exact})")
print("all visits within eps:", rep.passed, " eps ~", float(eps["lo"]))

# %%
# Stepping T from 0 to H and counting every return gives the density curve.
visits, curve = density_profile(spec, asm.x, y, eps["lo"], plan.H)
start = plan.family.burn_in(1)
low, at = curve.min_density(start, plan.H)
print(f"{len(visits)} returns below H; min prefix density past {start}: {float(low):.3g} at N = {at}")
print("certified lower bound:", float(plan.family.certified_density(1)))
