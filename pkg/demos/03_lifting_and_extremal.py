# %% [markdown]
# # From integer sets to the monomial curve, and back to small N
#
# A family like {d, d^2} or {d^2, 2d^2} is a linear image of the curve
# (d, d^2, ..., d^k).  Lifting a set A of integers along that image turns
# "some d has every P_i(d) in A - A" into "the lifted set has a monomial
# difference".  This demo runs the lift, the sumset pigeonhole, and then
# the exact extremal numbers for squares.

# %%
from diffsetlab.core import PolynomialFamily
from diffsetlab.diffset import (
    density_bound_thm1,
    greedy_free_set,
    has_polynomial_configuration,
    max_free_set_exact,
)
from diffsetlab.lifting import build_lifted_set, decompose, lattice_index, lifted_monomial_difference, sumset_reduce

for text in ("d, d^2", "d^2, 2*d^2", "2*d, 6*d^2"):
    P = PolynomialFamily.parse(text, strict=False)
    dec = decompose(P)
    print(f"{text:12s} rank {dec.r}, independent rows {dec.selection}, "
          f"dependent coefficients {[[str(x) for x in row] for row in dec.D]}, index {lattice_index(dec)}")

# %% [markdown]
# Lift two sets: one that contains a configuration and one that does not.

# %%
P = PolynomialFamily.parse("d, d^2")
for A in ([1, 2, 4, 5], [1, 3, 8]):
    w = has_polynomial_configuration(A, P)
    lift = build_lifted_set(A, P, N=8)
    d = lifted_monomial_difference(lift.B, 2 * lift.N_prime)
    print(f"A = {A}: configuration d = {None if w is None else w.d}; lifted |B| = {lift.B.cardinality} "
          f"in [-{lift.N_prime}, {lift.N_prime}]^2, shift m = {lift.m}, monomial difference d = {d}, "
          f"certificate {lift.certificate}")

# %% [markdown]
# For sums A + Bset the pigeonhole picks a translate m with a large
# D = Bset cap (m - A); then D - D sits inside A + Bset - m.

# %%
r = sumset_reduce([1, 4, 6, 9, 15], [2, 3, 7, 11, 12, 18], 20)
print(f"m = {r.m}, D = {r.D}, |D| = {len(r.D)} >= {float(r.bound):.2f}, contained: {r.containment}")

# %% [markdown]
# The largest subset of [1, N] with no two elements differing by a square.
# Branch and bound gives the exact value, and greedy stays within a factor
# of two.  The asymptotic density bound is printed for comparison only: at
# these N it is not expected to dominate the true density.

# %%
SQ = PolynomialFamily.parse("d^2")
print(" N  exact  greedy  density  asymptotic bound")
for N in range(16, 41, 4):
    ex = max_free_set_exact(N, SQ)
    g = greedy_free_set(N, SQ)
    print(f"{N:2d}  {ex.size:5d}  {len(g):6d}  {ex.size / N:7.3f}  {density_bound_thm1(N, SQ):7.3f}")
print("an extremal set at N = 40:", max_free_set_exact(40, SQ).witness)
