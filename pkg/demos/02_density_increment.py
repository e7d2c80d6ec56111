# %% [markdown]
# # One round of the density increment, then the whole ladder
#
# The dichotomy asks a set three questions in turn.  Does it already have
# its share of monomial differences?  If not, is there a grid
# {m + (l_1 q, l_2 q^2)} on which it is noticeably denser?  If neither, we
# record why the argument stalls.  At desk scale the constants are lab
# knobs, so every run below states them.

# %%
import warnings
from fractions import Fraction

from diffsetlab.core import LabConstants, PointSet
from diffsetlab.increment import (
    bound_calculator,
    dichotomy,
    iterate,
    rescale_to_subproblem,
)
from diffsetlab.planted import planted_coset_set, random_set

warnings.simplefilter("ignore")  # small M triggers "constants need not bind" warnings
HALF = Fraction(1, 2)

# %% [markdown]
# A uniform random set at density 1/4 clears the counting threshold
# without needing any structure.

# %%
R = random_set(64, 2, 0.25, seed=3)
out = dichotomy(R, LabConstants.for_set(R), with_l2=False)
print(out.kind, "count", out.count, ">= threshold", float(out.threshold))

# %% [markdown]
# A planted set sits on a coset mod (q0, q0^2) and avoids the curve inside
# it.  The grid scan finds the planted modulus.

# %%
for q0 in (2, 3):
    B = planted_coset_set(64, q0, 37, c=2, residues=(1, 2))
    out = dichotomy(B, LabConstants.for_set(B, eta_override=HALF, sigma_override=2))
    print(f"q0 = {q0}: {out.kind}, grid q = {out.grid.q}, L = {out.grid.L}, "
          f"density {float(B.density):.4f} -> {float(out.density_on_grid):.4f}")

# %% [markdown]
# Restricting to that grid and reading off coordinates gives a new problem
# in a smaller box, with a higher density.

# %%
B = planted_coset_set(64, 2, 37, c=2, residues=(1, 2))
out = dichotomy(B, LabConstants.for_set(B, eta_override=HALF, sigma_override=2))
nxt, L = rescale_to_subproblem(B, out.grid)
print(f"rescaled into Q_{L}: |B'| = {nxt.cardinality}, density {float(nxt.density):.4f}")

# %% [markdown]
# A set on the trivial coset (q0 = 1) has neither enough differences nor a
# denser grid at these constants.  The diagnostics say which spectral
# inequality failed to bind.

# %%
U = planted_coset_set(64, 1, 67)
out = dichotomy(U, LabConstants.for_set(U, eta_override=HALF, sigma_override=2))
print(out.kind)
for key, val in out.diagnostics.items():
    print(f"  {key}: {val}")

# %% [markdown]
# With two nested levels of planting the first two steps both recover
# q = 2.  After that the boxes are tiny and every step is a trivial q = 1
# grid, until the size floor stops the ladder.

# %%
B = planted_coset_set(64, 2, 37, levels=2, residues=(1, 3))
trace = iterate(B, LabConstants.for_set(B, C_lab=Fraction(1, 4), eta_override=HALF, sigma_override=2))
for step in trace.steps:
    grid = step["grid"]
    print(f"step {step['n']}: M = {step['M']:3d}, density {str(step['delta']):>14}  {step['outcome']}"
          + (f"  (q = {grid.q}, L = {grid.L})" if grid else ""))
print("stopped:", trace.stop_reason)

# %% [markdown]
# Finally, the density below which the iteration must terminate, as a
# function of M.  The closed form and the bisection agree to a constant.

# %%
for e in (6, 12, 24, 48):
    r = bound_calculator(10**e, 2)
    print(f"M = 1e{e}: delta* = {r['bisection']:.4f}, closed form {r['closed_form']:.4f}, ratio {r['ratio']:.3f}")

full = PointSet.full(8, 2)
print("full box:", dichotomy(full, LabConstants.for_set(full)).kind)
