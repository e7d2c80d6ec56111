# %% [markdown]
# # Counting monomial differences, and where the count comes from
#
# A set B inside the box Q_M = [1,M] x [1,M^2] either contains many pairs
# b, b' with b - b' = (d, d^2), or its balance function carries a lot of
# Fourier mass near rationals with small denominator.  This walk-through
# builds both kinds of set and looks at the count and the spectrum side by
# side.

# %%
from fractions import Fraction

import numpy as np

from diffsetlab.arcs import classify_frequency
from diffsetlab.core import LabConstants
from diffsetlab.diffset import count_monomial_differences, find_monomial_witness
from diffsetlab.fourier import EmbeddingGroup, balance_function, dft, spectral_count, weighted_count_identity
from diffsetlab.increment import l2_mass_table
from diffsetlab.planted import planted_coset_set, random_set

M = 32
rand = random_set(M, 2, 0.3, seed=7)
planted = planted_coset_set(64, 2, 37, c=1, residues=(1, 2))
print(f"random set:  |B| = {rand.cardinality}, density {float(rand.density):.3f}")
print(f"planted set: |B| = {planted.cardinality}, density {float(planted.density):.4f}")

# %% [markdown]
# The direct backend shifts a boolean mask; the FFT backend correlates it.
# They must agree to the last pair.

# %%
for backend in ("direct", "fft"):
    print(backend, count_monomial_differences(rand, 1, backend))
d, b, b2 = find_monomial_witness(rand)
print("first witness: d =", d, "pair", b, b2)
print("planted set count:", count_monomial_differences(planted))

# %% [markdown]
# The weighted count of f_B against the curve splits into four exact
# rational pieces, and the same number comes back from the spectrum.

# %%
small = random_set(8, 2, 0.4, seed=1)
lhs, terms = weighted_count_identity(small, 1)
print("exact weighted count:", lhs, "=", " + ".join(str(v) for v in terms.values()))
print("via the spectrum:    ", spectral_count(small, 1))

# %% [markdown]
# Where does the Fourier mass of the planted set sit?  Its points live on a
# coset mod (2, 4), so the frequencies near a/2 should light up.

# %%
eta = Fraction(1, 2)
G = EmbeddingGroup.for_box(64, 2, eta)
S = dft(balance_function(planted), G)
mag = np.abs(S.values)
mag[0, 0] = 0
top = np.argsort(mag.ravel())[::-1][:5]
for idx in top:
    xi = np.unravel_index(idx, mag.shape)
    alpha = tuple(Fraction(int(x), t) for x, t in zip(xi, G.T))
    box = classify_frequency(alpha, eta, 64, 2)
    print(f"alpha = {alpha[0]!s:>8}, {alpha[1]!s:>10}  |f^| = {mag[xi]:9.1f}  "
          f"{'major, q = %d' % box.q if box else 'minor'}")

# %%
table = l2_mass_table(planted, LabConstants.for_set(planted, eta_override=eta))
for q, v in table["mass"].items():
    print(f"q = {q}: normalized mass {v:.4f} (+/- {table['error'][q]:.1e})")
print("total normalized mass:", round(table["total"], 3))
