"""
The limit map for expanders
===========================

Every smoothly closing expander (lambda = 1) is asymptotically conical. The
cone ratio ell depends on q = b^2 only, increasingly, and inverting it picks
out the expander that is asymptotic to a given cone.
"""

# %%
import numpy as np

from sp2soliton.lmap import lmap_eval, lmap_inverse, lmap_sweep

sweep = lmap_sweep([0.1, 0.5, 1, 2, 5, 10])
for p in sweep.points:
    print(f"q = {p.q:5.2f}  ell = {p.ell:.6f}  error_est = {p.error_est:.1e}")
print("monotone:", sweep.monotone)

# %%
# Round trip through the inverse.
res = lmap_inverse(1.5)
print("q for ell = 1.5:", res.q, " L(q) =", lmap_eval(res.q).ell)

# %%
# For large q the cone ratio grows like sqrt(q/3).
ells = np.array([p.ell for p in sweep.points])
qs = np.array([p.q for p in sweep.points])
print("ell^2 - q/3:", np.round(ells ** 2 - qs / 3, 4))
