"""
The shrinker limit system
=========================

Far out, a shrinker that is not asymptotically conical is governed by a
planar system in (alpha, beta). Its single fixed point is an unstable focus,
and the region R below it is never entered from outside.
"""

# %%
import numpy as np

from sp2soliton import limitdyn

lam = -1.0
a, b = limitdyn.fixed_point(lam)
print("fixed point:", (a, b))
print("eigenvalues:", np.linalg.eigvals(limitdyn.jacobian_fd(a, b, lam)))

# %%
rep = limitdyn.boundary_no_entry_check(lam, 500)
print("no entry through the boundary of R:", rep.ok)

# %%
# Inside the three-dimensional system the extra direction gamma is stable,
# so there is a curve of solutions that converge to the fixed point.
print("point on the stable manifold at gamma = 1e-3:", limitdyn.stable_manifold_point(lam, 1e-3))

# %%
rows = limitdyn.phase_grid(lam, 5, 5, (-1.5, 0.5), None)
print(limitdyn.PHASE_HEADER)
for r in rows[:5]:
    print(", ".join(f"{v:.4f}" for v in r))
