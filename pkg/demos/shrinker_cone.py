"""
Shrinkers from the singular orbit
=================================

Start the series at y(0) = b for lambda = -1 and watch the three outcomes:
for b = 3/2 the solution is the explicit conical shrinker, slightly smaller
b goes extinct in finite time, and the classifier reports either one.
"""

# %%
# The explicit shrinker has x = t, so t*x stays 1 on the way out. It is
# unstable forward: rounding is amplified and the run leaves it near t = 8.
from fractions import Fraction

from sp2soliton import odesys
from sp2soliton.classify import classify
from sp2soliton.core import SolitonParams
from sp2soliton.integrate import IntegratorOptions, integrate
from sp2soliton.series import initial_state

start = initial_state(-1.0, 1.5)
traj = integrate(start, odesys.FULL, SolitonParams(-1.0), IntegratorOptions(max_t=8.0))
t, x, y, tau2 = traj.full_arrays()
print("explicit shrinker: max |x - t| on [t0, 8] =", abs(x - t).max())

# %%
# Classification of a few starting heights.
for b in (Fraction(3, 2), 1.0, 1.4):
    end, _ = classify(-1.0, b)
    print(f"b = {float(b):.2f}: {end.kind}", {k: round(v, 6) for k, v in end.fields.items()
                                              if isinstance(v, float)})
