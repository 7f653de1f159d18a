# coding: utf-8

# # Luxemburg norms and the mixed source norm
#
# For a field ``f`` on a ball the Luxemburg norm is the smallest ``k`` with
# ``int F(|f|/k) <= 1``. With ``F(t) = t**q`` it reduces to the ``L^q`` norm,
# which gives a quick sanity check.

# In[1]:

import math

import numpy as np

from orlicz_parabolic.fields import SampledFunction, SpaceTimeField
from orlicz_parabolic.nfunction import make_power_log, make_power_modular
from orlicz_parabolic.norms import compatibility_check, luxemburg_norm, space_time_norm

rng = np.random.default_rng(0)
f = SampledFunction(rng.normal(size=129), 1.0)
w = f.weights()
for q in (1.5, 2.0, 3.0):
    direct = np.sum(w * np.abs(f.values) ** q) ** (1 / q)
    print(f"q={q}: Luxemburg {luxemburg_norm(f, make_power_modular(q)):.12f}  direct {direct:.12f}")


# A genuinely Orlicz modular: ``t**2 log(t + e)`` sits between ``t**2`` and ``t**3``.

# In[2]:

F = make_power_log(2, 1, math.e)
print("power-log norm:", luxemburg_norm(f, F))
print("restricted to B_1/2:", luxemburg_norm(f, F, radius=0.5))


# The source class mixes the spatial norm with ``L^r`` in time over ``(-T, 0]``.

# In[3]:

times = np.linspace(-0.1, 0.0, 101)
u = SpaceTimeField.from_callable(lambda x, t: np.cos(3 * x) * (1 + 10 * t), 129, 1.0, times)
for r in (1.5, 2.0, 4.0):
    print(f"r={r}: ||f||_(F,r) = {space_time_norm(u, make_power_modular(2), r):.6f}")


# Compatibility of the exponents decides whether a Hölder estimate is available.

# In[4]:

for n, r in ((1, 2.0), (2, 1.5), (3, 2.0)):
    print(f"n={n}, r={r}:", compatibility_check(2.0, 1.0, n, r).message())
