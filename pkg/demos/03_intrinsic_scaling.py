# coding: utf-8

# # Exponents and intrinsic cylinders
#
# The space exponent ``alpha`` depends on the growth of the law, the growth of
# the source modular, the dimension and the time integrability ``r``. Time is
# rescaled intrinsically through ``theta``.

# In[1]:

import math

import numpy as np

from orlicz_parabolic.nfunction import make_power, make_power_log, normalize
from orlicz_parabolic.scaling import (
    exponent_set,
    intrinsic_cylinder,
    optimal_alpha,
    rescaled_source_exponent,
    theta_of_rho,
)

ex = exponent_set(2, 2, 1, 1, 1, 2, nf=make_power(3), rho=0.5)
print(f"alpha={ex.alpha:.6f} theta={ex.theta:.6f} beta={ex.beta:.6f}")


# ``alpha`` grows with ``r``. Past ``r = 4`` the exponents are no longer
# compatible for this law and dimension, and the formula leaves ``(0, 1)``.

# In[2]:

from orlicz_parabolic.norms import compatibility_check

for r in (1.5, 2, 3, 4, 10):
    ok = compatibility_check(2, 1, 1, r).admissible
    print(f"r={r:>4}: alpha={optimal_alpha(2, 1, 1, r):.4f}  {'compatible' if ok else 'not compatible'}")


# ``alpha`` is the unique zero of the exponent gained by the source in one
# rescaling step; the gain is decreasing in ``alpha``.

# In[3]:

a = np.linspace(0, 1, 6)
print("E(alpha):", np.round([rescaled_source_exponent(ai, 2, 1, 1, 2) for ai in a], 4))


# For a non-power law ``theta`` depends on the radius, which changes the cylinder
# depth away from a pure power of ``rho``.

# In[4]:

nf = normalize(make_power_log(2, 1, math.e))
alpha = optimal_alpha(nf.g0, 1.0, 1, 2.0)
for rho in (0.5, 0.1, 0.01):
    cyl = intrinsic_cylinder(nf, alpha, rho)
    print(f"rho={rho:<5} theta(rho)={theta_of_rho(nf, alpha, rho):.4f}  depth={cyl.depth:.3e}  rho**2={rho**2:.3e}")
