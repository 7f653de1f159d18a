# coding: utf-8

# # Growth laws and their companions
#
# A diffusion law ``g`` is summarized by its growth bounds ``g0 <= s g'(s)/g(s) <= g1``.
# This walk-through builds the catalog laws, looks at their primitives and
# conjugates, and runs the pointwise property suite.

# In[1]:

import math

import numpy as np

from orlicz_parabolic.nfunction import (
    estimate_growth_bounds,
    make_piecewise,
    make_power,
    make_power_log,
    normalize,
    verify_lemma_p1,
)

laws = {
    "power p=3": make_power(3),
    "power-log (2, 1, e)": make_power_log(2, 1, math.e),
    "piecewise (1, 2, 4, 1)": make_piecewise(1, 2, 4, 1),
}


# Declared bounds versus a numerical estimate on a log grid. The estimate sits
# inside the declared interval.

# In[2]:

for name, nf in laws.items():
    est = estimate_growth_bounds(nf)
    print(f"{name:24s} declared ({nf.g0:.3f}, {nf.g1:.3f})  estimated ({est.g0_hat:.3f}, {est.g1_hat:.3f})")


# The primitive ``G`` and its complementary function obey Young's inequality
# ``s t <= G(t) + G~(s)``, with equality at ``s = g(t)``.

# In[3]:

nf = laws["power-log (2, 1, e)"]
t = np.array([0.5, 1.0, 2.0, 4.0])
s = nf.g(t)
print("G(t) + G~(g(t)) - t g(t):", nf.G(t) + nf.G_conj(s) - t * s)


# Normalizing rescales the argument and the value so that ``g(1) = 1``
# without touching the growth bounds.

# In[4]:

nh = normalize(nf)
print("g(1) before:", nf.g(1.0), " after:", nh.g(1.0), " bounds:", (nh.g0, nh.g1))


# The property suite samples random pairs and reports the worst relative slack
# of every inequality. Negative slack would be a violation.

# In[5]:

for name, nf in laws.items():
    rep = verify_lemma_p1(nf, 10_000, seed=0)
    worst = min(rep.worst_slack.values())
    print(f"{name:24s} violations={rep.total_violations}  smallest slack={worst:.3e}")
