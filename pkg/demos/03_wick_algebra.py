# %% [markdown]
# # The fibrewise Wick algebra
#
# Elements are series in ν and the fibre variables y with differential-form
# parts.  The product contracts y-derivatives with the Wick tensor h.

# %%
import numpy as np

from contact_wick import GeometryFrame, builtin
from contact_wick.wick import (
    circ,
    delta,
    delta_inv,
    i_over_nu_commutator,
    make_T_R,
    proj_Pi,
    random_element,
)

# %%
frame = GeometryFrame(builtin("heisenberg3"), (0.1, 0.2, -0.3), 6)
rng = np.random.default_rng(0)
a, b, c = (random_element(frame, 4, rng) for _ in range(3))

# %% [markdown]
# Associativity of the fibrewise product.

# %%
print((circ(circ(a, b), c) - circ(a, circ(b, c))).max_abs())

# %% [markdown]
# The homotopy identity for δ and its inverse on ξ-transverse elements.

# %%
e = random_element(frame, 5, rng)
print((e - proj_Pi(e) - delta(delta_inv(e)) - delta_inv(delta(e))).max_abs())

# %% [markdown]
# Torsion and curvature elements, and the first commutator of two elements.

# %%
T, R = make_T_R(frame)
print(T)
print(i_over_nu_commutator(a, b).degree_norms())
