# %% [markdown]
# # First-order obstructions
#
# The ν¹ coefficient of Δ has three closed forms in terms of classical
# tensors.  The vector field ζ, the function χ, the orbit integral Ψ and the
# character Φ are built from them.

# %%
import math

from contact_wick import GeometryFrame, builtin, solve_r, delta_op
from contact_wick.diagnostics import (
    FORMS,
    delta1,
    phi_character,
    psi_gamma,
    torus_grid,
    zeta_chi,
)
from contact_wick.registry import hopf_fiber

# %%
point = (0.1, 0.2, -0.1)
frame = GeometryFrame(builtin("deformed3", 0.3), point, 5)
a = "x*y + cos(x)"
for form in FORMS:
    print("closed form", form, delta1(frame, a, form))
print("engine      ", delta_op(solve_r(frame, 2), a).values()[1])

# %%
z, c = zeta_chi(frame)
print("zeta", z, "chi", c)
print("Sasakian:", zeta_chi(GeometryFrame(builtin("sphere3"), point, 4)))

# %% [markdown]
# Ψ along the Hopf fibre with a synthetic field ζ = ∂_x has a closed form
# through the modified Bessel function I0.

# %%
q = psi_gamma(builtin("sphere3"), hopf_fiber(), "exp(u1)", n_quad=128,
              zeta=lambda p: (1.0, 0.0, 0.0))
i0 = sum(1.0 / (4 ** k * math.factorial(k) ** 2) for k in range(30))
print(q.value, 4 * math.pi * i0)

# %% [markdown]
# The two sides of the character identity on a periodic chart.

# %%
res = phi_character(builtin("deformed3_periodic", 0.3), torus_grid(16, 5, 16, (-0.3, 1.2)),
                    "sin(x)+y^2+y*cos(z)", "u^2")
print(res.direct, res.by_parts, res.discrepancy)
