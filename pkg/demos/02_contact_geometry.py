# %% [markdown]
# # Contact metric geometry at a point
#
# A `GeometryFrame` holds the jets of λ, ξ, g, φ, the contact-metric
# connection, its torsion and curvature at one base point.

# %%
from contact_wick import GeometryFrame, builtin, classify
from contact_wick.geometry import (
    check_compatibility,
    check_connection,
    check_symmetries,
    jacobi_bracket,
)
from contact_wick.jets import jet_vars

# %%
frame = GeometryFrame(builtin("sphere3"), (0.2, 0.4, -0.1), 4)
print("compatibility", check_compatibility(frame))
print("connection   ", check_connection(frame))
print("symmetries   ", check_symmetries(frame))

# %% [markdown]
# The deformed Heisenberg chart is contact metric but the Reeb field is no
# longer Killing.

# %%
for name in ("heisenberg3", "sphere3", "deformed3"):
    f = GeometryFrame(builtin(name), (0.2, 0.4, -0.1), 4)
    flags = classify(f)
    print(f"{name:12s} K-contact={flags['is_kcontact']}  Sasakian={flags['is_sasakian']}")

# %% [markdown]
# Negative control: the Levi-Civita connection does not preserve the
# contact structure, so the connection checks fail by a wide margin.

# %%
print(check_connection(frame, frame.Gamma_g))

# %% [markdown]
# The Jacobi bracket of two functions on the Heisenberg group.

# %%
f3 = GeometryFrame(builtin("heisenberg3"), (0.0, 0.0, 0.0), 4)
x, y, z = jet_vars(f3.point, 4)
print("{x, y} =", jacobi_bracket(f3, x, y).value)
print("{x, z} =", jacobi_bracket(f3, x, z).value)
