# %% [markdown]
# # Abelian connection, quantum lift and the star product
#
# `solve_r` iterates the fixed-point equation for the abelian connection up to
# a weight cutoff K (deg y = 1, deg ν = 2).  Scalar outputs are series in ν
# whose p-th term multiplies ν^p.

# %%
from contact_wick import GeometryFrame, builtin, delta_op, quantum_lift, solve_r, star
from contact_wick.fedosov import flatness_residual, required_order
from contact_wick.geometry import jacobi_bracket
from contact_wick.jets import jet_vars

# %%
K = 4
point = (0.2, 0.4, -0.1)
st = solve_r(GeometryFrame(builtin("heisenberg3"), point, required_order(K)), K)
print("pass changes ", st.residuals)
print("flatness     ", flatness_residual(st))

# %% [markdown]
# Lifting an observable and reading back its projection.

# %%
Q = quantum_lift(st, "x^2 + y")
print(Q.degree_norms())

# %% [markdown]
# The star product of two ξ-invariant observables.  The antisymmetric ν¹ part
# reproduces i times the Jacobi bracket.

# %%
ab = star(st, "x", "y")
ba = star(st, "y", "x")
x, y, z = jet_vars(point, st.frame.order)
print("x*y        ", ab.values())
print("[x, y]_nu1 ", (ab - ba).values()[1], " i{x,y} =", 1j * jacobi_bracket(st.frame, x, y).value)

# %% [markdown]
# On a Sasakian chart the operator Δ vanishes on ξ-invariant observables.
# On the deformed chart it does not.

# %%
print("heisenberg3", delta_op(st, "x^2*y + sin(x)").values())
dst = solve_r(GeometryFrame(builtin("deformed3", 0.3), point, required_order(K)), K)
print("deformed3  ", delta_op(dst, "x^2*y + sin(x)").values())
