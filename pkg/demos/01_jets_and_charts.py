# %% [markdown]
# # Jets and chart files
#
# Every geometric quantity in the package is a truncated Taylor series (a jet)
# around a base point.  Chart files describe a contact metric structure by
# expressions in the coordinates.

# %%
import numpy as np

from contact_wick import emit_chart, jet_vars, parse_chart, parse_expr
from contact_wick.jets import exp, sin
from contact_wick.registry import builtin_text

# %% [markdown]
# Coordinate jets at a base point.  Arithmetic and elementary functions act on
# the whole Taylor expansion, truncated at the requested order.

# %%
x, y, z = jet_vars((0.3, -0.2, 0.5), 4)
f = exp(x * y) * sin(z) + y ** 2
print("value   ", f.value)
print("d/dx    ", f.derivative((1, 0, 0)))
print("d2/dxdz ", f.derivative((1, 0, 1)))

# %% [markdown]
# Expressions are parsed into a small AST and can be evaluated on jets.

# %%
e = parse_expr("exp(x*y)*sin(z) + y^2", ["x", "y", "z"])
print(e)

# %% [markdown]
# The Heisenberg group as a chart file.  Metric entries may be given once for
# an off-diagonal pair; the parser fills the symmetric slot.

# %%
text = builtin_text("heisenberg3")
print(text)
chart = parse_chart(text)
print(chart.descriptor())
assert parse_chart(emit_chart(chart)) == chart

# %% [markdown]
# Tensor data at a point: arrays whose last axis holds the jet coefficients.

# %%
arrs = chart.arrays((0.1, 0.2, 0.3), 2)
print({k: np.shape(v) for k, v in arrs.items()})
