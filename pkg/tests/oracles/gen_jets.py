"""Offline sympy oracle for truncated Taylor arithmetic.

Prints Taylor coefficients (coefficient of t^alpha, not derivatives) of a
few expressions at a base point; the values are frozen in test_jets.py.
"""
import sympy as sp

x, y, z = sp.symbols("x y z")
t0, t1, t2 = sp.symbols("t0 t1 t2")
POINT = (sp.Rational(3, 10), -sp.Rational(1, 5), sp.Rational(1, 2))
CASES = {
    "exp(sin(x)*y)": sp.exp(sp.sin(x) * y),
    "1/(1+x^2+y*z)": 1 / (1 + x**2 + y * z),
    "sqrt(2+x*y)*cos(z)": sp.sqrt(2 + x * y) * sp.cos(z),
    "(x+y)^3*exp(-z)": (x + y) ** 3 * sp.exp(-z),
}
MONOMIALS = [(0, 0, 0), (1, 0, 0), (0, 1, 1), (2, 1, 0), (0, 0, 3), (1, 1, 2)]

if __name__ == "__main__":
    sub = {x: POINT[0] + t0, y: POINT[1] + t1, z: POINT[2] + t2}
    for name, e in CASES.items():
        f = e.subs(sub)
        vals = []
        for a in MONOMIALS:
            d = sp.diff(f, t0, a[0], t1, a[1], t2, a[2]) if sum(a) else f
            c = d.subs({t0: 0, t1: 0, t2: 0}) / (sp.factorial(a[0]) * sp.factorial(a[1]) * sp.factorial(a[2]))
            vals.append(float(sp.N(c, 20)))
        print(repr(name), ":", [repr(v) for v in vals])
