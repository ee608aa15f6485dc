"""Symbolic forcing oracle for the coupled manufactured case.

Prints Rust array literals (x, y, t, F1, F2, F_omega) at 50 seeded points.
"""
import random

import sympy as sp

x, y, t = sp.symbols("x y t", real=True)
pi = sp.pi
z = (1, -1)
d = (sp.Integer(1), sp.Rational(1, 2))
eps = sp.Rational(1, 2)
k = sp.Integer(1)

c = (
    2 + sp.sin(pi * x) * sp.sin(pi * y) * sp.cos(t),
    2 + sp.Rational(1, 2) * sp.sin(pi * x) * sp.sin(2 * pi * y) * sp.sin(t),
)
psi = sp.Rational(1, 10) * sp.sin(pi * x) ** 2 * sp.sin(pi * y) ** 2 * sp.sin(t)
rho = sp.expand(sum(zi * ci for zi, ci in zip(z, c)))

phi = (
    sp.sin(pi * x) * sp.sin(pi * y) * sp.cos(t) / (eps * pi**2 * 2)
    - sp.Rational(1, 2) * sp.sin(pi * x) * sp.sin(2 * pi * y) * sp.sin(t) / (eps * pi**2 * 5)
)
lap = lambda f: sp.diff(f, x, 2) + sp.diff(f, y, 2)
assert sp.simplify(-eps * lap(phi) - rho) == 0

u = (sp.diff(psi, y), -sp.diff(psi, x))
grad = lambda f: (sp.diff(f, x), sp.diff(f, y))
dot = lambda a, b: a[0] * b[0] + a[1] * b[1]
omega = -lap(psi)
assert sp.simplify(sp.diff(u[1], x) - sp.diff(u[0], y) - omega) == 0

forcing = []
for zi, di, ci in zip(z, d, c):
    flux = tuple(g + zi * ci * p for g, p in zip(grad(ci), grad(phi)))
    div = sp.diff(flux[0], x) + sp.diff(flux[1], y)
    forcing.append(sp.diff(ci, t) + dot(u, grad(ci)) - di * div)
perp_rho = (-sp.diff(rho, y), sp.diff(rho, x))
forcing.append(sp.diff(omega, t) + dot(u, grad(omega)) + k * dot(perp_rho, grad(phi)))

fns = [sp.lambdify((x, y, t), f, "mpmath") for f in forcing]
import mpmath

mpmath.mp.dps = 30
rng = random.Random(20240917)
print("pub const POINTS: [[f64; 6]; 50] = [")
for _ in range(50):
    px, py, pt = rng.random(), rng.random(), rng.random()
    vals = [float(f(mpmath.mpf(px), mpmath.mpf(py), mpmath.mpf(pt))) for f in fns]
    print("    [" + ", ".join(repr(v) for v in (px, py, pt, *vals)) + "],")
print("];")
