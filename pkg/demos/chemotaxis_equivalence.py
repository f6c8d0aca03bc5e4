"""
The elliptic route and the convolution route
============================================

v solving -v'' + v = u is e^{-|x|}/2 * u, so v_x = K' * u. Both routes are
computed here and the gap shrinks like dx^2.
"""

import math

import numpy as np

import aggdiff

for n in (256, 512, 1024, 2048, 4096):
    g = aggdiff.make_grid(20.0, n)
    u = aggdiff.field_from_function(g, lambda x: np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi))
    v = aggdiff.solve_elliptic(u).values
    ku = aggdiff.convolve(aggdiff.chemotaxis_potential(g), u).values
    gap = np.max(np.abs(v - ku)) / np.max(u.values)
    print(f"n={n:5d}  dx={g.dx:.4f}  gap/max u = {gap:.3e}  gap/dx^2 = {gap / g.dx**2:.4f}")
