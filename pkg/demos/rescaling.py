"""
Parabolic rescaling
===================

u_lam(x, t) = lam u(lam x, lam^2 t) keeps the mass. Applied to a heat run it
pulls the late-time profile back to the unit-time Gaussian.
"""

import math

import numpy as np

import aggdiff

g = aggdiff.make_grid(80.0, 4096)
u0 = aggdiff.field_from_function(g, lambda x: np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi))
lams = (2.0, 4.0, 8.0, 16.0)
snaps = []
cfg = aggdiff.SolverConfig(g, aggdiff.PureDiffusion(), 256.0, dt_max=0.05, output_times=[0.0] + [l * l for l in lams])
aggdiff.run(u0, cfg, snaps.append)

target = aggdiff.make_grid(10.0, 1024)
G = aggdiff.evaluate_heat(aggdiff.HeatProfile(1.0), target, 1.0).values
for lam, u in zip(lams, snaps[1:]):
    r = aggdiff.rescale(u, lam, target)
    print(
        f"lam={lam:4g}  t={u.time:6g}  |u_lam|_1 = {aggdiff.lp_norm(r, 1):.12f}"
        f"  sup|u_lam - G(.,1)| = {np.max(np.abs(r.values - G)):.3e}"
    )
# the datum is the heat flow started at t = -1/2, so the gap falls like 1/lam^2
# until interpolation on the coarse run grid takes over
