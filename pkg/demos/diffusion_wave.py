"""
When the kernel has mass, the Burgers wave wins
===============================================

A Gaussian mollifier with integral A = 0.5 drives the solution towards the
viscous Burgers source solution with the same mass, not towards the Gaussian.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from aggdiff import profiles
from aggdiff.config import parse_config
from aggdiff.experiment import run_experiment

here = pathlib.Path(__file__).parent
out = here / "out" / "wave"

# the wave profile first; C follows from the mass condition
w = profiles.diffusion_wave(0.5, 0.5)
print("C_{M,A} =", w.C, " peak at t=1:", w.values(0.0, 1.0))

cfg = parse_config((here / "configs" / "wave.cfg").read_text())
res = run_experiment(cfg, str(out))
print("status", res.status)

late = [r for r in res.records if r.time >= 1]
for r in late[::5]:
    print(f"t={r.time:8.3f}  wave {r.scaled_wave_distance[1.0]:.3e}  heat {r.scaled_heat_distance[1.0]:.3e}")

fig, ax = plt.subplots(1, 2, figsize=(10, 4))
t = [r.time for r in late]
ax[0].loglog(t, [r.scaled_wave_distance[1.0] for r in late], label="Burgers wave")
ax[0].loglog(t, [r.scaled_heat_distance[1.0] for r in late], label="heat kernel")
ax[0].set_xlabel("t")
ax[0].legend()

# the last profile against both candidates
x = np.linspace(-40, 40, 801)
T = late[-1].time
ax[1].plot(x, w.values(x, T), label="wave")
ax[1].plot(x, profiles.HeatProfile(0.5).values(x, T), "--", label="heat")
ax[1].set_title(f"t = {T:g}")
ax[1].legend()
fig.savefig(out / "wave.png", dpi=120)
