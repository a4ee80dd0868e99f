"""Sweeps and unsweeps of two counter-rotating squares.

Body 1 stays whole while body 2 keeps only the cells that never meet it:
that is the one-sided answer the co-generation loop reproduces at gamma = 0.
The sweep of body 1 seen from body 2 is its exact complement.

Run:  python3 demos/01_sweep_and_unsweep.py
"""
import numpy as np

from cogen import export_pgm, load_builtin_scene, sweep, unsweep
from _common import output_dir, pyplot

scene = load_builtin_scene("squares2d").rescaled(4, K=125)
traj = scene.trajectory()
rho1, rho2 = scene.initial_fields()

free = unsweep(rho1, traj.leg_12, scene.grid2)
swept = sweep(rho1, traj.leg_12, scene.grid2)
print(f"body-2 domain measure         {scene.grid2.domain_measure:.4f}")
print(f"kept by the unsweep           {free.values.sum() * scene.grid2.cell_measure:.4f}")
print(f"covered by the sweep          {swept.values.sum() * scene.grid2.cell_measure:.4f}")
print("sweep and unsweep are complements:", bool(np.array_equal(free.values + swept.values, np.ones(scene.grid2.n))))

out = output_dir()
export_pgm(free, out / "unsweep_body2.pgm")
plt = pyplot()
if plt is not None:
    fig, ax = plt.subplots(1, 2, figsize=(8, 4))
    for a, field, title in zip(ax, (rho2, free), ("initial body 2", "unsweep of body 1")):
        a.imshow(field.as_array(), origin="lower", cmap="Greys", vmin=0, vmax=1)
        a.set_title(title)
        a.set_axis_off()
    fig.savefig(out / "unsweep_squares.png", dpi=120, bbox_inches="tight")
print(f"images in {out}")
