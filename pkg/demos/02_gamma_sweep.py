"""Trading material between two counter-rotating squares.

gamma sets the ratio of the two bodies' colliding-region measures. At 0 the
first body keeps everything, at 1 the second does, and between them both
give way. The summed measure is symmetric about gamma = 0.5 because the
scene is.

Run:  python3 demos/02_gamma_sweep.py      (a few minutes)
"""
import numpy as np

from cogen import DensityField, OptimizerConfig, assemble, export_pgm, gamma_sweep, load_builtin_scene
from _common import output_dir, pyplot

scene = load_builtin_scene("squares2d").rescaled(4, K=125)
traj = scene.trajectory()
rho1, rho2 = scene.initial_fields()
# one pair of matrices serves every gamma
W12 = assemble(scene.grid1, scene.grid2, traj.leg_12)
W21 = assemble(scene.grid2, scene.grid1, traj.leg_21)

gammas = np.round(np.linspace(0, 1, 11), 1)
rows, results = gamma_sweep(rho1, rho2, W12, W21, gammas, OptimizerConfig())
print(f"{'gamma':>6} {'v1':>8} {'v2':>8} {'sum':>8}  iterations")
for (g, v1, v2, total), res in zip(rows, results):
    print(f"{g:6.1f} {v1:8.4f} {v2:8.4f} {total:8.4f}  {len(res.history)}")

out = output_dir()
mid = results[5]
export_pgm(DensityField.from_mask(scene.grid1, mid.solid1), out / "squares_gamma05_body1.pgm")
export_pgm(DensityField.from_mask(scene.grid2, mid.solid2), out / "squares_gamma05_body2.pgm")
plt = pyplot()
if plt is not None:
    table = np.array(rows)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for col, label in ((1, "body 1"), (2, "body 2"), (3, "sum")):
        ax.plot(table[:, 0], table[:, col], marker="o", label=label)
    ax.set_xlabel("gamma")
    ax.set_ylabel("area after thresholding")
    ax.legend()
    fig.savefig(out / "gamma_sweep.png", dpi=120, bbox_inches="tight")
print(f"outputs in {out}")
