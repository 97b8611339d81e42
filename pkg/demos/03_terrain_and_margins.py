"""Terrain generation and the foothold safety margin.

Builds a composite course (flat, gap, stairs, stepping stones), reports its
extent and writes it as a heightmap plus a PGM preview.  Then it probes how
the foothold check treats feet placed close to an edge: a probe ring of
5 cm radius rejects feet within that distance of a height change.
"""

import tempfile
from pathlib import Path

import numpy as np

from gaitlp import GaitPlannerEnv, RobotModel, composite, generate
from gaitlp.phase import SupportPhase, rot_z
from gaitlp.terrain import FlatSection, Gap, HeightMap, Stairs, SteppingStones, export_pgm, save_heightmap

course = composite([FlatSection(2.0), Gap(0.3, 1.0), FlatSection(1.5), Stairs(rise=0.1, run=0.3, count=4), FlatSection(1.0),
                    SteppingStones(stone_size=0.3, spacing=0.4, count=4), FlatSection(2.0)], width=3.0)
hm = generate(course)
print(f"composite course: {hm.n_rows} x {hm.n_cols} cells at {hm.resolution} m, "
      f"elevation {hm.elevations.min():.2f} .. {hm.elevations.max():.2f} m")
out = Path(tempfile.mkdtemp())
save_heightmap(hm, out / "course.json")
export_pgm(hm, out / "course.pgm")
print("wrote", out / "course.json", "and", out / "course.pgm")

# a 10 cm step along x = 0.5 + d, with a foot at x = 0.5 on the low side
model = RobotModel()
res = 0.005
c = (np.arange(200) + 0.5) * res
X, _ = np.meshgrid(c, c)
for d in (0.01, 0.03, 0.05, 0.06, 0.07, 0.10):
    step = HeightMap((res / 2, res / 2), res, np.where(X > 0.5 + d, 0.1, 0.0))
    env = GaitPlannerEnv(step, model, spawn_region=(0.4, 0.6, 0.4, 0.6), goal_region=(0.4, 0.6, 0.4, 0.6))
    feet = np.array([[0.5, 0.5, 0.0], [0.35, 0.35, 0.0], [0.3, 0.6, 0.0], [0.2, 0.5, 0.0]])
    ph = SupportPhase(R_B=rot_z(0.0), r_B=[0.35, 0.5, model.h_com], v_B=np.zeros(3), r_F=feet,
                      c_F=np.ones(4), t_E=1.0, t_S=1.0)
    verdict = env.check_footholds(ph)
    print(f"foot {d * 100:4.0f} cm from a 10 cm step -> {'rejected' if verdict != 'none' else 'accepted'}")
