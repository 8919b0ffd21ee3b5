"""A skewed martingale walk compared with the ±δ formulas."""

import numpy as np

from ppplab import analytics as A
from ppplab.process import GeneralMarkovModel
from ppplab.sim.checks import measure_general_walk

delta = 0.05
rng = np.random.default_rng(2)
for shape in ("symmetric", "skewed"):
    model = getattr(GeneralMarkovModel, shape)(delta)
    stats = measure_general_walk(model, 0.5, 50_000, rng)
    print(f"{shape}: P(hit 1) {stats['hit_one'][0]:.3f}, exit time {stats['exit_time'][0]:.1f} "
          f"(±δ formula {A.two_sided_time(0.5, 0.0, 1.0, delta):.1f})")
    checks = A.appendix_b_check(0.5, model, stats)
    print("  within bounds:", all(c.passed for c in checks))
