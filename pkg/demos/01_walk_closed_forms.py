"""Closed forms of the ±δ walk, checked against a linear-system solve."""

import numpy as np

from ppplab import analytics as A
from ppplab.process import RandomWalkModel
from ppplab.sim import oracle

delta = 0.1
model = RandomWalkModel(delta)

print(f"walk step δ = {delta}")
print(f"{'v':>5} {'E[T]':>8} {'C(v)':>8} {'worst C':>8} {'DP C(v)':>8}")
for v in np.linspace(0.0, 1.0, 6):
    print(f"{v:5.2f} {A.absorption_time(v, delta):8.2f} {A.cumulative_value(v, delta):8.2f} "
          f"{A.worst_case_cumulative(v, delta):8.2f} {oracle.cumulative_value(model, v):8.2f}")

# a buyer facing a per-use price p keeps buying while the value is above the grid threshold
for p in (0.3, 0.5, 0.7):
    print(f"price {p}: continuous threshold {A.rn_threshold(p):.2f}, "
          f"grid threshold {A.rn_grid_threshold(p, delta):.2f}")
