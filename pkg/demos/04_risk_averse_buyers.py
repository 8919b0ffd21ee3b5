"""How a loss-averse buyer responds to a per-use price, via backward induction."""

import math

import numpy as np

from ppplab.process import RandomWalkModel
from ppplab.schemes import ConstantPPP
from ppplab.sim.engine import estimate
from ppplab.distributions import Uniform01
from ppplab.strategy import RiskProfile, respond

model = RandomWalkModel(0.1)
scheme = ConstantPPP(0.5)

for alpha in (0.0, 1.0, math.inf):
    prof = RiskProfile(alpha)
    policy = respond(scheme, prof, model)
    first = [v for v in model.grid if policy.buys(1, np.array([v]), 0.5,
             policy.initial_budget(1) if policy.tracks_budget else None)[0]]
    s = estimate(scheme, prof, model, Uniform01(), 50_000, 1, policy=policy)
    print(f"alpha={alpha}: lowest type buying at once {min(first, default=None)}, "
          f"revenue {s.revenue.mean:.2f}, worst realized loss {s.max_loss:.3f}")
