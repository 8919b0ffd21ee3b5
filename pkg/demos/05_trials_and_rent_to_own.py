"""Free trials and rent-to-own schemes, with their revenue floors."""

import numpy as np

from ppplab import analytics as A
from ppplab.distributions import Uniform01
from ppplab.process import RandomWalkModel
from ppplab.schemes import alpha_ppp_scheme, recommended_free_trial_bin, recommended_free_trial_ppp
from ppplab.sim.checks import free_trial_bounds_check
from ppplab.sim.engine import estimate
from ppplab.strategy import RiskProfile

model = RandomWalkModel(0.1)
rng = np.random.default_rng(5)
print(recommended_free_trial_ppp(model), recommended_free_trial_bin(model))
for variant in ("ppp", "bin"):
    c = free_trial_bounds_check(variant, 0.5, model, 20_000, rng)
    print(f"{variant} trial at v=0.5: revenue {c.empirical_revenue:.2f} vs floor {c.lower_bound:.3f}")
print("floor coefficients:", A.lower_bound_ppp_free_trial(), A.lower_bound_bin_free_trial())

for alpha in (0.01, 1.0):
    scheme = alpha_ppp_scheme(alpha, Uniform01(), model)
    s = estimate(scheme, RiskProfile(alpha), model, Uniform01(), 20_000, 9)
    print(f"alpha={alpha}: {scheme} revenue {s.revenue.mean:.2f}, max loss {s.max_loss:.3f}")
