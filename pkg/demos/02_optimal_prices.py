"""Optimal one-time and per-use prices for two value distributions."""

import math

from ppplab.distributions import PowerCdf, Uniform01
from ppplab.process import RandomWalkModel
from ppplab.schemes import optimal_bin, optimal_constant_ppp
from ppplab.strategy import RiskProfile

model = RandomWalkModel(0.1)
d2 = model.delta ** 2

for name, F in (("uniform", Uniform01()), ("F(x)=x^2", PowerCdf(2.0))):
    for alpha in (0.0, math.inf):
        prof = RiskProfile(alpha)
        b = optimal_bin(F, model, prof)
        p, rev = optimal_constant_ppp(F, model, prof)
        print(f"{name:9s} alpha={alpha:<4} BIN price {b.price:7.2f} (types ≥ {b.threshold:.3f}) "
              f"δ²·rev {b.revenue * d2:.4f} | PPP price {p:.3f} δ²·rev {rev * d2:.4f}")
