"""Binary values with a type-dependent number of usages."""

from ppplab.distributions import Uniform01
from ppplab.process import BinaryValueModel, GeometricStop, LinearMean
from ppplab.schemes import bcm_dominating_price

model = BinaryValueModel(GeometricStop(LinearMean(10.0, 0.0)))
p, rep = bcm_dominating_price(Uniform01(), model)
print(f"optimal BIN price {rep.bin.price:.4f}, threshold type {rep.bin.threshold:.4f}")
print(f"per-use price {p:.4f}: revenue {rep.ppp.revenue:.4f} vs {rep.bin_metrics.revenue:.4f}, "
      f"utility {rep.ppp.utility:.5f} vs {rep.bin_metrics.utility:.5f}, dominates {rep.dominates}")
