"""
Correlation and long-range dependence
=====================================

Steady-state correlation of the time-changed process, its power-law tail,
and the contrast with the untimed diffusion.
"""

import numpy as np

from fracpearson.correlation import (corr_asymptotic, corr_time_changed, corr_time_changed_n,
                                     lrd_exponent_estimate)
from fracpearson.pearson import PearsonModel, stationary_corr
from fracpearson.subordinator import StableMixture

ou = PearsonModel(0.0, -1.0, 1.0)
mix = StableMixture([0.3, 0.8], [0.5, 0.5])

print("corr(t,t):", [corr_time_changed(ou, mix, t, t) for t in (0.5, 1.0, 5.0)])
for t in (10.0, 1e2, 1e4):
    c = corr_time_changed(ou, mix, t, 1.0)
    print(f"t={t:g}: corr {c:.6e}, asymptotic {corr_asymptotic(ou, mix, t, 1.0):.6e}, "
          f"untimed {float(stationary_corr(ou, t, 1.0)):.3e}")

grid = np.geomspace(1e2, 1e4, 9)
print("slope, two orders:", lrd_exponent_estimate(ou, mix, 1.0, grid))

# with three orders the tail is still set by the smallest one
three = StableMixture([0.2, 0.5, 0.8], [1 / 3, 1 / 3, 1 / 3])
print("corr_n(1,1):", corr_time_changed_n(ou, three, 1.0, 1.0))
print("slope, three orders:", lrd_exponent_estimate(ou, three, 1.0, grid))
