"""
Pearson diffusions by spectral expansion
========================================

Classification, eigenpairs and transition densities, plain and time-changed.
"""

import math

import numpy as np
from scipy.stats import norm

from fracpearson.pearson import (PearsonModel, classify, spectral_data, stationary_law,
                                 transition_density, transition_density_time_changed)
from fracpearson.subordinator import StableMixture

models = {
    "OU": PearsonModel(0.0, -1.0, 1.0),
    "CIR": PearsonModel(1.0, -1.0, 0.0, 0.5),
    "Jacobi": PearsonModel(1.5, -3.0, 0.0, 1.0, -1.0),
}
for name, m in models.items():
    law = stationary_law(m)
    sd = spectral_data(m, N=4)
    print(f"{name}: {classify(m).value}, mean {law.mean:.3f}, var {law.variance:.3f}, "
          f"eigenvalues {np.round(sd.eigenvalues, 3)}")

# OU against the exact Gaussian kernel
ou = models["OU"]
x = np.linspace(-3, 3, 7)
exact = norm.pdf(x, loc=0.5 * math.exp(-1), scale=math.sqrt(1 - math.exp(-2)))
print("OU error:", np.max(np.abs(transition_density(ou, x, 1.0, 0.5) - exact)))

# under the random clock the density relaxes more slowly
mix = StableMixture([0.3, 0.8], [0.5, 0.5])
for t in (0.1, 1.0, 100.0):
    p = transition_density_time_changed(ou, mix, x, t, 0.5)
    print(f"t={t:g}: sup |p - stationary| = {np.max(np.abs(p - norm.pdf(x))):.4f}")
