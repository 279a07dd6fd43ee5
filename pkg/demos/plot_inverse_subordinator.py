"""
The inverse stable-mixture clock
================================

Laplace functional, mean and density of the first-passage clock ``E(t)``.
"""

import numpy as np
from scipy.integrate import quad

from fracpearson.subordinator import (StableMixture, h_kernel, inverse_subordinator_density,
                                      mean_inverse, mean_inverse_asymptotic, phi)

mix = StableMixture([0.3, 0.8], [0.5, 0.5])

# E[exp(-theta E(t))], with the evaluation route reported
for t in (0.5, 1.0, 10.0, 1e3):
    val, info = phi(mix, 1.0, t, full_output=True)
    print(f"Phi_1({t:g}) = {val:.10f} via {info['method']}")

# the mean grows like t^b1 at large t and like t^b2 near zero
for t in (1e-3, 1e4):
    exact = mean_inverse(mix, t)
    regime = "small_t" if t < 1 else "large_t"
    print(f"E[E({t:g})] = {exact:.6e}, {regime} approximation {mean_inverse_asymptotic(mix, t, regime):.6e}")

# the kernel h integrates to the mean
s = 2.0
print("int_0^s h:", quad(lambda y: h_kernel(mix, y), 0, s, limit=200)[0], "mean:", mean_inverse(mix, s))

# the density of E(1) is a probability density with the same mean
f = lambda u: inverse_subordinator_density(mix, u, 1.0)
print("mass:", quad(f, 0, np.inf, limit=200)[0], "mean:", quad(lambda u: u * f(u), 0, np.inf, limit=200)[0])
