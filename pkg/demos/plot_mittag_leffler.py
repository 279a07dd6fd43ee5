"""
Mittag-Leffler functions
========================

Evaluating two- and three-parameter Mittag-Leffler functions across routes.
"""

import numpy as np

from fracpearson import gml, ml
from fracpearson.mlf import gml_asymptotic, gml_small_time

# E_{1,1}(z) is the exponential
z = np.linspace(-5, 5, 5)
print("ml(1,1,z) - e^z:", [ml(1, 1, float(v)) - np.exp(v) for v in z])

# E_{1/2,1}(-x) = e^{x^2} erfc(x) decays like a power, not exponentially
for x in (1.0, 10.0, 100.0):
    print(f"E_0.5(-{x:g}) = {ml(0.5, 1, -x):.6e}")

# large negative arguments switch from the power series to the algebraic
# expansion or a Hankel contour; the value stays smooth across the switch
for x in (-1.0, -30.0, -300.0):
    print(f"E^1.5_0.7,1({x:g}) = {gml(0.7, 1.0, 1.5, x):.10e}")

# E^k_{v,beta}(-c t^v) against its small- and large-t closed forms
k, v, beta, c = 2, 0.3, 1.0, 0.5
for t in (1e-6, 1e-3, 1e4, 1e8):
    full = gml(v, beta, k, -c * t ** v)
    approx = gml_small_time(k, v, beta, c, t) if t < 1 else gml_asymptotic(k, v, beta, c, t)
    print(f"t={t:g}: full {full:.6e}, closed form {approx:.6e}")
