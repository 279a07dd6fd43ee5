"""
Numerical Laplace inversion
===========================

Talbot and de Hoog inversion of a few images, with the cross-check that
guards every result.
"""

import numpy as np

from fracpearson import InversionPolicy, InversionUnstable, LaplaceImage, invert
from fracpearson.laplace import dehoog, talbot

t = np.array([0.1, 1.0, 5.0])

# 1/(s+1) <-> e^{-t}
img = LaplaceImage(lambda s: 1 / (s + 1))
print("talbot:", talbot(img.eval, t) - np.exp(-t))
print("de Hoog:", dehoog(img.eval, t) - np.exp(-t))

# s^{b-1}/(s^b+1) <-> E_b(-t^b), the fractional relaxation
from fracpearson import ml
b = 0.6
frac = LaplaceImage(lambda s: s ** (b - 1) / (s ** b + 1))
print("fractional relaxation:", invert(frac, t) - [ml(b, 1, -ti ** b) for ti in t])

# oscillatory originals need more nodes; the ladder supplies them
cos = LaplaceImage(lambda s: s / (s * s + 1))
print("cos t:", invert(cos, np.linspace(0.1, 10, 4)) - np.cos(np.linspace(0.1, 10, 4)))

# an image with no well-behaved original is refused rather than returned
try:
    invert(LaplaceImage(lambda s: np.exp(s) / s), 1.0, InversionPolicy(nodes=24))
except InversionUnstable as err:
    print("refused:", err)
