"""Correlation structure of Pearson diffusions under inverse stable-mixture time changes."""
from .errors import (DegenerateLeadingTerm, DegenerateVariance, DomainError,
                     FracPearsonError, HorizonTooShort, InversionUnstable,
                     NonConvergence, QuadratureFailure, UnsupportedClass)
from .mlf import EvalPolicy, GmlArgs, gml, ml
from .laplace import InversionPolicy, LaplaceImage, invert
from .subordinator import StableMixture

__version__ = "0.1.0"
