"""resolab: a one-dimensional semiclassical resonance laboratory.

Computes regularized perturbation determinants D_p(z, h) of
-h^2 d^2/dx^2 + V for compactly supported V, locates resonances as their
zeros, cross-validates against exterior complex scaling and a
Birman-Krein scattering oracle, and reproduces the explicit p = 3
blow-up experiment.
"""

__version__ = "0.1.0"

from .freefield import SpectralRegion, SqrtBranch, free_resolvent_kernel, sqrt_branch
from .potentials import (Autocorrelation, Potential, autocorrelation, box,
                         box_autocorrelation, counterexample_density,
                         eval_potential, gaussian_bump, mollified_box,
                         table_potential, zero_potential)

__all__ = [
    "__version__",
    "SpectralRegion", "SqrtBranch", "free_resolvent_kernel", "sqrt_branch",
    "Potential", "Autocorrelation", "box", "mollified_box", "gaussian_bump",
    "table_potential", "zero_potential", "eval_potential", "autocorrelation",
    "box_autocorrelation", "counterexample_density",
]
