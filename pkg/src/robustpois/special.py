"""``log Gamma`` and digamma on the positive reals.

Thin wrappers over :mod:`scipy.special` that reject the domain the model
never needs (``x <= 0``) instead of returning poles or complex branches.
"""

import numpy as np
from scipy import special as _sp

__all__ = ["log_gamma", "digamma"]


def _check_positive(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError(f"{name} is defined for x > 0 only")
    return x


def log_gamma(x):
    """``ln Gamma(x)`` for ``x > 0``; scalar in, scalar out."""
    x = _check_positive(x, "log_gamma")
    out = _sp.gammaln(x)
    return float(out) if out.ndim == 0 else out


def digamma(x):
    """``psi(x) = d/dx ln Gamma(x)`` for ``x > 0``."""
    x = _check_positive(x, "digamma")
    out = _sp.digamma(x)
    return float(out) if out.ndim == 0 else out
