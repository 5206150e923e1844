"""Scalar proximal maps of ``mu * |t|**r`` for ``r`` in ``[0, 1]``.

Every function here minimises (or inspects) the one-dimensional energy

    E(t) = mu * |t|**r + 0.5 * (t - t_prime)**2

For ``r = 1`` the minimiser is soft thresholding and for ``r = 0`` it is hard
thresholding.  For ``0 < r < 1`` the positive stationary points of ``E`` are
the zeros of the strictly convex function

    g(t) = mu * r - t_prime * t**(1 - r) + t**(2 - r)

and the minimiser is either ``0`` or the larger zero of ``g``, found by Newton
iteration started at ``t_prime``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ShrinkageProblem",
    "prox_energy",
    "eval_g",
    "critical_mu",
    "newton_second_zero",
    "shrink",
    "soft_threshold",
    "hard_threshold",
]

NEWTON_MAX_ITER = 50


def _pow(t, e):
    # t >= 0; t = 0 only arises from underflow of a subnormal anchor
    with np.errstate(divide="ignore"):
        return np.exp(e * np.log(t))


@dataclass(frozen=True)
class ShrinkageProblem:
    """One instance of the scalar shrinkage problem.

    Parameters
    ----------
    t_prime : float
        Anchor point of the quadratic term.
    mu : float
        Penalty weight, ``mu >= 0``.
    r : float
        Penalty exponent in ``[0, 1]``.
    """

    t_prime: float
    mu: float
    r: float

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not 0 <= self.r <= 1:
            raise ValueError(f"r must lie in [0, 1], got {self.r}")

    @property
    def t0(self) -> float:
        """Minimiser of ``g`` on ``(0, inf)`` for ``|t_prime|``."""
        return (1 - self.r) / (2 - self.r) * abs(self.t_prime)

    @property
    def mu0(self) -> float:
        """Weight at which ``g(t0) = 0`` (see :func:`critical_mu`)."""
        return critical_mu(self.t_prime, self.r)

    def energy(self, t):
        return prox_energy(t, self.t_prime, self.mu, self.r)

    def g(self, t):
        return eval_g(t, self.t_prime, self.mu, self.r)

    def second_zero(self, eps=1e-6, full_output=False):
        return newton_second_zero(self.t_prime, self.mu, self.r, eps, full_output)

    def shrink(self) -> float:
        return float(shrink(self.t_prime, self.mu, self.r))


def prox_energy(t, t_prime, mu, r):
    """Evaluate ``mu * |t|**r + 0.5 * (t - t_prime)**2``.

    ``r = 0`` uses the counting convention ``|0|**0 = 0``, so the energy at
    ``t = 0`` is ``0.5 * t_prime**2`` and ``mu + 0.5 * (t - t_prime)**2``
    everywhere else.
    """
    t = np.asarray(t, dtype=float)
    quad = 0.5 * (t - t_prime) ** 2
    if r == 0:
        pen = np.where(t != 0, mu, 0.0)
    elif r == 1:
        pen = mu * np.abs(t)
    else:
        pen = mu * np.abs(t) ** r
    out = pen + quad
    return float(out) if out.ndim == 0 else out


def eval_g(t, t_prime, mu, r):
    """Evaluate ``g(t) = mu*r - t_prime*t**(1-r) + t**(2-r)`` for ``t > 0``.

    ``g(t) = t**(1-r) * dE/dt`` on ``(0, inf)``, so its zeros are exactly the
    positive stationary points of the energy.

    Raises
    ------
    ValueError
        If any ``t <= 0`` or ``r`` is not strictly between 0 and 1.
    """
    if not 0 < r < 1:
        raise ValueError(f"g is defined for 0 < r < 1, got r={r}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("g is evaluated on t > 0 only")
    pw = _pow(t, 1 - r)
    out = mu * r + (t - t_prime) * pw
    return float(out) if out.ndim == 0 else out


def _g_prime(t, t_prime, r, pw):
    # pw = t**(1-r)
    return pw * ((2 - r) - (1 - r) * t_prime / t)


def critical_mu(t_prime, r):
    """Largest weight for which ``g`` still touches zero.

    ``mu0 = (|t'| - t0) * t0**(1-r) / r`` with ``t0 = (1-r)/(2-r) * |t'|``.
    For ``mu > mu0`` the proximal map returns zero.
    """
    x = abs(float(t_prime))
    if not 0 < r < 1:
        raise ValueError(f"critical_mu needs 0 < r < 1, got r={r}")
    if x == 0:
        return 0.0
    t0 = (1 - r) / (2 - r) * x
    return float((x - t0) * _pow(t0, 1 - r) / r)


def _newton(x, mu, r, eps, max_iter=NEWTON_MAX_ITER):
    """Vectorised Newton iteration for the larger zero of g.

    ``x`` holds positive anchors, all satisfying ``g(t0) < 0``.  Each entry
    stops on its own once ``|t_m - t_{m-1}| <= eps``; entries still moving at
    ``max_iter`` are finished by bisection on ``[t0, x]``.
    Returns ``(t2, iterations)``.
    """
    x = np.asarray(x, dtype=float)
    t = x.copy()
    iters = np.zeros(x.shape, dtype=int)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        tm, xm = t[idx], x[idx]
        pw = _pow(tm, 1 - r)
        g = mu * r + (tm - xm) * pw
        new = tm - g / _g_prime(tm, xm, r, pw)
        t[idx] = new
        iters[idx] += 1
        active[idx[np.abs(new - tm) <= eps]] = False
    idx = np.flatnonzero(active)
    if idx.size:
        t[idx] = _bisect_second_zero(x[idx], mu, r, eps)
    return t, iters


def _bisect_second_zero(x, mu, r, eps):
    lo = (1 - r) / (2 - r) * x
    hi = x.copy()
    while np.any(hi - lo > eps):
        mid = 0.5 * (lo + hi)
        neg = mu * r + (mid - x) * _pow(mid, 1 - r) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def newton_second_zero(t_prime, mu, r, eps=1e-6, full_output=False):
    """Larger zero ``t2`` of ``g`` for anchor ``|t_prime|``.

    Newton's method started at ``t_prime`` decreases monotonically onto
    ``t2`` because ``g`` is convex and positive at the start point.

    Parameters
    ----------
    t_prime : float
        Anchor, ``t_prime >= 0``.
    mu, r : float
        Penalty weight and exponent, ``0 < r < 1``.
    eps : float
        Stop once two successive iterates differ by at most ``eps``.
    full_output : bool
        Also return the number of Newton steps taken.

    Raises
    ------
    ValueError
        If ``g(t0) >= 0``, i.e. ``g`` has fewer than two zeros.
    """
    if not 0 < r < 1:
        raise ValueError(f"newton_second_zero needs 0 < r < 1, got r={r}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = float(t_prime)
    if x <= 0 or mu <= 0 or not mu < critical_mu(x, r):
        t0 = (1 - r) / (2 - r) * max(x, 0.0)
        raise ValueError(
            f"g has no second zero: need t_prime > 0 and g(t0) < 0 "
            f"(t_prime={x}, mu={mu}, r={r}, t0={t0})"
        )
    t, it = _newton(np.array([x]), mu, r, eps)
    if full_output:
        return float(t[0]), int(it[0])
    return float(t[0])


def soft_threshold(t_prime, mu):
    """``sign(t') * max(|t'| - mu, 0)``."""
    t_prime = np.asarray(t_prime, dtype=float)
    return np.sign(t_prime) * np.maximum(np.abs(t_prime) - mu, 0.0)


def hard_threshold(t_prime, mu):
    """Keep ``t'`` where ``0.5 * t'**2 >= mu``, zero elsewhere."""
    t_prime = np.asarray(t_prime, dtype=float)
    return np.where(0.5 * t_prime**2 < mu, 0.0, t_prime)


def shrink(t_prime, mu, r, eps=1e-6):
    """Global minimiser of ``mu*|t|**r + 0.5*(t - t_prime)**2``.

    Applied elementwise to array input.  Ties between ``0`` and the nonzero
    candidate are broken in favour of the nonzero one.

    Parameters
    ----------
    t_prime : float or array_like
        Anchor point(s).
    mu : float
        Penalty weight, ``mu >= 0``.
    r : float
        Exponent in ``[0, 1]``.
    eps : float
        Newton tolerance for ``0 < r < 1``.

    Returns
    -------
    float or ndarray
        Same shape as ``t_prime``.
    """
    if not mu >= 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if not 0 <= r <= 1:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    tp = np.asarray(t_prime, dtype=float)
    scalar = tp.ndim == 0
    tp = tp.ravel()

    if mu == 0:
        out = tp.copy()
    elif r == 1:
        out = soft_threshold(tp, mu)
    elif r == 0:
        out = hard_threshold(tp, mu)
    else:
        x = np.abs(tp)
        mag = np.zeros_like(x)
        pos = np.flatnonzero(x > 0)
        if pos.size:
            xp = x[pos]
            t0 = (1 - r) / (2 - r) * xp
            g_t0 = mu * r + (t0 - xp) * _pow(t0, 1 - r)
            two = pos[g_t0 < 0]
            if two.size:
                xt = x[two]
                t2, _ = _newton(xt, mu, r, eps)
                e_t2 = mu * _pow(t2, r) + 0.5 * (t2 - xt) ** 2
                e_0 = 0.5 * xt**2
                mag[two] = np.where(e_t2 <= e_0, t2, 0.0)
        out = np.sign(tp) * mag

    return float(out[0]) if scalar else out.reshape(np.shape(t_prime))
