"""Block proximal-gradient solvers for the robust Poisson objective.

Three schemes share the same block structure ``(a0, a, b, y)``:

``palm``
    Gauss-Seidel sweep, each block taking a gradient step at the most recent
    values of the other blocks followed by its proximal map.
``fista``
    Every block stepped from a common extrapolated point, Nesterov momentum.
``hybrid``
    The PALM sweep with per-block FISTA extrapolation, extrapolated blocks
    fed forward inside the sweep.

All three stop when consecutive objective values differ by at most
``hyper.eps`` or after ``hyper.max_iters`` iterations.  The proximal map of
``tau * G`` is used for each penalty ``G``, i.e. thresholds ``tau * mu`` and
``tau * lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import HyperParams, ModelParams, ModelState, ObservationSet
from .prox import shrink

__all__ = [
    "SOLVERS",
    "DivergenceError",
    "FitReport",
    "default_init",
    "mean_init",
    "INITS",
    "prox_series",
    "palm_fit",
    "fista_fit",
    "hybrid_fit",
    "fit",
]

SOLVERS = ("fista", "palm", "hybrid")

class DivergenceError(RuntimeError):
    """The objective increased or became non-finite; usually ``tau`` is too large."""


@dataclass
class FitReport:
    params: ModelParams
    y_hat: np.ndarray
    u_hat: np.ndarray
    iterations: int
    objective_trace: np.ndarray
    converged: bool
    solver: str

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


def default_init(obs: ObservationSet, hyper: HyperParams):
    """Constant model at the observed mean, mean imputation off ``D``.

    Returns ``(params, y)`` with ``a = b = 0`` and ``a0 = log(mean + 1)``.
    """
    m = float(np.mean(obs.values))
    y = np.full(obs.N, m)
    y[obs.mask] = obs.values
    return ModelParams(math.log1p(m), np.zeros(hyper.p), np.zeros(hyper.q)), y


def mean_init(obs: ObservationSet, hyper: HyperParams):
    """Like :func:`default_init` but with the whole series at the observed mean.

    Starting the observed entries away from ``y~`` lets the residual penalty
    decide which of them to follow; started at ``y~`` they sit in the cusp
    of ``|y - y~|**r`` and never leave it.
    """
    params, _ = default_init(obs, hyper)
    return params, np.full(obs.N, float(np.mean(obs.values)))


INITS = {"observed": default_init, "mean": mean_init}


def prox_series(x, obs: ObservationSet, hyper: HyperParams, tau=None):
    """Proximal step for the series block after its gradient step ``x``.

    Off ``D`` the entries are kept; on ``D`` the residual ``x - y~`` is
    shrunk with weight ``tau * lam``.  The result is projected onto
    ``y >= 0``.
    """
    tau = hyper.series_step if tau is None else tau
    out = np.array(x, dtype=float)
    res = out[obs.mask] - obs.values
    out[obs.mask] = shrink(res, tau * hyper.lam, hyper.r) + obs.values
    return np.maximum(out, 0.0)


def _prox_coef(x, hyper, tau):
    if x.size == 0:
        return x
    return shrink(x, tau * hyper.mu, hyper.s)


def _objective(st: ModelState, obs, hyper) -> float:
    res = np.sum(np.abs(st.y[obs.mask] - obs.values) ** hyper.r)
    pen = np.sum(np.abs(st.a) ** hyper.s) + np.sum(np.abs(st.b) ** hyper.s)
    return st.smooth() + hyper.lam * float(res) + hyper.mu * float(pen)


def _prepare(obs, hyper, init):
    if init is None:
        init = default_init(obs, hyper)
    params, y = init
    hyper.check(params)
    y = np.asarray(y, dtype=float)
    if y.size != obs.N:
        raise ValueError(f"initial series has length {y.size}, expected {obs.N}")
    if np.any(y < 0):
        raise ValueError("initial series must be non-negative")
    return params.a0, params.a.copy(), params.b.copy(), y.copy()


def _finish(st, trace, converged, solver):
    return FitReport(
        params=st.params,
        y_hat=st.y.copy(),
        u_hat=st.u.copy(),
        iterations=len(trace),
        objective_trace=np.array(trace),
        converged=converged,
        solver=solver,
    )


def _check_finite(j, m):
    if not math.isfinite(j):
        raise DivergenceError(f"objective is not finite at iteration {m}")


def palm_fit(obs: ObservationSet, hyper: HyperParams, init=None) -> FitReport:
    """Proximal alternating linearised minimisation.

    Block order per sweep is ``a0, a, b, y``, each gradient taken at the
    newest values of the other blocks.

    Parameters
    ----------
    obs : ObservationSet
    hyper : HyperParams
        ``hyper.tau`` must be small enough for every block to descend;
        ``hyper.divergence_tol`` bounds the rise tolerated in one sweep.
    init : (ModelParams, ndarray), optional
        Starting point; :func:`default_init` when omitted.

    Raises
    ------
    DivergenceError
        If the objective rises by more than ``hyper.divergence_tol`` in a
        sweep or stops being finite.
    """
    tau, ty = hyper.tau, hyper.series_step
    a0, a, b, y = _prepare(obs, hyper, init)
    st = ModelState(a0, a, b, y)
    j_prev = _objective(st, obs, hyper)
    trace = []
    converged = False
    for m in range(1, hyper.max_iters + 1):
        a0 = a0 - tau * st.grad_a0()
        st = ModelState(a0, a, b, y)
        if a.size:
            a = _prox_coef(a - tau * st.grad_a(), hyper, tau)
            st = ModelState(a0, a, b, y)
        if b.size:
            b = _prox_coef(b - tau * st.grad_b(), hyper, tau)
            st = ModelState(a0, a, b, y)
        y = prox_series(y - ty * st.grad_y(), obs, hyper)
        st = ModelState(a0, a, b, y)
        j = _objective(st, obs, hyper)
        _check_finite(j, m)
        if j > j_prev + hyper.divergence_tol:
            raise DivergenceError(
                f"objective rose from {j_prev:.12g} to {j:.12g} at iteration {m}; reduce tau"
            )
        trace.append(j)
        if abs(j - j_prev) <= hyper.eps:
            converged = True
            break
        j_prev = j
    return _finish(st, trace, converged, "palm")


def _momentum(alpha):
    nxt = (1.0 + math.sqrt(1.0 + 4.0 * alpha * alpha)) / 2.0
    return nxt, (alpha - 1.0) / nxt


def fista_fit(
    obs: ObservationSet, hyper: HyperParams, init=None, momentum=True, restart=True
) -> FitReport:
    """Accelerated proximal gradient with all blocks stepped jointly.

    All four gradients are taken at the extrapolated point
    ``(c0, c, d, z)``; ``momentum=False`` pins the extrapolation weight at
    zero, which gives plain (Jacobi) proximal gradient.
    The objective trace need not be monotone.  With ``restart`` the
    momentum is reset whenever the objective goes up (see
    :func:`hybrid_fit`).
    """
    tau, ty = hyper.tau, hyper.series_step
    a0, a, b, y = _prepare(obs, hyper, init)
    c0, c, d, z = a0, a.copy(), b.copy(), y.copy()
    alpha = 1.0
    j_prev = _objective(ModelState(a0, a, b, y), obs, hyper)
    trace = []
    converged = False
    st = None
    for m in range(1, hyper.max_iters + 1):
        alpha, beta = _momentum(alpha)
        if not momentum:
            beta = 0.0
        ext = ModelState(c0, c, d, z)
        g0, ga, gb = ext.grad_params()
        gy = ext.grad_y()
        a0_new = c0 - tau * g0
        a_new = _prox_coef(c - tau * ga, hyper, tau)
        b_new = _prox_coef(d - tau * gb, hyper, tau)
        y_new = prox_series(z - ty * gy, obs, hyper)

        c0 = a0_new + beta * (a0_new - a0)
        c = a_new + beta * (a_new - a)
        d = b_new + beta * (b_new - b)
        z = np.maximum(y_new + beta * (y_new - y), 0.0)
        a0, a, b, y = a0_new, a_new, b_new, y_new

        st = ModelState(a0, a, b, y)
        j = _objective(st, obs, hyper)
        _check_finite(j, m)
        trace.append(j)
        if abs(j - j_prev) <= hyper.eps:
            converged = True
            break
        if restart and j > j_prev:
            alpha = 1.0
            c0, c, d, z = a0, a.copy(), b.copy(), y.copy()
        j_prev = j
    return _finish(st, trace, converged, "fista")


def hybrid_fit(obs: ObservationSet, hyper: HyperParams, init=None, restart=True) -> FitReport:
    """PALM block order with FISTA extrapolation on every block.

    Within a sweep the already-extrapolated blocks (``c0``, then ``c``, then
    ``d``) are used for the gradients of the blocks that follow.

    With ``restart`` (the default) a sweep that raises the objective resets
    the momentum and puts the extrapolated point back on the current
    iterate.  Without it, momentum can carry ``a0`` past the point where
    every mean clamps to zero; the gradient vanishes there and the iteration
    never returns.
    """
    tau, ty = hyper.tau, hyper.series_step
    a0, a, b, y = _prepare(obs, hyper, init)
    c0, c, d, z = a0, a.copy(), b.copy(), y.copy()
    alpha = 1.0
    j_prev = _objective(ModelState(a0, a, b, y), obs, hyper)
    trace = []
    converged = False
    st = None
    for m in range(1, hyper.max_iters + 1):
        alpha, beta = _momentum(alpha)

        a0_new = c0 - tau * ModelState(c0, c, d, z).grad_a0()
        c0 = a0_new + beta * (a0_new - a0)
        if a.size:
            a_new = _prox_coef(c - tau * ModelState(c0, c, d, z).grad_a(), hyper, tau)
            c = a_new + beta * (a_new - a)
        else:
            a_new = a
        if b.size:
            b_new = _prox_coef(d - tau * ModelState(c0, c, d, z).grad_b(), hyper, tau)
            d = b_new + beta * (b_new - b)
        else:
            b_new = b
        y_new = prox_series(z - ty * ModelState(c0, c, d, z).grad_y(), obs, hyper)
        z = np.maximum(y_new + beta * (y_new - y), 0.0)
        a0, a, b, y = a0_new, a_new, b_new, y_new

        st = ModelState(a0, a, b, y)
        j = _objective(st, obs, hyper)
        _check_finite(j, m)
        trace.append(j)
        if abs(j - j_prev) <= hyper.eps:
            converged = True
            break
        if restart and j > j_prev:
            alpha = 1.0
            c0, c, d, z = a0, a.copy(), b.copy(), y.copy()
        j_prev = j
    return _finish(st, trace, converged, "hybrid")


_DISPATCH = {"palm": palm_fit, "fista": fista_fit, "hybrid": hybrid_fit}


def fit(obs: ObservationSet, hyper: HyperParams, solver="hybrid", init=None) -> FitReport:
    """Run the named solver (``"palm"``, ``"fista"`` or ``"hybrid"``).

    ``init`` is a ``(params, y)`` pair or the name of a starting rule in
    :data:`INITS`.
    """
    try:
        fn = _DISPATCH[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}") from None
    if isinstance(init, str):
        try:
            init = INITS[init](obs, hyper)
        except KeyError:
            raise ValueError(f"unknown init {init!r}; choose from {tuple(INITS)}") from None
    return fn(obs, hyper, init)
