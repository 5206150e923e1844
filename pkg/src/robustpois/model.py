"""Poisson log-linear autoregression: means, objective and exact gradients.

The conditional mean of the series follows

    log(u_i + 1) = a0 + sum_k a_k log(y_{i-k} + 1) + sum_k b_k log(u_{i-k} + 1)

with ``u_i`` clamped at zero and every out-of-range lag treated as zero.
Because ``log(u_i + 1) = max(v_i, 0)`` for the linear predictor ``v_i``, the
clamp is applied on the log scale, which keeps the feedback terms exact.

Series (``y``) and mean series (``u``) are plain 1-D float arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .special import digamma, log_gamma

__all__ = [
    "U_FLOOR",
    "NumericalRangeError",
    "ModelParams",
    "ObservationSet",
    "HyperParams",
    "ModelState",
    "forward_means",
    "smooth_part",
    "objective",
    "grad_smooth",
    "residual_penalty",
    "coefficient_penalty",
    "normalization_constant",
    "neg_log_likelihood",
]

#: Floor applied to ``u`` inside ``log(u)`` and ``1/u``.
U_FLOOR = 1e-8


class NumericalRangeError(FloatingPointError):
    """The mean recursion left the range of double precision."""


def _as_vector(x, name):
    x = np.array(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


@dataclass(frozen=True)
class ModelParams:
    """Intercept ``a0``, lags ``a`` on ``log(y+1)`` and ``b`` on ``log(u+1)``."""

    a0: float
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "a0", float(self.a0))
        if not np.isfinite(self.a0):
            raise ValueError("a0 must be finite")
        object.__setattr__(self, "a", _as_vector(self.a, "a"))
        object.__setattr__(self, "b", _as_vector(self.b, "b"))

    @property
    def p(self) -> int:
        return self.a.size

    @property
    def q(self) -> int:
        return self.b.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.a0], self.a, self.b])

    @classmethod
    def from_vector(cls, vec, p, q):
        vec = np.asarray(vec, dtype=float)
        if vec.size != 1 + p + q:
            raise ValueError(f"expected {1 + p + q} entries, got {vec.size}")
        return cls(vec[0], vec[1 : 1 + p], vec[1 + p :])

    @staticmethod
    def names(p, q):
        return ["a0"] + [f"a{k}" for k in range(1, p + 1)] + [f"b{k}" for k in range(1, q + 1)]

    @classmethod
    def zeros(cls, p, q, a0=0.0):
        return cls(a0, np.zeros(p), np.zeros(q))


@dataclass(frozen=True)
class ObservationSet:
    """Observed index mask ``D`` and the observed values on it.

    ``values`` is ordered like ``np.flatnonzero(mask)``.
    """

    mask: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool).reshape(-1)
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != int(mask.sum()):
            raise ValueError(
                f"{values.size} values given for {int(mask.sum())} observed indices"
            )
        if values.size < 1:
            raise ValueError("observation set is empty")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("observed values must be finite and >= 0")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return self.mask.size

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def full(self, fill=np.nan) -> np.ndarray:
        """Length-``N`` array with observed values on ``D`` and ``fill`` elsewhere."""
        out = np.full(self.N, fill, dtype=float)
        out[self.mask] = self.values
        return out

    @classmethod
    def from_series(cls, y, mask=None):
        y = np.asarray(y, dtype=float)
        mask = np.ones(y.size, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        return cls(mask, y[mask])

    def __eq__(self, other):
        if not isinstance(other, ObservationSet):
            return NotImplemented
        return np.array_equal(self.mask, other.mask) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class HyperParams:
    """Model orders, penalty settings and solver controls.

    ``lam`` weighs the ``|y_i - y~_i|**r`` residual penalty on observed
    entries and ``mu`` the ``|coef|**s`` penalty on ``a`` and ``b``.
    ``tau`` is the step for the coefficient blocks; ``tau_y`` the step for
    the series block, equal to ``tau`` when left unset.  ``divergence_tol``
    is the largest per-sweep rise of the objective PALM accepts before
    giving up.
    """

    p: int
    q: int
    lam: float
    mu: float
    r: float = 0.5
    s: float = 1.0
    tau: float = 1e-4
    eps: float = 1e-6
    max_iters: int = 50_000
    tau_y: float | None = None
    divergence_tol: float = 1e-6

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))
        checks = [
            ("r", 0 < self.r <= 1, "(0, 1]"),
            ("s", 0 < self.s <= 1, "(0, 1]"),
            ("lam", self.lam > 0, "(0, inf)"),
            ("mu", self.mu >= 0, "[0, inf)"),
            ("tau", self.tau > 0, "(0, inf)"),
            ("eps", self.eps > 0, "(0, inf)"),
            ("max_iters", self.max_iters >= 1, "[1, inf)"),
            ("tau_y", self.tau_y is None or self.tau_y > 0, "(0, inf)"),
            ("divergence_tol", self.divergence_tol > 0, "(0, inf]"),
        ]
        for name, ok, rng in checks:
            if not ok:
                raise ValueError(f"{name}={getattr(self, name)} outside {rng}")

    @property
    def series_step(self) -> float:
        return self.tau if self.tau_y is None else self.tau_y

    def check(self, params: ModelParams):
        if params.p != self.p or params.q != self.q:
            raise ValueError(
                f"parameters have orders (p={params.p}, q={params.q}), "
                f"expected (p={self.p}, q={self.q})"
            )


def _predictor(a0, a, b, ly):
    """Linear predictor ``v`` and clamped ``log(u + 1) = max(v, 0)``."""
    n = ly.size
    p, q = a.size, b.size
    if q == 0:
        v = np.full(n, a0)
        for k in range(1, min(p, n - 1) + 1):
            v[k:] += a[k - 1] * ly[:-k]
        return v, np.maximum(v, 0.0)
    v = np.empty(n)
    ell = np.empty(n)
    for i in range(n):
        v[i] = _predict_at(a0, a, b, ly, ell, i)
        ell[i] = v[i] if v[i] > 0.0 else 0.0
    return v, ell


def _predict_at(a0, a, b, ly, ell, i):
    """Predictor at index ``i`` from entries ``< i`` of ``ly`` and ``ell``.

    Adds the lag terms in the same order as the vectorised ``q = 0`` branch
    of :func:`_predictor`, so both give identical bits.
    """
    vi = a0
    for k in range(1, min(a.size, i) + 1):
        vi += a[k - 1] * ly[i - k]
    for k in range(1, min(b.size, i) + 1):
        vi += b[k - 1] * ell[i - k]
    return vi


def _lag_matrix(x, m):
    """``out[i, k-1] = x[i-k]`` with zeros where ``i - k < 0``."""
    n = x.size
    out = np.zeros((n, m))
    for k in range(1, min(m, n - 1) + 1):
        out[k:, k - 1] = x[:-k]
    return out


class ModelState:
    """Mean series and derived quantities at one point ``(a0, a, b, y)``.

    The solvers evaluate several gradient blocks at a handful of points per
    iteration; this object computes the forward pass once and serves all of
    them.
    """

    __slots__ = ("a0", "a", "b", "y", "ly", "v", "ell", "u", "gate", "uf", "w")

    def __init__(self, a0, a, b, y):
        self.a0 = float(a0)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.ly = np.log1p(self.y)
        self.v, self.ell = _predictor(self.a0, self.a, self.b, self.ly)
        with np.errstate(over="ignore"):
            self.u = np.expm1(self.ell)
        if not np.all(np.isfinite(self.u)):
            i = int(np.flatnonzero(~np.isfinite(self.u))[0])
            raise NumericalRangeError(
                f"mean overflows at index {i} (log(u+1) = {self.ell[i]:.6g})"
            )
        self.gate = (self.v > 0.0).astype(float)
        self.uf = np.maximum(self.u, U_FLOOR)
        self.w = (self.u - self.y) / self.uf * (self.u + 1.0)

    @classmethod
    def at(cls, params: ModelParams, y):
        return cls(params.a0, params.a, params.b, y)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.a0, self.a, self.b)

    def smooth(self) -> float:
        """``sum_i u_i - y_i log(u_i) + log Gamma(y_i + 1)``."""
        terms = self.u - self.y * np.log(self.uf) + log_gamma(self.y + 1.0)
        return float(np.sum(terms))

    # -- parameter sensitivities ------------------------------------------

    def _base(self):
        n, p, q = self.y.size, self.a.size, self.b.size
        base = np.empty((n, 1 + p + q))
        base[:, 0] = 1.0
        base[:, 1 : 1 + p] = _lag_matrix(self.ly, p)
        base[:, 1 + p :] = _lag_matrix(self.ell, q)
        return base

    def param_sensitivities(self, general=None):
        """``S[i, j] = d log(u_i + 1) / d theta_j`` for ``theta = (a0, a, b)``.

        The general path runs the forward recursion through the ``b`` lags;
        for ``q = 0`` it reduces to ``gate * base``, which is the closed form.
        """
        base = self._base()
        if general is None:
            general = self.b.size > 0
        if not general:
            return self.gate[:, None] * base
        q = self.b.size
        sens = np.empty_like(base)
        for i in range(base.shape[0]):
            acc = base[i].copy()
            for l in range(1, min(q, i) + 1):
                acc += self.b[l - 1] * sens[i - l]
            sens[i] = self.gate[i] * acc
        return sens

    def grad_params(self, general=None):
        """``(dH/da0, dH/da, dH/db)``."""
        sens = self.param_sensitivities(general)
        g = np.sum(sens * self.w[:, None], axis=0)
        p = self.a.size
        return float(g[0]), g[1 : 1 + p], g[1 + p :]

    def grad_a0(self) -> float:
        return self.grad_params()[0]

    def grad_a(self) -> np.ndarray:
        return self.grad_params()[1]

    def grad_b(self) -> np.ndarray:
        return self.grad_params()[2]

    # -- series gradient -----------------------------------------------------

    def _coupling_q0(self):
        n = self.y.size
        acc = np.zeros(n)
        for k in range(1, min(self.a.size, n - 1) + 1):
            acc[: n - k] += self.w[k:] * (self.gate[k:] * self.a[k - 1])
        return acc

    def _coupling_general(self):
        # K_d[i] = (y_i + 1) * d log(u_{i+d} + 1) / d y_i, by diagonal d = j - i
        n, p, q = self.y.size, self.a.size, self.b.size
        acc = np.zeros(n)
        diags = []
        for d in range(1, n):
            inner = self.a[d - 1] if d <= p else 0.0
            if q and d > 1:
                for k in range(1, min(q, d - 1) + 1):
                    inner = inner + self.b[k - 1] * diags[d - k - 1][: n - d]
            kd = self.gate[d:] * inner
            diags.append(kd)
            acc[: n - d] += self.w[d:] * kd
        return acc

    def grad_y(self, general=None) -> np.ndarray:
        """``dH/dy_i`` including the effect of ``y_i`` on later means."""
        if general is None:
            general = self.b.size > 0
        coupling = self._coupling_general() if general else self._coupling_q0()
        direct = -np.log(self.uf) + digamma(self.y + 1.0)
        return direct + coupling / (self.y + 1.0)


def forward_means(params: ModelParams, y, hyper: HyperParams | None = None) -> np.ndarray:
    """Mean series ``u`` of the log-linear recursion for series ``y``.

    Raises
    ------
    NumericalRangeError
        If ``exp`` overflows.
    """
    if hyper is not None:
        hyper.check(params)
    return ModelState.at(params, y).u


def smooth_part(params: ModelParams, y, hyper: HyperParams | None = None) -> float:
    """Poisson negative log-likelihood part ``H`` of the objective."""
    if hyper is not None:
        hyper.check(params)
    return ModelState.at(params, y).smooth()


def residual_penalty(y, obs: ObservationSet, r) -> float:
    """``sum_{i in D} |y_i - y~_i|**r``."""
    y = np.asarray(y, dtype=float)
    return float(np.sum(np.abs(y[obs.mask] - obs.values) ** r))


def coefficient_penalty(params: ModelParams, s) -> float:
    """``sum |a_k|**s + sum |b_k|**s``; the intercept is not penalised."""
    return float(np.sum(np.abs(params.a) ** s) + np.sum(np.abs(params.b) ** s))


def _check_lengths(y, obs):
    if np.size(y) != obs.N:
        raise ValueError(f"series has length {np.size(y)}, observation mask {obs.N}")


def objective(params: ModelParams, y, obs: ObservationSet, hyper: HyperParams) -> float:
    """``J = H + lam * residual penalty + mu * coefficient penalty``."""
    hyper.check(params)
    _check_lengths(y, obs)
    return (
        smooth_part(params, y)
        + hyper.lam * residual_penalty(y, obs, hyper.r)
        + hyper.mu * coefficient_penalty(params, hyper.s)
    )


def grad_smooth(params: ModelParams, y, hyper: HyperParams | None = None, general=None):
    """Exact gradient of :func:`smooth_part`.

    Returns
    -------
    g_a0 : float
    g_a : ndarray, shape (p,)
    g_b : ndarray, shape (q,)
    g_y : ndarray, shape (N,)

    ``general=True`` forces the full sensitivity recursion even when ``q = 0``.
    """
    if hyper is not None:
        hyper.check(params)
    st = ModelState.at(params, y)
    g_a0, g_a, g_b = st.grad_params(general)
    return g_a0, g_a, g_b, st.grad_y(general)


def normalization_constant(r) -> float:
    """``C_r`` such that ``C_r * lam**(1/r) * exp(-lam |x|**r)`` integrates to one."""
    if not 0 < r <= 1:
        raise ValueError(f"r must lie in (0, 1], got {r}")
    return r / (2.0 * np.exp(log_gamma(1.0 / r)))


def neg_log_likelihood(params: ModelParams, y, obs: ObservationSet, hyper: HyperParams) -> float:
    """Objective plus the normalisation constants of the two priors.

    Differs from :func:`objective` by a constant that depends only on the
    hyperparameters and ``|D|``.
    """
    n_obs = obs.values.size
    n_coef = hyper.p + hyper.q
    const = -n_obs * np.log(normalization_constant(hyper.r)) - n_obs / hyper.r * np.log(hyper.lam)
    if n_coef:
        if not hyper.mu > 0:
            raise ValueError("neg_log_likelihood needs mu > 0 when p + q > 0")
        const += -n_coef * np.log(normalization_constant(hyper.s)) - n_coef / hyper.s * np.log(hyper.mu)
    return objective(params, y, obs, hyper) + float(const)
