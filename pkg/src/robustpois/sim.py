"""Synthetic data and Monte Carlo recovery experiments.

Random streams
--------------
Every random draw comes from a ``numpy.random.Generator`` on PCG64 seeded by
``SeedSequence(seed, spawn_key=key)``.  Run ``i`` of an experiment with base
seed ``s`` simulates its series from ``derive_seed(s, i, 0)`` and corrupts it
from ``derive_seed(s, i, 1)``, so a run's data never depends on which other
runs were executed or in what order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import HyperParams, ModelParams, ObservationSet, _predict_at
from .solvers import fit

__all__ = [
    "REFERENCE_A0",
    "REFERENCE_A",
    "TrueModel",
    "CorruptionSpec",
    "RunResult",
    "ExperimentSummary",
    "make_rng",
    "derive_seed",
    "poisson_sample",
    "simulate",
    "simulate_with_means",
    "inject_missing",
    "inject_outliers",
    "RunData",
    "generate_run",
    "run_single",
    "run_experiment",
]

REFERENCE_A0 = 1.0
REFERENCE_A = (0.25, -0.5, 0.0, 0.0, -0.5, 0.5)


def make_rng(seed, *key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def derive_seed(seed, *key) -> int:
    """64-bit child seed hashed from ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class TrueModel:
    params: ModelParams
    N: int
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")


@dataclass(frozen=True)
class CorruptionSpec:
    observed_fraction: float = 1.0
    contamination_fraction: float = 0.0
    outlier_value: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.observed_fraction <= 1:
            raise ValueError(f"observed_fraction={self.observed_fraction} outside (0, 1]")
        if not 0 <= self.contamination_fraction < 1:
            raise ValueError(
                f"contamination_fraction={self.contamination_fraction} outside [0, 1)"
            )
        if not self.outlier_value >= 0:
            raise ValueError(f"outlier_value={self.outlier_value} must be >= 0")


def poisson_sample(mean, rng: np.random.Generator) -> int:
    """One Poisson draw; ``mean = 0`` always gives 0."""
    if not (mean >= 0 and math.isfinite(mean)):
        raise ValueError(f"Poisson mean must be finite and >= 0, got {mean}")
    if mean == 0:
        return 0
    return int(rng.poisson(mean))


def simulate_with_means(model: TrueModel):
    """Draw a series from the recursion; returns ``(y, u)``.

    ``u`` is computed with exactly the arithmetic of
    :func:`robustpois.model.forward_means`, so re-running the forward model on
    the returned ``y`` reproduces it bit for bit.
    """
    rng = make_rng(model.seed)
    params = model.params
    n = model.N
    ly = np.zeros(n)
    ell = np.zeros(n)
    y = np.zeros(n)
    u = np.zeros(n)
    for i in range(n):
        vi = _predict_at(params.a0, params.a, params.b, ly, ell, i)
        ell[i] = vi if vi > 0.0 else 0.0
        u[i] = np.expm1(ell[i])
        y[i] = poisson_sample(u[i], rng)
        ly[i] = np.log1p(y[i])
    return y, u


def simulate(model: TrueModel, p=None, q=None) -> np.ndarray:
    """Series of Poisson counts from ``model`` (as floats)."""
    if p is not None and p != model.params.p or q is not None and q != model.params.q:
        raise ValueError("orders do not match the true parameters")
    return simulate_with_means(model)[0]


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def inject_missing(y, spec: CorruptionSpec, rng: np.random.Generator) -> ObservationSet:
    """Observe a uniformly random subset of ``round(fraction * N)`` indices."""
    y = np.asarray(y, dtype=float)
    n = y.size
    k = max(1, _round_half_up(spec.observed_fraction * n))
    mask = np.zeros(n, dtype=bool)
    if k == n:
        mask[:] = True
    else:
        mask[rng.choice(n, size=k, replace=False)] = True
    return ObservationSet(mask, y[mask])


def inject_outliers(obs: ObservationSet, spec: CorruptionSpec, rng: np.random.Generator):
    """Overwrite ``round(fraction * |D|)`` observed entries with the outlier value.

    Returns
    -------
    obs : ObservationSet
        Contaminated copy.
    contaminated : ndarray of int
        Sorted series indices that were overwritten (a subset of ``D``).
    """
    n_obs = obs.values.size
    k = _round_half_up(spec.contamination_fraction * n_obs)
    if k == 0:
        return obs, np.zeros(0, dtype=int)
    pick = np.sort(rng.choice(n_obs, size=k, replace=False))
    values = obs.values.copy()
    values[pick] = spec.outlier_value
    return ObservationSet(obs.mask, values), obs.indices[pick]


@dataclass
class RunData:
    """Everything drawn for one run: clean series, means and corrupted view."""

    y: np.ndarray
    u: np.ndarray
    obs: ObservationSet
    contaminated: np.ndarray


def generate_run(index, model: TrueModel, spec: CorruptionSpec) -> RunData:
    """Data of run ``index``: simulate from ``(model.seed, index, 0)``, then
    drop and contaminate entries from ``(spec.seed, index, 1)``."""
    run_model = TrueModel(model.params, model.N, derive_seed(model.seed, index, 0))
    y, u = simulate_with_means(run_model)
    rng = make_rng(derive_seed(spec.seed, index, 1))
    obs = inject_missing(y, spec, rng)
    obs, contaminated = inject_outliers(obs, spec, rng)
    return RunData(y, u, obs, contaminated)


@dataclass
class RunResult:
    index: int
    estimate: np.ndarray | None
    iterations: int = 0
    converged: bool = False
    objective: float = float("nan")
    error: str | None = None


@dataclass
class ExperimentSummary:
    """Per-run estimates with box-plot statistics per coefficient."""

    names: list
    truth: np.ndarray
    estimates: np.ndarray  # (M, n_coef), NaN rows for failed runs
    iterations: np.ndarray
    converged: np.ndarray
    objectives: np.ndarray
    failures: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.estimates.shape[0]

    @property
    def ok(self) -> np.ndarray:
        return np.all(np.isfinite(self.estimates), axis=1)

    def stats(self) -> dict:
        good = self.estimates[self.ok]
        out = {}
        for j, name in enumerate(self.names):
            col = good[:, j]
            if col.size == 0:
                out[name] = None
                continue
            q1, med, q3 = np.percentile(col, [25, 50, 75])
            out[name] = {
                "true": float(self.truth[j]),
                "min": float(col.min()),
                "q1": float(q1),
                "median": float(med),
                "q3": float(q3),
                "max": float(col.max()),
            }
        return out

    def median(self) -> np.ndarray:
        return np.median(self.estimates[self.ok], axis=0)

    def abs_errors(self) -> np.ndarray:
        return np.abs(self.estimates[self.ok] - self.truth)

    def run_errors(self) -> np.ndarray:
        """Euclidean distance of each successful run's estimate to the truth."""
        return np.linalg.norm(self.estimates[self.ok] - self.truth, axis=1)


def _truth_vector(params: ModelParams, p, q):
    truth = np.zeros(1 + p + q)
    truth[0] = params.a0
    na = min(p, params.p)
    truth[1 : 1 + na] = params.a[:na]
    nb = min(q, params.q)
    truth[1 + p : 1 + p + nb] = params.b[:nb]
    return truth


def run_single(
    index,
    model: TrueModel,
    spec: CorruptionSpec,
    hyper: HyperParams,
    solver="hybrid",
    init=None,
):
    """One simulate, corrupt and fit pipeline; errors are captured, not raised.

    ``init`` names a starting rule from :data:`robustpois.solvers.INITS`.
    """
    data = generate_run(index, model, spec)
    obs = data.obs
    try:
        rep = fit(obs, hyper, solver, init=init)
    except Exception as exc:  # recorded per run
        return RunResult(index, None, error=f"{type(exc).__name__}: {exc}")
    return RunResult(index, rep.params.to_vector(), rep.iterations, rep.converged, rep.objective)


def _run_star(args):
    return run_single(*args)


def run_experiment(
    model: TrueModel,
    spec: CorruptionSpec,
    hyper: HyperParams,
    M: int,
    solver="hybrid",
    workers=1,
    init=None,
) -> ExperimentSummary:
    """``M`` independent recovery runs.

    Run ``i`` depends only on ``(model.seed, spec.seed, i)``; ``workers > 1``
    spreads runs over processes without changing any result.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    jobs = [(i, model, spec, hyper, solver, init) for i in range(M)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_star, jobs))
    else:
        results = [_run_star(j) for j in jobs]

    n_coef = 1 + hyper.p + hyper.q
    est = np.full((M, n_coef), np.nan)
    iters = np.zeros(M, dtype=int)
    conv = np.zeros(M, dtype=bool)
    objs = np.full(M, np.nan)
    failures = {}
    for res in sorted(results, key=lambda r: r.index):
        if res.error is not None:
            failures[res.index] = res.error
            continue
        est[res.index] = res.estimate
        iters[res.index] = res.iterations
        conv[res.index] = res.converged
        objs[res.index] = res.objective
    return ExperimentSummary(
        names=ModelParams.names(hyper.p, hyper.q),
        truth=_truth_vector(model.params, hyper.p, hyper.q),
        estimates=est,
        iterations=iters,
        converged=conv,
        objectives=objs,
        failures=failures,
    )
