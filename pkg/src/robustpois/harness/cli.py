"""Command line entry point: ``fit``, ``simulate``, ``experiment``, ``prox-curve``.

Exit codes: 0 success, 1 input or validation error, 2 non-convergence
(``max_iters`` reached, divergence, or any failed experiment run).

Output files (all under ``--out``)
----------------------------------
fit
    ``report.json``  fitted coefficients, iterations, objective,
    negative log-likelihood (``null`` when undefined), convergence flag.
    ``fitted.csv``  ``t, y_hat, u_hat, observed, y_tilde, residual``;
    ``y_tilde`` and ``residual = y_hat - y_tilde`` are empty off ``D``.
simulate
    ``series.csv``  ``t, y, observed`` (readable by ``fit``).
    ``truth.csv``  ``t, y_clean, u_true, observed, contaminated``.
    ``contamination.csv``  ``t`` of every overwritten entry.
experiment
    ``estimates.csv``  ``run, coefficient, estimate, true, iterations,
    converged, error``, one row per run per coefficient.
    ``summary.json``  box-plot statistics per coefficient and run counts.
prox-curve
    ``energy.csv``  ``t, t_prime, r, mu, mu_rel, energy, g`` over the grid.
    ``shrink.csv``  ``t_prime, r, mu, mu_rel, shrink`` over the grid.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..model import NumericalRangeError, neg_log_likelihood
from ..prox import critical_mu, eval_g, prox_energy, shrink
from ..sim import generate_run, run_experiment
from ..solvers import DivergenceError, fit
from .config import ConfigError, RunConfig, load_config
from .files import SeriesFormatError, read_series_csv, write_csv, write_json, write_series_csv

__all__ = ["main", "cmd_fit", "cmd_simulate", "cmd_experiment", "cmd_prox_curve"]

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _params_dict(params):
    return {"a0": params.a0, "a": params.a, "b": params.b}


def _echo(cfg):
    # worker count changes scheduling only, so it stays out of the outputs
    out = cfg.as_dict()
    del out["workers"]
    return out


def cmd_fit(cfg: RunConfig, out: Path) -> int:
    if cfg.input is None:
        raise ConfigError("fit needs the 'input' key (path to a t,y,observed CSV)")
    hyper = cfg.hyper()
    obs = read_series_csv(cfg.input)
    try:
        rep = fit(obs, hyper, cfg.solver, init=cfg.init)
    except (DivergenceError, NumericalRangeError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_NONCONVERGED
    try:
        nll = neg_log_likelihood(rep.params, rep.y_hat, obs, hyper)
    except ValueError:
        nll = None
    report = {
        "solver": rep.solver,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "objective": rep.objective,
        "neg_log_likelihood": nll,
        "params": _params_dict(rep.params),
        "N": obs.N,
        "observed": int(obs.mask.sum()),
        "config": _echo(cfg),
    }
    report["config"]["input"] = Path(cfg.input).name
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "report.json", report)
    full = obs.full()
    rows = []
    for i in range(obs.N):
        m = bool(obs.mask[i])
        rows.append(
            (
                i + 1,
                rep.y_hat[i],
                rep.u_hat[i],
                m,
                full[i] if m else None,
                rep.y_hat[i] - full[i] if m else None,
            )
        )
    write_csv(out / "fitted.csv", ("t", "y_hat", "u_hat", "observed", "y_tilde", "residual"), rows)
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    """Data of run 0 of the configured experiment."""
    data = generate_run(0, cfg.true_model(), cfg.corruption())
    out.mkdir(parents=True, exist_ok=True)
    write_series_csv(out / "series.csv", data.obs)
    bad = np.zeros(data.y.size, dtype=bool)
    bad[data.contaminated] = True
    write_csv(
        out / "truth.csv",
        ("t", "y_clean", "u_true", "observed", "contaminated"),
        ((i + 1, data.y[i], data.u[i], bool(data.obs.mask[i]), bool(bad[i])) for i in range(data.y.size)),
    )
    write_csv(out / "contamination.csv", ("t",), ((int(i) + 1,) for i in data.contaminated))
    return EXIT_OK


def cmd_experiment(cfg: RunConfig, out: Path) -> int:
    hyper = cfg.hyper()
    summary = run_experiment(
        cfg.true_model(),
        cfg.corruption(),
        hyper,
        cfg.M,
        solver=cfg.solver,
        workers=cfg.workers,
        init=cfg.init,
    )
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for run in range(summary.M):
        err = summary.failures.get(run)
        for j, name in enumerate(summary.names):
            rows.append(
                (
                    run,
                    name,
                    None if err else summary.estimates[run, j],
                    summary.truth[j],
                    None if err else int(summary.iterations[run]),
                    None if err else bool(summary.converged[run]),
                    err,
                )
            )
    write_csv(
        out / "estimates.csv",
        ("run", "coefficient", "estimate", "true", "iterations", "converged", "error"),
        rows,
    )
    ok = summary.ok
    run_err = summary.run_errors()
    doc = {
        "M": summary.M,
        "succeeded": int(ok.sum()),
        "converged": int(summary.converged[ok].sum()),
        "failures": {str(k): v for k, v in sorted(summary.failures.items())},
        "iterations": {
            "mean": float(summary.iterations[ok].mean()) if ok.any() else None,
            "median": float(np.median(summary.iterations[ok])) if ok.any() else None,
        },
        "median_run_error": float(np.median(run_err)) if run_err.size else None,
        "coefficients": summary.stats(),
        "config": _echo(cfg),
    }
    write_json(out / "summary.json", doc)
    if summary.failures or not summary.converged[ok].all():
        return EXIT_NONCONVERGED
    return EXIT_OK


def _grid(cfg):
    n = int(round((cfg.prox_t_max - cfg.prox_t_min) / cfg.prox_t_step))
    return np.linspace(cfg.prox_t_min, cfg.prox_t_max, max(n, 1) + 1)


def _weights(cfg, t_prime, r):
    out = [(mu, None) for mu in cfg.prox_mu]
    if 0 < r < 1 and t_prime != 0:
        mu0 = critical_mu(t_prime, r)
        out += [(rel * mu0, rel) for rel in cfg.prox_mu_rel]
    return out


def cmd_prox_curve(cfg: RunConfig, out: Path) -> int:
    grid = _grid(cfg)
    out.mkdir(parents=True, exist_ok=True)
    tp = cfg.prox_t_prime
    energy_rows = []
    for r in cfg.prox_r:
        for mu, rel in _weights(cfg, tp, r):
            e = prox_energy(grid, tp, mu, r)
            for t, ev in zip(grid, e):
                g = eval_g(t, tp, mu, r) if (0 < r < 1 and t > 0) else None
                energy_rows.append((t, tp, r, mu, rel, ev, g))
    write_csv(out / "energy.csv", ("t", "t_prime", "r", "mu", "mu_rel", "energy", "g"), energy_rows)
    shrink_rows = []
    for r in cfg.prox_r:
        for mu in cfg.prox_mu:
            vals = shrink(grid, mu, r)
            shrink_rows.extend((t, r, mu, None, v) for t, v in zip(grid, vals))
        if 0 < r < 1:
            for rel in cfg.prox_mu_rel:
                for t in grid:
                    mu = rel * critical_mu(t, r) if t != 0 else 0.0
                    shrink_rows.append((t, r, mu, rel, shrink(float(t), mu, r)))
    write_csv(out / "shrink.csv", ("t_prime", "r", "mu", "mu_rel", "shrink"), shrink_rows)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
    "prox-curve": cmd_prox_curve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustpois",
        description="Robust Poisson log-linear autoregression: fitting, simulation and experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).strip().splitlines()[0])
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed (unsigned 64-bit)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        return COMMANDS[args.command](cfg, Path(args.out))
    except (ConfigError, SeriesFormatError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
