"""Flat ``key = value`` run configuration.

Format
------
One setting per line, ``#`` starts a comment, blank lines are ignored.
Lists are comma separated.  Every key may appear at most once.

==========================  ========  ==========================  ==============
key                         type      accepted range              default
==========================  ========  ==========================  ==============
p, q                        int       >= 0                        required*
lambda                      float     > 0                         required*
mu                          float     >= 0                        required*
r, s                        float     (0, 1]                      0.5, 1
tau                         float     > 0                         1e-4
tau_y                       float     > 0                         = tau
eps                         float     > 0                         1e-6
max_iters                   int       >= 1                        50000
divergence_tol              float     > 0 (``inf`` allowed)       1e-6
solver                      str       fista, palm, hybrid         hybrid
init                        str       observed, mean              observed
N                           int       >= 1                        1000
a0_true                     float     finite                      1.0
a_true, b_true              list      finite                      reference set, empty
observed_fraction           float     (0, 1]                      1.0
contamination_fraction      float     [0, 1)                      0.0
outlier_value               float     >= 0                        20
M                           int       >= 1                        100
seed                        int       [0, 2**64)                  0
workers                     int       >= 1                        1
input                       path      existing CSV (fit)          none
prox_t_prime                float     any                         5
prox_t_min, prox_t_max      float     min < max                   -6, 6
prox_t_step                 float     > 0                         0.01
prox_r                      list      [0, 1]                      0, 0.5, 1
prox_mu                     list      >= 0                        1
prox_mu_rel                 list      >= 0                        0.25, 1, 2
==========================  ========  ==========================  ==============

(*) needed by ``fit``, ``simulate`` and ``experiment``; ``prox-curve`` runs
without them.  ``prox_mu_rel`` entries are multiples of the critical weight
of each anchor and apply to ``0 < r < 1`` only.  A relative ``input`` path
is resolved against the directory of the config file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..model import HyperParams, ModelParams
from ..sim import REFERENCE_A, REFERENCE_A0, CorruptionSpec, TrueModel
from ..solvers import INITS, SOLVERS

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config"]


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


def _f(text):
    return float(text)


def _i(text):
    v = float(text)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _flist(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in text.split(","))


def _s(text):
    return text.strip()


def _finite(x):
    return math.isfinite(x)


def _all_finite(xs):
    return all(math.isfinite(x) for x in xs)


# key -> (attribute, parser, check, description of accepted range)
_KEYS = {
    "p": ("p", _i, lambda v: v >= 0, "integers >= 0"),
    "q": ("q", _i, lambda v: v >= 0, "integers >= 0"),
    "lambda": ("lam", _f, lambda v: v > 0, "(0, inf)"),
    "mu": ("mu", _f, lambda v: v >= 0, "[0, inf)"),
    "r": ("r", _f, lambda v: 0 < v <= 1, "(0, 1]"),
    "s": ("s", _f, lambda v: 0 < v <= 1, "(0, 1]"),
    "tau": ("tau", _f, lambda v: 0 < v < math.inf, "(0, inf)"),
    "tau_y": ("tau_y", _f, lambda v: 0 < v < math.inf, "(0, inf)"),
    "eps": ("eps", _f, lambda v: 0 < v < math.inf, "(0, inf)"),
    "max_iters": ("max_iters", _i, lambda v: v >= 1, "integers >= 1"),
    "divergence_tol": ("divergence_tol", _f, lambda v: v > 0, "(0, inf]"),
    "solver": ("solver", _s, lambda v: v in SOLVERS, ", ".join(SOLVERS)),
    "init": ("init", _s, lambda v: v in INITS, ", ".join(INITS)),
    "N": ("N", _i, lambda v: v >= 1, "integers >= 1"),
    "a0_true": ("a0_true", _f, _finite, "finite reals"),
    "a_true": ("a_true", _flist, _all_finite, "comma-separated finite reals"),
    "b_true": ("b_true", _flist, _all_finite, "comma-separated finite reals"),
    "observed_fraction": ("observed_fraction", _f, lambda v: 0 < v <= 1, "(0, 1]"),
    "contamination_fraction": ("contamination_fraction", _f, lambda v: 0 <= v < 1, "[0, 1)"),
    "outlier_value": ("outlier_value", _f, lambda v: 0 <= v < math.inf, "[0, inf)"),
    "M": ("M", _i, lambda v: v >= 1, "integers >= 1"),
    "seed": ("seed", _i, lambda v: 0 <= v < 2**64, "integers in [0, 2**64)"),
    "workers": ("workers", _i, lambda v: v >= 1, "integers >= 1"),
    "input": ("input", _s, lambda v: bool(v), "a file path"),
    "prox_t_prime": ("prox_t_prime", _f, _finite, "finite reals"),
    "prox_t_min": ("prox_t_min", _f, _finite, "finite reals"),
    "prox_t_max": ("prox_t_max", _f, _finite, "finite reals"),
    "prox_t_step": ("prox_t_step", _f, lambda v: 0 < v < math.inf, "(0, inf)"),
    "prox_r": ("prox_r", _flist, lambda v: bool(v) and all(0 <= x <= 1 for x in v), "values in [0, 1]"),
    "prox_mu": ("prox_mu", _flist, lambda v: all(0 <= x < math.inf for x in v), "values in [0, inf)"),
    "prox_mu_rel": ("prox_mu_rel", _flist, lambda v: all(0 <= x < math.inf for x in v), "values in [0, inf)"),
}

_REQUIRED_FOR_MODEL = ("p", "q", "lambda", "mu")


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for every subcommand; see the module docstring."""

    p: int | None = None
    q: int | None = None
    lam: float | None = None
    mu: float | None = None
    r: float = 0.5
    s: float = 1.0
    tau: float = 1e-4
    tau_y: float | None = None
    eps: float = 1e-6
    max_iters: int = 50_000
    divergence_tol: float = 1e-6
    solver: str = "hybrid"
    init: str = "observed"
    N: int = 1000
    a0_true: float = REFERENCE_A0
    a_true: tuple = REFERENCE_A
    b_true: tuple = ()
    observed_fraction: float = 1.0
    contamination_fraction: float = 0.0
    outlier_value: float = 20.0
    M: int = 100
    seed: int = 0
    workers: int = 1
    input: str | None = None
    prox_t_prime: float = 5.0
    prox_t_min: float = -6.0
    prox_t_max: float = 6.0
    prox_t_step: float = 0.01
    prox_r: tuple = (0.0, 0.5, 1.0)
    prox_mu: tuple = (1.0,)
    prox_mu_rel: tuple = (0.25, 1.0, 2.0)
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def _require(self):
        attrs = {k: _KEYS[k][0] for k in _REQUIRED_FOR_MODEL}
        missing = [k for k, a in attrs.items() if getattr(self, a) is None]
        if missing:
            raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    def hyper(self) -> HyperParams:
        self._require()
        return HyperParams(
            p=self.p,
            q=self.q,
            lam=self.lam,
            mu=self.mu,
            r=self.r,
            s=self.s,
            tau=self.tau,
            eps=self.eps,
            max_iters=self.max_iters,
            tau_y=self.tau_y,
            divergence_tol=self.divergence_tol,
        )

    def true_model(self) -> TrueModel:
        return TrueModel(ModelParams(self.a0_true, self.a_true, self.b_true), self.N, self.seed)

    def corruption(self) -> CorruptionSpec:
        return CorruptionSpec(
            self.observed_fraction, self.contamination_fraction, self.outlier_value, self.seed
        )

    def with_seed(self, seed) -> "RunConfig":
        if not 0 <= seed < 2**64:
            raise ConfigError(f"seed={seed} outside accepted range [0, 2**64)")
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values["seed"] = int(seed)
        return RunConfig(**values)

    def as_dict(self) -> dict:
        """Settings in config-key spelling, for echoing into reports."""
        out = {}
        for key, (attr, *_rest) in _KEYS.items():
            v = getattr(self, attr)
            out[key] = list(v) if isinstance(v, tuple) else v
        return out


def parse_config(text: str, base_dir=None) -> RunConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ConfigError
        Naming the line, the key and the accepted range.
    """
    values = {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r}; known keys: {', '.join(_KEYS)}"
            )
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        attr, parse, check, accepted = _KEYS[key]
        try:
            parsed = parse(value)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: cannot read {key} = {value!r}; accepted: {accepted}"
            ) from None
        if not check(parsed):
            raise ConfigError(f"line {lineno}: {key} = {value} outside accepted range {accepted}")
        values[attr] = parsed

    if "input" in values and base_dir is not None:
        path = Path(values["input"])
        if not path.is_absolute():
            values["input"] = str(Path(base_dir) / path)
    if "prox_t_min" in seen or "prox_t_max" in seen:
        lo = values.get("prox_t_min", RunConfig.prox_t_min)
        hi = values.get("prox_t_max", RunConfig.prox_t_max)
        if not lo < hi:
            line = seen.get("prox_t_max", seen.get("prox_t_min"))
            raise ConfigError(f"line {line}: prox_t_min must be below prox_t_max ({lo} >= {hi})")
    return RunConfig(**values, lines=seen)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent)
