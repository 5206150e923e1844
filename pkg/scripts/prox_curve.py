"""Energy, g and shrinkage curves for the scalar proximal map.

Anchor t'=5 with weights at 1/4, 1 and 2 times the critical weight, plus
the shrinkage map against t' for r in {0, 1/2, 1}.
"""

import argparse

from _common import run

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--out", default="results")
args = ap.parse_args()
args.seed = 0
run(
    "prox-curve",
    "prox_curve",
    {
        "prox_t_prime": 5,
        "prox_t_min": -6,
        "prox_t_max": 6,
        "prox_t_step": 0.01,
        "prox_r": (0, 0.5, 1),
        "prox_mu": (1, 2),
        "prox_mu_rel": (0.25, 1, 2),
    },
    args,
)
