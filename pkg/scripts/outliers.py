"""Residual penalty weight against contamination at value 20, full observation.

lambda=50 effectively forces the fit through every observation; lambda=2
lets the residual penalty absorb the outliers.
"""

from _common import experiment, parser

args = parser(__doc__.splitlines()[0]).parse_args()
for frac in (0.01, 0.05, 0.10):
    for lam in (2, 50):
        experiment(
            f"outliers_{int(frac * 100)}pct_lambda{lam}",
            {"lambda": lam, "mu": 10, "contamination_fraction": frac},
            args,
        )
