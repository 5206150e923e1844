"""Overparameterised fit with p=15 under an s=0.75 coefficient penalty.

Only the first six lags are active in the truth; the rest should shrink to 0.
"""

from _common import experiment, parser

args = parser(__doc__.splitlines()[0]).parse_args()
experiment(
    "sparsity_p15",
    {"p": 15, "lambda": 5, "mu": 10, "s": 0.75, "observed_fraction": 0.75, "contamination_fraction": 0.025},
    args,
)
