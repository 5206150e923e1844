"""Missing entries and outliers together: 75% observed, 2.5% contaminated."""

from _common import experiment, parser

args = parser(__doc__).parse_args()
experiment(
    "mixed",
    {"lambda": 5, "mu": 30, "observed_fraction": 0.75, "contamination_fraction": 0.025},
    args,
)
