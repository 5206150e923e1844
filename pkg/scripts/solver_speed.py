"""PALM against the extrapolated hybrid on the reference corruption setting.

75% of entries observed, 2.5% of those replaced by 20; lambda=5, mu=30.
PALM runs at tau=1e-4, the hybrid at tau=1e-5.
"""

from _common import experiment, parser

args = parser(__doc__.splitlines()[0]).parse_args()
setting = {"lambda": 5, "mu": 30, "observed_fraction": 0.75, "contamination_fraction": 0.025}
palm = experiment("speed_palm", {**setting, "solver": "palm", "tau": 1e-4, "divergence_tol": "inf"}, args)
hybrid = experiment("speed_hybrid", setting, args)
ratio = hybrid["iterations"]["mean"] / palm["iterations"]["mean"]
print(f"hybrid / PALM mean iterations: {ratio:.3f}")
