"""Effect of the coefficient penalty at three observation rates.

Pairs (observed fraction, mu): (1.0, 0 vs 10), (0.75, 0 vs 30), (0.5, 0 vs 60).
"""

from _common import experiment, parser

args = parser(__doc__.splitlines()[0]).parse_args()
for frac, mu in ((1.0, 10), (0.75, 30), (0.5, 60)):
    for m in (0, mu):
        experiment(f"missing_{int(frac * 100)}_mu{m}", {"lambda": 5, "mu": m, "observed_fraction": frac}, args)
