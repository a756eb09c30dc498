"""Variance of reservoir returns as the policy grows more risk averse.

Trains one reactive policy per beta on a shared seed and evaluates each on
the same fresh scenarios. Expect variance to fall as beta goes negative,
usually at some cost in mean return.
"""

import sys

from riskplan import evaluation as ev
from riskplan.domains import make_domain

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 60
domain = make_domain("reservoir")
entries = ev.beta_sweep(domain, "drp", [0.0, -10.0, -100.0], seed=1, epochs=epochs, batch=256, lr=5e-3,
                        episodes=2000, eval_seed=99)
for e in entries:
    if e.error:
        print(f"beta {e.beta:g}: failed ({e.error})")
    else:
        print(f"beta {e.beta:>6g}: mean {e.summary.mean:10.1f}  variance {e.summary.variance:12.4g}"
              f"  5% quantile {e.summary.quantiles[5]:10.1f}")
