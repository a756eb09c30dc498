"""Risk-neutral vs risk-averse plans and policies on the navigation grid.

The straight line to the goal crosses a high-noise zone. A risk-averse
objective pays some expected distance to skirt it. Small settings keep the
run to a couple of minutes; the acceptance suite uses the desk-scale ones.
"""

import sys

import numpy as np

from riskplan import evaluation as ev
from riskplan.domains import make_domain
from riskplan.objectives import UtilityConfig
from riskplan.planners import train_fresh

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 150
domain = make_domain("navigation")
settings = {"slp": dict(lr=0.5, batch=512), "drp": dict(lr=2.5e-4, batch=512)}

results = {}
for method in ("slp", "drp"):
    for beta in (0.0, -1000.0):
        rep, trace = train_fresh(method, domain, UtilityConfig.for_beta(beta), epochs=epochs, seed=1,
                                 **settings[method])
        samples, dump = ev.evaluate(rep, domain, 2000, 99)
        results[method, beta] = samples
        zone = ev.zone_entry_fraction(domain, dump)
        print(f"{method} beta={beta:g}: mean {samples.returns.mean():8.2f}  var {samples.returns.var():8.3f}"
              f"  zone entry {zone:.3f}  final position {np.round(dump.states[:, -1].mean(0), 2)}")

for method in ("slp", "drp"):
    cmp = ev.compare_variance(results[method, -1000.0], results[method, 0.0], resamples=2000)
    print(f"{method}: risk-averse minus risk-neutral variance CI "
          f"[{cmp.variance_diff.low:.3f}, {cmp.variance_diff.high:.3f}] -> {cmp.verdict}")
