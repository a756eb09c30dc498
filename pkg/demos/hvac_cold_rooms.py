"""How often rooms drop below the comfort threshold, risk-neutral vs averse.

The cold penalty is a step function of temperature, so a risk-neutral
gradient never sees it. The variance term is what keeps the averse plan warm.
"""

import sys

from riskplan import evaluation as ev
from riskplan.domains import make_domain
from riskplan.objectives import UtilityConfig
from riskplan.planners import train_fresh

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 100
domain = make_domain("hvac")
for beta in (0.0, -40.0):
    plan, _ = train_fresh("slp", domain, UtilityConfig.for_beta(beta), epochs=epochs, batch=128, lr=5e-3, seed=1)
    samples, dump = ev.evaluate(plan, domain, 1000, 99)
    print(f"beta {beta:>5g}: mean {samples.returns.mean():9.1f}  variance {samples.returns.var():11.1f}"
          f"  cold room-steps {ev.cold_fraction(domain, dump):.3f}"
          f"  mean temperature {dump.states.mean():.2f}")
