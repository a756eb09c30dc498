"""Risk-aware planning by backpropagation through reparameterized rollouts.

Plans (open-loop action sequences) and reactive policies are trained by
gradient ascent on a risk-sensitive utility of sampled returns. The
gradients come from a small reverse-mode tape in :mod:`riskplan.autodiff`.
"""

from .domains import Hvac, Navigation, Reservoir, make_domain, sample_scenario
from .evaluation import compare_variance, evaluate, summarize
from .objectives import UtilityConfig, UtilityKind, exact_entropic_utility, mean_variance_utility
from .planners import Plan, PolicyParams, init_policy, slp_utility_bound_check, train, train_fresh, zero_plan

__version__ = "0.1.0"

__all__ = [
    "Hvac", "Navigation", "Plan", "PolicyParams", "Reservoir", "UtilityConfig", "UtilityKind",
    "compare_variance", "evaluate", "exact_entropic_utility", "init_policy", "make_domain",
    "mean_variance_utility", "sample_scenario", "slp_utility_bound_check", "summarize", "train",
    "train_fresh", "zero_plan",
]
