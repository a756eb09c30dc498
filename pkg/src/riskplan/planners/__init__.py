from .bound import BoundReport, sample_utility, slp_utility_bound_check
from .optim import Adam, RMSProp, clip_by_global_norm, global_norm, rmsprop_step
from .policy import DEFAULT_WIDTHS, Plan, PolicyParams, init_policy, initial_plan, mlp_forward, zero_plan
from .rollout import DivergenceError, Trajectory, rollout, rollout_drp, rollout_slp
from .train import TrainingError, TrainTrace, train, train_fresh

__all__ = [
    "Adam", "BoundReport", "DEFAULT_WIDTHS", "DivergenceError", "Plan", "PolicyParams", "RMSProp", "TrainTrace",
    "Trajectory", "TrainingError", "clip_by_global_norm", "global_norm", "init_policy", "initial_plan", "mlp_forward",
    "rmsprop_step", "rollout", "rollout_drp", "rollout_slp", "sample_utility", "slp_utility_bound_check",
    "train", "train_fresh", "zero_plan",
]
