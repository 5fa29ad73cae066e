"""Planar mobile-manipulation toolkit: a rigid-body simulator of a
velocity-commanded base+arm robot moving heavy friction-bound objects, an
interaction-chain imitation reward with PPO training, comparison reward
schemes, evaluation metrics, a waypoint planner, and a live steering bridge.
"""

from .baselines import MethodId
from .chain import (ChainDistanceConfig, InteractionChain, KeypointSet,
                    aggregate_two_arm, chain_distance, chain_from_human,
                    chain_from_nodes, chain_from_robot)
from .demos import DemoIndex, DemoTrajectory, generate_demos, load_demos, save_demos
from .errors import ChainMoverError
from .evaluation import (capability_search, metric_report, robustness_suite,
                         tracking_score, trajectory_tracking)
from .geometry import Pose2, Twist2
from .planner import CookbookEntry, GoalSpec, heuristic_step, run_planner
from .rewards import RewardConfig, imitation_reward, regularization_reward
from .rl import MoverTaskEnv, PpoConfig, TwoRobotTaskEnv, train, train_two_robot
from .sim import EnvConfig, WorldState, reset, step

__version__ = "0.1.0"

__all__ = [
    "ChainDistanceConfig", "ChainMoverError", "CookbookEntry", "DemoIndex",
    "DemoTrajectory", "EnvConfig", "GoalSpec", "InteractionChain",
    "KeypointSet", "MethodId", "MoverTaskEnv", "Pose2", "PpoConfig",
    "RewardConfig", "Twist2", "TwoRobotTaskEnv", "WorldState",
    "aggregate_two_arm", "capability_search", "chain_distance",
    "chain_from_human", "chain_from_nodes", "chain_from_robot",
    "generate_demos", "heuristic_step", "imitation_reward", "load_demos",
    "metric_report", "regularization_reward", "reset", "robustness_suite",
    "run_planner", "save_demos", "step", "tracking_score",
    "trajectory_tracking", "train", "train_two_robot",
]
