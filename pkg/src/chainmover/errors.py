"""Exception types shared across the package."""


class ChainMoverError(Exception):
    """Base class for package errors."""


class SimDivergedError(ChainMoverError):
    """Simulation state became non-finite ("sim-diverged")."""


class NoContactError(ChainMoverError):
    """Grasp attach requested with the end-effector too far from the object."""


class DegenerateChainError(ChainMoverError):
    """Consecutive chain keypoints coincide; no unit segment exists."""


class ChainShapeMismatchError(ChainMoverError):
    """Chains have different node counts and no fallback is configured."""


class DemoParseError(ChainMoverError):
    """A demonstration file violates the documented schema."""

    def __init__(self, path: str, frame: int, field: str, message: str):
        super().__init__(f"{path}: frame {frame}, field {field!r}: {message}")
        self.path = path
        self.frame = frame
        self.field = field


class DemoKinematicsError(ChainMoverError):
    """Stored object twist disagrees with finite-differenced object poses."""


class EmptyDemoIndexError(ChainMoverError):
    """No contact frames are available to match against."""


class GraphRosterError(ChainMoverError):
    """A keypoint required by the interaction-graph edge roster is missing."""


class ShapeError(ChainMoverError):
    """Network input dimension does not match the declared observation size."""


class TrainingDivergedError(ChainMoverError):
    """Optimization produced a non-finite loss; the run halts, checkpoints kept."""


class SeriesMismatchError(ChainMoverError):
    """Rollout and reference series have different lengths."""


class UnknownCommandError(ChainMoverError):
    """Cookbook entry name not found."""


class LogVersionError(ChainMoverError):
    """Session log schema version does not match this build."""
