"""Hierarchical in-context reinforcement learning for text agents."""

from __future__ import annotations

from .core import Episode, Goal, LongTermMemory, Reflection, Step, Tag, Trajectory
from .engine import RunConfig, run_episode

__version__ = "0.1.0"

__all__ = ["Episode", "Goal", "LongTermMemory", "Reflection", "RunConfig", "Step", "Tag", "Trajectory",
           "run_episode", "__version__"]
