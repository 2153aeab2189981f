"""Headless endless-runner simulator with procedural terrain, obstacle placement,
corridor-scanning evaluators, blockage reports and evaluation metrics."""
from .config import InvalidConfig, RunConfig, load_config
from .engine import SimEvent, WorldState, new_run, run, run_to_completion, step

__all__ = ["InvalidConfig", "RunConfig", "load_config", "SimEvent", "WorldState", "new_run", "run",
           "run_to_completion", "step"]
__version__ = "0.1.0"
