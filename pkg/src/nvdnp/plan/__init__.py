"""Experiment-plan language, timeline compiler and forward-model executor."""

from .executor import (
    AcquisitionResult, ExecutionPhysics, ExecutionState, Executor, execute_plan,
    physics_for_sample, recovered_amplitude, sweep_mw,
)
from .language import PlanAst, format_plan, parse_plan, tokenize
from .timeline import Event, PlanDefaults, Timeline, compile_timeline

__all__ = [
    "AcquisitionResult", "Event", "ExecutionPhysics", "ExecutionState", "Executor", "PlanAst",
    "PlanDefaults", "Timeline", "compile_timeline", "execute_plan", "format_plan", "parse_plan",
    "physics_for_sample", "recovered_amplitude", "sweep_mw", "tokenize",
]
