"""Interpreter for MiniFort with a configurable floating-point environment."""
from driftlens.interp.env import (
    PRESETS, AssocOrder, FPEnvironment, Mode, Precision, RunConfig, ShortCircuit, UninitFill,
)
from driftlens.interp.machine import Interpreter, RunSummary, run

__all__ = ["PRESETS", "AssocOrder", "FPEnvironment", "Interpreter", "Mode", "Precision",
           "RunConfig", "RunSummary", "ShortCircuit", "UninitFill", "run"]
