"""Computing-environment knobs and run configuration."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from driftlens.runtime import SimilarityPolicy


class AssocOrder(enum.Enum):
    LEFT_TO_RIGHT = "left"
    RIGHT_TO_LEFT = "right"
    PAIRWISE = "pairwise"


class Precision(enum.Enum):
    STORAGE = "storage"
    EXTENDED = "extended"


class ShortCircuit(enum.Enum):
    AS_WRITTEN = "aswritten"
    REVERSED = "reversed"


@dataclass(frozen=True)
class UninitFill:
    """How never-assigned storage is filled: ``zero``, ``space`` or ``seeded``."""
    mode: str = "zero"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("zero", "space", "seeded"):
            raise ValueError(f"unknown fill mode {self.mode!r}")

    def __str__(self) -> str:
        return f"seeded:{self.seed}" if self.mode == "seeded" else self.mode

    @classmethod
    def parse(cls, text: str) -> "UninitFill":
        text = text.strip().lower()
        if text.startswith("seeded"):
            _, _, seed = text.partition(":")
            return cls("seeded", int(seed) if seed else 0)
        return cls(text)


ZERO = UninitFill("zero")
SPACE = UninitFill("space")


@dataclass(frozen=True)
class FPEnvironment:
    assoc_order: AssocOrder = AssocOrder.LEFT_TO_RIGHT
    precision: Precision = Precision.STORAGE
    shortcircuit_order: ShortCircuit = ShortCircuit.AS_WRITTEN
    uninit_fill: UninitFill = ZERO

    def __str__(self) -> str:
        return (f"{self.assoc_order.value},{self.precision.value},"
                f"{self.shortcircuit_order.value},{self.uninit_fill}")

    @classmethod
    def parse(cls, text: str) -> "FPEnvironment":
        """Parse ``assoc,precision,shortcircuit,uninit``, e.g. ``left,storage,aswritten,space``."""
        parts = [p.strip().lower() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"environment needs 4 comma-separated fields, got {text!r}")
        try:
            return cls(AssocOrder(parts[0]), Precision(parts[1]), ShortCircuit(parts[2]),
                       UninitFill.parse(parts[3]))
        except ValueError as exc:
            raise ValueError(f"bad environment {text!r}: {exc}") from None


PRESETS = {
    "A": FPEnvironment(AssocOrder.LEFT_TO_RIGHT, Precision.STORAGE,
                       ShortCircuit.AS_WRITTEN, SPACE),
    "B": FPEnvironment(AssocOrder.PAIRWISE, Precision.EXTENDED,
                       ShortCircuit.REVERSED, UninitFill("seeded", 1)),
}


class Mode(enum.Enum):
    PLAIN = "plain"
    CAPTURE = "capture"
    COMPARE = "compare"


@dataclass
class RunConfig:
    mode: Mode = Mode.PLAIN
    trace_path: Optional[Path] = None
    policy: SimilarityPolicy = field(default_factory=SimilarityPolicy)
    env: FPEnvironment = field(default_factory=FPEnvironment)
    entry: Optional[str] = None
    max_records: Optional[int] = None
    shadow_path: Optional[Path] = None  # compare mode: also capture post-overwrite values

    def __post_init__(self):
        if self.mode is not Mode.PLAIN and self.trace_path is None:
            raise ValueError(f"{self.mode.value} mode needs a trace path")
        if self.mode is Mode.COMPARE and not Path(self.trace_path).is_file():
            raise FileNotFoundError(f"reference trace {self.trace_path} does not exist")
        if self.max_records is not None and self.max_records < 0:
            raise ValueError("max_records must be non-negative")
