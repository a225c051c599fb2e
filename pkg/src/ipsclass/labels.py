"""Label enumerations shared by the classifiers, fusion and I/O.

Label arrays are stored as ``int8`` numpy arrays holding the enum values, so
``labels == MovementLabel.AME`` works directly on them.
"""

from enum import IntEnum

import numpy as np


class MovementLabel(IntEnum):
    BURNIN = 0
    AME = 1
    UAE = 2

    @property
    def text(self) -> str:
        return _MOVEMENT_TEXT[self]

    @classmethod
    def parse(cls, text: str) -> "MovementLabel":
        try:
            return _MOVEMENT_FROM_TEXT[text.strip()]
        except KeyError:
            raise ValueError(f"unknown movement label {text!r}") from None


class FusedClass(IntEnum):
    UNFUSED = 0
    CLASS1 = 1
    CLASS2 = 2
    CLASS3 = 3
    CLASS4 = 4

    @property
    def text(self) -> str:
        return "unfused" if self is FusedClass.UNFUSED else str(int(self))

    @classmethod
    def parse(cls, text: str) -> "FusedClass":
        text = text.strip()
        if text == "unfused":
            return cls.UNFUSED
        try:
            value = int(text)
        except ValueError:
            raise ValueError(f"unknown fused class {text!r}") from None
        if not 1 <= value <= 4:
            raise ValueError(f"unknown fused class {text!r}")
        return cls(value)


_MOVEMENT_TEXT = {
    MovementLabel.BURNIN: "Burnin",
    MovementLabel.AME: "AME",
    MovementLabel.UAE: "UAE",
}
_MOVEMENT_FROM_TEXT = {v: k for k, v in _MOVEMENT_TEXT.items()}

LABEL_DTYPE = np.int8
