"""Time criterion: elapsed time across k events.

``diff_i = t_i - t_{i-k}`` for i > k; the event is AME when ``diff_i <= b``
and UAE otherwise. Positions are never read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .events import DeviceStream
from .labels import LABEL_DTYPE, MovementLabel


@dataclass(frozen=True)
class TimeParams:
    k: int = 10
    b: float = 15.0

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError(f"lag k must be an integer >= 1, got {self.k!r}")
        if not math.isfinite(self.b) or self.b < 0:
            raise ValueError(f"time threshold b must be finite and >= 0, got {self.b!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "b", float(self.b))


def _timestamps(stream) -> np.ndarray:
    t = stream.t if isinstance(stream, DeviceStream) else np.asarray(stream, dtype=np.float64)
    return t.reshape(-1)


def time_diffs(stream: DeviceStream | np.ndarray, k: int) -> np.ndarray:
    """Lag-k time differences for events k+1..n (empty when n <= k)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    t = _timestamps(stream)
    if len(t) <= k:
        return np.empty(0, dtype=np.float64)
    return t[k:] - t[:-k]


def labels_from_diffs(diffs: np.ndarray, n: int, b: float) -> np.ndarray:
    labels = np.full(n, MovementLabel.BURNIN, dtype=LABEL_DTYPE)
    if len(diffs):
        labels[n - len(diffs) :] = np.where(diffs <= b, MovementLabel.AME, MovementLabel.UAE)
    return labels


def classify_time(stream: DeviceStream | np.ndarray, params: TimeParams) -> np.ndarray:
    t = _timestamps(stream)
    return labels_from_diffs(time_diffs(t, params.k), len(t), params.b)
