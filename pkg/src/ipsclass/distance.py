"""Distance criterion: maximum sliding-count-window distance (mscw).

For event i (1-based) with i > k, ``mscw_i = max_{p=1..k} d(u_i, u_{i-p})``
with d the 3-D Euclidean distance. An event is AME when ``mscw_i > r``
(strict), UAE otherwise. The first k events of a device are burn-in.

Two code paths compute mscw and they agree bit for bit, because both
evaluate ``sqrt((dx*dx + dy*dy) + dz*dz)`` in the same order:

* :func:`mscw` vectorizes over the stream, one shifted difference per lag.
* :class:`SlidingMscw` consumes one position at a time through a ring
  buffer of the last k positions, for incremental use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .events import DeviceStream
from .labels import LABEL_DTYPE, MovementLabel


@dataclass(frozen=True)
class DistanceParams:
    k: int = 10
    r: float = 1.5

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError(f"window width k must be an integer >= 1, got {self.k!r}")
        if not math.isfinite(self.r) or self.r < 0:
            raise ValueError(f"radius r must be finite and >= 0, got {self.r!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "r", float(self.r))


def euclidean_distance(a, b) -> float:
    dx = float(a[0]) - float(b[0])
    dy = float(a[1]) - float(b[1])
    dz = float(a[2]) - float(b[2])
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def _positions(stream) -> np.ndarray:
    pos = stream.pos if isinstance(stream, DeviceStream) else np.asarray(stream, dtype=np.float64)
    return pos.reshape(-1, 3)


def mscw(stream: DeviceStream | np.ndarray, k: int) -> np.ndarray:
    """mscw values for events k+1..n, as a float64 array of length max(n-k, 0).

    Value ``j`` of the result belongs to the event with ``seq = k + 1 + j``.
    Accepts a :class:`DeviceStream` or an (n, 3) position array.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    pos = _positions(stream)
    n = len(pos)
    if n <= k:
        return np.empty(0, dtype=np.float64)
    head = pos[k:]
    out = np.zeros(n - k, dtype=np.float64)
    for p in range(1, k + 1):
        diff = head - pos[k - p : n - p]
        dx, dy, dz = diff[:, 0], diff[:, 1], diff[:, 2]
        d = np.sqrt(dx * dx + dy * dy + dz * dz)
        np.maximum(out, d, out=out)
    return out


class SlidingMscw:
    """Incremental mscw over a fixed-size ring buffer of the last k positions.

    >>> w = SlidingMscw(2)
    >>> [w.push(p) for p in [(0, 0, 0), (1, 0, 0), (3, 0, 0)]]
    [None, None, 3.0]
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self._buf = [(0.0, 0.0, 0.0)] * k
        self._head = 0
        self._seen = 0

    def push(self, pos) -> float | None:
        """Add a position; return its mscw, or None while still in burn-in."""
        x, y, z = float(pos[0]), float(pos[1]), float(pos[2])
        result = None
        if self._seen >= self.k:
            best = 0.0
            for bx, by, bz in self._buf:
                dx, dy, dz = x - bx, y - by, z - bz
                d = math.sqrt(dx * dx + dy * dy + dz * dz)
                if d > best:
                    best = d
            result = best
        self._buf[self._head] = (x, y, z)
        self._head = (self._head + 1) % self.k
        self._seen += 1
        return result

    def reset(self) -> None:
        self._head = 0
        self._seen = 0


def labels_from_mscw(values: np.ndarray, n: int, r: float) -> np.ndarray:
    labels = np.full(n, MovementLabel.BURNIN, dtype=LABEL_DTYPE)
    if len(values):
        labels[n - len(values) :] = np.where(values > r, MovementLabel.AME, MovementLabel.UAE)
    return labels


def classify_distance(stream: DeviceStream | np.ndarray, params: DistanceParams) -> np.ndarray:
    """Per-event :class:`MovementLabel` codes, length n; the first k are burn-in."""
    pos = _positions(stream)
    return labels_from_mscw(mscw(pos, params.k), len(pos), params.r)
