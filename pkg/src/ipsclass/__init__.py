"""Unsupervised movement detection for indoor positioning event streams.

Events are labelled as actual movements (AME) or undesired awakenings (UAE)
by a distance criterion and a time criterion, the two labels are crossed into
four classes, and the classes are aggregated onto a planar grid map.
"""

from .labels import FusedClass, MovementLabel
from .events import (
    DeviceStream,
    EmptyInput,
    EventLog,
    IngestError,
    NonFiniteCoordinate,
    PositionEvent,
    UnparseableRecord,
    ingest,
    read_log,
    validate,
    write_log,
)
from .distance import DistanceParams, SlidingMscw, classify_distance, euclidean_distance, mscw
from .timing import TimeParams, classify_time, time_diffs
from .grid import GridMap, GridSpec, build_grid, cell_of, fuse, fuse_labels, render_map
from .pipeline import ClassifiedLog, classify_log
from .tuning import DiagnosticSeries, mscw_series, render_bars, timediff_series

__all__ = [
    "ClassifiedLog",
    "DeviceStream",
    "DiagnosticSeries",
    "DistanceParams",
    "EmptyInput",
    "EventLog",
    "FusedClass",
    "GridMap",
    "GridSpec",
    "IngestError",
    "MovementLabel",
    "NonFiniteCoordinate",
    "PositionEvent",
    "SlidingMscw",
    "TimeParams",
    "UnparseableRecord",
    "build_grid",
    "cell_of",
    "classify_distance",
    "classify_log",
    "classify_time",
    "euclidean_distance",
    "fuse",
    "fuse_labels",
    "ingest",
    "mscw",
    "mscw_series",
    "read_log",
    "render_bars",
    "render_map",
    "time_diffs",
    "timediff_series",
    "validate",
    "write_log",
]
