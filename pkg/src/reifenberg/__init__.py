"""Multiscale flatness of measures: beta numbers, coverings, neck regions
and numerical Reifenberg maps.

``REIF_THREADS`` caps the BLAS thread pool when set before import.
"""

import os as _os

_t = _os.environ.get("REIF_THREADS")
if _t and _t.isdigit() and int(_t) > 0:
    for _v in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_v, _t)

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegeneracyError,
    DegenerateFieldError,
    EmptySliceError,
    InputError,
    InsufficientDataError,
    InternalConsistencyError,
    MisclassificationError,
    ProjectionStallError,
    ReifError,
)
from .geometry import AffineSubspace, Ball  # noqa: E402
from .measure import DiscreteMeasure, read_measure, write_measure  # noqa: E402

__all__ = [
    "AffineSubspace",
    "Ball",
    "DegeneracyError",
    "DegenerateFieldError",
    "DiscreteMeasure",
    "EmptySliceError",
    "InputError",
    "InsufficientDataError",
    "InternalConsistencyError",
    "MisclassificationError",
    "ProjectionStallError",
    "ReifError",
    "read_measure",
    "write_measure",
]
