"""shapegate: learned input-validity pre-filtering for operator-level fuzzing.

Generates execution-labeled datasets of operator argument tuples (tensors
abstracted to their shapes), trains tree-ensemble classifiers on them, and
uses the classifiers as a batch-inference pre-filter in fuzzing campaigns.
"""

from shapegate.values import (
    MAX_ARITY,
    MAX_RANK,
    BoolV,
    FloatV,
    IntV,
    ParamSpace,
    ParamSpec,
    Shape,
    StrV,
    TensorListV,
    TensorV,
    broadcastable,
    conforms,
    numel,
)

__version__ = "0.1.0"

__all__ = [
    "MAX_ARITY",
    "MAX_RANK",
    "BoolV",
    "FloatV",
    "IntV",
    "ParamSpace",
    "ParamSpec",
    "Shape",
    "StrV",
    "TensorListV",
    "TensorV",
    "broadcastable",
    "conforms",
    "numel",
]
