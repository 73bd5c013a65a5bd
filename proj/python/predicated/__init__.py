from ._core import (
    AttentionStack,
    Error,
    Evaluation,
    LossGraph,
    Proposition,
    __version__,
    ablate,
    argmax_pixel_count,
    compile,
    containment,
    crisp_oracle,
    extract,
    normalize_map,
    parse,
    read_amap,
    simulate,
    write_amap,
)
from . import _core as errors  # errors.SyntaxError, errors.BoundaryInput, ...

__all__ = [
    "AttentionStack",
    "Error",
    "Evaluation",
    "LossGraph",
    "Proposition",
    "__version__",
    "ablate",
    "argmax_pixel_count",
    "compile",
    "containment",
    "crisp_oracle",
    "errors",
    "extract",
    "normalize_map",
    "parse",
    "read_amap",
    "simulate",
    "write_amap",
]
