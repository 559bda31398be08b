"""Adaptive mid-air ultrasound tacton engine and design tooling.

Layers, lowest first:

- :mod:`adaptics.formula` -- the arithmetic formula language.
- :mod:`adaptics.model` -- the tacton document model and `.adaptics` files.
- :mod:`adaptics.evaluator` -- focal-point sample synthesis.
- :mod:`adaptics.runtime` -- the playback engine and mock device.
- :mod:`adaptics.server` -- the designer WebSocket bridge.
- :mod:`adaptics.api` -- the flat embedding API.
- :mod:`adaptics.cli` -- `adaptics serve | play | eval | bench`.
"""

from .formula import (
    FormulaError,
    eval_formula,
    eval_formula_ex,
    parse_formula,
    referenced_params,
)
from .model import (
    BrushSpec,
    ConditionalJump,
    Formula,
    Keyframe,
    ParamDecl,
    PostProcessing,
    Tacton,
    TactonError,
    TactonParseError,
    TactonValidationError,
    Violation,
    parse_tacton,
    serialize_tacton,
    validate_tacton,
)
from .evaluator import (
    BrushState,
    FocalPointSample,
    PlaybackState,
    IDENTITY_TRANSFORM,
    am_factor,
    brush_offset,
    eval_batch,
    interpolate_state,
    keyframe_segment_at,
    resolve_jumps,
)
from .runtime import (
    CommandRejected,
    Engine,
    MockDevice,
    mock_device_run,
)

__version__ = "0.1.0"
