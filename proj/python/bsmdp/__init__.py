"""Planning and learning for an energy-harvesting backscatter transmitter.

Policies are ``(num_states, 4)`` arrays with columns in ``ACTIONS`` order;
row ``i`` is the state ``params.state(i)`` = ``(channel, queue, energy)``.
"""

from ._core import (
    ACTIONS,
    LearningError,
    LpError,
    ModelError,
    ModelParams,
    StructureError,
    baseline,
    evaluate,
    simulate,
    solve,
    train,
)

__all__ = [
    "ACTIONS",
    "LearningError",
    "LpError",
    "ModelError",
    "ModelParams",
    "StructureError",
    "baseline",
    "evaluate",
    "simulate",
    "solve",
    "train",
]
__version__ = "0.1.0"
