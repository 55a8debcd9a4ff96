"""Pinned graph arrangement into the integer lattice or a bounded grid."""

from pinarrange.model import (
    GridSpec,
    Instance,
    InstanceError,
    Placement,
    evaluate_cost,
    validate_instance,
)

__all__ = [
    "GridSpec",
    "Instance",
    "InstanceError",
    "Placement",
    "evaluate_cost",
    "validate_instance",
]

__version__ = "0.1.0"
