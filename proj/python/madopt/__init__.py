"""Envelope-constrained setpoint optimization over gas-turbine surrogates."""

from ._core import (
    MadoptError,
    Plant,
    confidence_interval,
    generate,
    mahalanobis,
    shapley_linear,
    variable_names,
)

__all__ = [
    "MadoptError",
    "Plant",
    "confidence_interval",
    "generate",
    "mahalanobis",
    "shapley_linear",
    "variable_names",
]
