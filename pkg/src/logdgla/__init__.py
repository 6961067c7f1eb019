"""Exact truncated models of admissible logarithmic forms and their DGLA structure."""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (
    Character,
    ConfigurationError,
    ModelConfig,
    PreconditionError,
    Truncation,
    ValueModule,
    char_sum,
    format_rational,
    restrict_to_stratum,
    to_rational,
    validate_value_module,
)
from .logforms import LogForm, bracket, dprime, dsecond, dtotal, is_admissible, residue, residue_m

__all__ = [
    "Character",
    "ConfigurationError",
    "LogForm",
    "ModelConfig",
    "PreconditionError",
    "Truncation",
    "ValueModule",
    "__version__",
    "bracket",
    "char_sum",
    "dprime",
    "dsecond",
    "dtotal",
    "format_rational",
    "is_admissible",
    "residue",
    "residue_m",
    "restrict_to_stratum",
    "to_rational",
    "validate_value_module",
]
