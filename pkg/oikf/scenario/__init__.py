"""Synthetic WNA scenarios with outlier injection."""

from oikf.scenario.generate import OutlierSpec, Trajectory, generate
from oikf.scenario.wna import (
    POSITION_INDEX,
    WnaSpec,
    db_to_linear,
    linear_to_db,
    wna_model,
    wna_position_model,
)

__all__ = [
    "POSITION_INDEX",
    "OutlierSpec",
    "Trajectory",
    "WnaSpec",
    "db_to_linear",
    "generate",
    "linear_to_db",
    "wna_model",
    "wna_position_model",
]
