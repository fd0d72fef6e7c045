"""Trajectory dataset ingestion and export."""

from oikf.data.ingest import (
    DatasetSchema,
    TrajectoryDataset,
    align_ground_truth,
    export_csv,
    load_csv,
)

__all__ = [
    "DatasetSchema",
    "TrajectoryDataset",
    "align_ground_truth",
    "export_csv",
    "load_csv",
]
