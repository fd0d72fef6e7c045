"""Experiment specification and its TOML loader.

Example experiment file::

    [wna]
    tau = 1.0
    q_db = -10.0
    r_db = 0.0
    horizon = 2000

    [outliers]
    prob = 0.2
    rayleigh_scale = 30.0

    [oikf]
    max_iters = 10
    gamma_init = "prior_residual"

    [experiment]
    filters = ["kf", "chi2", "oikf-em", "oikf-am"]
    sweep_axis = "r_sq"
    sweep_db = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
    trials = 100
    seed_base = 7
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from oikf.core import LinearGaussianModel, validate_model
from oikf.data import DatasetSchema
from oikf.exceptions import ConfigError
from oikf.filters import Chi2Config, InitConfig, OikfConfig
from oikf.scenario import OutlierSpec, WnaSpec, db_to_linear
from oikf.utils.parsing import load_toml, section, validate_or_raise

__all__ = [
    "BENCH_FILTERS",
    "BenchFilter",
    "SweepAxis",
    "ExperimentSpec",
    "load_experiment",
]

BenchFilter = Literal["kf", "chi2", "oikf-em", "oikf-am", "raw"]
BENCH_FILTERS: tuple[BenchFilter, ...] = ("kf", "chi2", "oikf-em", "oikf-am", "raw")
SweepAxis = Literal["r_sq", "q_sq"]

DEFAULT_SWEEP_DB = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)


class ExperimentSpec(BaseModel):
    """Everything one benchmark run needs.

    Synthetic runs simulate ``wna`` (or the explicit ``model``) with ``outliers`` and sweep
    the true and assumed ``sweep_axis`` value together. Dataset runs (``dataset`` set) keep
    the data fixed and sweep the value the filters assume.
    """

    filters: tuple[BenchFilter, ...] = Field(
        default=("kf", "chi2", "oikf-em", "oikf-am"), min_length=1, description="Filters"
    )
    wna: WnaSpec = Field(default_factory=WnaSpec, description="Scenario / dynamics")
    model: LinearGaussianModel | None = Field(
        default=None, description="Explicit model replacing the WNA one (synthetic runs)"
    )
    outliers: OutlierSpec = Field(default_factory=OutlierSpec, description="Outlier law")
    dataset: Path | None = Field(default=None, description="Dataset CSV (dataset runs)")
    schema_: DatasetSchema | None = Field(
        default=None, alias="schema", description="Dataset column layout"
    )
    sweep_axis: SweepAxis = Field(default="r_sq", description="Swept parameter")
    sweep_db: tuple[float, ...] = Field(
        default=DEFAULT_SWEEP_DB, min_length=1, description="Sweep values in dB"
    )
    trials: int = Field(default=100, ge=1, description="Monte Carlo trials per point")
    seed_base: int = Field(default=0, ge=0, description="Trial i uses seed seed_base + i")
    workers: int | None = Field(default=None, ge=1, description="Worker threads")
    output_dir: Path = Field(default=Path("results"), description="Report directory")
    oikf: OikfConfig = Field(default_factory=OikfConfig)
    chi2: Chi2Config = Field(default_factory=Chi2Config)
    init: InitConfig = Field(default_factory=InitConfig)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, populate_by_name=True)

    @field_validator("filters", mode="before")
    @classmethod
    def _split_filters(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(part.strip().lower() for part in value.split(",") if part.strip())
        return value

    @field_validator("model", mode="after")
    @classmethod
    def _validate_model(cls, value: LinearGaussianModel | None) -> LinearGaussianModel | None:
        return validate_model(value) if value is not None else None

    @property
    def is_dataset(self) -> bool:
        """True when the experiment runs on a loaded dataset."""
        return self.dataset is not None

    @property
    def sweep_values(self) -> tuple[float, ...]:
        """Sweep points in linear units."""
        return tuple(db_to_linear(value) for value in self.sweep_db)


def _wna_table(table: dict[str, Any]) -> dict[str, Any]:
    """Accept ``q_db``/``r_db`` alongside ``q_sq``/``r_sq``."""
    table = dict(table)
    for name in ("q", "r"):
        db_key = f"{name}_db"
        if db_key in table:
            if f"{name}_sq" in table:
                raise ConfigError(f"[wna] sets both {db_key} and {name}_sq")
            table[f"{name}_sq"] = db_to_linear(float(table.pop(db_key)))
    return table


def load_experiment(path: str | Path, **overrides: Any) -> ExperimentSpec:
    """
    Build an :class:`ExperimentSpec` from a TOML file, then apply keyword overrides.

    Sections: ``[wna]``, ``[model]`` (``F``, ``H``, ``Q``, ``R`` as nested arrays),
    ``[outliers]``, ``[oikf]``, ``[chi2]``, ``[init]``, ``[dataset]`` (a
    :class:`DatasetSchema` plus ``path``) and ``[experiment]`` (the remaining fields).
    Overrides replace top-level fields (``trials=10``) or, for nested sections, are merged
    into them when given as dicts (``oikf={"max_iters": 4}``).

    Raises:
        ConfigError: If the file cannot be read or decoded.
        pydantic.ValidationError: If a section does not validate.

    Example:
        >>> spec = load_experiment("sweep_r.toml", trials=25)
    """
    path = Path(path)
    context = str(path)
    data = load_toml(path)
    fields: dict[str, Any] = dict(section(data, "experiment", context=context))

    for name in ("outliers", "oikf", "chi2", "init"):
        table = section(data, name, context=context)
        if table:
            fields[name] = table
    wna = section(data, "wna", context=context)
    if wna:
        fields["wna"] = _wna_table(wna)
    model = section(data, "model", context=context)
    if model:
        fields["model"] = LinearGaussianModel(**model)
    dataset = dict(section(data, "dataset", context=context))
    if dataset:
        data_path = dataset.pop("path", None)
        if data_path is not None:
            resolved = Path(data_path)
            fields["dataset"] = resolved if resolved.is_absolute() else path.parent / resolved
        truth_file = dataset.get("truth_file")
        if isinstance(truth_file, str) and not Path(truth_file).is_absolute():
            dataset["truth_file"] = path.parent / truth_file
        fields["schema"] = dataset

    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(fields.get(key), dict):
            fields[key] = {**fields[key], **value}
        elif value is not None:
            fields[key] = value
    return validate_or_raise(ExperimentSpec, fields, context=f"{path} [experiment]")
