"""Pydantic request/response models for the service endpoints."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from cttfed.harness import ExperimentConfig


class DatasetModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["synthetic", "tensor-files", "csv"] = "synthetic"
    dims: list[int] | None = None
    ranks: list[int] | None = None
    density: float = 0.4
    paths: list[str] | None = None
    csv_path: str | None = None
    id_column: str | None = None
    feature_columns: list[str] | None = None
    mode_split: list[int] | None = None


class ExperimentConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["centralized", "master-slave", "decentralized"] = "master-slave"
    dataset: DatasetModel = Field(default_factory=DatasetModel)
    clients: int = 4
    r1: int = 20
    eps1: float = 0.1
    eps2: float = 0.05
    rounds: int = 3
    topology: str = "full"
    topology_density: float = 1.0
    topology_seed: int | None = None
    mixing: Literal["auto", "magic", "degree"] = "auto"
    missing_fraction: float = 0.0
    seed: int = 1
    sweep: dict[str, list] = Field(default_factory=dict)
    output_dir: str | None = None

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.model_dump())


class GenRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dims: list[int] = Field(default=[200, 30, 30])
    clients: int = 4
    ranks: list[int] | None = None
    density: float = 0.4
    seed: int = 1
    output_dir: str


class GenResponse(BaseModel):
    client_files: list[str]
    manifest_path: str


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfigModel = Field(default_factory=ExperimentConfigModel)


class RunResponse(BaseModel):
    report: dict
    report_path: str | None = None
    csv_path: str | None = None


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfigModel


class SweepResponse(BaseModel):
    rows: list[dict]
    csv_path: str | None = None


class ClassifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfigModel = Field(default_factory=ExperimentConfigModel)
    labels_path: str
    feature_counts: list[int] = Field(default=[5])  # the m grid
    neighbors: int = 5
    repeats: int = 10


class ClassifyResponse(BaseModel):
    rows: list[dict]
    csv_path: str | None = None


class TopologyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["full", "random", "file"] = "full"
    nodes: int | None = None
    density: float = 1.0
    seed: int = 1
    path: str | None = None
    mixing: Literal["degree", "magic"] = "degree"


class TopologyResponse(BaseModel):
    nodes: int
    edges: int
    density: float
    degree_min: int
    degree_max: int
    degree_mean: float
    mixing: str
    lambda2: float
    estimated_rounds: dict[str, int]


class ErrorBody(BaseModel):
    error: str
    detail: str
    exit_code: int
