"""Endpoint handlers: the single implementation behind HTTP and the CLI.

Handlers own all file output; request models carry paths, responses carry
the produced data plus where it was written.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from cttfed import consensus as cnet
from cttfed import harness
from cttfed.dataio import SyntheticSpec, gen_synthetic, load_tensor, save_tensor
from cttfed.errors import ConfigError
from cttfed.service import schemas
from cttfed.tensor import DenseTensor


def _ensure_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def handle_gen(req: schemas.GenRequest) -> schemas.GenResponse:
    """Write one tensor file per client plus a ground-truth manifest."""
    ranks = req.ranks or harness.default_generating_ranks(req.dims)
    try:
        spec = SyntheticSpec(
            dims=list(req.dims),
            client_count=req.clients,
            ranks=list(ranks),
            density=req.density,
            seed=req.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    data = gen_synthetic(spec)
    out = _ensure_dir(req.output_dir)

    client_files = []
    for k, tensor in enumerate(data.tensors, start=1):
        path = out / f"client_{k:02d}.ten"
        save_tensor(tensor, path)
        client_files.append(str(path))
    truth_files = {}
    for n, core in enumerate(data.feature_cores, start=2):
        path = out / f"truth_feature_core_{n}.ten"
        save_tensor(DenseTensor(core), path)
        truth_files[f"feature_core_{n}"] = str(path)
    for k, core in enumerate(data.personal_cores, start=1):
        path = out / f"truth_personal_core_{k:02d}.ten"
        save_tensor(DenseTensor(core), path)
        truth_files[f"personal_core_{k}"] = str(path)

    manifest = {
        "dims": spec.dims,
        "clients": spec.client_count,
        "generating_ranks": spec.ranks,
        "density": spec.density,
        "seed": spec.seed,
        "client_files": client_files,
        "ground_truth_files": truth_files,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return schemas.GenResponse(client_files=client_files, manifest_path=str(manifest_path))


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def handle_run(req: schemas.RunRequest) -> schemas.RunResponse:
    config = req.config.to_config()
    report = harness.run_experiment(config)
    report_path = csv_path = None
    if config.output_dir:
        out = _ensure_dir(config.output_dir)
        report_path = out / f"report_{config.mode}_seed{config.seed}.json"
        report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        csv_path = out / f"report_{config.mode}_seed{config.seed}.csv"
        _write_csv(csv_path, [report.csv_row()], harness.CSV_COLUMNS)
    return schemas.RunResponse(
        report=report.to_dict(),
        report_path=str(report_path) if report_path else None,
        csv_path=str(csv_path) if csv_path else None,
    )


def handle_sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    config = req.config.to_config()
    reports = harness.run_sweep(config)
    rows = [r.csv_row() for r in reports]
    csv_path = None
    if config.output_dir:
        out = _ensure_dir(config.output_dir)
        csv_path = out / "sweep.csv"
        _write_csv(csv_path, rows, harness.CSV_COLUMNS)
        for idx, report in enumerate(reports, start=1):
            (out / f"sweep_run_{idx:03d}.json").write_text(
                json.dumps(report.to_dict(), indent=2) + "\n"
            )
    return schemas.SweepResponse(rows=rows, csv_path=str(csv_path) if csv_path else None)


def _load_labels(path: str) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"labels file not found: {path}")
    try:
        labels = [int(float(line)) for line in p.read_text().split()]
    except ValueError as exc:
        raise ConfigError(f"labels file {path} must hold one numeric label per line") from exc
    return np.asarray(labels)


def handle_classify(req: schemas.ClassifyRequest) -> schemas.ClassifyResponse:
    config = req.config.to_config()
    config.validate()
    labels = _load_labels(req.labels_path)

    ds = config.dataset
    if ds.kind == "synthetic":
        tensors = harness.load_dataset(config)
        x = DenseTensor(np.concatenate([t.data for t in tensors], axis=0))
    elif ds.kind == "tensor-files":
        if len(ds.paths) == 1:
            x = load_tensor(ds.paths[0])
        else:
            parts = [load_tensor(p) for p in ds.paths]
            x = DenseTensor(np.concatenate([t.data for t in parts], axis=0))
    else:
        tensors = harness.load_dataset(config)
        x = DenseTensor(np.concatenate([t.data for t in tensors], axis=0))
    if labels.shape[0] != x.dims[0]:
        raise ConfigError(f"{labels.shape[0]} labels for {x.dims[0]} samples")

    rows = []
    for m in req.feature_counts:
        result = harness.run_classification(
            x,
            labels,
            clients=config.clients,
            r1=config.r1,
            eps1=config.eps1,
            eps2=config.eps2,
            m=m,
            k=req.neighbors,
            repeats=req.repeats,
            seed=config.seed,
        )
        row = result.to_dict()
        row["centralized_selected"] = json.dumps(row["centralized_selected"])
        row["federated_selected"] = json.dumps(row["federated_selected"])
        row["overlap"] = json.dumps(row["overlap"])
        rows.append(row)

    csv_path = None
    if config.output_dir:
        out = _ensure_dir(config.output_dir)
        csv_path = out / "classify.csv"
        _write_csv(csv_path, rows, list(rows[0].keys()))
    return schemas.ClassifyResponse(rows=rows, csv_path=str(csv_path) if csv_path else None)


def handle_topology(req: schemas.TopologyRequest) -> schemas.TopologyResponse:
    if req.kind == "file":
        if not req.path:
            raise ConfigError("topology kind 'file' needs a path")
        topo = cnet.load_edge_list(req.path)
    elif req.kind == "full":
        if not req.nodes or req.nodes < 2:
            raise ConfigError("full topology needs nodes >= 2")
        topo = cnet.Topology.complete(req.nodes)
    else:
        if not req.nodes or req.nodes < 2:
            raise ConfigError("random topology needs nodes >= 2")
        try:
            topo = cnet.random_topology(req.nodes, req.density, req.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if not topo.is_connected():
        raise ConfigError(f"topology is disconnected: components {topo.components()}")
    try:
        summary = harness.topology_report(topo, mixing_rule=req.mixing)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return schemas.TopologyResponse(**summary)
