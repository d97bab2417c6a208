import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cttfed.service.app import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


def synthetic_config(**overrides):
    cfg = {
        "mode": "master-slave",
        "dataset": {"kind": "synthetic", "dims": [40, 10, 10], "ranks": [3, 3], "density": 0.4},
        "clients": 4,
        "r1": 3,
        "seed": 1,
    }
    cfg.update(overrides)
    return cfg


def test_health(client):
    out = client.get("/health")
    assert out.status_code == 200
    assert out.json()["status"] == "ok"


def test_gen_writes_files_and_manifest(client, tmp_path):
    out = client.post(
        "/gen",
        json={
            "dims": [40, 10, 10],
            "clients": 4,
            "ranks": [3, 3],
            "density": 0.4,
            "seed": 1,
            "output_dir": str(tmp_path),
        },
    )
    assert out.status_code == 200
    body = out.json()
    assert len(body["client_files"]) == 4
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["dims"] == [40, 10, 10]
    from cttfed.dataio import load_tensor

    t = load_tensor(body["client_files"][0])
    assert t.dims == (10, 10, 10)


def test_gen_bad_partition_is_422(client, tmp_path):
    out = client.post(
        "/gen",
        json={"dims": [10, 4, 4], "clients": 3, "seed": 1, "output_dir": str(tmp_path)},
    )
    assert out.status_code == 422
    body = out.json()
    assert body["error"] == "ConfigError"
    assert body["exit_code"] == 2


def test_run_master_slave_endpoint(client, tmp_path):
    cfg = synthetic_config(output_dir=str(tmp_path))
    out = client.post("/run", json={"config": cfg})
    assert out.status_code == 200
    body = out.json()
    assert body["report"]["rounds"] == 2
    assert body["report"]["privacy_audit"] == "pass"
    assert (tmp_path / "report_master-slave_seed1.json").exists()
    assert (tmp_path / "report_master-slave_seed1.csv").exists()


def test_run_from_generated_tensor_files(client, tmp_path):
    gen = client.post(
        "/gen",
        json={
            "dims": [40, 10, 10],
            "clients": 4,
            "ranks": [3, 3],
            "seed": 2,
            "output_dir": str(tmp_path),
        },
    ).json()
    cfg = {
        "mode": "decentralized",
        "dataset": {"kind": "tensor-files", "paths": gen["client_files"]},
        "clients": 4,
        "r1": 3,
        "rounds": 3,
        "seed": 2,
    }
    out = client.post("/run", json={"config": cfg})
    assert out.status_code == 200
    report = out.json()["report"]
    assert report["rounds"] == 3
    assert len(report["consensus_error_trace"]) == 3


def test_run_unknown_field_is_422(client):
    out = client.post("/run", json={"config": {"not_a_field": 1}})
    assert out.status_code == 422


def test_sweep_endpoint(client, tmp_path):
    cfg = synthetic_config(mode="decentralized", output_dir=str(tmp_path))
    cfg["sweep"] = {"rounds": [1, 2]}
    out = client.post("/sweep", json={"config": cfg})
    assert out.status_code == 200
    rows = out.json()["rows"]
    assert len(rows) == 2
    assert (tmp_path / "sweep.csv").exists()
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header.startswith("mode,seed,clients,r1")


def test_sweep_empty_grid_is_422(client):
    out = client.post("/sweep", json={"config": synthetic_config()})
    assert out.status_code == 422


def test_classify_endpoint(client, tmp_path):
    labels_path = tmp_path / "labels.txt"
    rng = np.random.Generator(np.random.Philox(0))
    labels = rng.integers(0, 2, 40)
    labels_path.write_text("\n".join(str(v) for v in labels) + "\n")
    cfg = synthetic_config()
    out = client.post(
        "/classify",
        json={
            "config": cfg,
            "labels_path": str(labels_path),
            "feature_counts": [2, 3],
            "neighbors": 3,
            "repeats": 3,
        },
    )
    assert out.status_code == 200
    rows = out.json()["rows"]
    assert len(rows) == 2
    assert {"federated_test", "centralized_test", "overlap"} <= set(rows[0])


def test_classify_missing_labels_is_422(client, tmp_path):
    out = client.post(
        "/classify",
        json={"config": synthetic_config(), "labels_path": str(tmp_path / "none.txt")},
    )
    assert out.status_code == 422


def test_topology_endpoint_full(client):
    out = client.post("/topology", json={"kind": "full", "nodes": 4, "mixing": "degree"})
    assert out.status_code == 200
    body = out.json()
    assert body["lambda2"] == pytest.approx(0.0, abs=1e-12)
    assert body["estimated_rounds"]["0.01"] == 1


def test_topology_endpoint_bridged_rings_file(client, tmp_path):
    path = tmp_path / "bridged_rings.edges"
    edges = [(4, 3), (3, 1), (1, 2), (2, 4), (4, 5), (5, 6), (6, 8), (8, 7), (7, 6)]
    path.write_text("8\n" + "\n".join(f"{i} {j}" for i, j in edges) + "\n")
    out = client.post("/topology", json={"kind": "file", "path": str(path)})
    assert out.status_code == 200
    assert out.json()["lambda2"] == pytest.approx(0.972, abs=1e-3)


def test_topology_disconnected_names_components(client, tmp_path):
    path = tmp_path / "disc.edges"
    path.write_text("4\n1 2\n3 4\n")
    out = client.post("/topology", json={"kind": "file", "path": str(path)})
    assert out.status_code == 422
    assert "components" in out.json()["detail"]
