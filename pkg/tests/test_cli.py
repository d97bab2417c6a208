import json

import pytest

from cttfed.cli import main


def run_cli(capsys, *argv):
    main(list(argv))
    return json.loads(capsys.readouterr().out)


def test_gen_and_run_roundtrip(tmp_path, capsys):
    out = run_cli(
        capsys,
        "gen", "--dims", "40,10,10", "--clients", "4", "--ranks", "3,3",
        "--seed", "1", "--out", str(tmp_path / "data"),
    )
    assert len(out["client_files"]) == 4

    report_dir = tmp_path / "run"
    out = run_cli(
        capsys,
        "run", "--mode", "master-slave", "--tensor-files", ",".join(out["client_files"]),
        "--clients", "4", "--r1", "3", "--seed", "1", "--out", str(report_dir),
    )
    assert out["report"]["rounds"] == 2
    assert (report_dir / "report_master-slave_seed1.json").exists()


def test_gen_seed_repetition_identical(tmp_path, capsys):
    a = run_cli(capsys, "gen", "--dims", "20,6,6", "--clients", "2", "--ranks", "2,2",
                "--seed", "5", "--out", str(tmp_path / "a"))
    b = run_cli(capsys, "gen", "--dims", "20,6,6", "--clients", "2", "--ranks", "2,2",
                "--seed", "5", "--out", str(tmp_path / "b"))
    for fa, fb in zip(a["client_files"], b["client_files"]):
        body_a = open(fa).read().splitlines()
        body_b = open(fb).read().splitlines()
        assert body_a == body_b


def test_gen_bad_dims_exits_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--dims", "10,4,4", "--clients", "3", "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert "divide" in capsys.readouterr().err


def test_run_config_file_with_flag_override(tmp_path, capsys):
    cfg = {
        "mode": "decentralized",
        "dataset": {"kind": "synthetic", "dims": [40, 10, 10], "ranks": [3, 3]},
        "clients": 4,
        "r1": 3,
        "rounds": 1,
        "seed": 1,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = run_cli(capsys, "run", "--config", str(cfg_path), "--rounds", "3")
    # flag wins over the file value
    assert out["report"]["rounds"] == 3
    assert out["report"]["config"]["rounds"] == 3
    assert len(out["report"]["consensus_error_trace"]) == 3


def test_run_centralized_zero_comm(capsys):
    out = run_cli(
        capsys,
        "run", "--mode", "centralized", "--dims", "40,10,10", "--ranks", "3,3",
        "--clients", "4", "--r1", "3", "--seed", "1",
    )
    assert out["report"]["comm_measured_total"] == 0


def test_sweep_rows_nonincreasing_rse(tmp_path, capsys):
    out = run_cli(
        capsys,
        "sweep", "--mode", "master-slave", "--dims", "40,10,10", "--ranks", "3,3",
        "--density", "0.1", "--clients", "4", "--seed", "1",
        "--grid", "r1=1,2,3", "--out", str(tmp_path),
    )
    rows = out["rows"]
    assert len(rows) == 3
    rses = [row["rse_global"] for row in rows]
    assert rses[0] >= rses[1] >= rses[2]
    assert (tmp_path / "sweep.csv").exists()


def test_sweep_empty_grid_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--dims", "40,10,10", "--clients", "4", "--r1", "3"])
    assert exc.value.code == 2


def test_classify_missing_labels_exits_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main([
            "classify", "--dims", "40,10,10", "--clients", "4", "--r1", "3",
            "--labels", str(tmp_path / "nope.txt"),
        ])
    assert exc.value.code == 2


def test_classify_grid_rows(tmp_path, capsys):
    labels = tmp_path / "labels.txt"
    labels.write_text("\n".join(str(i % 2) for i in range(40)) + "\n")
    out = run_cli(
        capsys,
        "classify", "--dims", "40,10,10", "--ranks", "3,3", "--clients", "4",
        "--r1", "3", "--seed", "1", "--labels", str(labels),
        "--m", "1,3", "--k", "3", "--repeats", "2",
    )
    assert [row["m"] for row in out["rows"]] == [1, 3]


def test_topology_bridged_rings(tmp_path, capsys):
    edges = [(4, 3), (3, 1), (1, 2), (2, 4), (4, 5), (5, 6), (6, 8), (8, 7), (7, 6)]
    path = tmp_path / "bridged_rings.edges"
    path.write_text("8\n" + "\n".join(f"{i} {j}" for i, j in edges) + "\n")
    out = run_cli(capsys, "topology", "--edge-list", str(path))
    assert abs(out["lambda2"] - 0.972) <= 1e-3


def test_topology_complete_degree_rule(capsys):
    out = run_cli(capsys, "topology", "--full", "4", "--mixing", "degree")
    assert abs(out["lambda2"]) <= 1e-12


def test_topology_disconnected_exits_2(tmp_path, capsys):
    path = tmp_path / "disc.edges"
    path.write_text("4\n1 2\n3 4\n")
    with pytest.raises(SystemExit) as exc:
        main(["topology", "--edge-list", str(path)])
    assert exc.value.code == 2
    assert "components" in capsys.readouterr().err


def test_topology_requires_a_source(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["topology"])
    assert exc.value.code == 2


def test_gen_default_spec_writes_four_quarter_tensors(tmp_path, capsys):
    out = run_cli(capsys, "gen", "--out", str(tmp_path / "default"))
    assert len(out["client_files"]) == 4
    from cttfed.dataio import load_tensor

    assert load_tensor(out["client_files"][0]).dims == (50, 30, 30)
