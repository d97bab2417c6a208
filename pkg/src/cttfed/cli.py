"""Command-line client for the experiment service.

Every subcommand builds a service request model and executes it either
in-process (default) or against a running service via --server. Flag values
override config-file values, which override defaults.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 privacy-audit
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from cttfed.errors import ConfigError, CttError
from cttfed.service import handlers, schemas

INT_GRID_KEYS = {"r1", "rounds", "clients", "seed"}


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return raw


def _build_config_dict(args: argparse.Namespace) -> dict:
    """Merge config file and CLI flags (flag > file > default)."""
    cfg = _load_config_file(getattr(args, "config", None))
    cfg.setdefault("dataset", {})

    direct = {
        "mode": getattr(args, "mode", None),
        "clients": getattr(args, "clients", None),
        "r1": getattr(args, "r1", None),
        "eps1": getattr(args, "eps1", None),
        "eps2": getattr(args, "eps2", None),
        "rounds": getattr(args, "rounds", None),
        "topology": getattr(args, "topology", None),
        "topology_density": getattr(args, "topology_density", None),
        "topology_seed": getattr(args, "topology_seed", None),
        "mixing": getattr(args, "mixing", None),
        "missing_fraction": getattr(args, "missing", None),
        "seed": getattr(args, "seed", None),
        "output_dir": getattr(args, "out", None),
    }
    for key, value in direct.items():
        if value is not None:
            cfg[key] = value

    ds = cfg["dataset"]
    if getattr(args, "dims", None):
        ds["kind"] = "synthetic"
        ds["dims"] = _parse_int_list(args.dims)
    if getattr(args, "ranks", None):
        ds["ranks"] = _parse_int_list(args.ranks)
    if getattr(args, "density", None) is not None:
        ds["density"] = args.density
    if getattr(args, "tensor_files", None):
        ds["kind"] = "tensor-files"
        ds["paths"] = [x for x in args.tensor_files.split(",") if x]
    if getattr(args, "csv", None):
        ds["kind"] = "csv"
        ds["csv_path"] = args.csv
    if getattr(args, "mode_split", None):
        ds["mode_split"] = _parse_int_list(args.mode_split)
    if getattr(args, "id_column", None):
        ds["id_column"] = args.id_column
    return cfg


def _post(server: str, endpoint: str, payload: dict) -> dict:
    import httpx

    url = server.rstrip("/") + endpoint
    response = httpx.post(url, json=payload, timeout=600.0)
    if response.status_code >= 400:
        try:
            body = response.json()
        except ValueError:
            raise CttError(f"server error {response.status_code}: {response.text}")
        exc = CttError(f"{body.get('error', 'error')}: {body.get('detail', '')}")
        exc.exit_code = int(body.get("exit_code", 1))
        raise exc
    return response.json()


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_gen(args: argparse.Namespace) -> None:
    req = schemas.GenRequest(
        dims=_parse_int_list(args.dims),
        clients=args.clients,
        ranks=_parse_int_list(args.ranks) if args.ranks else None,
        density=args.density,
        seed=args.seed,
        output_dir=args.out,
    )
    if args.server:
        _emit(_post(args.server, "/gen", req.model_dump()))
    else:
        _emit(handlers.handle_gen(req).model_dump())


def cmd_run(args: argparse.Namespace) -> None:
    cfg = schemas.ExperimentConfigModel(**_build_config_dict(args))
    req = schemas.RunRequest(config=cfg)
    if args.server:
        out = _post(args.server, "/run", req.model_dump())
    else:
        out = handlers.handle_run(req).model_dump()
    _emit(out)
    if out["report"]["privacy_audit"] != "pass":  # defensive: handler raises first
        sys.exit(4)


def cmd_sweep(args: argparse.Namespace) -> None:
    cfg_dict = _build_config_dict(args)
    grid: dict[str, list] = dict(cfg_dict.get("sweep", {}))
    for item in args.grid or []:
        if "=" not in item:
            raise ConfigError(f"--grid expects key=v1,v2,... got {item!r}")
        key, _, values = item.partition("=")
        key = key.strip()
        cast = int if key in INT_GRID_KEYS else float
        grid[key] = [cast(v) for v in values.split(",") if v.strip()]
    cfg_dict["sweep"] = grid
    cfg = schemas.ExperimentConfigModel(**cfg_dict)
    req = schemas.SweepRequest(config=cfg)
    if args.server:
        _emit(_post(args.server, "/sweep", req.model_dump()))
    else:
        _emit(handlers.handle_sweep(req).model_dump())


def cmd_classify(args: argparse.Namespace) -> None:
    cfg = schemas.ExperimentConfigModel(**_build_config_dict(args))
    req = schemas.ClassifyRequest(
        config=cfg,
        labels_path=args.labels,
        feature_counts=_parse_int_list(args.m),
        neighbors=args.k,
        repeats=args.repeats,
    )
    if args.server:
        _emit(_post(args.server, "/classify", req.model_dump()))
    else:
        _emit(handlers.handle_classify(req).model_dump())


def cmd_topology(args: argparse.Namespace) -> None:
    if args.edge_list:
        req = schemas.TopologyRequest(kind="file", path=args.edge_list, mixing=args.mixing)
    elif args.full:
        req = schemas.TopologyRequest(kind="full", nodes=args.full, mixing=args.mixing)
    elif args.random:
        req = schemas.TopologyRequest(
            kind="random",
            nodes=args.random,
            density=args.density,
            seed=args.seed,
            mixing=args.mixing,
        )
    else:
        raise ConfigError("topology needs one of --edge-list, --full, --random")
    if args.server:
        _emit(_post(args.server, "/topology", req.model_dump()))
    else:
        _emit(handlers.handle_topology(req).model_dump())


def cmd_serve(args: argparse.Namespace) -> None:
    import uvicorn

    from cttfed.service.app import app

    uvicorn.run(app, host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctt",
        description="Coupled tensor-train federated learning experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--server", help="service URL; default runs in-process")
        p.add_argument("--mode", choices=["centralized", "master-slave", "decentralized"])
        p.add_argument("--clients", type=int)
        p.add_argument("--r1", type=int)
        p.add_argument("--eps1", type=float)
        p.add_argument("--eps2", type=float)
        p.add_argument("--rounds", type=int, help="consensus iterations L")
        p.add_argument("--topology", help="full | random | edge-list path")
        p.add_argument("--topology-density", type=float, dest="topology_density")
        p.add_argument("--topology-seed", type=int, dest="topology_seed")
        p.add_argument("--mixing", choices=["auto", "magic", "degree"])
        p.add_argument("--missing", type=float, help="missing-data fraction")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--dims", help="synthetic dims, e.g. 200,30,30")
        p.add_argument("--ranks", help="synthetic generating ranks, e.g. 4,4")
        p.add_argument("--density", type=float, help="synthetic core density")
        p.add_argument("--tensor-files", dest="tensor_files", help="comma-separated .ten paths")
        p.add_argument("--csv", help="CSV table path")
        p.add_argument("--mode-split", dest="mode_split", help="feature mode extents, e.g. 20,24")
        p.add_argument("--id-column", dest="id_column")

    p_gen = sub.add_parser("gen", help="generate synthetic client tensors")
    p_gen.add_argument("--dims", default="200,30,30")
    p_gen.add_argument("--clients", type=int, default=4)
    p_gen.add_argument("--ranks", help="generating ranks, e.g. 4,4")
    p_gen.add_argument("--density", type=float, default=0.4)
    p_gen.add_argument("--seed", type=int, default=1)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--server")
    p_gen.set_defaults(func=cmd_gen)

    p_run = sub.add_parser("run", help="run one experiment")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid")
    add_common(p_sweep)
    p_sweep.add_argument("--grid", action="append", help="key=v1,v2,... (repeatable)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cls = sub.add_parser("classify", help="feature selection + kNN parity")
    add_common(p_cls)
    p_cls.add_argument("--labels", required=True, help="one numeric label per line")
    p_cls.add_argument("--m", default="5", help="feature counts, e.g. 1,3,5,10")
    p_cls.add_argument("--k", type=int, default=5)
    p_cls.add_argument("--repeats", type=int, default=10)
    p_cls.set_defaults(func=cmd_classify)

    p_top = sub.add_parser("topology", help="spectral summary of a topology")
    p_top.add_argument("--edge-list", dest="edge_list")
    p_top.add_argument("--full", type=int, help="complete graph on N nodes")
    p_top.add_argument("--random", type=int, help="random connected graph on N nodes")
    p_top.add_argument("--density", type=float, default=0.5)
    p_top.add_argument("--seed", type=int, default=1)
    p_top.add_argument("--mixing", choices=["degree", "magic"], default="degree")
    p_top.add_argument("--server")
    p_top.set_defaults(func=cmd_topology)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        sys.exit(2)
    except CttError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        sys.exit(exc.exit_code)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    main()
