"""Metrics, cost models, the classification pipeline, and run orchestration.

Communication is counted in real-number elements transmitted (multiply by 8
for bytes). Wall-clock time is recorded for information only; reported cost
models are trend lines with unit constants, not runtime predictions.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from cttfed import consensus as cnet
from cttfed.dataio import (
    SyntheticSpec,
    apply_missing,
    gen_synthetic,
    load_table_csv,
    load_tensor,
    make_rng,
    partition_mode1,
    stack_mode1,
)
from cttfed.engine import (
    GlobalFeatures,
    reconstruct_client,
    run_centralized,
    run_decentralized,
    run_master_slave,
)
from cttfed.errors import ConfigError, NumericalError, PrivacyAuditError
from cttfed.network import PAYLOAD_PERSONAL_CORE, Message
from cttfed.tensor import DenseTensor, frobenius_norm

PRIVACY_MATCH_TOL = 1e-12
BYTES_PER_ELEMENT = 8


# --------------------------- metrics ---------------------------


def rse(x: DenseTensor, x_hat: DenseTensor) -> float:
    """Relative squared error ||x - x_hat||_F^2 / ||x||_F^2."""
    if x.dims != x_hat.dims:
        raise ValueError(f"shape mismatch: {x.dims} vs {x_hat.dims}")
    denom = frobenius_norm(x) ** 2
    if denom == 0:
        raise ValueError("reference tensor has zero norm")
    return float(np.linalg.norm(x.data - x_hat.data) ** 2 / denom)


def rse_global(pairs: list[tuple[DenseTensor, DenseTensor]]) -> float:
    """Energy-weighted combination over clients: sum ||X^k - Xhat^k||^2 / sum ||X^k||^2."""
    num = sum(float(np.linalg.norm(x.data - xh.data) ** 2) for x, xh in pairs)
    den = sum(frobenius_norm(x) ** 2 for x, _ in pairs)
    if den == 0:
        raise ValueError("all reference tensors have zero norm")
    return float(num / den)


# --------------------------- cost models ---------------------------


def comm_predicted_dec(rounds: int, r1: int, dims: list[int] | tuple[int, ...]) -> int:
    """Per-node decentralized element count: L * R1 * prod(I_2..I_N)."""
    return int(rounds * r1 * math.prod(dims[1:]))


def comm_predicted_ms(ranks: list[int], dims: list[int] | tuple[int, ...]) -> int:
    """Per-link master-slave element count with realized ranks:
    sum_n R_n * R_{n+1} * I_{n+1}, i.e. the size of the feature-core chain."""
    if len(ranks) != len(dims) + 1:
        raise ValueError(f"rank vector {ranks} inconsistent with dims {tuple(dims)}")
    return int(
        sum(ranks[n] * ranks[n + 1] * dims[n] for n in range(1, len(dims)))
    )


def compute_cost_model(
    dims: list[int] | tuple[int, ...],
    ranks: list[int],
    clients: int,
    rounds: int,
    mode: str,
) -> dict:
    """Evaluate the flop-trend expressions with unit constants.

    Representative scalars are the means of the extents and of the interior
    ranks; the output is for trend reporting only.
    """
    order = len(dims)
    i_rep = float(np.mean(dims))
    interior = ranks[1:-1] if len(ranks) > 2 else ranks
    r_rep = float(np.mean(interior)) if interior else 1.0
    k = clients
    if mode == "master-slave":
        terms = {
            "client_svd": i_rep**order * r_rep**2,
            "server_fusion": i_rep**order * r_rep**2 / k,
            "server_extract": i_rep**order / k**2,
        }
    elif mode == "decentralized":
        terms = {
            "node_svd": i_rep ** (order + 1) / k**2,
            "node_extract": r_rep**2 * i_rep**order,
            "consensus": r_rep * rounds * k * i_rep ** (order - 1),
        }
    else:
        raise ValueError(f"unknown mode for cost model: {mode}")
    return {"mode": mode, "terms": terms, "total": float(sum(terms.values()))}


# --------------------------- feature pipeline ---------------------------


@dataclass
class FeatureSelection:
    """Per feature mode: the variance profile and the chosen index set.

    Indices are 1-based; ties are broken toward the smaller index.
    """

    variances: list[np.ndarray]
    selected: list[list[int]]


def feature_variance(features: GlobalFeatures) -> list[np.ndarray]:
    """Population variance of each lateral slice G_n(:, j, :), per mode."""
    out = []
    for core in features.cores:
        out.append(np.array([float(np.var(core[:, j, :])) for j in range(core.shape[1])]))
    return out


def select_top_m(variances: list[np.ndarray], m: int) -> FeatureSelection:
    selected = []
    for v in variances:
        if not 1 <= m <= v.size:
            raise ValueError(f"m = {m} out of range for {v.size} features")
        order = np.argsort(-v, kind="stable")  # stable: ties keep smaller index
        selected.append(sorted(int(i) + 1 for i in order[:m]))
    return FeatureSelection(variances=variances, selected=selected)


def build_embeddings(x: DenseTensor, sel: FeatureSelection) -> np.ndarray:
    """Restrict each sample slice to the selected feature indices.

    Sample i's embedding is x(i, J_2, ..., J_N) vectorized colexicographically,
    giving an I_1 x prod(m_n) matrix.
    """
    if len(sel.selected) != x.order - 1:
        raise ValueError(
            f"selection covers {len(sel.selected)} modes, tensor has {x.order - 1} feature modes"
        )
    index_sets = []
    for axis, chosen in enumerate(sel.selected, start=1):
        arr = np.asarray(chosen, dtype=int) - 1
        if arr.min() < 0 or arr.max() >= x.dims[axis]:
            raise ValueError(f"selected index out of range for mode {axis + 1}")
        index_sets.append(arr)
    sub = x.data[np.ix_(np.arange(x.dims[0]), *index_sets)]
    return np.reshape(sub, (x.dims[0], -1), order="F")


def knn_classify(
    train_embeddings: np.ndarray,
    train_labels: np.ndarray,
    test_embeddings: np.ndarray,
    k: int = 5,
) -> np.ndarray:
    """Euclidean k-nearest-neighbor majority vote.

    Distance ties prefer the smaller train index; vote ties the smallest
    label.
    """
    train_embeddings = np.asarray(train_embeddings, dtype=float)
    test_embeddings = np.asarray(test_embeddings, dtype=float)
    train_labels = np.asarray(train_labels)
    if train_embeddings.shape[0] == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= train_embeddings.shape[0]:
        raise ValueError(f"k = {k} out of range for {train_embeddings.shape[0]} train points")
    preds = []
    for row in test_embeddings:
        d = np.linalg.norm(train_embeddings - row, axis=1)
        nearest = np.argsort(d, kind="stable")[:k]
        votes, counts = np.unique(train_labels[nearest], return_counts=True)
        preds.append(votes[int(np.argmax(counts))])  # unique is sorted: tie -> smallest
    return np.asarray(preds)


@dataclass
class CrossValResult:
    train_accuracies: list[float]
    test_accuracies: list[float]

    @property
    def mean_train(self) -> float:
        return float(np.mean(self.train_accuracies))

    @property
    def mean_test(self) -> float:
        return float(np.mean(self.test_accuracies))


def cross_validate(
    x: DenseTensor,
    labels: np.ndarray,
    sel: FeatureSelection,
    k: int = 5,
    repeats: int = 10,
    train_ratio: float = 0.7,
    seed: int = 1,
) -> CrossValResult:
    """Repeated random 7:3 splits; per-repeat streams derive as seed + index.

    If some class is absent from a training split the split is resampled
    once (with a warning) before proceeding.
    """
    labels = np.asarray(labels)
    if labels.shape[0] != x.dims[0]:
        raise ValueError(f"{labels.shape[0]} labels for {x.dims[0]} samples")
    embeddings = build_embeddings(x, sel)
    n = x.dims[0]
    n_train = int(round(train_ratio * n))
    classes = np.unique(labels)

    train_acc, test_acc = [], []
    for rep in range(repeats):
        rng = make_rng(seed + rep)
        perm = rng.permutation(n)
        if np.unique(labels[perm[:n_train]]).size < classes.size:
            warnings.warn(f"repeat {rep}: class missing from training split, resampling once")
            perm = rng.permutation(n)
        tr, te = perm[:n_train], perm[n_train:]
        pred_tr = knn_classify(embeddings[tr], labels[tr], embeddings[tr], k)
        pred_te = knn_classify(embeddings[tr], labels[tr], embeddings[te], k)
        train_acc.append(float(np.mean(pred_tr == labels[tr])))
        test_acc.append(float(np.mean(pred_te == labels[te])))
    return CrossValResult(train_accuracies=train_acc, test_accuracies=test_acc)


# --------------------------- privacy audit ---------------------------


@dataclass
class AuditResult:
    passed: bool
    offending: list[int]  # indices into the message log


def audit_privacy(messages: list[Message], personal_cores: list[np.ndarray]) -> AuditResult:
    """Fail iff a message is tagged personal_core or carries a payload
    entrywise equal (within 1e-12) to any client's personal core."""
    offending = []
    for idx, msg in enumerate(messages):
        if msg.kind == PAYLOAD_PERSONAL_CORE:
            offending.append(idx)
            continue
        leaked = False
        for payload in msg.payloads:
            for core in personal_cores:
                if payload.shape == core.shape and np.max(
                    np.abs(payload - core), initial=0.0
                ) <= PRIVACY_MATCH_TOL:
                    leaked = True
                    break
            if leaked:
                break
        if leaked:
            offending.append(idx)
    return AuditResult(passed=not offending, offending=offending)


# --------------------------- configuration ---------------------------

MODES = ("centralized", "master-slave", "decentralized")


@dataclass
class DatasetSpec:
    kind: str = "synthetic"  # synthetic | tensor-files | csv
    dims: list[int] | None = None
    ranks: list[int] | None = None
    density: float = 0.4
    paths: list[str] | None = None
    csv_path: str | None = None
    id_column: str | None = None
    feature_columns: list[str] | None = None
    mode_split: list[int] | None = None


@dataclass
class ExperimentConfig:
    """Everything one run needs; defaults follow the reference experiments
    (eps1 = 0.1, eps2 = 0.05, L = 3, K = 4)."""

    mode: str = "master-slave"
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    clients: int = 4
    r1: int = 20
    eps1: float = 0.1
    eps2: float = 0.05
    rounds: int = 3  # consensus iterations L (decentralized only)
    topology: str = "full"  # full | random | path to an edge-list file
    topology_density: float = 1.0
    topology_seed: int | None = None
    mixing: str = "auto"  # auto | magic | degree
    missing_fraction: float = 0.0
    seed: int = 1
    sweep: dict[str, list] = field(default_factory=dict)
    output_dir: str | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.eps1 < 1 or not 0 < self.eps2 < 1:
            raise ConfigError(f"eps1/eps2 must be in (0, 1), got {self.eps1}, {self.eps2}")
        if self.r1 < 1:
            raise ConfigError(f"r1 must be >= 1, got {self.r1}")
        if self.clients < 1:
            raise ConfigError(f"clients must be >= 1, got {self.clients}")
        if self.rounds < 0:
            raise ConfigError(f"rounds must be >= 0, got {self.rounds}")
        if not 0 <= self.missing_fraction < 1:
            raise ConfigError(f"missing_fraction must be in [0, 1), got {self.missing_fraction}")
        if self.mixing not in ("auto", "magic", "degree"):
            raise ConfigError(f"mixing must be auto|magic|degree, got {self.mixing!r}")
        ds = self.dataset
        if ds.kind == "synthetic":
            if not ds.dims:
                raise ConfigError("synthetic dataset needs dims")
            if ds.dims[0] % self.clients != 0:
                raise ConfigError(
                    f"clients = {self.clients} must divide I1 = {ds.dims[0]}"
                )
        elif ds.kind == "tensor-files":
            if not ds.paths:
                raise ConfigError("tensor-files dataset needs paths")
        elif ds.kind == "csv":
            if not ds.csv_path or not ds.mode_split:
                raise ConfigError("csv dataset needs csv_path and mode_split")
        else:
            raise ConfigError(f"unknown dataset kind {ds.kind!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        ds_raw = raw.pop("dataset", {})
        known_ds = {f for f in DatasetSpec.__dataclass_fields__}
        bad = set(ds_raw) - known_ds
        if bad:
            raise ConfigError(f"unknown dataset fields: {sorted(bad)}")
        known = {f for f in cls.__dataclass_fields__} - {"dataset"}
        bad = set(raw) - known
        if bad:
            raise ConfigError(f"unknown config fields: {sorted(bad)}")
        return cls(dataset=DatasetSpec(**ds_raw), **raw)


# --------------------------- run reports ---------------------------


@dataclass
class RunReport:
    """Self-contained record of one protocol run."""

    config: dict
    mode: str
    rse_global: float
    rse_per_client: list[float]
    comm_measured_per_link: list[int]
    comm_measured_total: int
    comm_predicted: list[int]
    rounds: int
    lambda2: float | None
    consensus_error_trace: list[float]
    delta_rank_per_client: list[int]
    client_ranks: list[list[int]]
    global_ranks: list[int]
    privacy_audit: str
    privacy_offenders: list[int]
    seed: int
    bytes_per_element: int
    cost_model: dict | None
    warnings: list[str]
    wall_time: float  # informational only; excluded from determinism checks

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> dict:
        """Flat row for sweep CSVs; one column per scalar."""
        cfg = self.config
        return {
            "mode": self.mode,
            "seed": self.seed,
            "clients": cfg.get("clients"),
            "r1": cfg.get("r1"),
            "eps1": cfg.get("eps1"),
            "eps2": cfg.get("eps2"),
            "rounds": self.rounds,
            "missing_fraction": cfg.get("missing_fraction"),
            "rse_global": self.rse_global,
            "comm_per_link": self.comm_measured_per_link[0] if self.comm_measured_per_link else 0,
            "comm_total": self.comm_measured_total,
            "comm_predicted": self.comm_predicted[0] if self.comm_predicted else 0,
            "lambda2": self.lambda2 if self.lambda2 is not None else "",
            "privacy_audit": self.privacy_audit,
            "wall_time": self.wall_time,
        }


CSV_COLUMNS = [
    "mode", "seed", "clients", "r1", "eps1", "eps2", "rounds", "missing_fraction",
    "rse_global", "comm_per_link", "comm_total", "comm_predicted", "lambda2",
    "privacy_audit", "wall_time",
]


# --------------------------- orchestration ---------------------------


def load_dataset(config: ExperimentConfig) -> list[DenseTensor]:
    """Materialize the per-client tensors for a run."""
    ds = config.dataset
    if ds.kind == "synthetic":
        ranks = ds.ranks or default_generating_ranks(ds.dims)
        spec = SyntheticSpec(
            dims=list(ds.dims),
            client_count=config.clients,
            ranks=list(ranks),
            density=ds.density,
            seed=config.seed,
        )
        tensors = gen_synthetic(spec).tensors
    elif ds.kind == "tensor-files":
        tensors = [load_tensor(p) for p in ds.paths]
        if len(tensors) != config.clients:
            raise ConfigError(
                f"{len(tensors)} tensor files for clients = {config.clients}"
            )
        shared = {t.dims[1:] for t in tensors}
        if len(shared) > 1:
            raise ConfigError(f"tensor files disagree on feature extents: {sorted(shared)}")
    elif ds.kind == "csv":
        table, n_missing = load_table_csv(
            ds.csv_path, ds.id_column, ds.feature_columns, ds.mode_split
        )
        if n_missing:
            warnings.warn(f"csv ingestion zero-filled {n_missing} missing cells")
        tensors = partition_mode1(table, config.clients)
    else:  # pragma: no cover - validate() rejects earlier
        raise ConfigError(f"unknown dataset kind {ds.kind!r}")

    if config.missing_fraction > 0:
        masked = []
        for k, t in enumerate(tensors):
            m, _ = apply_missing(t, config.missing_fraction, config.seed + k + 1)
            masked.append(m)
        tensors = masked
    return tensors


def default_generating_ranks(dims: list[int]) -> list[int]:
    # modest ranks keep the shared spectrum separated, which the federated
    # averaging step needs to stay coherent across clients
    return [4] * (len(dims) - 1)


def resolve_topology(config: ExperimentConfig) -> tuple[cnet.Topology, cnet.MixingMatrix]:
    k = config.clients
    if config.topology == "full":
        topo = cnet.Topology.complete(k)
    elif config.topology == "random":
        topo = cnet.random_topology(
            k,
            config.topology_density,
            config.topology_seed if config.topology_seed is not None else config.seed,
        )
    else:
        topo = cnet.load_edge_list(config.topology)
        if topo.node_count != k:
            raise ConfigError(
                f"edge list has {topo.node_count} nodes, config expects {k}"
            )
    if not topo.is_connected():
        raise ConfigError(f"topology is disconnected: components {topo.components()}")

    mixing = config.mixing
    if mixing == "auto":
        is_full = len(topo.edges) == k * (k - 1) // 2
        mixing = "magic" if (is_full and k >= 3) else "degree"
    if mixing == "magic":
        if len(topo.edges) != k * (k - 1) // 2:
            raise ConfigError("magic mixing assumes a fully connected topology")
        if k < 3:
            raise ConfigError("magic mixing needs at least 3 nodes")
        return topo, cnet.mixing_magic(k)
    return topo, cnet.mixing_from_degree_rule(topo)


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Execute one configured run end to end and assemble its report.

    The privacy audit always runs; a failed audit raises
    :class:`PrivacyAuditError` with the offending report attached.
    """
    config.validate()
    start = time.perf_counter()
    captured: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tensors = load_dataset(config)
        try:
            if config.mode == "centralized":
                report = _run_centralized(config, tensors)
            elif config.mode == "master-slave":
                report = _run_master_slave(config, tensors)
            else:
                report = _run_decentralized(config, tensors)
        except (ConfigError, PrivacyAuditError):
            raise
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise NumericalError(str(exc)) from exc
        captured = [str(w.message) for w in caught]
    report.warnings = captured
    report.wall_time = time.perf_counter() - start
    if report.privacy_audit != "pass":
        raise PrivacyAuditError(
            f"privacy audit failed: messages {report.privacy_offenders}", report=report
        )
    return report


def _base_report(config: ExperimentConfig, **kw) -> RunReport:
    defaults = dict(
        config=config.to_dict(),
        mode=config.mode,
        rse_global=0.0,
        rse_per_client=[],
        comm_measured_per_link=[],
        comm_measured_total=0,
        comm_predicted=[],
        rounds=0,
        lambda2=None,
        consensus_error_trace=[],
        delta_rank_per_client=[],
        client_ranks=[],
        global_ranks=[],
        privacy_audit="pass",
        privacy_offenders=[],
        seed=config.seed,
        bytes_per_element=BYTES_PER_ELEMENT,
        cost_model=None,
        warnings=[],
        wall_time=0.0,
    )
    defaults.update(kw)
    return RunReport(**defaults)


def _run_centralized(config: ExperimentConfig, tensors: list[DenseTensor]) -> RunReport:
    stacked = stack_mode1(tensors)
    result = run_centralized(tensors, config.eps1, config.r1)
    x_hat = reconstruct_client(result.personal_core, result.features)
    parts_hat = partition_mode1(x_hat, config.clients)
    per_client = [rse(x, xh) for x, xh in zip(tensors, parts_hat)]
    return _base_report(
        config,
        rse_global=rse(stacked, x_hat),
        rse_per_client=per_client,
        global_ranks=list(result.ranks[1:]),
        client_ranks=[list(result.ranks)],
        delta_rank_per_client=[],
        rounds=0,
    )


def _run_master_slave(config: ExperimentConfig, tensors: list[DenseTensor]) -> RunReport:
    result = run_master_slave(tensors, config.eps1, config.eps2, config.r1)
    pairs = [
        (state.local_tensor, reconstruct_client(state.personal_core, result.features))
        for state in result.clients
    ]
    client_ranks = [
        [1, state.payload.shape[0]] + [c.shape[2] for c in state.feature_cores]
        for state in result.clients
    ]
    dims = tensors[0].dims
    predicted = [comm_predicted_ms(ranks, dims) for ranks in client_ranks]
    audit = audit_privacy(result.sim.messages, [s.personal_core for s in result.clients])
    return _base_report(
        config,
        rse_global=rse_global(pairs),
        rse_per_client=[rse(x, xh) for x, xh in pairs],
        comm_measured_per_link=result.uplink_elements,
        comm_measured_total=result.sim.total_elements(),
        comm_predicted=predicted,
        rounds=result.rounds,
        delta_rank_per_client=[s.delta_rank for s in result.clients],
        client_ranks=client_ranks,
        global_ranks=list(result.features.ranks),
        privacy_audit="pass" if audit.passed else "fail",
        privacy_offenders=audit.offending,
        cost_model=compute_cost_model(
            dims, list(result.features.ranks), config.clients, config.rounds, "master-slave"
        ),
    )


def _run_decentralized(config: ExperimentConfig, tensors: list[DenseTensor]) -> RunReport:
    topo, mixing = resolve_topology(config)
    result = run_decentralized(
        tensors,
        mixing,
        config.eps1,
        config.eps2,
        config.r1,
        config.rounds,
        topology=topo,
    )
    pairs = [
        (state.local_tensor, reconstruct_client(state.personal_core, feats))
        for state, feats in zip(result.clients, result.features_per_node)
    ]
    dims = tensors[0].dims
    realized_r1 = result.clients[0].payload.shape[0]
    predicted = [comm_predicted_dec(config.rounds, realized_r1, dims)] * len(tensors)
    audit = audit_privacy(result.sim.messages, [s.personal_core for s in result.clients])
    return _base_report(
        config,
        rse_global=rse_global(pairs),
        rse_per_client=[rse(x, xh) for x, xh in pairs],
        comm_measured_per_link=result.per_node_elements,
        comm_measured_total=result.sim.total_elements(),
        comm_predicted=predicted,
        rounds=result.rounds,
        lambda2=result.lambda2,
        consensus_error_trace=result.error_trace,
        delta_rank_per_client=[s.delta_rank for s in result.clients],
        client_ranks=[[1, s.payload.shape[0]] for s in result.clients],
        global_ranks=list(result.features_per_node[0].ranks),
        privacy_audit="pass" if audit.passed else "fail",
        privacy_offenders=audit.offending,
        cost_model=compute_cost_model(
            dims, list(result.features_per_node[0].ranks), config.clients,
            config.rounds, "decentralized",
        ),
    )


SWEEPABLE = ("r1", "rounds", "eps1", "eps2", "clients", "missing_fraction", "seed")


def run_sweep(config: ExperimentConfig) -> list[RunReport]:
    """Cross product over the configured grid, one report per combination."""
    if not config.sweep:
        raise ConfigError("sweep requires a non-empty grid")
    bad = set(config.sweep) - set(SWEEPABLE)
    if bad:
        raise ConfigError(f"cannot sweep over {sorted(bad)}; allowed: {SWEEPABLE}")
    keys = sorted(config.sweep)
    grids = [config.sweep[k] for k in keys]
    if any(not g for g in grids):
        raise ConfigError("sweep grids must be non-empty lists")
    reports = []
    for combo in itertools.product(*grids):
        run_cfg = ExperimentConfig.from_dict(config.to_dict())
        run_cfg.sweep = {}
        for key, value in zip(keys, combo):
            setattr(run_cfg, key, value)
        reports.append(run_experiment(run_cfg))
    return reports


# --------------------------- classification ---------------------------


@dataclass
class ClassificationReport:
    m: int
    k: int
    centralized_selected: list[list[int]]
    federated_selected: list[list[int]]
    overlap: list[int]
    centralized_train: float
    centralized_test: float
    federated_train: float
    federated_test: float

    def to_dict(self) -> dict:
        return asdict(self)


def run_classification(
    x: DenseTensor,
    labels: np.ndarray,
    clients: int,
    r1: int,
    eps1: float,
    eps2: float,
    m: int,
    k: int = 5,
    repeats: int = 10,
    seed: int = 1,
) -> ClassificationReport:
    """Compare kNN accuracy on federated (master-slave) features against the
    centralized decomposition of the same data."""
    central = run_centralized(partition_mode1(x, clients), eps1, r1)
    federated = run_master_slave(partition_mode1(x, clients), eps1, eps2, r1)

    sel_central = select_top_m(feature_variance(central.features), m)
    sel_fed = select_top_m(feature_variance(federated.features), m)
    overlap = [
        len(set(a) & set(b))
        for a, b in zip(sel_central.selected, sel_fed.selected)
    ]
    cv_central = cross_validate(x, labels, sel_central, k=k, repeats=repeats, seed=seed)
    cv_fed = cross_validate(x, labels, sel_fed, k=k, repeats=repeats, seed=seed)
    return ClassificationReport(
        m=m,
        k=k,
        centralized_selected=sel_central.selected,
        federated_selected=sel_fed.selected,
        overlap=overlap,
        centralized_train=cv_central.mean_train,
        centralized_test=cv_central.mean_test,
        federated_train=cv_fed.mean_train,
        federated_test=cv_fed.mean_test,
    )


# --------------------------- topology analysis ---------------------------


def topology_report(topo: cnet.Topology, mixing_rule: str = "degree") -> dict:
    """Spectral and degree summary plus advisory round estimates."""
    if mixing_rule == "magic":
        mixing = cnet.mixing_magic(topo.node_count)
    else:
        mixing = cnet.mixing_from_degree_rule(topo)
    lam2 = cnet.lambda2(mixing)
    degrees = topo.degrees()
    alphas = [0.1, 0.01, 0.001]
    if lam2 <= 0:
        estimated = {str(a): 1 for a in alphas}  # one exact-averaging round
    else:
        estimated = {str(a): cnet.estimate_rounds(lam2, a) for a in alphas}
    return {
        "nodes": topo.node_count,
        "edges": len(topo.edges),
        "density": topo.density(),
        "degree_min": int(degrees.min()),
        "degree_max": int(degrees.max()),
        "degree_mean": float(degrees.mean()),
        "mixing": mixing.source,
        "lambda2": lam2,
        "estimated_rounds": estimated,
    }
