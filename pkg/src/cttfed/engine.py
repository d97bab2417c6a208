"""The federated CTT protocols.

Both network variants share the same client-side step: a rank-forced first
truncated SVD that splits the local tensor into a private personal core and a
transmissible payload. The master-slave variant ships per-client feature
cores to a server that fuses and re-factorizes them; the decentralized
variant replaces the server with average-consensus rounds on the payloads,
after which every node extracts features locally.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from cttfed.consensus import (
    MixingMatrix,
    Topology,
    consensus_iterate,
    lambda2,
)
from cttfed.network import (
    PAYLOAD_FEATURE_CORES,
    PAYLOAD_GLOBAL_CORES,
    NetworkSim,
)
from cttfed.tensor import (
    DenseTensor,
    contract,
    frobenius_norm,
    truncated_svd,
    tt_svd,
)


@dataclass
class ClientState:
    """One federated participant after its local step.

    ``personal_core`` is the orthonormal-column factor of the first SVD and
    never leaves the client. ``payload`` is the weighted right factor
    D = S V^T; ``feature_cores`` (master-slave path only) are the local TT
    cores for the feature modes.
    """

    client_id: int
    local_tensor: DenseTensor
    personal_core: np.ndarray
    payload: np.ndarray
    delta1: float
    delta_rank: int  # rank the delta rule alone would have retained
    feature_cores: list[np.ndarray] | None = None


@dataclass
class GlobalFeatures:
    """Feature-mode cores G_2 .. G_N; cores[i] has shape (R_{i+1}, I_{i+2}, R_{i+2})."""

    cores: list[np.ndarray]
    ranks: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.cores = [np.asarray(c, dtype=float) for c in self.cores]
        inferred = [self.cores[0].shape[0]] + [c.shape[2] for c in self.cores]
        if not self.ranks:
            self.ranks = inferred
        if self.ranks != inferred:
            raise ValueError(f"ranks {self.ranks} do not match cores {inferred}")
        for a, b in zip(self.cores, self.cores[1:]):
            if a.shape[2] != b.shape[0]:
                raise ValueError(f"bond mismatch: {a.shape} vs {b.shape}")
        if self.ranks[-1] != 1:
            raise ValueError("feature chain must end with rank 1")

    @property
    def feature_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)


def _chain(cores: list[np.ndarray]) -> DenseTensor:
    """Contract a core list left to right; keeps the boundary bond modes."""
    acc = DenseTensor(cores[0])
    for core in cores[1:]:
        acc = contract(acc, DenseTensor(core), 1)
    return acc


def _feature_sweep(payload: np.ndarray, feature_dims: tuple[int, ...], delta: float) -> list[np.ndarray]:
    """Continue TT-SVD on the payload with the delta rule, producing the
    feature-mode cores. The payload's bond rank acts as the leading extent."""
    r1 = payload.shape[0]
    if len(feature_dims) == 1:
        return [np.reshape(payload, (r1, feature_dims[0], 1), order="F")]
    cores: list[np.ndarray] = []
    prev = r1
    carrier = np.reshape(payload, (r1 * feature_dims[0], -1), order="F")
    for n, extent in enumerate(feature_dims[:-1]):
        res = truncated_svd(carrier, delta=delta)
        cores.append(np.reshape(res.left_factors, (prev, extent, res.rank), order="F"))
        prev = res.rank
        if n + 1 < len(feature_dims) - 1:
            carrier = np.reshape(
                res.weighted_right, (prev * feature_dims[n + 1], -1), order="F"
            )
        else:
            cores.append(
                np.reshape(res.weighted_right, (prev, feature_dims[-1], 1), order="F")
            )
    return cores


def client_local_step(
    x: DenseTensor, eps1: float, r1: int, need_cores: bool = False, client_id: int = 0
) -> ClientState:
    """Local decomposition at one client.

    The first SVD truncates at the forced common rank ``r1`` (the rank the
    protocols treat as an input); the later sweeps, when ``need_cores`` is
    set, use the client's truncation parameter
    delta_1 = eps1 / sqrt(N-1) * ||x||_F.
    """
    if x.order < 2:
        raise ValueError("client tensors must have order >= 2")
    norm = frobenius_norm(x)
    if norm == 0:
        raise ValueError("degenerate client tensor: zero norm makes the truncation undefined")
    delta1 = eps1 / math.sqrt(x.order - 1) * norm

    mat = np.reshape(x.data, (x.dims[0], -1), order="F")
    res = truncated_svd(mat, rank=r1)
    if res.rank < r1:
        warnings.warn(
            f"client {client_id}: forced rank {r1} exceeds numerical rank {res.rank}",
            stacklevel=2,
        )
    delta_rank = truncated_svd(mat, delta=delta1).rank

    feature_cores = None
    if need_cores:
        feature_cores = _feature_sweep(res.weighted_right, x.dims[1:], delta1)
    return ClientState(
        client_id=client_id,
        local_tensor=x,
        personal_core=res.left_factors,
        payload=res.weighted_right,
        delta1=delta1,
        delta_rank=delta_rank,
        feature_cores=feature_cores,
    )


def server_aggregate(core_sets: list[list[np.ndarray]]) -> DenseTensor:
    """Fuse the clients' feature-core chains: W = (1/K) sum_k G_2^k x ... x G_N^k.

    The sum runs in ascending client order for reproducibility. The result is
    stored as an order-(N-1) tensor whose first extent merges R_1 with I_2.
    """
    if not core_sets:
        raise ValueError("no client core sets to aggregate")
    ref = [c.shape for c in core_sets[0]]
    for k, cores in enumerate(core_sets):
        if cores[0].shape[0] != ref[0][0]:
            raise ValueError(
                f"client {k} first rank {cores[0].shape[0]} != {ref[0][0]}"
            )
        if tuple(c.shape[1] for c in cores) != tuple(s[1] for s in ref):
            raise ValueError(f"client {k} feature extents differ")
    acc: np.ndarray | None = None
    for cores in core_sets:
        term = _chain(cores).data[..., 0]  # (R1, I2, ..., IN)
        acc = term if acc is None else acc + term
    w = acc / len(core_sets)
    r1, i2 = w.shape[0], w.shape[1]
    merged = (r1 * i2,) + w.shape[2:]
    return DenseTensor(np.reshape(w, merged, order="F"))


def server_extract(w: DenseTensor, eps2: float, r1: int) -> GlobalFeatures:
    """TT-SVD(eps2) on the aggregated tensor and split of the leading core.

    ``w`` is the order-(N-1) aggregate whose first extent is R_1 * I_2; the
    first extracted core is unmerged into the order-3 feature core G_2.
    """
    if w.order < 2:
        raise ValueError("extraction needs an aggregate of order >= 2 (data order >= 3)")
    if frobenius_norm(w) == 0:
        raise ValueError("aggregated tensor is zero")
    if w.dims[0] % r1 != 0:
        raise ValueError(f"first extent {w.dims[0]} is not divisible by rank {r1}")
    train = tt_svd(w, eps2)
    first = train.cores[0]  # (1, R1*I2, R2)
    i2 = w.dims[0] // r1
    g2 = np.reshape(first[0], (r1, i2, first.shape[2]), order="F")
    return GlobalFeatures(cores=[g2] + train.cores[1:])


def reconstruct_client(personal_core: np.ndarray, features: GlobalFeatures) -> DenseTensor:
    """Client-side reconstruction X-hat = G_1^k x G_2 x ... x G_N."""
    chain = _chain(features.cores)  # (R1, I2, ..., IN, 1)
    out = contract(DenseTensor(personal_core), chain, 1)
    return out.reshape(out.dims[:-1])


@dataclass
class MasterSlaveResult:
    clients: list[ClientState]
    features: GlobalFeatures
    sim: NetworkSim
    rounds: int
    uplink_elements: list[int]
    downlink_elements: int


def run_master_slave(
    tensors: list[DenseTensor],
    eps1: float,
    eps2: float,
    r1: int,
    sim: NetworkSim | None = None,
) -> MasterSlaveResult:
    """Two-round master-slave protocol.

    Round 1: every client uplinks its feature cores. Round 2: the server
    fuses them, extracts the global features, and broadcasts those back.
    Personal cores never traverse a link.
    """
    if not tensors:
        raise ValueError("need at least one client tensor")
    sim = sim if sim is not None else NetworkSim()
    clients = [
        client_local_step(x, eps1, r1, need_cores=True, client_id=k + 1)
        for k, x in enumerate(tensors)
    ]

    sim.begin_round()
    uplink = []
    for state in clients:
        sim.send(
            f"client:{state.client_id}", "server", PAYLOAD_FEATURE_CORES, state.feature_cores
        )
        uplink.append(int(sum(c.size for c in state.feature_cores)))

    realized_r1 = clients[0].payload.shape[0]
    w = server_aggregate([state.feature_cores for state in clients])
    features = server_extract(w, eps2, realized_r1)

    sim.begin_round()
    sim.send(
        "server",
        [f"client:{state.client_id}" for state in clients],
        PAYLOAD_GLOBAL_CORES,
        features.cores,
    )
    downlink = int(sum(c.size for c in features.cores))
    return MasterSlaveResult(
        clients=clients,
        features=features,
        sim=sim,
        rounds=sim.rounds,
        uplink_elements=uplink,
        downlink_elements=downlink,
    )


@dataclass
class DecentralizedResult:
    clients: list[ClientState]
    features_per_node: list[GlobalFeatures]
    sim: NetworkSim
    rounds: int
    per_node_elements: list[int]
    error_trace: list[float]
    lambda2: float


def run_decentralized(
    tensors: list[DenseTensor],
    mixing: MixingMatrix,
    eps1: float,
    eps2: float,
    r1: int,
    rounds: int,
    sim: NetworkSim | None = None,
    topology: Topology | None = None,
) -> DecentralizedResult:
    """Serverless protocol: consensus on the payloads, then local extraction.

    Every node runs the client step without feature cores, participates in
    ``rounds`` synchronous average-consensus iterations on Z[0] = D_1^k, and
    finally extracts its own feature train from the mixed payload.
    """
    if not tensors:
        raise ValueError("need at least one node tensor")
    if len(tensors) != mixing.node_count:
        raise ValueError(
            f"{len(tensors)} tensors for a {mixing.node_count}-node mixing matrix"
        )
    if topology is not None and not topology.is_connected():
        raise ValueError(
            f"topology is disconnected: components {topology.components()}"
        )
    lam2 = lambda2(mixing)
    if lam2 >= 1 - 1e-12:
        raise ValueError(f"lambda2 = {lam2}: consensus will not converge")
    sim = sim if sim is not None else NetworkSim()

    clients = [
        client_local_step(x, eps1, r1, need_cores=False, client_id=k + 1)
        for k, x in enumerate(tensors)
    ]
    shapes = {state.payload.shape for state in clients}
    if len(shapes) > 1:
        raise ValueError(f"clients realized different payload shapes: {sorted(shapes)}")

    states = [state.payload for state in clients]
    mixed, trace = consensus_iterate(states, mixing, rounds, sim=sim, topology=topology)

    dims = tensors[0].dims
    realized_r1 = clients[0].payload.shape[0]
    features_per_node = []
    for z in mixed:
        w = DenseTensor.from_flat((realized_r1 * dims[1],) + dims[2:], np.ravel(z, order="F"))
        features_per_node.append(server_extract(w, eps2, realized_r1))

    per_node = [
        sim.sent_elements.get(f"node:{state.client_id}", 0) for state in clients
    ]
    return DecentralizedResult(
        clients=clients,
        features_per_node=features_per_node,
        sim=sim,
        rounds=rounds,
        per_node_elements=per_node,
        error_trace=trace,
        lambda2=lam2,
    )


@dataclass
class CentralizedResult:
    personal_core: np.ndarray
    features: GlobalFeatures
    ranks: list[int]


def run_centralized(tensors: list[DenseTensor], eps1: float, r1: int) -> CentralizedResult:
    """Non-federated reference: one TT-SVD over the mode-1 stacked data."""
    stacked = np.concatenate([t.data for t in tensors], axis=0)
    train = tt_svd(DenseTensor(stacked), eps1, first_rank=r1)
    personal = np.reshape(train.cores[0], train.cores[0].shape[1:], order="F")
    features = GlobalFeatures(cores=train.cores[1:])
    return CentralizedResult(personal_core=personal, features=features, ranks=train.ranks)
