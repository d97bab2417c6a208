"""Topologies, doubly stochastic mixing matrices, and average consensus.

Two mixing constructions are provided: the degree rule, which works on any
connected graph, and the magic-square construction the experiments use for
fully connected networks. Both yield symmetric doubly stochastic matrices, so
the consensus iteration contracts the deviation from the mean by the second
largest eigenvalue magnitude per round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cttfed.network import PAYLOAD_CONSENSUS_STATE, NetworkSim

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph over nodes 1..node_count."""

    node_count: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (1 <= i < j <= self.node_count):
                raise ValueError(f"edge ({i}, {j}) out of range or unordered")

    @classmethod
    def from_edge_list(cls, node_count: int, pairs: list[tuple[int, int]]) -> "Topology":
        edges = frozenset((min(i, j), max(i, j)) for i, j in pairs)
        return cls(node_count=node_count, edges=edges)

    @classmethod
    def complete(cls, node_count: int) -> "Topology":
        pairs = [
            (i, j)
            for i in range(1, node_count + 1)
            for j in range(i + 1, node_count + 1)
        ]
        return cls.from_edge_list(node_count, pairs)

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.node_count, dtype=int)
        for i, j in self.edges:
            d[i - 1] += 1
            d[j - 1] += 1
        return d

    def neighbors(self, node: int) -> list[int]:
        out = [j for i, j in self.edges if i == node]
        out += [i for i, j in self.edges if j == node]
        return sorted(out)

    def density(self) -> float:
        possible = self.node_count * (self.node_count - 1) / 2
        return len(self.edges) / possible if possible else 1.0

    def components(self) -> list[list[int]]:
        seen: set[int] = set()
        comps = []
        for start in range(1, self.node_count + 1):
            if start in seen:
                continue
            stack, comp = [start], []
            seen.add(start)
            while stack:
                node = stack.pop()
                comp.append(node)
                for nb in self.neighbors(node):
                    if nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) == 1


@dataclass
class MixingMatrix:
    """Symmetric doubly stochastic weight matrix over a topology."""

    matrix: np.ndarray
    source: str  # degree-rule | magic | user-supplied

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=float)
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"mixing matrix must be square, got {m.shape}")
        if np.abs(m - m.T).max() > STOCHASTIC_TOL:
            raise ValueError("mixing matrix must be symmetric")
        if np.abs(m.sum(axis=0) - 1).max() > STOCHASTIC_TOL:
            raise ValueError("mixing matrix columns must sum to 1")
        if np.abs(m.sum(axis=1) - 1).max() > STOCHASTIC_TOL:
            raise ValueError("mixing matrix rows must sum to 1")

    @property
    def node_count(self) -> int:
        return self.matrix.shape[0]


def mixing_from_degree_rule(t: Topology) -> MixingMatrix:
    """Weights 1/K on edges and (K - d_i)/K on the diagonal."""
    if not t.is_connected():
        raise ValueError(f"topology is disconnected: components {t.components()}")
    k = t.node_count
    m = np.zeros((k, k))
    for i, j in t.edges:
        m[i - 1, j - 1] = 1.0 / k
        m[j - 1, i - 1] = 1.0 / k
    deg = t.degrees()
    for i in range(k):
        m[i, i] = (k - deg[i]) / k
    return MixingMatrix(matrix=m, source="degree-rule")


def magic_square(n: int) -> np.ndarray:
    """Classical deterministic magic square of order n >= 3.

    Odd orders use the Siamese method, doubly even orders the
    diagonal-complement pattern, and singly even orders the LUX extension.
    """
    if n < 3:
        raise ValueError("magic squares need order >= 3")
    if n % 2 == 1:
        a = np.zeros((n, n), dtype=int)
        i, j = 0, n // 2
        for v in range(1, n * n + 1):
            a[i, j] = v
            i2, j2 = (i - 1) % n, (j + 1) % n
            if a[i2, j2]:
                i2, j2 = (i + 1) % n, j
            i, j = i2, j2
        return a
    if n % 4 == 0:
        a = np.arange(1, n * n + 1).reshape(n, n)
        for i in range(n):
            for j in range(n):
                if (i % 4 in (0, 3)) == (j % 4 in (0, 3)):
                    a[i, j] = n * n + 1 - a[i, j]
        return a
    # singly even: LUX blocks over a magic square of half order
    m = n // 2
    half = magic_square(m)
    a = np.zeros((n, n), dtype=int)
    k = (m - 1) // 2
    lux = np.empty((m, m), dtype="<U1")
    for i in range(m):
        lux[i, :] = "L" if i < k + 1 else ("U" if i == k + 1 else "X")
    lux[k, m // 2] = "U"
    lux[k + 1, m // 2] = "L"
    offsets = {
        "L": np.array([[4, 1], [2, 3]]),
        "U": np.array([[1, 4], [2, 3]]),
        "X": np.array([[1, 4], [3, 2]]),
    }
    for i in range(m):
        for j in range(m):
            a[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = (half[i, j] - 1) * 4 + offsets[lux[i, j]]
    return a


def mixing_magic(k: int) -> MixingMatrix:
    """Symmetrized, normalized magic square: (A + A^T) / (2c), c = K(K^2+1)/2.

    Intended for fully connected networks; every off-diagonal weight is
    positive.
    """
    a = magic_square(k)
    c = k * (k * k + 1) // 2
    return MixingMatrix(matrix=(a + a.T) / (2.0 * c), source="magic")


def lambda2(m: MixingMatrix) -> float:
    """Second largest eigenvalue magnitude of the mixing matrix."""
    eig = np.linalg.eigvalsh(m.matrix)
    mags = np.sort(np.abs(eig))[::-1]
    return float(mags[1]) if mags.size > 1 else 0.0


def estimate_rounds(lam2: float, alpha: float) -> int:
    """Rounds needed to push the consensus error below alpha: the geometric
    bound ceil(log(1/alpha) / log(1/lambda2))."""
    if not 0 < lam2 < 1:
        raise ValueError(f"lambda2 must be in (0, 1), got {lam2}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    return max(1, math.ceil(math.log(1 / alpha) / math.log(1 / lam2)))


def consensus_error(states: list[np.ndarray], initial_energy: float | None = None) -> float:
    """alpha_l: deviation of the states from their mean, normalized by the
    total energy of the initial states (the states themselves if not given)."""
    mean = sum(states) / len(states)
    dev = sum(float(np.linalg.norm(z - mean)) ** 2 for z in states)
    if initial_energy is None:
        initial_energy = sum(float(np.linalg.norm(z)) ** 2 for z in states)
    if initial_energy == 0:
        return 0.0
    return math.sqrt(dev / initial_energy)


def consensus_iterate(
    states: list[np.ndarray],
    mixing: MixingMatrix,
    rounds: int,
    sim: NetworkSim | None = None,
    topology: Topology | None = None,
) -> tuple[list[np.ndarray], list[float]]:
    """Run synchronous average-consensus rounds Z[l+1] = sum_j m_kj Z[l].

    Returns the final states and the error trace [alpha_1 .. alpha_rounds].
    When a simulator is given, each node's state broadcast is logged to its
    topology neighbors every round (all pairs when no topology is given).
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    k = mixing.node_count
    if len(states) != k:
        raise ValueError(f"expected {k} states, got {len(states)}")
    shape = states[0].shape
    if any(z.shape != shape for z in states):
        raise ValueError("all consensus states must share one shape")

    current = [np.asarray(z, dtype=float) for z in states]
    initial_energy = sum(float(np.linalg.norm(z)) ** 2 for z in current)
    trace: list[float] = []
    for _ in range(rounds):
        if sim is not None:
            sim.begin_round()
            for node in range(1, k + 1):
                receivers = (
                    topology.neighbors(node)
                    if topology is not None
                    else [j for j in range(1, k + 1) if j != node]
                )
                sim.send(
                    f"node:{node}",
                    [f"node:{j}" for j in receivers],
                    PAYLOAD_CONSENSUS_STATE,
                    [current[node - 1]],
                )
        current = [
            sum(mixing.matrix[i, j] * current[j] for j in range(k))
            for i in range(k)
        ]
        trace.append(consensus_error(current, initial_energy))
    return current, trace


def random_topology(k: int, density: float, seed: int) -> Topology:
    """Connected random graph: a random spanning tree plus uniform extra edges
    until ceil(density * K(K-1)/2) edges. Deterministic under the seed."""
    if k < 2:
        raise ValueError("need at least 2 nodes")
    possible = k * (k - 1) // 2
    target = math.ceil(density * possible)
    if target < k - 1 or target > possible:
        raise ValueError(
            f"density {density} infeasible for {k} nodes"
            f" (needs between {k - 1} and {possible} edges)"
        )
    rng = np.random.Generator(np.random.Philox(seed))
    order = rng.permutation(k) + 1
    edges: set[tuple[int, int]] = set()
    for idx in range(1, k):
        anchor = order[rng.integers(0, idx)]
        a, b = int(order[idx]), int(anchor)
        edges.add((min(a, b), max(a, b)))
    rest = [
        (i, j)
        for i in range(1, k + 1)
        for j in range(i + 1, k + 1)
        if (i, j) not in edges
    ]
    extra = target - len(edges)
    if extra > 0:
        pick = rng.choice(len(rest), size=extra, replace=False)
        for idx in sorted(int(p) for p in pick):
            edges.add(rest[idx])
    return Topology(node_count=k, edges=frozenset(edges))


def save_edge_list(t: Topology, path: str | Path) -> None:
    """Edge-list text file: first line K, then 1-indexed "i j" pairs."""
    lines = [str(t.node_count)]
    lines += [f"{i} {j}" for i, j in sorted(t.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_edge_list(path: str | Path) -> Topology:
    raw = Path(path).read_text().strip().splitlines()
    if not raw:
        raise ValueError(f"empty edge-list file: {path}")
    try:
        k = int(raw[0].strip())
    except ValueError as exc:
        raise ValueError(f"first line of {path} must be the node count") from exc
    pairs = []
    for line in raw[1:]:
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line in {path}: {line!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    return Topology.from_edge_list(k, pairs)
