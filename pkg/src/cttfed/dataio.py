"""Synthetic coupled-data generation, masking, CSV ingestion, tensor files.

All randomness uses numpy's Philox counter-based 64-bit generator so streams
are reproducible across platforms from a single integer seed. Seed 0 is
reserved for test fixtures.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cttfed.tensor import DenseTensor

TENSOR_FILE_MAGIC = "TEN v1"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class SyntheticSpec:
    """Recipe for coupled synthetic data.

    ``ranks`` are the generating bond ranks [R_1 .. R_{N-1}]; ``density`` is
    the proportion of non-zero entries kept in the shared feature cores.
    """

    dims: list[int]
    client_count: int
    ranks: list[int]
    density: float = 0.4
    seed: int = 1

    def __post_init__(self) -> None:
        if len(self.dims) < 2:
            raise ValueError("synthetic tensors need order >= 2")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"bad dims {self.dims}")
        if len(self.ranks) != len(self.dims) - 1:
            raise ValueError(
                f"need {len(self.dims) - 1} generating ranks for dims {self.dims}"
            )
        if any(r < 1 for r in self.ranks):
            raise ValueError(f"bad ranks {self.ranks}")
        if self.client_count < 1 or self.dims[0] % self.client_count != 0:
            raise ValueError(
                f"client count {self.client_count} must divide I1 = {self.dims[0]}"
            )
        if not 0 < self.density <= 1:
            raise ValueError(f"density must be in (0, 1], got {self.density}")


@dataclass
class SyntheticData:
    tensors: list[DenseTensor]
    personal_cores: list[np.ndarray]  # ground truth, (I1/K) x R1 each
    feature_cores: list[np.ndarray]  # ground truth, shared across clients


def gen_synthetic(spec: SyntheticSpec) -> SyntheticData:
    """Draw shared sparsified-Gaussian feature cores and dense Gaussian
    personal cores, then contract X^k = G_1^k x G_2 x ... x G_N.

    Stream order under the seed: feature cores for modes 2..N first, then the
    personal cores for clients 1..K, each drawn before its sparsity mask.
    """
    rng = make_rng(spec.seed)
    dims = tuple(spec.dims)
    bonds = [1] + list(spec.ranks) + [1]
    feature_cores = []
    for n in range(1, len(dims)):
        core = rng.standard_normal((bonds[n], dims[n], bonds[n + 1]))
        core *= rng.random(core.shape) < spec.density
        feature_cores.append(core)

    block = dims[0] // spec.client_count
    tensors, personal = [], []
    for _ in range(spec.client_count):
        g1 = rng.standard_normal((block, bonds[1]))
        personal.append(g1)
        x = g1
        for core in feature_cores:
            left = np.reshape(x, (-1, x.shape[-1]), order="F")
            right = np.reshape(core, (core.shape[0], -1), order="F")
            x = np.reshape(left @ right, x.shape[:-1] + core.shape[1:], order="F")
        tensors.append(DenseTensor(x[..., 0]))
    return SyntheticData(tensors=tensors, personal_cores=personal, feature_cores=feature_cores)


def apply_missing(t: DenseTensor, fraction: float, seed: int) -> tuple[DenseTensor, np.ndarray]:
    """Zero each entry independently with probability ``fraction``.

    Returns the masked tensor and the boolean keep-mask (True = observed);
    zeroed entries are exactly the mask complement.
    """
    if not 0 <= fraction < 1:
        raise ValueError(f"missing fraction must be in [0, 1), got {fraction}")
    rng = make_rng(seed)
    mask = rng.random(t.dims) >= fraction
    return DenseTensor(t.data * mask), mask


def load_table_csv(
    path: str | Path,
    id_column: str | None,
    feature_columns: list[str] | None,
    mode_split: list[int],
) -> tuple[DenseTensor, int]:
    """Read a numeric CSV table into a tensor of shape (rows, *mode_split).

    Rows become mode 1; the feature columns are grouped into the remaining
    modes colexicographically. Missing or non-numeric cells become 0 and are
    counted in the returned missing total.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        header = [h.strip() for h in header]
        rows = [row for row in reader if row]

    if feature_columns is None:
        feature_columns = [h for h in header if h != id_column]
    missing_cols = [c for c in feature_columns if c not in header]
    if missing_cols:
        raise ValueError(f"{path}: columns not found: {missing_cols}")
    if math.prod(mode_split) != len(feature_columns):
        raise ValueError(
            f"{path}: {len(feature_columns)} feature columns cannot fill modes {mode_split}"
        )
    col_idx = [header.index(c) for c in feature_columns]

    values = np.zeros((len(rows), len(col_idx)))
    missing = 0
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        for c, idx in enumerate(col_idx):
            cell = row[idx].strip()
            if not cell:
                missing += 1
                continue
            try:
                values[r, c] = float(cell)
            except ValueError:
                missing += 1
    dims = (len(rows),) + tuple(mode_split)
    return DenseTensor(np.reshape(values, dims, order="F")), missing


def save_tensor(t: DenseTensor, path: str | Path) -> None:
    """Text tensor file: magic line, order, extents, then one value per line
    in colexicographic order. repr() keeps the round trip value-exact."""
    lines = [TENSOR_FILE_MAGIC, str(t.order), " ".join(str(d) for d in t.dims)]
    lines.extend(repr(float(v)) for v in t.ravel_colex())
    Path(path).write_text("\n".join(lines) + "\n")


def load_tensor(path: str | Path) -> DenseTensor:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != TENSOR_FILE_MAGIC:
        raise ValueError(f"{path}: missing '{TENSOR_FILE_MAGIC}' header")
    try:
        order = int(lines[1])
        dims = tuple(int(x) for x in lines[2].split())
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed header") from exc
    if len(dims) != order:
        raise ValueError(f"{path}: order {order} but {len(dims)} extents")
    expected = math.prod(dims)
    body = [line.strip() for line in lines[3:] if line.strip()]
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} values, found {len(body)}")
    try:
        buffer = np.array([float(x) for x in body])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric value line") from exc
    return DenseTensor.from_flat(dims, buffer)


def partition_mode1(t: DenseTensor, clients: int) -> list[DenseTensor]:
    """Split mode 1 into ``clients`` contiguous equal blocks."""
    if clients < 1 or t.dims[0] % clients != 0:
        raise ValueError(f"{clients} clients cannot evenly split I1 = {t.dims[0]}")
    block = t.dims[0] // clients
    return [
        DenseTensor(np.ascontiguousarray(t.data[k * block : (k + 1) * block]))
        for k in range(clients)
    ]


def stack_mode1(parts: list[DenseTensor]) -> DenseTensor:
    """Inverse of :func:`partition_mode1`."""
    return DenseTensor(np.concatenate([p.data for p in parts], axis=0))
