"""Dense tensor container and the numerical kernels used by the protocols.

All layout semantics are colexicographic (first index varies fastest, the
Matlab/Fortran convention): reshapes and unfoldings are defined on the flat
colexicographic buffer, so a reshape is a pure relabeling of the same data.
Mode indices in :func:`unfold` / :func:`refold` are 1-based.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class RankDeficiencyWarning(UserWarning):
    """A forced first rank exceeded the numerical rank; the train is thinner."""


@dataclass(eq=False)
class DenseTensor:
    """N-way dense tensor with explicit extents.

    ``data`` is held as an ndarray of shape ``dims``; the canonical flat
    buffer is its column-major raveling.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim < 1:
            self.data = self.data.reshape(1)
        if any(d < 1 for d in self.data.shape):
            raise ValueError(f"every extent must be >= 1, got dims {self.data.shape}")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def order(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @classmethod
    def from_flat(cls, dims: tuple[int, ...] | list[int], buffer: np.ndarray) -> "DenseTensor":
        """Build a tensor from its colexicographic flat buffer."""
        buffer = np.asarray(buffer, dtype=float).ravel()
        if buffer.size != math.prod(dims):
            raise ValueError(
                f"buffer length {buffer.size} does not match dims {tuple(dims)}"
            )
        return cls(np.reshape(buffer, tuple(dims), order="F"))

    def ravel_colex(self) -> np.ndarray:
        """The flat buffer in colexicographic (first-index-fastest) order."""
        return np.ravel(self.data, order="F")

    def reshape(self, dims: tuple[int, ...] | list[int]) -> "DenseTensor":
        """Relabel to new extents with the same flat buffer."""
        if math.prod(dims) != self.size:
            raise ValueError(f"cannot reshape size {self.size} into dims {tuple(dims)}")
        return DenseTensor(np.reshape(self.data, tuple(dims), order="F"))


@dataclass
class TTDecomposition:
    """Tensor train: cores[n] has shape (R_n, I_{n+1}, R_{n+1}) with ranks[0]=1.

    A complete train also has ranks[-1] == 1; the engine's internal partial
    trains may end with a larger final rank.
    """

    cores: list[np.ndarray]
    ranks: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.cores = [np.asarray(c, dtype=float) for c in self.cores]
        inferred = [self.cores[0].shape[0]] + [c.shape[2] for c in self.cores]
        if not self.ranks:
            self.ranks = inferred
        if self.ranks != inferred:
            raise ValueError(f"ranks {self.ranks} do not match core shapes {inferred}")
        for a, b in zip(self.cores, self.cores[1:]):
            if a.shape[2] != b.shape[0]:
                raise ValueError(
                    f"bond rank mismatch between cores: {a.shape} vs {b.shape}"
                )

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def order(self) -> int:
        return len(self.cores)

    def is_complete(self) -> bool:
        return self.ranks[0] == 1 and self.ranks[-1] == 1


@dataclass
class SvdResult:
    """Truncated SVD of a matrix: input ~= left_factors @ weighted_right.

    ``weighted_right`` is diag(singular_values) @ Vt; ``discarded_energy`` is
    the sum of squared discarded singular values, so the approximation error
    satisfies ||input - U D||_F**2 == discarded_energy.
    """

    left_factors: np.ndarray
    weighted_right: np.ndarray
    singular_values: np.ndarray
    discarded_energy: float

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)


def unfold(t: DenseTensor, n: int) -> np.ndarray:
    """Mode-n unfolding (1-based): I_n x prod(other extents) matrix.

    Columns run over the remaining modes in colexicographic order, so the
    operation is inverted exactly by :func:`refold`.
    """
    if not 1 <= n <= t.order:
        raise ValueError(f"mode {n} out of range for order-{t.order} tensor")
    moved = np.moveaxis(t.data, n - 1, 0)
    return np.reshape(moved, (t.dims[n - 1], -1), order="F")


def refold(m: np.ndarray, n: int, dims: tuple[int, ...] | list[int]) -> DenseTensor:
    """Inverse of :func:`unfold` for the given mode and original dims."""
    dims = tuple(dims)
    if not 1 <= n <= len(dims):
        raise ValueError(f"mode {n} out of range for dims {dims}")
    moved_dims = (dims[n - 1],) + dims[: n - 1] + dims[n:]
    data = np.reshape(np.asarray(m, dtype=float), moved_dims, order="F")
    return DenseTensor(np.moveaxis(data, 0, n - 1))


def contract(a: DenseTensor, b: DenseTensor, shared: int = 1) -> DenseTensor:
    """Contraction of a's trailing ``shared`` modes with b's leading ones.

    For matrices with shared=1 this is exactly the matrix product.
    """
    if shared < 1:
        raise ValueError("number of shared modes must be >= 1")
    if shared > a.order or shared > b.order:
        raise ValueError("shared modes exceed operand order")
    a_shared = a.dims[a.order - shared:]
    b_shared = b.dims[:shared]
    if a_shared != b_shared:
        raise ValueError(f"shared mode mismatch: {a_shared} vs {b_shared}")
    lead = a.dims[: a.order - shared]
    trail = b.dims[shared:]
    inner = math.prod(a_shared)
    am = np.reshape(a.data, (-1, inner), order="F")
    bm = np.reshape(b.data, (inner, -1), order="F")
    out = am @ bm
    out_dims = lead + trail
    if not out_dims:
        out_dims = (1,)
    return DenseTensor(np.reshape(out, out_dims, order="F"))


def frobenius_norm(t: DenseTensor) -> float:
    return float(np.linalg.norm(t.data))


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Orient each singular pair so the right vector's largest-magnitude entry
    # is positive. Keying the convention to the right factors keeps the
    # weighted-right payloads of different clients in a common gauge, which
    # the federated averaging step depends on.
    if vt.shape[0] == 0:
        return u, vt
    idx = np.argmax(np.abs(vt), axis=1)
    signs = np.sign(vt[np.arange(vt.shape[0]), idx])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def truncated_svd(
    m: np.ndarray, *, delta: float | None = None, rank: int | None = None
) -> SvdResult:
    """Truncated SVD under either a delta rule or a rank rule.

    delta rule: retain the minimal rank r such that the energy of the
    discarded singular values is <= delta**2 (so ||E||_F <= delta).
    rank rule: retain exactly min(rank, numerical rank) factors.

    At least one factor is always retained.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim {m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    if (delta is None) == (rank is None):
        raise ValueError("exactly one of delta= or rank= must be given")

    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("cannot retain a factor from a zero matrix")
    energies = s**2
    total = float(energies.sum())
    tol = max(m.shape) * np.finfo(float).eps * s[0]
    numerical_rank = max(int(np.count_nonzero(s > tol)), 1)

    if delta is not None:
        if delta < 0:
            raise ValueError("delta must be nonnegative")
        # tail[r] = energy discarded when keeping the leading r values;
        # below-noise values are never worth retaining
        tail = np.concatenate([np.cumsum(energies[::-1])[::-1], [0.0]])
        r = int(np.searchsorted(-tail, -float(delta) ** 2))
        r = min(max(r, 1), numerical_rank)
    else:
        if not 1 <= rank <= min(m.shape):
            raise ValueError(f"rank {rank} out of range for shape {m.shape}")
        r = min(rank, numerical_rank)

    u, vt = _fix_signs(u[:, :r], vt[:r, :])
    s = s[:r]
    discarded = float(total - energies[:r].sum())
    return SvdResult(
        left_factors=u,
        weighted_right=s[:, None] * vt,
        singular_values=s,
        discarded_energy=max(discarded, 0.0),
    )


def tt_svd(
    t: DenseTensor, eps: float, first_rank: int | None = None
) -> TTDecomposition:
    """Sequential truncated-SVD tensor-train factorization.

    The truncation parameter is delta = eps / sqrt(N-1) * ||t||_F and every
    SVD in the sweep discards at most delta of Frobenius error, which bounds
    the relative reconstruction error by eps. When ``first_rank`` is given
    the first SVD truncates at exactly min(first_rank, numerical rank) and
    only the later sweeps use the delta rule.
    """
    if t.order < 2:
        raise ValueError("tt_svd requires order >= 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    dims = t.dims
    if first_rank is not None and not 1 <= first_rank <= min(
        dims[0], math.prod(dims[1:])
    ):
        raise ValueError(f"first_rank {first_rank} out of range for dims {dims}")

    norm = frobenius_norm(t)
    delta = eps / math.sqrt(t.order - 1) * norm

    carrier = t.data
    ranks = [1]
    cores: list[np.ndarray] = []
    for n in range(t.order - 1):
        mat = np.reshape(carrier, (ranks[-1] * dims[n], -1), order="F")
        if n == 0 and first_rank is not None:
            res = truncated_svd(mat, rank=first_rank)
            if res.rank < first_rank:
                warnings.warn(
                    f"requested first rank {first_rank} exceeds numerical rank"
                    f" {res.rank}; the train is thinner",
                    RankDeficiencyWarning,
                    stacklevel=2,
                )
        else:
            res = truncated_svd(mat, delta=delta)
        cores.append(np.reshape(res.left_factors, (ranks[-1], dims[n], res.rank), order="F"))
        ranks.append(res.rank)
        carrier = res.weighted_right
    cores.append(np.reshape(carrier, (ranks[-1], dims[-1], 1), order="F"))
    ranks.append(1)
    return TTDecomposition(cores=cores, ranks=ranks)


def tt_reconstruct(tt: TTDecomposition) -> DenseTensor:
    """Contract a complete train back into a dense tensor."""
    if not tt.is_complete():
        raise ValueError(f"train is not complete: boundary ranks {tt.ranks[0]}, {tt.ranks[-1]}")
    acc = DenseTensor(tt.cores[0])
    for core in tt.cores[1:]:
        acc = contract(acc, DenseTensor(core), 1)
    # strip the unit boundary ranks
    return acc.reshape(tt.dims)
