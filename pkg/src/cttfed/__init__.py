"""Coupled tensor-train (CTT) decomposition over simulated federated networks.

The package is organized around the protocol pipeline:

- :mod:`cttfed.tensor` — dense tensors, truncated SVD, TT-SVD, reconstruction.
- :mod:`cttfed.consensus` — topologies, doubly stochastic mixing, average consensus.
- :mod:`cttfed.network` — the message-level network simulator and its log.
- :mod:`cttfed.engine` — the master-slave and decentralized CTT protocols.
- :mod:`cttfed.dataio` — synthetic data, CSV ingestion, tensor files, partitioning.
- :mod:`cttfed.harness` — metrics, cost models, classification, run reports.
- :mod:`cttfed.service` — FastAPI service wrapping the experiment harness.
- :mod:`cttfed.cli` — thin command-line client for the service layer.
"""

from cttfed.tensor import (
    DenseTensor,
    SvdResult,
    TTDecomposition,
    contract,
    frobenius_norm,
    refold,
    truncated_svd,
    tt_reconstruct,
    tt_svd,
    unfold,
)

__version__ = "0.1.0"

__all__ = [
    "DenseTensor",
    "SvdResult",
    "TTDecomposition",
    "contract",
    "frobenius_norm",
    "refold",
    "truncated_svd",
    "tt_reconstruct",
    "tt_svd",
    "unfold",
    "__version__",
]
