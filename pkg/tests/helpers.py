"""Independent oracles used by the test suite.

These deliberately avoid the library's own code paths: the Jacobi routine is
a from-scratch one-sided sweep (usable up to ~64x64), and the contraction /
train-entry oracles are plain nested loops.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_singular_values(matrix, max_sweeps=100, tol=1e-15):
    """Singular values via one-sided Jacobi column orthogonalization."""
    a = np.array(matrix, dtype=float)
    if a.shape[0] < a.shape[1]:
        a = a.T
    n = a.shape[1]
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                ai, aj = a[:, i].copy(), a[:, j].copy()
                alpha = float(ai @ ai)
                beta = float(aj @ aj)
                gamma = float(ai @ aj)
                if alpha * beta > 0:
                    off = max(off, abs(gamma) / math.sqrt(alpha * beta))
                if gamma == 0.0:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                a[:, i] = c * ai - s * aj
                a[:, j] = s * ai + c * aj
        if off < tol:
            break
    return np.sort(np.linalg.norm(a, axis=0))[::-1]


def contract_oracle(a, b, shared):
    """Triple-nested-loop evaluation of the contraction sum."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lead = a.shape[: a.ndim - shared]
    mid = a.shape[a.ndim - shared :]
    trail = b.shape[shared:]
    out = np.zeros(lead + trail if lead + trail else (1,))
    for idx in np.ndindex(*lead) if lead else [()]:
        for odx in np.ndindex(*trail) if trail else [()]:
            total = 0.0
            for jdx in np.ndindex(*mid):
                total += a[idx + jdx] * b[jdx + odx]
            out[idx + odx if lead + trail else (0,)] = total
    return out


def train_entry_oracle(cores, index):
    """Entry of a tensor train as the product of lateral core slices."""
    acc = np.eye(1)
    for core, i in zip(cores, index):
        acc = acc @ core[:, i, :]
    assert acc.shape == (1, 1)
    return float(acc[0, 0])


def random_train(rng, dims, ranks):
    """Random cores for an exact-TT-rank tensor; ranks excludes the unit ends."""
    bonds = [1] + list(ranks) + [1]
    return [
        rng.standard_normal((bonds[n], dims[n], bonds[n + 1])) for n in range(len(dims))
    ]


def dense_from_train(cores):
    x = cores[0]
    for core in cores[1:]:
        left = np.reshape(x, (-1, x.shape[-1]), order="F")
        right = np.reshape(core, (core.shape[0], -1), order="F")
        x = np.reshape(left @ right, x.shape[:-1] + core.shape[1:], order="F")
    return x[0, ..., 0]
