"""Descriptor contraction D = (T<)^T T with T = R^T G, and its adjoint."""

from __future__ import annotations

import numpy as np


def embedding_forward(s_col, net) -> np.ndarray:
    """Embedding matrix rows for every entry of ``s_col``, padding included."""
    return net(s_col)


def contract(T: np.ndarray, M_lt: int) -> np.ndarray:
    """D[p, q] = sum_c T[c, p] T[c, q] for p < M_lt; batched over leading axes."""
    return np.einsum("...cp,...cq->...pq", T[..., :M_lt], T)


def contract_backward(T: np.ndarray, dD: np.ndarray, M_lt: int) -> np.ndarray:
    """dE/dT given dE/dD."""
    dT = np.einsum("...cp,...pq->...cq", T[..., :M_lt], dD)
    dT[..., :M_lt] += np.einsum("...cq,...pq->...cp", T, dD)
    return dT


def build_descriptor(rows: np.ndarray, G: np.ndarray, M_lt: int) -> np.ndarray:
    """Descriptor from an environment matrix ``rows`` (N_m x 4) and an
    embedding matrix ``G`` (N_m x M); both may carry leading batch axes."""
    T = np.einsum("...kc,...km->...cm", rows, G)
    return contract(T, M_lt)
