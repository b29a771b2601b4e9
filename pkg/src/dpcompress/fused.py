"""Fused tabulation + contraction of the descriptor.

The tabulated embedding rows are produced a few neighbor slots at a time
and immediately contracted into the 4 x M matrix T, so the N_m x M
embedding matrix never exists. Slots holding padding are never evaluated.
The backward pass re-evaluates the same slot blocks instead of caching
rows, keeping per-atom scratch at O(K M + M_lt M) for block size K.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .descriptor import contract, contract_backward

DEFAULT_SLOT_BLOCK = 16


@dataclass
class FusedWorkspace:
    T: np.ndarray
    M_lt: int
    tables: tuple
    block: int
    n_evals: int = 0
    n_backward_evals: int = 0
    counts: dict = field(default_factory=dict)


def _tables_for(tables, n_sectors):
    if hasattr(tables, "evaluate"):
        tables = (tables,)
    tables = tuple(tables)
    if len(tables) != n_sectors:
        raise ValueError(f"need one table per neighbor species ({n_sectors}), got {len(tables)}")
    return tables


def _slot_blocks(env, t, block):
    """Slot ranges covering the occupied part of sector ``t``."""
    sl = env.sector(t)
    top = int(env.sector_counts[:, t].max()) if len(env) else 0
    for k0 in range(0, top, block):
        yield slice(sl.start + k0, sl.start + min(k0 + block, top))


def fused_descriptor(env, tables, M_lt: int, *, block: int = DEFAULT_SLOT_BLOCK):
    """Descriptors for every atom of ``env`` without forming G.

    Returns ``(D, workspace)``; ``workspace.n_evals`` counts tabulated rows
    evaluated, which equals the number of real neighbors.
    """
    tables = _tables_for(tables, len(env.sector_offsets) - 1)
    M = tables[0].M
    A = len(env)
    T = np.zeros((A, 4, M))
    n_evals = 0
    for t, table in enumerate(tables):
        for sl in _slot_blocks(env, t, block):
            mask = env.pair[:, sl] >= 0
            R = env.rows[:, sl]
            f = np.zeros(mask.shape + (M,))
            x = R[..., 0][mask]
            f[mask] = table.evaluate(x, derivative=False)[0]
            n_evals += x.size
            T += np.einsum("akc,akm->acm", R, f)
    ws = FusedWorkspace(T, M_lt, tables, block, n_evals=n_evals)
    return contract(T, M_lt), ws


def fused_backward(ws: FusedWorkspace, dE_dD: np.ndarray, env) -> np.ndarray:
    """dE/dr_ij for every slot of ``env`` (zeros on padding), shape (A, N_m, 3)."""
    dT = contract_backward(ws.T, dE_dD, ws.M_lt)
    grads = np.zeros(env.pair.shape + (3,))
    M = ws.T.shape[-1]
    for t, table in enumerate(ws.tables):
        for sl in _slot_blocks(env, t, ws.block):
            mask = env.pair[:, sl] >= 0
            R = env.rows[:, sl]
            x = R[..., 0][mask]
            f = np.zeros(mask.shape + (M,))
            f1 = np.zeros(mask.shape + (M,))
            f[mask], f1[mask] = table.evaluate(x)
            ws.n_backward_evals += x.size
            dR = np.einsum("acm,akm->akc", dT, f)
            dG = np.einsum("akc,acm->akm", R, dT)
            dR[..., 0] += np.einsum("akm,akm->ak", dG, f1)
            grads[:, sl] = np.einsum("akc,akcx->akx", dR, env.deriv[:, sl])
    return grads


def flop_report(N_a: int, N_m: int, d1: int) -> dict:
    """Embedding-net FLOP counts of the network and of the tabulated model."""
    if min(N_a, N_m, d1) <= 0:
        raise ValueError("arguments must be positive")
    original = N_a * (N_m * d1 + 10 * N_m * d1 * d1)
    tabulated = N_a * 56 * N_m * d1
    ratio = (1 + 10 * d1) / 56
    return {
        "original": original,
        "tabulated": tabulated,
        "ratio": ratio,
        "savings": 1.0 - tabulated / original,
    }
