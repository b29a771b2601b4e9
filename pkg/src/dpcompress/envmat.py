"""Smooth switching weight and the per-atom environment matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neighbor import NeighborList
from .networks import DPModel
from .structure import AtomicConfig


class CapacityError(RuntimeError):
    """More neighbors of one species than the model reserves rows for."""


def switch_weight(r, rcut: float, rcut_smth: float):
    """``s(r) = w(r) / r`` and its derivative.

    ``w`` is 1 below ``rcut_smth``, 0 beyond ``rcut`` and follows the
    quintic smoothstep ``u^3 (-6u^2 + 15u - 10) + 1`` in between, which is
    C2 at both ends.
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(~(r > 0)):
        raise ValueError("switch_weight requires r > 0")
    u = np.clip((r - rcut_smth) / (rcut - rcut_smth), 0.0, 1.0)
    # clamp: rounding near u = 1 can leave w at -1e-17
    w = np.maximum(u * u * u * (-6.0 * u * u + 15.0 * u - 10.0) + 1.0, 0.0)
    dw = -30.0 * u * u * (u - 1.0) ** 2 / (rcut - rcut_smth)
    s = w / r
    ds = dw / r - w / (r * r)
    return s, ds


@dataclass(frozen=True)
class EnvironmentMatrix:
    """Environment matrices for a batch of center atoms.

    Row ``k`` of atom ``a`` is ``s(r) * (1, x/r, y/r, z/r)`` for the
    neighbor stored in that slot; slots are grouped into fixed-length
    sectors by neighbor species, real neighbors first (nearest first),
    zero padding after. ``pair`` maps slots back to neighbor-list pairs
    (-1 for padding) and ``deriv`` holds d(row)/d(r_ij).
    """

    atoms: np.ndarray
    rows: np.ndarray
    deriv: np.ndarray
    pair: np.ndarray
    rij: np.ndarray
    sector_counts: np.ndarray
    sector_offsets: np.ndarray

    @property
    def s_col(self) -> np.ndarray:
        return self.rows[..., 0]

    @property
    def mask(self) -> np.ndarray:
        return self.pair >= 0

    @property
    def n_real(self) -> np.ndarray:
        return self.sector_counts.sum(1)

    @property
    def nmax(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.atoms.size

    def sector(self, t: int) -> slice:
        return slice(int(self.sector_offsets[t]), int(self.sector_offsets[t + 1]))

    def subset(self, idx) -> "EnvironmentMatrix":
        idx = np.atleast_1d(np.asarray(idx))
        return EnvironmentMatrix(self.atoms[idx], self.rows[idx], self.deriv[idx],
                                 self.pair[idx], self.rij[idx], self.sector_counts[idx],
                                 self.sector_offsets)


def _pair_ids(nlist: NeighborList, atoms: np.ndarray) -> np.ndarray:
    lo = nlist.offsets[atoms]
    cnt = nlist.offsets[atoms + 1] - lo
    base = np.repeat(lo - np.concatenate([[0], np.cumsum(cnt)[:-1]]), cnt)
    return base + np.arange(cnt.sum())


def row_derivatives(rij: np.ndarray, r: np.ndarray, s: np.ndarray, ds: np.ndarray) -> np.ndarray:
    """d(row)/d(r_ij) as a (..., 4, 3) array."""
    unit = rij / r[..., None]
    out = np.empty(rij.shape[:-1] + (4, 3))
    out[..., 0, :] = ds[..., None] * unit
    coef = (ds / r - s / (r * r))[..., None, None]
    out[..., 1:, :] = coef * unit[..., :, None] * unit[..., None, :] * r[..., None, None]
    diag = (s / r)[..., None]
    out[..., 1, 0] += diag[..., 0]
    out[..., 2, 1] += diag[..., 0]
    out[..., 3, 2] += diag[..., 0]
    return out


def build_environment_matrix(config: AtomicConfig, nlist: NeighborList, model: DPModel,
                             atoms=None, positions=None, labels=None) -> EnvironmentMatrix:
    """Environment matrices for ``atoms`` (default: all atoms).

    Only pairs strictly inside ``model.rcut`` occupy slots; the neighbor
    list may have been built with a larger (buffered) cutoff. ``positions``
    overrides the configuration's coordinates. Equal distances are ordered
    by ``labels[j]`` (default: the atom index itself), so a subdomain
    passing global ids reproduces the global slot order.
    """
    pos = config.positions if positions is None else positions
    if atoms is None:
        atoms = np.arange(config.n_atoms)
    atoms = np.atleast_1d(np.asarray(atoms, dtype=np.int64))
    A = atoms.size
    S = model.n_types
    offsets = model.sector_offsets
    nmax = model.nmax

    pid = _pair_ids(nlist, atoms)
    loc = np.repeat(np.arange(A), nlist.offsets[atoms + 1] - nlist.offsets[atoms])
    j = nlist.neighbors[pid]
    rij = pos[j] + nlist.shifts[pid] @ config.cell - pos[nlist.centers[pid]]
    r = np.sqrt((rij * rij).sum(1))
    inside = r < model.rcut
    pid, loc, j, rij, r = pid[inside], loc[inside], j[inside], rij[inside], r[inside]
    t = config.species[j]

    tie = j if labels is None else np.asarray(labels)[j]
    order = np.lexsort((pid, tie, r, t, loc))
    pid, loc, j, rij, r, t = (x[order] for x in (pid, loc, j, rij, r, t))
    group = loc * S + t
    counts = np.bincount(group, minlength=A * S).reshape(A, S)
    starts = np.concatenate([[0], np.cumsum(counts.ravel())[:-1]])
    rank = np.arange(group.size) - starts[group]

    over = counts > np.asarray(model.sel)[None, :]
    if np.any(over):
        a, tt = np.argwhere(over)[0]
        raise CapacityError(
            f"atom {int(atoms[a])} has {int(counts[a, tt])} neighbors of species "
            f"{model.type_names[tt]!r}, model reserves {model.sel[tt]}")

    slot = offsets[t] + rank
    s, ds = switch_weight(r, model.rcut, model.rcut_smth)
    rows = np.zeros((A, nmax, 4))
    deriv = np.zeros((A, nmax, 4, 3))
    pair = np.full((A, nmax), -1, dtype=np.int64)
    vec = np.zeros((A, nmax, 3))
    rows[loc, slot, 0] = s
    rows[loc, slot, 1:] = (s / r)[:, None] * rij
    deriv[loc, slot] = row_derivatives(rij, r, s, ds)
    pair[loc, slot] = pid
    vec[loc, slot] = rij
    return EnvironmentMatrix(atoms, rows, deriv, pair, vec, counts, offsets)
