"""Periodic neighbor lists with explicit image shifts."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .structure import AtomicConfig, ConfigurationError


class StaleNeighborListError(RuntimeError):
    """An atom moved further than half the buffer since the list was built."""


@dataclass(frozen=True)
class NeighborList:
    """Pair list in CSR order.

    Pair ``p`` connects ``centers[p]`` to the periodic image
    ``positions[neighbors[p]] + shifts[p] @ cell``. Pairs are sorted by
    center, then neighbor index, then shift.
    """

    centers: np.ndarray
    neighbors: np.ndarray
    shifts: np.ndarray
    offsets: np.ndarray
    cutoff: float
    ref_positions: np.ndarray
    stamp: int = 0

    @property
    def n_pairs(self) -> int:
        return self.centers.size

    def of(self, i: int):
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return self.neighbors[lo:hi], self.shifts[lo:hi]

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def vectors(self, positions: np.ndarray, cell: np.ndarray) -> np.ndarray:
        """Displacements r_j + shift - r_i for every pair."""
        return positions[self.neighbors] + self.shifts @ cell - positions[self.centers]

    def max_displacement(self, positions: np.ndarray) -> float:
        if positions.shape[0] == 0:
            return 0.0
        return float(np.sqrt(((positions - self.ref_positions) ** 2).sum(1).max()))

    def check_fresh(self, positions: np.ndarray, buffer: float) -> None:
        moved = self.max_displacement(positions)
        if moved > 0.5 * buffer:
            raise StaleNeighborListError(
                f"an atom moved {moved:.3f} A since the neighbor list was built at step "
                f"{self.stamp}; more than half the {buffer:g} A buffer. "
                "Use a smaller rebuild interval or a larger buffer."
            )


def build_neighbor_list(config: AtomicConfig, cutoff: float, *, multi_image: bool = True,
                        stamp: int = 0) -> NeighborList:
    """All pairs with ``|r_ij| <= cutoff`` under the cell's boundary conditions.

    With ``multi_image=False`` the cutoff must stay below half of every
    periodic cell height (minimum-image convention).
    """
    if cutoff <= 0:
        raise ConfigurationError("cutoff must be positive")
    pos = config.positions
    n = config.n_atoms
    cell = config.cell
    periodic = np.array(config.periodic)
    heights = config.heights()
    if not multi_image and np.any(periodic & (cutoff >= 0.5 * heights)):
        raise ConfigurationError(
            f"cutoff {cutoff:g} A exceeds half the cell height {heights[periodic].min() / 2:g} A; "
            "enable multi-image search"
        )

    frac = pos @ np.linalg.inv(cell)
    wrap = np.where(periodic, np.floor(frac), 0.0).astype(np.int64)
    wrapped = pos - wrap @ cell
    n_img = np.where(periodic, np.floor(cutoff / heights).astype(np.int64) + 1, 0)
    shifts = np.array(list(itertools.product(*(range(-k, k + 1) for k in n_img))), dtype=np.int64)

    images = (wrapped[None, :, :] + (shifts @ cell)[:, None, :]).reshape(-1, 3)
    pairs = cKDTree(wrapped).sparse_distance_matrix(
        cKDTree(images), cutoff, output_type="ndarray")
    ci = pairs["i"].astype(np.int64)
    k = pairs["j"].astype(np.int64)
    nj = k % n if n else k
    s = shifts[k // n] if n else np.zeros((0, 3), dtype=np.int64)
    keep = ~((ci == nj) & ~s.any(1))
    ci, nj, s = ci[keep], nj[keep], s[keep]
    s = s - wrap[nj] + wrap[ci]

    order = np.lexsort((s[:, 2], s[:, 1], s[:, 0], nj, ci))
    ci, nj, s = ci[order], nj[order], s[order]
    offsets = np.searchsorted(ci, np.arange(n + 1)).astype(np.int64)
    return NeighborList(ci, nj, s, offsets, float(cutoff), pos.copy(), stamp)


def brute_force_pairs(config: AtomicConfig, cutoff: float, max_shift: int = 3) -> set:
    """Reference pair set ``{(i, j, shift)}`` by direct enumeration of images."""
    pos, cell = config.positions, config.cell
    ranges = [range(-max_shift, max_shift + 1) if p else range(1) for p in config.periodic]
    out = set()
    for shift in itertools.product(*ranges):
        d = pos[None, :, :] + np.asarray(shift) @ cell - pos[:, None, :]
        r = np.sqrt((d ** 2).sum(-1))
        for i, j in zip(*np.nonzero(r <= cutoff)):
            if i == j and not any(shift):
                continue
            out.add((int(i), int(j), tuple(int(x) for x in shift)))
    return out
