"""Spatial partition of the atoms into worker-owned slabs with ghost maps.

Each worker behaves like a message-passing rank: it owns a contiguous slab
of atoms along the longest cell direction and reads the coordinates of
its ghosts (atoms of other slabs within the ghost width) from a frozen
snapshot. The per-worker results are merged by the coordinator in pair
order, so totals do not depend on how many workers were used.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..envmat import _pair_ids
from ..evaluate import EnergyResult, accumulate, atomic_terms, resolve_mode
from ..neighbor import NeighborList
from ..structure import AtomicConfig


@dataclass(frozen=True)
class Subdomain:
    owned: np.ndarray
    ghosts: np.ndarray
    lo: float
    hi: float

    @property
    def local_ids(self) -> np.ndarray:
        return np.concatenate([self.owned, self.ghosts])


@dataclass(frozen=True)
class Partition:
    axis: int
    width: float
    subdomains: tuple

    @property
    def n_workers(self) -> int:
        return len(self.subdomains)

    def owner(self, n_atoms: int) -> np.ndarray:
        out = np.full(n_atoms, -1, dtype=np.int64)
        for w, sd in enumerate(self.subdomains):
            out[sd.owned] = w
        return out


def _gap(frac, lo, hi, periodic):
    """Distance (in fractional units) from ``frac`` to the interval [lo, hi]."""
    if periodic:
        below = np.mod(lo - frac, 1.0)
        above = np.mod(frac - hi, 1.0)
        inside = (frac >= lo) & (frac <= hi)
        return np.where(inside, 0.0, np.minimum(below, above))
    return np.maximum(0.0, np.maximum(lo - frac, frac - hi))


def partition_domain(config: AtomicConfig, n_workers: int, ghost_width: float) -> Partition:
    """Split atoms into ``n_workers`` slabs balanced by atom count.

    Slabs are cut along the lattice direction with the largest cell
    height; ghosts of a slab are all other atoms within ``ghost_width``
    (perpendicular distance) of it. Asking for more workers than atoms
    falls back to one worker per atom.
    """
    if n_workers < 1:
        raise ValueError("n_workers must be >= 1")
    n = config.n_atoms
    n_workers = max(1, min(n_workers, n))
    heights = config.heights()
    axis = int(np.argmax(heights))
    periodic = config.periodic[axis]
    frac = (config.positions @ np.linalg.inv(config.cell))[:, axis]
    if periodic:
        frac = frac - np.floor(frac)
    order = np.lexsort((np.arange(n), frac))
    pieces = np.array_split(order, n_workers)
    reach = ghost_width / heights[axis]
    subs = []
    everyone = np.arange(n)
    for piece in pieces:
        owned = np.sort(piece)
        lo, hi = float(frac[piece].min()), float(frac[piece].max())
        mine = np.zeros(n, dtype=bool)
        mine[owned] = True
        near = _gap(frac, lo, hi, periodic) <= reach
        ghosts = everyone[near & ~mine]
        subs.append(Subdomain(owned, ghosts, lo, hi))
    return Partition(axis, float(ghost_width), tuple(subs))


class GhostMapError(RuntimeError):
    """A neighbor of an owned atom is neither owned nor a ghost."""


@dataclass(frozen=True)
class LocalView:
    """Worker-local renumbering of a subdomain's neighbor pairs."""

    sub: Subdomain
    nlist: NeighborList
    pair_map: np.ndarray


def local_view(sub: Subdomain, nlist: NeighborList, n_atoms: int) -> LocalView:
    ids = sub.local_ids
    g2l = np.full(n_atoms, -1, dtype=np.int64)
    g2l[ids] = np.arange(ids.size)
    pid = _pair_ids(nlist, sub.owned)
    centers = g2l[nlist.centers[pid]]
    neighbors = g2l[nlist.neighbors[pid]]
    if np.any(neighbors < 0):
        k = int(np.argmax(neighbors < 0))
        raise GhostMapError(
            f"neighbor {int(nlist.neighbors[pid][k])} of atom {int(nlist.centers[pid][k])} "
            "is missing from the ghost map")
    offsets = np.searchsorted(centers, np.arange(ids.size + 1)).astype(np.int64)
    local = NeighborList(centers, neighbors, nlist.shifts[pid], offsets, nlist.cutoff,
                         nlist.ref_positions[ids], nlist.stamp)
    return LocalView(sub, local, pid)


class ParallelEvaluator:
    """Force/energy evaluation over worker subdomains.

    ``rebuild`` must be called with each new neighbor list; ``__call__``
    evaluates a positions snapshot and counts evaluations.
    """

    def __init__(self, model, tables=None, *, fused=None, n_workers: int = 1,
                 ghost_width: float | None = None, buffer: float | None = None,
                 block: int | None = None):
        self.model = model
        self.tables = tables
        self.mode = resolve_mode(tables, fused)
        self.fused = {"exact": None, "tabulated": False, "fused": True}[self.mode]
        self.n_workers = int(n_workers)
        self.buffer = buffer
        self.ghost_width = ghost_width
        self.block = block
        self.n_evaluations = 0
        self.n_table_evals = 0
        self.partition = None
        self._views = ()
        self._nlist = None
        self._pool = ThreadPoolExecutor(self.n_workers) if self.n_workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def rebuild(self, config: AtomicConfig, nlist: NeighborList) -> Partition:
        width = self.ghost_width if self.ghost_width is not None else nlist.cutoff
        self.partition = partition_domain(config, self.n_workers, width)
        self._views = tuple(local_view(sd, nlist, config.n_atoms)
                            for sd in self.partition.subdomains)
        self._nlist = nlist
        return self.partition

    def _work(self, view: LocalView, config: AtomicConfig, snapshot: np.ndarray):
        ids = view.sub.local_ids
        local = AtomicConfig(snapshot[ids], config.species[ids], config.cell, config.periodic,
                             config.type_names)
        kw = {} if self.block is None else {"block": self.block}
        terms = atomic_terms(local, view.nlist, self.model, np.arange(view.sub.owned.size),
                             tables=self.tables, fused=self.fused, labels=ids, **kw)
        terms.atoms = view.sub.owned[terms.atoms]
        terms.pair_ids = view.pair_map[terms.pair_ids]
        return terms

    def __call__(self, config: AtomicConfig) -> EnergyResult:
        if self._nlist is None:
            raise RuntimeError("call rebuild() with a neighbor list first")
        nlist = self._nlist
        if self.buffer is not None:
            nlist.check_fresh(config.positions, self.buffer)
        snapshot = config.positions.copy()
        snapshot.flags.writeable = False
        if self._pool is None:
            parts = [self._work(v, config, snapshot) for v in self._views]
        else:
            parts = list(self._pool.map(lambda v: self._work(v, config, snapshot), self._views))
        res = accumulate(config.n_atoms, nlist, nlist.vectors(snapshot, config.cell), parts)
        if not np.all(np.isfinite(res.forces)) or not np.isfinite(res.energy):
            raise FloatingPointError(f"non-finite energy or forces at evaluation "
                                     f"{self.n_evaluations}")
        self.n_evaluations += 1
        self.n_table_evals += res.n_table_evals
        return res
