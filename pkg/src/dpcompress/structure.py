"""Atomic configurations and lattice generators."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class ConfigurationError(ValueError):
    """Raised for geometrically invalid configurations or cutoffs."""


@dataclass(frozen=True)
class AtomicConfig:
    """Positions, species and periodic cell of a set of atoms.

    ``cell`` holds lattice vectors as rows; positions are Cartesian and are
    not required to lie inside the cell.
    """

    positions: np.ndarray
    species: np.ndarray
    cell: np.ndarray
    periodic: tuple[bool, bool, bool] = (True, True, True)
    type_names: tuple[str, ...] = ("X",)
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        spc = np.ascontiguousarray(self.species, dtype=np.int64)
        cell = np.ascontiguousarray(self.cell, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ConfigurationError(f"positions must be N x 3, got {pos.shape}")
        if spc.shape != (pos.shape[0],):
            raise ConfigurationError("species length does not match positions")
        if cell.shape != (3, 3):
            raise ConfigurationError("cell must be 3 x 3")
        if not np.all(np.isfinite(pos)):
            raise ConfigurationError("non-finite positions")
        if abs(np.linalg.det(cell)) < 1e-12:
            raise ConfigurationError("cell matrix is singular")
        if spc.size and (spc.min() < 0 or spc.max() >= len(self.type_names)):
            raise ConfigurationError("species id outside declared type names")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "species", spc)
        object.__setattr__(self, "cell", cell)
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        object.__setattr__(self, "type_names", tuple(self.type_names))

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    @property
    def volume(self) -> float:
        return float(abs(np.linalg.det(self.cell)))

    def with_positions(self, positions: np.ndarray) -> "AtomicConfig":
        return replace(self, positions=positions)

    def heights(self) -> np.ndarray:
        """Perpendicular widths of the cell along each lattice direction."""
        a, b, c = self.cell
        v = self.volume
        return np.array(
            [v / np.linalg.norm(np.cross(b, c)),
             v / np.linalg.norm(np.cross(c, a)),
             v / np.linalg.norm(np.cross(a, b))]
        )


def fcc(a: float, reps=(1, 1, 1), jitter: float = 0.0, seed: int = 0,
        type_name: str = "Cu") -> AtomicConfig:
    """Periodic face-centred-cubic supercell of ``4*nx*ny*nz`` atoms.

    ``jitter`` displaces each coordinate uniformly in ``[-jitter, jitter]``.
    """
    nx, ny, nz = (int(r) for r in reps)
    if min(nx, ny, nz) < 1:
        raise ConfigurationError("replication counts must be positive")
    basis = np.array([[0.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    grid = np.stack(np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"), -1)
    frac = (grid.reshape(-1, 1, 3) + basis[None]).reshape(-1, 3)
    pos = frac * a
    if jitter:
        rng = np.random.default_rng(seed)
        pos = pos + rng.uniform(-jitter, jitter, size=pos.shape)
    cell = np.diag([nx * a, ny * a, nz * a])
    return AtomicConfig(pos, np.zeros(len(pos), dtype=np.int64), cell,
                        type_names=(type_name,), info={"lattice": "fcc", "a": a})


# O-H bond length (Å) and H-O-H angle (deg) of the rigid water stand-in
_OH = 0.9572
_HOH = 104.52


def water_box(spacing: float = 3.104, reps=(2, 2, 2), jitter: float = 0.0,
              seed: int = 0) -> AtomicConfig:
    """Simple-cubic arrangement of water molecules with random orientations.

    A stand-in for an equilibrated liquid; density is set by ``spacing``
    (3.104 Å gives ~1 g/cm³). Type 0 is O, type 1 is H.
    """
    nx, ny, nz = (int(r) for r in reps)
    rng = np.random.default_rng(seed)
    grid = np.stack(np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"), -1)
    centres = grid.reshape(-1, 3) * spacing
    half = np.deg2rad(_HOH) / 2
    local = _OH * np.array([[np.sin(half), np.cos(half), 0.0], [-np.sin(half), np.cos(half), 0.0]])
    pos, spc = [], []
    for c in centres:
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        pos.append(c)
        pos.extend(c + local @ q.T)
        spc.extend([0, 1, 1])
    pos = np.array(pos)
    if jitter:
        pos = pos + rng.uniform(-jitter, jitter, size=pos.shape)
    cell = np.diag([nx * spacing, ny * spacing, nz * spacing])
    return AtomicConfig(pos, np.array(spc), cell, type_names=("O", "H"),
                        info={"lattice": "water", "a": spacing})


def gen_config(lattice: str = "fcc", a: float = 3.634, reps=(3, 3, 3), jitter: float = 0.0,
               seed: int = 0, type_names=None) -> AtomicConfig:
    if lattice == "fcc":
        name = type_names[0] if type_names else "Cu"
        return fcc(a, reps, jitter, seed, type_name=name)
    if lattice == "water":
        return water_box(a, reps, jitter, seed)
    raise ConfigurationError(f"unknown lattice {lattice!r}")
