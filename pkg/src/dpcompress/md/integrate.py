"""NVE Velocity-Verlet driver with buffered neighbor lists."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..neighbor import build_neighbor_list
from ..structure import AtomicConfig
from ..units import EV_PER_A3_TO_BAR, KB, MASSES, MVV_TO_EV
from .domain import ParallelEvaluator

log = logging.getLogger(__name__)


@dataclass
class MDState:
    positions: np.ndarray
    velocities: np.ndarray
    forces: np.ndarray
    masses: np.ndarray
    cell: np.ndarray
    step: int = 0
    potential_energy: float = 0.0
    virial: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    @property
    def volume(self) -> float:
        return float(abs(np.linalg.det(self.cell)))

    def kinetic_energy(self) -> float:
        return 0.5 * MVV_TO_EV * float(np.sum(self.masses[:, None] * self.velocities ** 2))

    def temperature(self) -> float:
        return 2.0 * self.kinetic_energy() / (3.0 * self.n_atoms * KB)

    def pressure(self) -> float:
        """Instantaneous pressure in bar from the kinetic and virial terms."""
        p = (2.0 * self.kinetic_energy() - np.trace(self.virial)) / (3.0 * self.volume)
        return float(p * EV_PER_A3_TO_BAR)

    def momentum(self) -> np.ndarray:
        return (self.masses[:, None] * self.velocities).sum(0)


@dataclass(frozen=True)
class MDConfig:
    dt: float = 1.0
    n_steps: int = 99
    T_init: float = 330.0
    buffer: float = 2.0
    rebuild_every: int = 50
    thermo_every: int = 50
    seed: int = 0
    n_workers: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.buffer > 0:
            raise ValueError("buffer must be positive")
        if self.rebuild_every < 1 or self.thermo_every < 1 or self.n_steps < 0:
            raise ValueError("step counts must be positive")


@dataclass(frozen=True)
class ThermoRecord:
    step: int
    ke: float
    pe: float
    T: float
    P: float

    @property
    def etotal(self) -> float:
        return self.ke + self.pe


def masses_for(config: AtomicConfig) -> np.ndarray:
    table = np.array([MASSES.get(name, 1.0) for name in config.type_names])
    return table[config.species]


def init_velocities(state: MDState, T_init: float, seed: int) -> MDState:
    """Maxwell-Boltzmann velocities with zero net momentum, rescaled so the
    instantaneous temperature equals ``T_init``."""
    if state.n_atoms < 2:
        raise ValueError("need at least two atoms to remove momentum and set a temperature")
    rng = np.random.default_rng(seed)
    m = state.masses[:, None]
    v = rng.standard_normal((state.n_atoms, 3)) * np.sqrt(KB * T_init / (m * MVV_TO_EV))
    v -= (m * v).sum(0) / m.sum()
    state.velocities = v
    if T_init > 0:
        state.velocities = v * np.sqrt(T_init / state.temperature())
    else:
        state.velocities = np.zeros_like(v)
    return state


def velocity_verlet_step(state: MDState, force_fn, dt: float, *, before_force=None) -> MDState:
    """Half kick, drift, new forces, half kick.

    ``force_fn(positions)`` returns an object with ``energy``, ``forces``
    and ``virial``; ``before_force(state)`` runs after the drift (used for
    neighbor-list rebuilds).
    """
    inv_m = 1.0 / (state.masses[:, None] * MVV_TO_EV)
    state.velocities = state.velocities + 0.5 * dt * state.forces * inv_m
    state.positions = state.positions + dt * state.velocities
    state.step += 1
    if before_force is not None:
        before_force(state)
    res = force_fn(state.positions)
    if not np.all(np.isfinite(res.forces)):
        raise FloatingPointError(f"non-finite forces at step {state.step}")
    state.forces = res.forces
    state.potential_energy = res.energy
    state.virial = res.virial
    state.velocities = state.velocities + 0.5 * dt * state.forces * inv_m
    return state


@dataclass
class MDResult:
    state: MDState
    thermo: list
    n_evaluations: int
    n_rebuilds: int
    n_table_evals: int
    energy_history: np.ndarray


def energy_drift(history: np.ndarray) -> float:
    """Secular total-energy drift over the run relative to the mean kinetic
    energy: the least-squares slope of E_total(step) times the run length.

    ``history`` rows are (step, ke, pe) as in ``MDResult.energy_history``.
    Bounded Verlet oscillations average out of the slope.
    """
    h = np.asarray(history, dtype=np.float64)
    if h.shape[0] < 2:
        return 0.0
    steps, etot = h[:, 0], h[:, 1] + h[:, 2]
    slope = np.polyfit(steps - steps.mean(), etot, 1)[0]
    return float(abs(slope) * (steps[-1] - steps[0]) / h[:, 1].mean())


def energy_fluctuation(history: np.ndarray) -> float:
    """max |E_total(t) - E_total(0)| relative to the mean kinetic energy."""
    h = np.asarray(history, dtype=np.float64)
    etot = h[:, 1] + h[:, 2]
    return float(np.abs(etot - etot[0]).max() / h[:, 1].mean())


def thermo_record(state: MDState) -> ThermoRecord:
    return ThermoRecord(state.step, state.kinetic_energy(), state.potential_energy,
                        state.temperature(), state.pressure())


def run_md(config: AtomicConfig, md: MDConfig, model, tables=None, *, fused=None,
           velocities=None, on_thermo=None, block=None) -> MDResult:
    """Microcanonical run of ``md.n_steps`` Velocity-Verlet steps.

    Forces are evaluated ``n_steps + 1`` times. The neighbor list (cutoff
    ``rcut + buffer``) is rebuilt every ``rebuild_every`` steps; an atom
    moving more than half the buffer in between aborts the run.
    ``on_thermo(record, state)`` is called every ``thermo_every`` steps,
    starting at step 0.
    """
    state = MDState(config.positions.copy(), np.zeros_like(config.positions),
                    np.zeros_like(config.positions), masses_for(config), config.cell.copy())
    if velocities is None:
        init_velocities(state, md.T_init, md.seed)
    else:
        state.velocities = np.array(velocities, dtype=np.float64)

    build_cut = model.rcut + md.buffer
    evaluator = ParallelEvaluator(model, tables, fused=fused, n_workers=md.n_workers,
                                  buffer=md.buffer, block=block)
    n_rebuilds = 0

    def current(positions):
        return config.with_positions(positions)

    def rebuild(st):
        nonlocal n_rebuilds
        if st.step % md.rebuild_every == 0:
            nl = build_neighbor_list(current(st.positions), build_cut, stamp=st.step)
            evaluator.rebuild(current(st.positions), nl)
            n_rebuilds += 1

    thermo = []
    history = []

    def record(st):
        history.append((st.step, st.kinetic_energy(), st.potential_energy))
        if st.step % md.thermo_every == 0:
            rec = thermo_record(st)
            thermo.append(rec)
            if on_thermo is not None:
                on_thermo(rec, st)

    with evaluator:
        rebuild(state)
        res = evaluator(current(state.positions))
        state.forces, state.potential_energy, state.virial = res.forces, res.energy, res.virial
        record(state)
        for _ in range(md.n_steps):
            velocity_verlet_step(state, lambda x: evaluator(current(x)), md.dt,
                                 before_force=rebuild)
            record(state)
    log.info("md: %d steps, %d force evaluations, %d neighbor-list builds",
             md.n_steps, evaluator.n_evaluations, n_rebuilds)
    return MDResult(state, thermo, evaluator.n_evaluations, n_rebuilds,
                    evaluator.n_table_evals, np.array(history))
