"""Molecular dynamics: integrator, thermodynamics and worker partitions."""

from .domain import GhostMapError, ParallelEvaluator, Partition, partition_domain
from .integrate import (
    MDConfig,
    MDResult,
    MDState,
    energy_drift,
    energy_fluctuation,
    ThermoRecord,
    init_velocities,
    masses_for,
    run_md,
    velocity_verlet_step,
)

__all__ = [
    "GhostMapError", "MDConfig", "MDResult", "MDState", "ParallelEvaluator", "Partition",
    "ThermoRecord", "energy_drift", "energy_fluctuation", "init_velocities", "masses_for", "partition_domain", "run_md",
    "velocity_verlet_step",
]
