"""Accuracy of a tabulated model against the exact network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..evaluate import compute_energy_forces_virial
from ..neighbor import build_neighbor_list


@dataclass(frozen=True)
class RmseReport:
    rmse_e: float  # eV/atom
    rmse_f: float  # eV/A per component
    m: int
    N: int


def rmse(e_tab, e_orig, f_tab, f_orig) -> tuple[float, float]:
    """Per-atom energy RMSE and per-component force RMSE over ``m`` configs.

    Energies have shape (m,), forces (m, N, 3).
    """
    e_tab, e_orig = np.asarray(e_tab), np.asarray(e_orig)
    f_tab, f_orig = np.asarray(f_tab), np.asarray(f_orig)
    m, N = f_orig.shape[:2]
    rmse_e = np.sqrt(np.mean((e_tab - e_orig) ** 2)) / N
    rmse_f = np.sqrt(np.sum((f_tab - f_orig) ** 2) / (3 * m * N))
    return float(rmse_e), float(rmse_f)


def reference_predictions(model, configs):
    """Exact-network energies and forces, plus the neighbor lists used."""
    nlists = [build_neighbor_list(c, model.rcut) for c in configs]
    res = [compute_energy_forces_virial(c, model, nl) for c, nl in zip(configs, nlists)]
    return (np.array([r.energy for r in res]), np.array([r.forces for r in res]), nlists)


def rmse_compare(model, tables, configs, *, fused: bool = True, reference=None) -> RmseReport:
    """Compare the tabulated route (fused by default) with the exact network.

    ``reference`` may carry precomputed ``reference_predictions`` so one
    exact pass serves a sweep over several tables.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("rmse_compare needs at least one configuration")
    sizes = {c.n_atoms for c in configs}
    if len(sizes) != 1:
        raise ValueError("all configurations must have the same number of atoms")
    e_orig, f_orig, nlists = reference if reference is not None else reference_predictions(
        model, configs)
    tab = [compute_energy_forces_virial(c, model, nl, tables=tables, fused=fused)
           for c, nl in zip(configs, nlists)]
    e_tab = np.array([r.energy for r in tab])
    f_tab = np.array([r.forces for r in tab])
    rmse_e, rmse_f = rmse(e_tab, e_orig, f_tab, f_orig)
    return RmseReport(rmse_e, rmse_f, len(configs), sizes.pop())
