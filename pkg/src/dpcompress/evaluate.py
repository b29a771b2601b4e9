"""Energies, forces and virial of a Deep Potential model.

Three routes share the same environment matrices and fitting nets:

* ``exact``      embedding net evaluated on every slot, padding included;
* ``tabulated``  same dense algebra with table rows in place of the net;
* ``fused``      table rows contracted on the fly, padding skipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import contract, contract_backward
from .envmat import EnvironmentMatrix, build_environment_matrix
from .fused import DEFAULT_SLOT_BLOCK, fused_backward, fused_descriptor
from .neighbor import NeighborList
from .networks import DPModel
from .structure import AtomicConfig

ATOM_CHUNK = 32


@dataclass
class AtomTerms:
    """Per-atom energies and per-pair gradients dE/dr_ij for a set of centers."""

    atoms: np.ndarray
    energies: np.ndarray
    pair_ids: np.ndarray
    pair_grads: np.ndarray
    n_table_evals: int = 0


@dataclass
class EnergyResult:
    energy: float
    forces: np.ndarray
    virial: np.ndarray
    atom_energies: np.ndarray
    n_table_evals: int = 0


def resolve_mode(tables, fused) -> str:
    if tables is None:
        if fused:
            raise ValueError("the fused route needs compression tables")
        return "exact"
    return "tabulated" if fused is False else "fused"


def _embedders(model, tables, mode):
    if mode == "exact":
        return [net.value_and_derivative for net in model.embedding_nets]
    if hasattr(tables, "evaluate"):
        tables = (tables,)
    if len(tables) != model.n_types:
        raise ValueError("need one compression table per neighbor species")
    return [t.evaluate for t in tables]


def dense_descriptor(env: EnvironmentMatrix, embedders, M_lt: int):
    """Descriptor via the materialised embedding matrix of every sector.

    Returns ``(D, T, cache)``; ``cache`` holds (G, dG/ds) per sector.
    """
    T = None
    cache = []
    for t, embed in enumerate(embedders):
        sl = env.sector(t)
        G, G1 = embed(env.rows[:, sl, 0])
        part = np.einsum("akc,akm->acm", env.rows[:, sl], G)
        T = part if T is None else T + part
        cache.append((G, G1))
    return contract(T, M_lt), T, cache


def dense_backward(env: EnvironmentMatrix, T, cache, dD, M_lt: int) -> np.ndarray:
    dT = contract_backward(T, dD, M_lt)
    grads = np.zeros(env.pair.shape + (3,))
    for t, (G, G1) in enumerate(cache):
        sl = env.sector(t)
        R = env.rows[:, sl]
        dR = np.einsum("acm,akm->akc", dT, G)
        dG = np.einsum("akc,acm->akm", R, dT)
        dR[..., 0] += (dG * G1).sum(-1)
        grads[:, sl] = np.einsum("akc,akcx->akx", dR, env.deriv[:, sl])
    return grads


def _fit(model: DPModel, species: np.ndarray, D: np.ndarray):
    A = D.shape[0]
    e = np.zeros(A)
    dD = np.zeros_like(D)
    flat = D.reshape(A, -1)
    for c in np.unique(species):
        sel = species == c
        ec, gc = model.fitting_nets[c].value_and_grad(flat[sel])
        e[sel] = ec
        dD[sel] = gc.reshape((-1,) + D.shape[1:])
    return e, dD


def env_terms(env: EnvironmentMatrix, species: np.ndarray, model: DPModel, *, tables=None,
              mode: str = "exact", block: int = DEFAULT_SLOT_BLOCK) -> AtomTerms:
    """Energies and pair gradients for the centers held in ``env``.

    ``species`` gives the species of each center in ``env``.
    """
    if mode == "fused":
        D, ws = fused_descriptor(env, tables, model.M_lt, block=block)
        e, dD = _fit(model, species, D)
        grads = fused_backward(ws, dD, env)
        n_evals = ws.n_evals
    else:
        D, T, cache = dense_descriptor(env, _embedders(model, tables, mode), model.M_lt)
        e, dD = _fit(model, species, D)
        grads = dense_backward(env, T, cache, dD, model.M_lt)
        n_evals = int(env.pair.size) if mode == "tabulated" else 0
    mask = env.mask
    return AtomTerms(env.atoms, e, env.pair[mask], grads[mask], n_evals)


def atomic_terms(config: AtomicConfig, nlist: NeighborList, model: DPModel, atoms=None, *,
                 tables=None, fused=None, positions=None, labels=None,
                 chunk: int = ATOM_CHUNK, block: int = DEFAULT_SLOT_BLOCK) -> AtomTerms:
    """Evaluate centers ``atoms`` in chunks; pair ids index ``nlist``."""
    mode = resolve_mode(tables, fused)
    if atoms is None:
        atoms = np.arange(config.n_atoms)
    atoms = np.asarray(atoms, dtype=np.int64)
    parts = []
    for k in range(0, atoms.size, chunk):
        sub = atoms[k:k + chunk]
        env = build_environment_matrix(config, nlist, model, sub, positions=positions,
                                       labels=labels)
        parts.append(env_terms(env, config.species[sub], model, tables=tables, mode=mode,
                               block=block))
    if not parts:
        return AtomTerms(atoms, np.zeros(0), np.zeros(0, np.int64), np.zeros((0, 3)))
    return AtomTerms(
        np.concatenate([p.atoms for p in parts]),
        np.concatenate([p.energies for p in parts]),
        np.concatenate([p.pair_ids for p in parts]),
        np.concatenate([p.pair_grads for p in parts]),
        sum(p.n_table_evals for p in parts),
    )


def accumulate(n_atoms: int, nlist: NeighborList, rij_all: np.ndarray, terms) -> EnergyResult:
    """Merge per-worker terms in a fixed order independent of how atoms
    were split: energies by atom index, pair gradients by pair index."""
    e_atom = np.zeros(n_atoms)
    ids, grads, n_evals = [], [], 0
    for part in terms:
        e_atom[part.atoms] = part.energies
        ids.append(part.pair_ids)
        grads.append(part.pair_grads)
        n_evals += part.n_table_evals
    ids = np.concatenate(ids) if ids else np.zeros(0, np.int64)
    grads = np.concatenate(grads) if grads else np.zeros((0, 3))
    order = np.argsort(ids, kind="stable")
    ids, grads = ids[order], grads[order]
    forces = np.zeros((n_atoms, 3))
    np.add.at(forces, nlist.centers[ids], grads)
    np.add.at(forces, nlist.neighbors[ids], -grads)
    virial = np.einsum("pa,pb->ab", rij_all[ids], grads)
    return EnergyResult(float(np.sum(e_atom)), forces, virial, e_atom, n_evals)


def compute_energy_forces_virial(config: AtomicConfig, model: DPModel, nlist: NeighborList, *,
                                 tables=None, fused=None, buffer: float | None = None,
                                 chunk: int = ATOM_CHUNK,
                                 block: int = DEFAULT_SLOT_BLOCK) -> EnergyResult:
    """Total energy (eV), forces (eV/A) and virial sum_ij r_ij (x) dE/dr_ij (eV).

    Without ``tables`` the network is evaluated exactly; with tables the
    fused route is the default (``fused=False`` selects the dense tabulated
    route). If ``buffer`` is given, the neighbor list is checked for
    staleness first.
    """
    if buffer is not None:
        nlist.check_fresh(config.positions, buffer)
    terms = atomic_terms(config, nlist, model, tables=tables, fused=fused, chunk=chunk,
                         block=block)
    rij = nlist.vectors(config.positions, config.cell)
    return accumulate(config.n_atoms, nlist, rij, [terms])
