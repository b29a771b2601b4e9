"""File formats: JSON model files, extended XYZ, thermo CSV, table files.

Model arrays are stored as base64 of little-endian float64 with explicit
shapes, so write -> read -> write reproduces the same bytes.
"""

from __future__ import annotations

import base64
import csv
import json
import re

import numpy as np

from .compress.table import read_tables, tables_from_bytes, tables_to_bytes, write_tables
from .networks import DPModel, EmbeddingNet, FittingNet
from .structure import AtomicConfig

MODEL_SCHEMA = "dpcompress.model"
MODEL_VERSION = 1

__all__ = [
    "MODEL_SCHEMA", "MODEL_VERSION", "FormatError",
    "model_to_dict", "model_from_dict", "write_model", "read_model",
    "write_xyz", "read_xyz", "write_thermo", "read_thermo",
    "write_tables", "read_tables", "tables_to_bytes", "tables_from_bytes",
]


class FormatError(ValueError):
    pass


def _enc(a) -> dict:
    a = np.asarray(a, dtype="<f8")
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _dec(d) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    shape = tuple(d["shape"])
    a = np.frombuffer(raw, dtype="<f8")
    if a.size != int(np.prod(shape)):
        raise FormatError(f"array payload of {a.size} values does not match shape {shape}")
    return a.reshape(shape).astype(np.float64)


def model_to_dict(model: DPModel) -> dict:
    fit0 = model.fitting_nets[0]
    return {
        "schema": MODEL_SCHEMA,
        "version": MODEL_VERSION,
        "hyperparameters": {
            "type_names": list(model.type_names),
            "rcut": model.rcut,
            "rcut_smth": model.rcut_smth,
            "sel": list(model.sel),
            "d1": model.d1,
            "M_lt": model.M_lt,
            "fitting_widths": [W.shape[1] for W in fit0.weights[:-1]],
        },
        "embedding_nets": [
            {k: _enc(getattr(net, k)) for k in ("W0", "b0", "W1", "b1", "W2", "b2")}
            for net in model.embedding_nets
        ],
        "fitting_nets": [
            {"weights": [_enc(W) for W in fit.weights], "biases": [_enc(b) for b in fit.biases]}
            for fit in model.fitting_nets
        ],
        "provenance": dict(model.provenance),
    }


def model_from_dict(d: dict) -> DPModel:
    if d.get("schema") != MODEL_SCHEMA:
        raise FormatError(f"not a model file (schema {d.get('schema')!r})")
    if d.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model version {d.get('version')!r}")
    try:
        hp = d["hyperparameters"]
        nets = [EmbeddingNet(*(_dec(e[k]) for k in ("W0", "b0", "W1", "b1", "W2", "b2")))
                for e in d["embedding_nets"]]
        fits = [FittingNet(tuple(_dec(w) for w in f["weights"]),
                           tuple(_dec(b) for b in f["biases"]))
                for f in d["fitting_nets"]]
        model = DPModel(tuple(hp["type_names"]), float(hp["rcut"]), float(hp["rcut_smth"]),
                        tuple(hp["sel"]), int(hp["M_lt"]), nets, fits,
                        provenance=d.get("provenance", {}))
    except KeyError as exc:
        raise FormatError(f"model file missing field {exc}") from None
    if model.d1 != hp.get("d1", model.d1):
        raise FormatError("d1 in hyperparameters disagrees with embedding weights")
    return model


def write_model(path, model: DPModel) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_model(path) -> DPModel:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(d)


# -- extended XYZ -------------------------------------------------------

_KV = re.compile(r'(\w+)=("[^"]*"|\S+)')


def write_xyz(path_or_fh, config: AtomicConfig, comment: dict | None = None) -> None:
    """Write one frame. Floats use ``repr`` so reading back is exact."""
    lattice = " ".join(repr(float(v)) for v in config.cell.ravel())
    pbc = " ".join("T" if p else "F" for p in config.periodic)
    fields = [f'Lattice="{lattice}"', "Properties=species:S:1:pos:R:3", f'pbc="{pbc}"']
    for k, v in (comment or {}).items():
        fields.append(f'{k}="{v}"' if " " in str(v) else f"{k}={v}")
    lines = [str(config.n_atoms), " ".join(fields)]
    for s, (x, y, z) in zip(config.species, config.positions):
        lines.append(f"{config.type_names[s]} {float(x)!r} {float(y)!r} {float(z)!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_fh, "write"):
        path_or_fh.write(text)
    else:
        with open(path_or_fh, "w") as fh:
            fh.write(text)


def read_xyz(path, type_names=None) -> AtomicConfig:
    """Read the first frame. ``type_names`` fixes the species order;
    otherwise types are numbered in order of first appearance."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2:
        raise FormatError(f"{path}: truncated XYZ header")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise FormatError(f"{path}: first line must be the atom count") from None
    if len(lines) < n + 2:
        raise FormatError(f"{path}: expected {n} atom lines, found {len(lines) - 2}")
    meta = {k: v.strip('"') for k, v in _KV.findall(lines[1])}
    if "Lattice" not in meta:
        raise FormatError(f"{path}: comment line lacks Lattice=\"...\"")
    cell = np.array([float(v) for v in meta["Lattice"].split()]).reshape(3, 3)
    pbc = tuple(p == "T" for p in meta.get("pbc", "T T T").split())
    names = list(type_names) if type_names is not None else []
    species = np.empty(n, dtype=np.int64)
    pos = np.empty((n, 3))
    for k, line in enumerate(lines[2:n + 2]):
        parts = line.split()
        if len(parts) < 4:
            raise FormatError(f"{path}: bad atom line {k + 3}: {line!r}")
        if parts[0] not in names:
            if type_names is not None:
                raise FormatError(f"{path}: species {parts[0]!r} not in {tuple(type_names)}")
            names.append(parts[0])
        species[k] = names.index(parts[0])
        pos[k] = [float(v) for v in parts[1:4]]
    info = {k: v for k, v in meta.items() if k not in ("Lattice", "Properties", "pbc")}
    return AtomicConfig(pos, species, cell, pbc, tuple(names), info)


# -- thermo CSV ----------------------------------------------------------

THERMO_FIELDS = ("step", "ke", "pe", "T", "P")


def write_thermo(path_or_fh, records, header: dict | None = None) -> None:
    """CSV with columns step,ke,pe,T,P; ``header`` items become ``# k=v`` lines."""
    own = not hasattr(path_or_fh, "write")
    fh = open(path_or_fh, "w", newline="") if own else path_or_fh
    try:
        for k, v in (header or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(THERMO_FIELDS)
        for r in records:
            w.writerow([r.step] + [repr(float(getattr(r, f))) for f in THERMO_FIELDS[1:]])
    finally:
        if own:
            fh.close()


def read_thermo(path) -> np.ndarray:
    """Structured array with the thermo columns."""
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(rows)
    head = next(reader)
    if tuple(head) != THERMO_FIELDS:
        raise FormatError(f"{path}: unexpected thermo header {head}")
    dtype = [("step", np.int64)] + [(f, np.float64) for f in THERMO_FIELDS[1:]]
    return np.array([tuple([int(r[0])] + [float(x) for x in r[1:]]) for r in reader], dtype=dtype)
