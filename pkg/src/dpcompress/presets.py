"""Named hyperparameter sets and the seeded synthetic-model generator."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .envmat import build_environment_matrix, switch_weight
from .evaluate import compute_energy_forces_virial, dense_descriptor
from .neighbor import build_neighbor_list
from .networks import DPModel, EmbeddingNet, FittingNet
from .structure import gen_config


class UnknownPresetError(KeyError):
    pass


@dataclass(frozen=True)
class Preset:
    name: str
    type_names: tuple
    rcut: float
    sel: tuple
    d1: int = 32
    M_lt: int = 16
    fitting: tuple = (240, 240, 240)
    smooth_width: float = 0.5
    lattice: str = "fcc"
    a: float = 3.634
    reps: tuple = (3, 3, 3)
    dt: float = 1.0
    input_spread: float = 2.0
    force_rms: float = 0.5
    random_fraction: float = 0.1
    n_wells: int = 16

    @property
    def rcut_smth(self) -> float:
        return self.rcut - self.smooth_width

    @property
    def nmax(self) -> int:
        return sum(self.sel)


PRESETS = {
    "copper-like": Preset("copper-like", ("Cu",), 8.0, (512,)),
    "water-like": Preset("water-like", ("O", "H"), 6.0, (46, 92), lattice="water", a=3.104,
                         dt=0.5),
    # small model for tests and quick demos
    "tiny": Preset("tiny", ("Cu",), 5.0, (64,), d1=8, M_lt=4, fitting=(16, 16, 16),
                   reps=(2, 2, 2)),
}


def get_preset(name: str, **overrides) -> Preset:
    try:
        p = PRESETS[name]
    except KeyError:
        raise UnknownPresetError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(p, **overrides) if overrides else p


def reference_config(preset: Preset, jitter: float = 0.1, seed: int = 0):
    return gen_config(preset.lattice, preset.a, preset.reps, jitter=jitter, seed=seed,
                      type_names=preset.type_names)


# pair offset: tanh'' peaks at z0 = -atanh(1/sqrt(3)), so the even part is largest there
_WELL_Z0 = -float(np.arctanh(1.0 / np.sqrt(3.0)))
_WELL_EPS = 0.3


def _normal(rng, shape, fan_in):
    return rng.standard_normal(shape) / np.sqrt(fan_in)


def gen_model(preset="copper-like", seed: int = 0, **overrides) -> DPModel:
    """Seeded synthetic model with Gaussian parameters scaled by 1/sqrt(fan-in).

    Input standardisation is folded into the first layer of each net: the
    mean and spread of the embedding input s and of the descriptor,
    measured on a jittered reference lattice, shift the biases and divide
    the weights. This keeps the networks out of tanh saturation at the
    size of a trained model.

    A random potential has no reason to hold the lattice together, so the
    first ``2 K`` hidden units of each fitting net are paired as
    ``tanh(z0 + e v) + tanh(z0 - e v)``, which is even in ``v`` and close
    to ``c v^2``. Here ``v`` are K random projections of the deviation of
    the descriptor from its value on the unjittered lattice. These units
    bypass the residual layers, and their output weight is set so the
    jittered-lattice force RMS is ``force_rms``. The remaining random
    units are rescaled to ``random_fraction`` of that. The result depends
    only on (preset, seed, overrides).
    """
    p = get_preset(preset, **overrides) if isinstance(preset, str) else preset
    rng = np.random.default_rng(seed)
    ref = reference_config(p, seed=seed)
    nl = build_neighbor_list(ref, p.rcut)
    rij = nl.vectors(ref.positions, ref.cell)
    r = np.linalg.norm(rij, axis=1)
    inside = r < p.rcut
    s, _ = switch_weight(r[inside], p.rcut, p.rcut_smth)
    jtype = ref.species[nl.neighbors[inside]]

    nets = []
    for t in range(len(p.type_names)):
        st = s[jtype == t]
        mu = float(st.mean()) if st.size else 0.0
        sigma = float(st.std()) if st.size > 1 and st.std() > 0 else 1.0
        d1 = p.d1
        W0 = rng.standard_normal(d1) / (p.input_spread * sigma)
        b0 = rng.standard_normal(d1) - W0 * mu
        nets.append(EmbeddingNet(W0, b0,
                                 _normal(rng, (d1, 2 * d1), d1), _normal(rng, 2 * d1, d1),
                                 _normal(rng, (2 * d1, 4 * d1), 2 * d1),
                                 _normal(rng, 4 * d1, 2 * d1)))

    n_in = p.M_lt * 4 * p.d1
    placeholder = FittingNet((np.zeros((n_in, 1)), np.zeros((1, 1))), (np.zeros(1), np.zeros(1)))
    probe = DPModel(p.type_names, p.rcut, p.rcut_smth, p.sel, p.M_lt, nets,
                    [placeholder] * len(p.type_names))
    embed = [n.value_and_derivative for n in nets]

    def descriptors(config):
        env = build_environment_matrix(config, build_neighbor_list(config, p.rcut), probe)
        return dense_descriptor(env, embed, p.M_lt)[0].reshape(len(env), -1)

    flat = descriptors(ref)
    perfect = descriptors(reference_config(p, jitter=0.0))
    K = min(p.n_wells, p.fitting[0] // 4)
    wells = np.arange(2 * K)

    layers = []
    widths = (n_in,) + tuple(p.fitting) + (1,)
    for c in range(len(p.type_names)):
        here = ref.species == c
        Dc = flat[here]
        mu = Dc.mean(0) if len(Dc) else np.zeros(n_in)
        spread = float(np.sqrt(Dc.var(0).mean())) if len(Dc) > 1 else 1.0
        spread = spread if spread > 0 else 1.0
        ws, bs = [], []
        for k, (fi, fo) in enumerate(zip(widths[:-1], widths[1:])):
            W = _normal(rng, (fi, fo), fi)
            b = _normal(rng, fo, fi)
            if k == 0:
                W = W / spread
                b = b - mu @ W
            ws.append(W)
            bs.append(b)
        if K:
            D0 = perfect[here].mean(0) if here.any() else mu
            P = rng.standard_normal((n_in, K))
            dev = (Dc - D0) @ P
            scale = dev.std(0) if len(Dc) > 1 else np.ones(K)
            P = P / np.where(scale > 0, scale, 1.0)
            ws[0][:, :K], ws[0][:, K:2 * K] = _WELL_EPS * P, -_WELL_EPS * P
            bs[0][:K] = _WELL_Z0 - _WELL_EPS * (D0 @ P)
            bs[0][K:2 * K] = _WELL_Z0 + _WELL_EPS * (D0 @ P)
            for W, b in zip(ws[1:-1], bs[1:-1]):
                W[:, wells] = 0.0
                W[wells, :] = 0.0
                b[wells] = 0.0
        layers.append((ws, bs))

    def assemble(a_well, a_rand):
        fits = []
        for ws, bs in layers:
            out = ws[-1] * a_rand
            out[wells] = a_well
            bias = bs[-1] * a_rand - 2 * K * a_well * np.tanh(_WELL_Z0)
            fits.append(FittingNet(tuple(ws[:-1]) + (out,), tuple(bs[:-1]) + (bias,)))
        return DPModel(p.type_names, p.rcut, p.rcut_smth, p.sel, p.M_lt, nets, fits)

    def force_rms(model):
        f = compute_energy_forces_virial(ref, model, nl).forces
        return float(np.sqrt(np.mean(f * f)))

    a_well = p.force_rms / force_rms(assemble(1.0, 0.0)) if K else 0.0
    rand_target = p.force_rms * (p.random_fraction if K else 1.0)
    a_rand = rand_target / force_rms(assemble(0.0, 1.0)) if rand_target else 0.0
    model = assemble(a_well, a_rand)
    prov = {"preset": p.name, "seed": int(seed),
            "init": "gaussian/sqrt(fan_in), standardised on jittered reference lattice, "
                    f"{K} quadratic wells about the unjittered lattice"}
    if overrides:
        prov["overrides"] = {k: (list(v) if isinstance(v, tuple) else v)
                             for k, v in overrides.items()}
    return replace(model, provenance=prov)


def table_upper_bound(r_min: float = 0.5) -> float:
    """Largest embedding input the default table covers: s(r_min) = 1 / r_min."""
    return 1.0 / r_min
