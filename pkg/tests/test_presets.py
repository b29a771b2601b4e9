import numpy as np
import pytest

from dpcompress import build_neighbor_list, compute_energy_forces_virial, gen_model
from dpcompress.io import model_to_dict
from dpcompress.presets import UnknownPresetError, get_preset, reference_config


def test_copper_hyperparameters(copper):
    assert copper.embedding_nets[0].widths == (32, 64, 128)
    assert copper.M == 128 and copper.M_lt == 16
    assert copper.rcut == 8.0 and copper.sel == (512,)
    assert [W.shape[1] for W in copper.fitting_nets[0].weights] == [240, 240, 240, 1]
    assert copper.provenance["preset"] == "copper-like" and copper.provenance["seed"] == 0


def test_water_hyperparameters(water):
    assert water.type_names == ("O", "H")
    assert water.rcut == 6.0 and water.sel == (46, 92)
    assert len(water.embedding_nets) == len(water.fitting_nets) == 2


def test_generation_is_deterministic():
    a, b = gen_model("tiny", 7), gen_model("tiny", 7)
    assert model_to_dict(a) == model_to_dict(b)
    assert model_to_dict(a) != model_to_dict(gen_model("tiny", 8))


def test_overrides_are_recorded():
    m = gen_model("tiny", 0, fitting=(8, 8))
    assert [W.shape[1] for W in m.fitting_nets[0].weights] == [8, 8, 1]
    assert m.provenance["overrides"] == {"fitting": [8, 8]}


def test_unknown_preset():
    with pytest.raises(UnknownPresetError):
        get_preset("argon")
    with pytest.raises(UnknownPresetError):
        gen_model("argon")


@pytest.mark.parametrize("name,fixture", [("copper-like", "copper"), ("tiny", "tiny")])
def test_fcc_lattice_is_a_stationary_point(name, fixture, request):
    # every fcc site is an inversion centre, so forces vanish by symmetry
    model = request.getfixturevalue(fixture)
    c = reference_config(get_preset(name), jitter=0.0)
    res = compute_energy_forces_virial(c, model, build_neighbor_list(c, model.rcut))
    assert np.abs(res.forces).max() <= 1e-10


def test_force_scale_and_binding(tiny):
    p = get_preset("tiny")
    jittered = reference_config(p, jitter=0.1, seed=3)
    res = compute_energy_forces_virial(jittered, tiny, build_neighbor_list(jittered, tiny.rcut))
    rms = np.sqrt(np.mean(res.forces ** 2))
    assert 0.5 * p.force_rms < rms < 1.5 * p.force_rms
    perfect = reference_config(p, jitter=0.0)
    e0 = compute_energy_forces_virial(perfect, tiny, build_neighbor_list(perfect, tiny.rcut))
    assert e0.energy < res.energy
