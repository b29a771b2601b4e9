import tracemalloc

import numpy as np
import pytest

from dpcompress import build_neighbor_list, compute_energy_forces_virial, gen_config
from dpcompress.envmat import build_environment_matrix
from dpcompress.evaluate import dense_descriptor
from dpcompress.fused import fused_backward, fused_descriptor, flop_report
from dpcompress.structure import AtomicConfig


def rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


@pytest.mark.parametrize("which", ["tiny", "water"])
def test_fused_equals_dense_tabulated(which, request):
    from dpcompress.compress import compress_model
    model = request.getfixturevalue(which)
    tables = compress_model(model, 0.001)
    lattice = "fcc" if which == "tiny" else "water"
    a = 3.634 if which == "tiny" else 3.104
    for seed in range(3):
        c = gen_config(lattice, a, (2, 2, 2), jitter=0.1, seed=seed, type_names=model.type_names)
        nl = build_neighbor_list(c, model.rcut)
        env = build_environment_matrix(c, nl, model)
        Df, _ = fused_descriptor(env, tables, model.M_lt)
        Dd, _, _ = dense_descriptor(env, [t.evaluate for t in tables], model.M_lt)
        assert rel(Df, Dd) <= 1e-12
        f = compute_energy_forces_virial(c, model, nl, tables=tables, fused=True)
        d = compute_energy_forces_virial(c, model, nl, tables=tables, fused=False)
        assert abs(f.energy - d.energy) <= 1e-12 * abs(d.energy)
        assert rel(f.forces, d.forces) <= 1e-12


def test_padding_invariance_is_bitwise(tiny, tiny_tables, tiny_config):
    nl = build_neighbor_list(tiny_config, tiny.rcut)
    tight_sel = int(np.diff(nl.offsets).max())
    tight = compute_energy_forces_virial(tiny_config, tiny.with_sel((tight_sel,)), nl,
                                         tables=tiny_tables)
    padded = compute_energy_forces_virial(tiny_config, tiny.with_sel((512,)), nl,
                                          tables=tiny_tables)
    assert tight.energy == padded.energy
    assert np.array_equal(tight.forces, padded.forces)
    assert np.array_equal(tight.virial, padded.virial)
    assert tight.n_table_evals == padded.n_table_evals


def cluster(n_neighbors, seed=0):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_neighbors, 3))
    d *= (rng.uniform(1.0, 4.4, n_neighbors) / np.linalg.norm(d, axis=1))[:, None]
    pos = np.vstack([[20.0, 20.0, 20.0], 20.0 + d])
    return AtomicConfig(pos, np.zeros(len(pos), dtype=int), np.eye(3) * 40.0)


def test_counter_equals_real_neighbors(tiny, tiny_tables):
    model = tiny.with_sel((512,))
    c = cluster(100)
    env = build_environment_matrix(c, build_neighbor_list(c, model.rcut), model, atoms=[0])
    assert env.nmax == 512 and int(env.n_real[0]) == 100
    D, ws = fused_descriptor(env, tiny_tables, model.M_lt)
    assert ws.n_evals == 100
    fused_backward(ws, np.ones_like(D), env)
    assert ws.n_backward_evals == 100


def test_skip_guarantee_over_whole_config(tiny, tiny_tables, tiny_config):
    model = tiny.with_sel((128,))
    nl = build_neighbor_list(tiny_config, model.rcut)
    f = compute_energy_forces_virial(tiny_config, model, nl, tables=tiny_tables)
    d = compute_energy_forces_virial(tiny_config, model, nl, tables=tiny_tables, fused=False)
    assert d.n_table_evals == 128 * tiny_config.n_atoms
    env = build_environment_matrix(tiny_config, nl, model)
    assert f.n_table_evals == int(env.n_real.sum()) < d.n_table_evals


@pytest.mark.parametrize("block", [1, 3, 16, 64])
def test_block_size_does_not_matter(tiny, tiny_tables, tiny_config, block):
    nl = build_neighbor_list(tiny_config, tiny.rcut)
    ref = compute_energy_forces_virial(tiny_config, tiny, nl, tables=tiny_tables, fused=False)
    got = compute_energy_forces_virial(tiny_config, tiny, nl, tables=tiny_tables, block=block)
    assert rel(got.forces, ref.forces) <= 1e-12


def _peak(fn, *args):
    tracemalloc.start()
    try:
        fn(*args)
        return tracemalloc.get_traced_memory()[1]
    finally:
        tracemalloc.stop()


def test_memory_never_holds_embedding_matrix(copper, copper_tables):
    c = gen_config("fcc", 3.634, (3, 3, 3), jitter=0.1, seed=5)
    peaks = {}
    for sel in (512, 2048):
        model = copper.with_sel((sel,))
        env = build_environment_matrix(c, build_neighbor_list(c, model.rcut), model,
                                       atoms=np.arange(32))
        g_bytes = len(env) * env.nmax * model.M * 8
        fused = _peak(fused_descriptor, env, copper_tables, model.M_lt)
        dense = _peak(dense_descriptor, env, [t.evaluate for t in copper_tables], model.M_lt)
        assert dense >= g_bytes
        assert fused < g_bytes / 3
        peaks[sel] = fused
    # workspace is bounded by the chunk size, not by the padded width
    assert peaks[2048] <= 1.05 * peaks[512]


def test_table_count_mismatch(water, tiny_tables):
    c = gen_config("water", 3.104, (2, 2, 2), seed=0, type_names=("O", "H"))
    env = build_environment_matrix(c, build_neighbor_list(c, water.rcut), water)
    with pytest.raises(ValueError):
        fused_descriptor(env, tiny_tables, water.M_lt)


def test_flop_report():
    r = flop_report(1, 1, 32)
    assert r["original"] == 32 + 10 * 32 * 32 == 10272
    assert r["tabulated"] == 56 * 32 == 1792
    assert r["ratio"] == pytest.approx(321 / 56)
    assert r["savings"] == pytest.approx(1 - 56 / 321)
    assert round(100 * r["savings"], 2) == 82.55
    big = flop_report(108, 512, 32)
    assert big["original"] == 108 * 512 * 10272
    with pytest.raises(ValueError):
        flop_report(0, 512, 32)
