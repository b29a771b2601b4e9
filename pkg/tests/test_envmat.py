import numpy as np
import pytest

from dpcompress import build_neighbor_list, gen_config
from dpcompress.envmat import CapacityError, build_environment_matrix, switch_weight


def omega(r, rc, rs):
    # direct transcription of the switching polynomial, one point at a time
    if r < rs:
        return 1.0
    if r >= rc:
        return 0.0
    u = (r - rs) / (rc - rs)
    return u ** 3 * (-6 * u ** 2 + 15 * u - 10) + 1


def test_switch_values():
    rc, rs = 8.0, 7.5
    r = np.array([0.5, 3.0, 7.5, 7.6, 7.75, 7.99, 8.0, 9.0])
    s, _ = switch_weight(r, rc, rs)
    want = np.array([omega(x, rc, rs) / x for x in r])
    np.testing.assert_allclose(s, want, rtol=1e-15, atol=1e-17)
    assert s[-1] == 0.0 and s[-2] == 0.0


def test_switch_derivative_matches_finite_difference():
    rc, rs = 6.0, 5.5
    r = np.linspace(0.8, 6.2, 301)
    _, ds = switch_weight(r, rc, rs)
    h = 1e-6
    fd = (switch_weight(r + h, rc, rs)[0] - switch_weight(r - h, rc, rs)[0]) / (2 * h)
    np.testing.assert_allclose(ds, fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("knot", [5.5, 6.0])
def test_switch_is_c2_at_knots(knot):
    rc, rs = 6.0, 5.5
    h = 1e-5
    w = lambda r: switch_weight(np.array([r]), rc, rs)[0][0] * r
    left = (w(knot - 2 * h) - 2 * w(knot - h) + w(knot)) / h ** 2
    right = (w(knot) - 2 * w(knot + h) + w(knot + 2 * h)) / h ** 2
    # one-sided stencils carry an O(h) error of about |w'''| h = 4.8e-3
    assert abs(left - right) < 1e-2
    d_left = (w(knot) - w(knot - h)) / h
    d_right = (w(knot + h) - w(knot)) / h
    assert abs(d_left - d_right) < 1e-6


def test_switch_rejects_nonpositive():
    with pytest.raises(ValueError):
        switch_weight(np.array([0.0]), 6.0, 5.5)


def test_rows_match_direct_formula(tiny):
    c = gen_config("fcc", 3.634, (2, 2, 2), jitter=0.2, seed=2)
    nl = build_neighbor_list(c, tiny.rcut)
    env = build_environment_matrix(c, nl, tiny)
    rij = nl.vectors(c.positions, c.cell)
    for a in range(c.n_atoms):
        pids = env.pair[a][env.pair[a] >= 0]
        rows = env.rows[a][env.pair[a] >= 0]
        for p, row in zip(pids, rows):
            x, y, z = rij[p]
            r = np.sqrt(x * x + y * y + z * z)
            s = omega(r, tiny.rcut, tiny.rcut_smth) / r
            np.testing.assert_allclose(row, [s, s * x / r, s * y / r, s * z / r],
                                       rtol=0, atol=1e-14)
        # every pair inside the cutoff is present, nothing else
        inside = np.flatnonzero((nl.centers == a) & (np.linalg.norm(rij, axis=1) < tiny.rcut))
        assert set(pids) == set(inside)
    assert np.all(env.rows[~env.mask] == 0)


def test_slots_sorted_by_distance(tiny, tiny_config):
    nl = build_neighbor_list(tiny_config, tiny.rcut)
    env = build_environment_matrix(tiny_config, nl, tiny)
    r = np.linalg.norm(env.rij, axis=-1)
    for a in range(len(env)):
        k = env.sector_counts[a, 0]
        assert np.all(np.diff(r[a, :k]) >= 0)


def test_row_derivative_matches_finite_difference(tiny, tiny_config):
    nl = build_neighbor_list(tiny_config, tiny.rcut)
    env = build_environment_matrix(tiny_config, nl, tiny, atoms=[0])
    from dpcompress.envmat import row_derivatives
    k = int(env.sector_counts[0, 0]) - 1  # farthest neighbor, inside the switch region
    v = env.rij[0, k]
    h = 1e-6
    fd = np.zeros((4, 3))
    for d in range(3):
        for sign in (1, -1):
            w = v.copy()
            w[d] += sign * h
            r = np.linalg.norm(w)
            s, _ = switch_weight(np.array([r]), tiny.rcut, tiny.rcut_smth)
            fd[:, d] += sign * s[0] * np.array([1, *(w / r)]) / (2 * h)
    np.testing.assert_allclose(env.deriv[0, k], fd, rtol=1e-6, atol=1e-9)
    r = np.linalg.norm(v)
    s, ds = switch_weight(np.array([r]), tiny.rcut, tiny.rcut_smth)
    np.testing.assert_allclose(row_derivatives(v[None], np.array([r]), s, ds)[0], env.deriv[0, k])


def test_capacity_error_names_atom(tiny, tiny_config):
    nl = build_neighbor_list(tiny_config, tiny.rcut)
    small = tiny.with_sel((10,))
    with pytest.raises(CapacityError, match="atom"):
        build_environment_matrix(tiny_config, nl, small)


def test_buffered_list_gives_same_matrix(tiny, tiny_config):
    a = build_environment_matrix(tiny_config, build_neighbor_list(tiny_config, tiny.rcut), tiny)
    b = build_environment_matrix(tiny_config, build_neighbor_list(tiny_config, tiny.rcut + 2), tiny)
    assert np.array_equal(a.rows, b.rows)
