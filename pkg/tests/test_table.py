import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpcompress.compress import build_table, compress_model, eval_table
from dpcompress.compress.table import (
    MAGIC,
    CompressionTable,
    TableBuildError,
    TableDomainError,
    from_blocked,
    hermite_quintic,
    read_tables,
    tables_from_bytes,
    tables_to_bytes,
    to_blocked,
    write_tables,
)


class PolyNet:
    """Stand-in net whose outputs are given polynomials (coefficients low -> high)."""

    def __init__(self, coeffs):
        self.p = [np.polynomial.Polynomial(c) for c in coeffs]

    def derivatives(self, x, dtype=np.float64):
        x = np.asarray(x, dtype=np.float64)
        g = np.stack([p(x) for p in self.p], -1)
        g1 = np.stack([p.deriv(1)(x) for p in self.p], -1)
        g2 = np.stack([p.deriv(2)(x) for p in self.p], -1)
        return g.astype(dtype), g1.astype(dtype), g2.astype(dtype)

    def __call__(self, x):
        return self.derivatives(x)[0]


class BadNet(PolyNet):
    def derivatives(self, x, dtype=np.float64):
        g, g1, g2 = super().derivatives(x, dtype)
        g1[3, 1] = np.nan
        return g, g1, g2


def test_hermite_coefficients_solve_endpoint_conditions():
    rng = np.random.default_rng(0)
    y0, d0, c0, y1, d1, c1 = rng.normal(size=6)
    h = 0.37
    a = hermite_quintic(y0, d0, c0, y1, d1, c1, h)
    P = np.polynomial.Polynomial(a)
    np.testing.assert_allclose([P(0), P.deriv()(0), P.deriv(2)(0)], [y0, d0, c0], rtol=1e-13)
    np.testing.assert_allclose([P(h), P.deriv()(h), P.deriv(2)(h)], [y1, d1, c1], rtol=1e-12)


def test_quintic_is_reproduced_everywhere():
    rng = np.random.default_rng(1)
    net = PolyNet(rng.normal(size=(5, 6)))
    t = build_table(net, 0.0, 2.0, 0.1, block=4)
    x = np.linspace(0, 2, 1001)
    val, der = eval_table(t, x)
    np.testing.assert_allclose(val, net(x), rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(der, net.derivatives(x)[1], rtol=1e-10, atol=1e-10)


def test_node_conditions(tiny):
    net = tiny.embedding_nets[0]
    t = build_table(net, 0.0, 2.0, 0.01)
    g, g1, _ = net.derivatives(t.nodes)
    val, der = t.evaluate(t.nodes[:-1])
    np.testing.assert_allclose(val, g[:-1], rtol=0, atol=1e-12)
    np.testing.assert_allclose(der, g1[:-1], rtol=0, atol=1e-11)
    assert t.max_node_error < 1e-10


def test_interior_nodes_are_c2(tiny):
    t = build_table(tiny.embedding_nets[0], 0.0, 2.0, 0.05)
    a = t.coeffs  # (n, M, 6)
    h = t.h
    powers = h ** np.arange(6)
    right_val = (a * powers).sum(-1)
    right_der = (a[..., 1:] * np.arange(1, 6) * powers[:5]).sum(-1)
    right_cur = (a[..., 2:] * np.array([2, 6, 12, 20]) * powers[:4]).sum(-1)
    for got, want in ((right_val, a[..., 0]), (right_der, a[..., 1]), (right_cur, 2 * a[..., 2])):
        err = np.abs(got[:-1] - want[1:]) / np.maximum(1, np.abs(want[1:]))
        assert err.max() < 1e-10


def test_convergence_exponent_dense_grid(tiny):
    net = tiny.embedding_nets[0]
    x = np.linspace(0.0, 1.6, 4001)[1:-1] + 1e-4
    errs = []
    hs = (0.01, 0.005, 0.0025)
    for h in hs:
        t = build_table(net, 0.0, 2.0, h)
        errs.append(np.abs(t.evaluate(x, derivative=False)[0] - net(x)).max())
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 5.5
    # each halving gains close to 2^6
    assert errs[0] / errs[1] > 2 ** 5.5 and errs[1] / errs[2] > 2 ** 5.5


def test_row_derivative_matches_finite_difference(tiny):
    t = build_table(tiny.embedding_nets[0], 0.0, 2.0, 0.001)
    x = np.array([0.1234, 0.77777, 1.5013])
    h = 1e-6
    fd = (t.evaluate(x + h)[0] - t.evaluate(x - h)[0]) / (2 * h)
    np.testing.assert_allclose(t.evaluate(x)[1], fd, rtol=1e-8, atol=1e-8)


def test_value_only_path_is_identical(tiny_tables):
    x = np.random.default_rng(3).uniform(0, 2, (7, 11))
    v, d = tiny_tables[0].evaluate(x)
    v2, none = tiny_tables[0].evaluate(x, derivative=False)
    assert none is None and v.shape == (7, 11, 32) and d.shape == v.shape
    assert np.array_equal(v, v2)


def test_domain_policies(tiny):
    net = tiny.embedding_nets[0]
    t = build_table(net, 0.0, 1.0, 0.1)
    with pytest.raises(TableDomainError):
        t.evaluate(np.array([-1e-9]))
    assert t.n_extrapolated == 0
    v, _ = t.evaluate(np.array([1.0, 1.01, 1.2]))
    assert t.n_extrapolated == 2
    assert np.all(np.isfinite(v))
    strict = build_table(net, 0.0, 1.0, 0.1, upper_policy="error")
    with pytest.raises(TableDomainError):
        strict.evaluate(np.array([1.05]))
    strict.evaluate(np.array([1.0]))
    for bad in (np.nan, np.inf):
        with pytest.raises(TableDomainError):
            t.evaluate(np.array([0.5, bad]))


def test_domain_is_extended_to_whole_intervals(tiny):
    t = build_table(tiny.embedding_nets[0], 0.0, 1.0, 0.3)
    assert t.n == 4 and t.x_end == pytest.approx(1.2)
    assert build_table(tiny.embedding_nets[0], 0.0, 2.0, 0.001).n == 2000


def test_build_errors():
    with pytest.raises(TableBuildError, match="node 3"):
        build_table(BadNet([[0, 1], [1, 0]]), 0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        build_table(PolyNet([[1]]), 1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        build_table(PolyNet([[1]]), 0.0, 1.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 40), st.sampled_from([1, 4, 16]))
def test_blocked_layout_round_trip(n, M, block):
    c = np.random.default_rng(n * 100 + M).normal(size=(n, M, 6))
    b = to_blocked(c, block)
    assert b.shape == (n, -(-M // block), 6, block)
    assert np.array_equal(from_blocked(b, M), c)
    # channels sharing a coefficient index are contiguous
    assert np.array_equal(b[0, 0, 2, : min(block, M)], c[0, : min(block, M), 2])


def test_table_bytes_round_trip(water, tmp_path):
    tables = compress_model(water, 0.05)
    data = tables_to_bytes(tables)
    assert data[:4] == MAGIC
    back = tables_from_bytes(data)
    assert len(back) == 2
    for a, b in zip(tables, back):
        assert (a.x0, a.h, a.M, a.n) == (b.x0, b.h, b.M, b.n)
        assert np.array_equal(a.blocked, b.blocked)
    assert tables_to_bytes(back) == data
    path = tmp_path / "w.dptb"
    write_tables(path, tables)
    assert path.read_bytes() == data
    assert len(read_tables(path)) == 2


def test_corrupt_table_files(tiny_tables, tmp_path):
    data = tables_to_bytes(tiny_tables)
    with pytest.raises(ValueError, match="magic"):
        CompressionTable.read_from(io.BytesIO(b"XXXX" + data[4:]))
    with pytest.raises(ValueError, match="truncated"):
        CompressionTable.read_from(io.BytesIO(data[:-8]))
    with pytest.raises(ValueError, match="truncated"):
        CompressionTable.read_from(io.BytesIO(data[:10]))
    empty = tmp_path / "e.dptb"
    empty.write_bytes(b"")
    with pytest.raises(ValueError):
        read_tables(empty)


def test_payload_scales_with_inverse_interval(tiny):
    a = compress_model(tiny, 0.01)[0]
    b = compress_model(tiny, 0.001)[0]
    assert b.nbytes == 10 * a.nbytes
