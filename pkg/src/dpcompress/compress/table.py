"""Piecewise quintic tabulation of an embedding net.

Each interval stores, for every output channel, the unique fifth-order
polynomial matching the net's value, slope and curvature at both ends, in
the local variable ``t = x - x_left``. Coefficients are kept in an
array-of-structures-of-arrays layout ``(n, M/B, 6, B)`` so the B output
channels sharing a coefficient index are contiguous.
"""

from __future__ import annotations

import io
import logging
import struct
import threading
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

MAGIC = b"DPTB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQddI")
_ROWS = 1024  # rows gathered per pass in evaluate()


class TableBuildError(RuntimeError):
    pass


class TableDomainError(ValueError):
    pass


def hermite_quintic(y0, d0, c0, y1, d1, c1, h):
    """Coefficients a0..a5 (last axis) of the quintic on [0, h] with
    value/first/second derivative ``(y0, d0, c0)`` at 0 and
    ``(y1, d1, c1)`` at h."""
    a0 = y0
    a1 = d0
    a2 = 0.5 * c0
    A = y1 - (a0 + h * (a1 + h * a2))
    B = d1 - (a1 + 2.0 * h * a2)
    C = c1 - 2.0 * a2
    h2 = h * h
    a3 = (10.0 * A - 4.0 * h * B + 0.5 * h2 * C) / (h2 * h)
    a4 = (-15.0 * A + 7.0 * h * B - h2 * C) / (h2 * h2)
    a5 = (6.0 * A - 3.0 * h * B + 0.5 * h2 * C) / (h2 * h2 * h)
    return np.stack([a0, a1, a2, a3, a4, a5], axis=-1)


def to_blocked(coeffs: np.ndarray, block: int) -> np.ndarray:
    """(n, M, 6) -> (n, ceil(M/B), 6, B), zero-padding the last block."""
    n, M, _ = coeffs.shape
    nb = -(-M // block)
    padded = np.zeros((n, nb * block, 6))
    padded[:, :M] = coeffs
    return np.ascontiguousarray(padded.reshape(n, nb, block, 6).transpose(0, 1, 3, 2))


def from_blocked(blocked: np.ndarray, M: int) -> np.ndarray:
    n, nb, _, block = blocked.shape
    return blocked.transpose(0, 1, 3, 2).reshape(n, nb * block, 6)[:, :M].copy()


@dataclass(eq=False)
class CompressionTable:
    """Tabulated embedding net on ``[x0, x0 + n h]``.

    Inputs beyond the upper node are evaluated with the last interval's
    polynomial and counted in ``n_extrapolated`` (``upper_policy
    "extrapolate"``) or rejected (``"error"``).
    """

    x0: float
    h: float
    M: int
    blocked: np.ndarray
    upper_policy: str = "extrapolate"
    n_extrapolated: int = field(default=0, init=False)
    max_node_error: float = field(default=0.0, init=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)
    _planar: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.blocked = np.ascontiguousarray(self.blocked, dtype=np.float64)
        if self.blocked.ndim != 4 or self.blocked.shape[2] != 6:
            raise ValueError("blocked coefficients must have shape (n, nb, 6, B)")
        if self.blocked.shape[1] * self.blocked.shape[3] < self.M:
            raise ValueError("blocked payload smaller than M")
        if not self.h > 0:
            raise ValueError("interval size must be positive")
        if self.upper_policy not in ("extrapolate", "error"):
            raise ValueError(f"unknown upper_policy {self.upper_policy!r}")
        # (n, 6, nb*B) copy so one gather pulls a whole interval's coefficients
        n, nb, _, B = self.blocked.shape
        self._planar = np.ascontiguousarray(self.blocked.transpose(0, 2, 1, 3).reshape(n, 6, nb * B))

    @property
    def n(self) -> int:
        return self.blocked.shape[0]

    @property
    def block(self) -> int:
        return self.blocked.shape[3]

    @property
    def x_end(self) -> float:
        return self.x0 + self.n * self.h

    @property
    def nodes(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n + 1)

    @property
    def coeffs(self) -> np.ndarray:
        """Coefficients as a plain ``(n, M, 6)`` array."""
        return from_blocked(self.blocked, self.M)

    @property
    def nbytes(self) -> int:
        return self.blocked.nbytes

    def locate(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise TableDomainError("non-finite table input")
        if np.any(x < self.x0):
            raise TableDomainError(f"table input below lower bound {self.x0}")
        above = x > self.x_end
        if np.any(above):
            if self.upper_policy == "error":
                raise TableDomainError(f"table input above upper bound {self.x_end}")
            with self._lock:
                first = self.n_extrapolated == 0
                self.n_extrapolated += int(above.sum())
            if first:
                log.warning("embedding input %.4g beyond table end %.4g; extrapolating",
                            float(x.max()), self.x_end)
        idx = np.clip(np.floor((x - self.x0) / self.h).astype(np.int64), 0, self.n - 1)
        return idx, x - (self.x0 + idx * self.h)

    def evaluate(self, x, derivative: bool = True):
        """Tabulated rows and their derivative with respect to ``x``.

        Returns two arrays of shape ``x.shape + (M,)`` (the second is None
        when ``derivative`` is false).
        """
        x = np.asarray(x, dtype=np.float64)
        shape = x.shape
        idx, t = self.locate(x.ravel())
        P = idx.size
        val = np.empty((P, self.M))
        der = np.empty((P, self.M)) if derivative else None
        M = self.M
        for lo in range(0, P, _ROWS):
            hi = min(lo + _ROWS, P)
            c = np.take(self._planar, idx[lo:hi], axis=0)
            tt = t[lo:hi, None]
            v = c[:, 5] * tt
            for k in (4, 3, 2, 1):
                v += c[:, k]
                v *= tt
            v += c[:, 0]
            val[lo:hi] = v[:, :M]
            if derivative:
                d = 5.0 * c[:, 5]
                for k in (4, 3, 2):
                    d *= tt
                    d += k * c[:, k]
                d *= tt
                d += c[:, 1]
                der[lo:hi] = d[:, :M]
        val = val.reshape(shape + (M,))
        if derivative:
            der = der.reshape(shape + (M,))
        return val, der

    __call__ = evaluate

    def value_and_derivative(self, x):
        return self.evaluate(x)

    def evaluate_second(self, x):
        """Second derivative of the tabulated rows (used by verification)."""
        idx, t = self.locate(np.ravel(x))
        a = self.coeffs[idx]
        t = t[:, None]
        return (2 * a[..., 2] + t * (6 * a[..., 3] + t * (12 * a[..., 4] + t * 20 * a[..., 5])))

    # -- serialisation -------------------------------------------------
    def to_bytes(self) -> bytes:
        n, nb, _, block = self.blocked.shape
        head = _HEADER.pack(MAGIC, FORMAT_VERSION, self.M, n, self.x0, self.h, block)
        return head + self.blocked.astype("<f8").tobytes()

    @classmethod
    def read_from(cls, fh) -> "CompressionTable | None":
        head = fh.read(_HEADER.size)
        if not head:
            return None
        if len(head) != _HEADER.size:
            raise ValueError("truncated table header")
        magic, version, M, n, x0, h, block = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"bad table magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported table format version {version}")
        nb = -(-M // block)
        count = n * nb * 6 * block
        raw = fh.read(8 * count)
        if len(raw) != 8 * count:
            raise ValueError("truncated table payload")
        blocked = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(n, nb, 6, block)
        return cls(x0, h, M, blocked)


def build_table(net, x0: float, x_end: float, h: float, *, block: int = 16,
                upper_policy: str = "extrapolate", tol: float = 1e-10) -> CompressionTable:
    """Tabulate ``net`` on ``[x0, x_end]`` with interval size ``h``.

    ``net`` must provide ``derivatives(x) -> (g, g1, g2)``. If the domain
    is not a whole number of intervals the upper end is extended. After
    the coefficient solve every interval is re-evaluated at both ends and
    checked against the node values to relative tolerance ``tol``.
    """
    if not x0 < x_end:
        raise ValueError("need x0 < x_end")
    if not h > 0:
        raise ValueError("need h > 0")
    span = (x_end - x0) / h
    n = int(round(span)) if abs(span - round(span)) < 1e-9 else int(np.ceil(span))
    nodes = x0 + h * np.arange(n + 1)
    # Solving for a3..a5 divides differences of O(1) node values by h^3..h^5;
    # doing it in extended precision keeps that cancellation out of the
    # float64 coefficients (no effect where longdouble is plain double).
    g, g1, g2 = net.derivatives(nodes, dtype=np.longdouble)
    bad = ~(np.isfinite(g) & np.isfinite(g1) & np.isfinite(g2)).all(1)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise TableBuildError(f"non-finite derivatives at node {k} (x = {nodes[k]:.6g})")
    hl = np.longdouble(h)
    coeffs = hermite_quintic(g[:-1], g1[:-1], g2[:-1], g[1:], g1[1:], g2[1:], hl)
    coeffs = coeffs.astype(np.float64)
    table = CompressionTable(float(x0), float(h), g.shape[1], to_blocked(coeffs, block),
                             upper_policy=upper_policy)
    table.max_node_error = _verify(coeffs, *(a.astype(np.float64) for a in (g, g1, g2)), h, tol)
    return table


def _verify(coeffs, g, g1, g2, h, tol) -> float:
    a = coeffs
    v0, d0, c0 = a[..., 0], a[..., 1], 2 * a[..., 2]
    v1 = a[..., 0] + h * (a[..., 1] + h * (a[..., 2] + h * (a[..., 3] + h * (a[..., 4] + h * a[..., 5]))))
    d1 = a[..., 1] + h * (2 * a[..., 2] + h * (3 * a[..., 3] + h * (4 * a[..., 4] + h * 5 * a[..., 5])))
    c1 = 2 * a[..., 2] + h * (6 * a[..., 3] + h * (12 * a[..., 4] + h * 20 * a[..., 5]))
    worst = 0.0
    for got, want in ((v0, g[:-1]), (d0, g1[:-1]), (c0, g2[:-1]),
                      (v1, g[1:]), (d1, g1[1:]), (c1, g2[1:])):
        err = np.abs(got - want) / np.maximum(1.0, np.abs(want))
        worst = max(worst, float(err.max()))
    if worst > tol:
        raise TableBuildError(f"Hermite node conditions violated: relative error {worst:.3g}")
    return worst


def write_tables(path, tables) -> None:
    with open(path, "wb") as fh:
        for t in tables:
            fh.write(t.to_bytes())


def read_tables(path) -> list:
    out = []
    with open(path, "rb") as fh:
        while (t := CompressionTable.read_from(fh)) is not None:
            out.append(t)
    if not out:
        raise ValueError(f"{path}: no tables found")
    return out


def tables_to_bytes(tables) -> bytes:
    return b"".join(t.to_bytes() for t in tables)


def tables_from_bytes(data: bytes) -> list:
    fh = io.BytesIO(data)
    out = []
    while (t := CompressionTable.read_from(fh)) is not None:
        out.append(t)
    return out
