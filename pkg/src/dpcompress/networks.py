"""Embedding net, fitting net and the full Deep Potential model definition."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EmbeddingNet:
    """Scalar -> R^M map: one tanh layer of width d1, then two
    width-doubling residual layers ``y = (x, x) + tanh(x W + b)``.
    """

    W0: np.ndarray
    b0: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        d1 = self.W0.shape[0]
        shapes = {
            "W0": (d1,), "b0": (d1,),
            "W1": (d1, 2 * d1), "b1": (2 * d1,),
            "W2": (2 * d1, 4 * d1), "b2": (4 * d1,),
        }
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"embedding {name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"embedding {name} has non-finite entries")
            object.__setattr__(self, name, arr)

    @property
    def d1(self) -> int:
        return self.W0.shape[0]

    @property
    def M(self) -> int:
        return 4 * self.d1

    @property
    def widths(self) -> tuple[int, int, int]:
        return (self.d1, 2 * self.d1, 4 * self.d1)

    def layers(self):
        return [(self.W1, self.b1), (self.W2, self.b2)]

    def __call__(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        y = np.tanh(s[..., None] * self.W0 + self.b0)
        for W, b in self.layers():
            y = np.concatenate([y, y], axis=-1) + np.tanh(y @ W + b)
        return y

    def value_and_derivative(self, s: np.ndarray):
        """Rows G(s) and dG/ds by forward-mode differentiation."""
        s = np.asarray(s, dtype=np.float64)
        y = np.tanh(s[..., None] * self.W0 + self.b0)
        dy = (1.0 - y * y) * self.W0
        for W, b in self.layers():
            t = np.tanh(y @ W + b)
            dt = (1.0 - t * t) * (dy @ W)
            y = np.concatenate([y, y], axis=-1) + t
            dy = np.concatenate([dy, dy], axis=-1) + dt
        return y, dy

    def derivatives(self, x, dtype=np.float64):
        """Value, first and second derivative of the net at ``x``.

        Propagates second-order tangents through every layer using
        tanh' = 1 - t^2 and tanh'' = -2 t (1 - t^2). ``dtype`` sets the
        working precision (e.g. ``np.longdouble``).
        """
        x = np.asarray(x, dtype=dtype)
        W0, b0 = self.W0.astype(dtype), self.b0.astype(dtype)
        t = np.tanh(x[..., None] * W0 + b0)
        dz = W0
        g = t
        g1 = (1.0 - t * t) * dz
        g2 = -2.0 * t * (1.0 - t * t) * dz * dz
        for W, b in self.layers():
            W, b = W.astype(dtype), b.astype(dtype)
            z1 = g1 @ W
            z2 = g2 @ W
            t = np.tanh(g @ W + b)
            sech2 = 1.0 - t * t
            t1 = sech2 * z1
            t2 = sech2 * z2 - 2.0 * t * sech2 * z1 * z1
            g = np.concatenate([g, g], axis=-1) + t
            g1 = np.concatenate([g1, g1], axis=-1) + t1
            g2 = np.concatenate([g2, g2], axis=-1) + t2
        return g, g1, g2


@dataclass(frozen=True)
class FittingNet:
    """Dense tanh network mapping a flattened descriptor to one energy.

    Hidden layers share one width; a layer whose input and output widths
    agree adds its input back (identity shortcut). The output is linear.
    """

    weights: tuple
    biases: tuple

    def __post_init__(self):
        ws = tuple(np.asarray(w, dtype=np.float64) for w in self.weights)
        bs = tuple(np.asarray(b, dtype=np.float64) for b in self.biases)
        if len(ws) != len(bs) or len(ws) < 2:
            raise ValueError("fitting net needs at least one hidden and one output layer")
        for w, b in zip(ws, bs):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError("inconsistent fitting layer shapes")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("fitting net has non-finite parameters")
        for w_prev, w in zip(ws[:-1], ws[1:]):
            if w_prev.shape[1] != w.shape[0]:
                raise ValueError("fitting layer widths do not chain")
        hidden = {w.shape[1] for w in ws[:-1]}
        if len(hidden) != 1:
            raise ValueError("all hidden layers of the fitting net must share one width")
        if ws[-1].shape[1] != 1:
            raise ValueError("fitting net output must be scalar")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def n_in(self) -> int:
        return self.weights[0].shape[0]

    @property
    def width(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_hidden(self) -> int:
        return len(self.weights) - 1

    def hidden(self, x: np.ndarray) -> np.ndarray:
        """Activations feeding the linear output layer."""
        y = np.asarray(x, dtype=np.float64)
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            t = np.tanh(y @ W + b)
            y = y + t if W.shape[0] == W.shape[1] else t
        return y

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return (self.hidden(x) @ self.weights[-1] + self.biases[-1])[..., 0]

    def value_and_grad(self, x: np.ndarray):
        """Energies for a batch of inputs and dE/dx per row."""
        y = np.asarray(x, dtype=np.float64)
        tape = []
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            t = np.tanh(y @ W + b)
            tape.append(t)
            y = y + t if W.shape[0] == W.shape[1] else t
        e = (y @ self.weights[-1] + self.biases[-1])[..., 0]
        grad = np.broadcast_to(self.weights[-1][:, 0], y.shape)
        for W, t in zip(reversed(self.weights[:-1]), reversed(tape)):
            back = ((1.0 - t * t) * grad) @ W.T
            grad = grad + back if W.shape[0] == W.shape[1] else back
        return e, np.ascontiguousarray(grad)


@dataclass(frozen=True)
class DPModel:
    """Complete potential: one embedding net per neighbor species, one
    fitting net per center species.

    ``sel[t]`` is the number of environment-matrix rows reserved for
    neighbors of species ``t``; sectors are laid out in species order.
    """

    type_names: tuple
    rcut: float
    rcut_smth: float
    sel: tuple
    M_lt: int
    embedding_nets: tuple
    fitting_nets: tuple
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "type_names", tuple(self.type_names))
        object.__setattr__(self, "sel", tuple(int(x) for x in self.sel))
        object.__setattr__(self, "embedding_nets", tuple(self.embedding_nets))
        object.__setattr__(self, "fitting_nets", tuple(self.fitting_nets))
        S = len(self.type_names)
        if not 0 < self.rcut_smth < self.rcut:
            raise ValueError("need 0 < rcut_smth < rcut")
        if len(self.sel) != S or len(self.embedding_nets) != S or len(self.fitting_nets) != S:
            raise ValueError("sel, embedding and fitting nets must have one entry per species")
        Ms = {net.M for net in self.embedding_nets}
        if len(Ms) != 1:
            raise ValueError("embedding nets disagree on output width")
        if not 0 < self.M_lt < self.M:
            raise ValueError("M_lt must satisfy 0 < M_lt < M")
        for fit in self.fitting_nets:
            if fit.n_in != self.M_lt * self.M:
                raise ValueError(f"fitting net expects {fit.n_in} inputs, descriptor has "
                                 f"{self.M_lt * self.M}")

    @property
    def n_types(self) -> int:
        return len(self.type_names)

    @property
    def M(self) -> int:
        return self.embedding_nets[0].M

    @property
    def d1(self) -> int:
        return self.embedding_nets[0].d1

    @property
    def nmax(self) -> int:
        return sum(self.sel)

    @property
    def sector_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sel)]).astype(np.int64)

    def with_sel(self, sel) -> "DPModel":
        from dataclasses import replace
        return replace(self, sel=tuple(sel))
