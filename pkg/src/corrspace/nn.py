"""Minimal feedforward feature extractors with hand-derived gradients.

Two fixed layers: a square first layer (width = input dim unless
overridden for tests) and a linear output layer of the shared-space
width. Batches are column-major (d x m). The optimizer is Adam with
decoupled weight decay; decay multiplies parameters before the adaptive
step, so it acts even when gradients vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from corrspace.errors import NumericalError

ACTIVATIONS = ("tanh", "identity")


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_out, fan_in))


class Identity:
    """Pass-through extractor; gives the linear CCA/GCCA variants."""

    def __init__(self, dim: int):
        self.dim = dim
        self.out_dim = dim

    def forward(self, X):
        return X, None

    def backward(self, cache, dY):
        return {}, dY

    def params(self):
        return {}

    def set_params(self, params):
        if params:
            raise ValueError("identity extractor has no parameters")


class Mlp:
    """Two-layer net y = W2 @ act(W1 @ x + b1) + b2 on column batches."""

    def __init__(self, W1, b1, W2, b2, activation: str = "tanh"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.W1 = np.asarray(W1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.W2 = np.asarray(W2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)
        self.activation = activation
        h, d = self.W1.shape
        k, h2 = self.W2.shape
        if h2 != h or self.b1.shape != (h,) or self.b2.shape != (k,):
            raise ValueError("inconsistent layer shapes")
        self.dim = d
        self.out_dim = k

    @classmethod
    def init(cls, d_in: int, d_out: int, seed, hidden: int | None = None,
             activation: str = "tanh") -> "Mlp":
        """Seeded init: Glorot-uniform weights, zero biases."""
        hidden = d_in if hidden is None else hidden
        rng = np.random.default_rng(seed)
        return cls(
            W1=glorot_uniform(rng, hidden, d_in),
            b1=np.zeros(hidden),
            W2=glorot_uniform(rng, d_out, hidden),
            b2=np.zeros(d_out),
            activation=activation,
        )

    def _act(self, z):
        return np.tanh(z) if self.activation == "tanh" else z

    def forward(self, X):
        """X is d x m; returns (Y of k x m, cache for backward)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != self.dim:
            raise ValueError(f"expected input of shape ({self.dim}, m), got {X.shape}")
        z1 = self.W1 @ X + self.b1[:, None]
        a1 = self._act(z1)
        y = self.W2 @ a1 + self.b2[:, None]
        return y, (X, z1, a1)

    def backward(self, cache, dY, need_dx: bool = True):
        """Gradients of sum(dY * Y) w.r.t. parameters (and input).

        `cache` must come from a matching forward call.
        """
        if cache is None:
            raise ValueError("stale or missing forward cache")
        X, z1, a1 = cache
        dY = np.asarray(dY, dtype=np.float64)
        if dY.shape != (self.out_dim, X.shape[1]):
            raise ValueError(f"dY shape {dY.shape} does not match output ({self.out_dim}, {X.shape[1]})")
        dW2 = dY @ a1.T
        db2 = dY.sum(axis=1)
        da1 = self.W2.T @ dY
        if self.activation == "tanh":
            dz1 = da1 * (1.0 - a1 * a1)
        else:
            dz1 = da1
        dW1 = dz1 @ X.T
        db1 = dz1.sum(axis=1)
        dX = self.W1.T @ dz1 if need_dx else None
        return {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}, dX

    def params(self):
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def set_params(self, params):
        self.W1 = params["W1"]
        self.b1 = params["b1"]
        self.W2 = params["W2"]
        self.b2 = params["b2"]


@dataclass
class OptimizerState:
    """Adam with decoupled weight decay, one slot pair per parameter."""

    lr: float = 1e-3
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict) -> dict:
        """One descent step; returns the updated parameter dict."""
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NumericalError(f"non-finite gradient for {name!r}")
        self.step_count += 1
        t = self.step_count
        out = {}
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            if self.weight_decay:
                p = p * (1.0 - self.lr * self.weight_decay)
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / (1.0 - self.beta1**t)
            v_hat = self.v[name] / (1.0 - self.beta2**t)
            out[name] = p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return out


def step(opt: OptimizerState, params: dict, grads: dict) -> dict:
    return opt.step(params, grads)


def save_extractor(net, out_dir) -> None:
    """Persist an Mlp (FMAT parameters + JSON header) or an Identity."""
    import json
    from pathlib import Path

    from corrspace.data import write_fmat

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if isinstance(net, Identity):
        header = {"type": "identity", "dim": net.dim}
    else:
        header = {
            "type": "mlp",
            "dim": net.dim,
            "hidden": net.W1.shape[0],
            "out_dim": net.out_dim,
            "activation": net.activation,
        }
        write_fmat(out_dir / "W1.fmat", net.W1)
        write_fmat(out_dir / "b1.fmat", net.b1)
        write_fmat(out_dir / "W2.fmat", net.W2)
        write_fmat(out_dir / "b2.fmat", net.b2)
    (out_dir / "extractor.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")


def load_extractor(in_dir):
    import json
    from pathlib import Path

    from corrspace.data import read_fmat

    in_dir = Path(in_dir)
    header = json.loads((in_dir / "extractor.json").read_text())
    if header["type"] == "identity":
        return Identity(int(header["dim"]))
    return Mlp(
        W1=read_fmat(in_dir / "W1.fmat"),
        b1=read_fmat(in_dir / "b1.fmat").ravel(),
        W2=read_fmat(in_dir / "W2.fmat"),
        b2=read_fmat(in_dir / "b2.fmat").ravel(),
        activation=header["activation"],
    )
