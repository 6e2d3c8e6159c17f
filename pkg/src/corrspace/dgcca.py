"""Generalized CCA over J views, linear or with trained feature extractors.

For fixed extractor outputs the shared representation G and per-view maps
U_j have a closed form: G's rows are the top-k right singular vectors of
the vertically stacked whitened outputs (weighted per view), and each U_j
is the ridge regression of G onto that view's centered output. The
training loop alternates the closed-form solve with gradient steps on the
extractors against the reconstruction loss, G and U_j held fixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from corrspace.cca import inv_sqrt_spd
from corrspace.config import ExperimentConfig
from corrspace.data import MultiviewDataset, read_fmat, write_fmat
from corrspace.errors import DataError, NumericalError
from corrspace.nn import Identity, Mlp, OptimizerState, load_extractor, save_extractor
from corrspace.retrieval import evaluate_all_pairs
from corrspace.training import (
    TrainLog,
    clamp_batch_size,
    iter_batches,
    restore_params,
    snapshot_params,
)


def gcca_solve(outputs, k: int, r: float, weights=None):
    """Closed-form G, U_j and reconstruction loss for fixed outputs.

    `outputs` are h_j x m matrices (centered internally). Returns
    (G of k x m with G G^T = I_k, list of U_j of h_j x k, loss) with
    loss = sum_j w_j ||G - U_j^T Y_j||_F^2. G rows follow the
    largest-magnitude-entry-positive sign convention.
    """
    outputs = [np.asarray(y, dtype=np.float64) for y in outputs]
    if not outputs:
        raise DataError("no views to solve")
    m = outputs[0].shape[1]
    if any(y.ndim != 2 or y.shape[1] != m for y in outputs):
        raise DataError("all outputs must be 2-D with the same number of columns")
    total_rows = sum(y.shape[0] for y in outputs)
    if not 1 <= k <= min(m, total_rows):
        raise DataError(f"k={k} must lie in [1, min(m={m}, sum h_j={total_rows})]")
    if weights is None:
        weights = [1.0] * len(outputs)
    weights = [float(w) for w in weights]
    if len(weights) != len(outputs) or any(w <= 0 for w in weights):
        raise DataError("need one positive weight per view")

    centered = [y - y.mean(axis=1, keepdims=True) for y in outputs]
    inv_cov = []
    blocks = []
    for h, w in zip(centered, weights):
        cov = h @ h.T + r * np.eye(h.shape[0])
        if not np.all(np.isfinite(cov)):
            raise NumericalError("non-finite view covariance (diverged extractor outputs?)")
        isq = inv_sqrt_spd(cov)
        inv_cov.append(isq @ isq)
        blocks.append(np.sqrt(w) * (isq @ h))

    # SVD of the stacked whitened outputs instead of eigendecomposing the
    # m x m Gram matrix: cheaper and better conditioned for large batches.
    _, _, vt = np.linalg.svd(np.vstack(blocks), full_matrices=False)
    g = vt[:k].copy()
    for i in range(k):
        if g[i, np.argmax(np.abs(g[i]))] < 0:
            g[i] = -g[i]

    u_maps = [ic @ h @ g.T for ic, h in zip(inv_cov, centered)]
    loss = 0.0
    for h, u, w in zip(centered, u_maps, weights):
        resid = g - u.T @ h
        loss += w * float(np.sum(resid * resid))
    return g, u_maps, loss


def dgcca_gradient(Yj: np.ndarray, G: np.ndarray, Uj: np.ndarray, wj: float) -> np.ndarray:
    """Gradient of w_j ||G - U_j^T Y_j||_F^2 in Y_j, with G and U_j fixed."""
    Yj = np.asarray(Yj, dtype=np.float64)
    if Uj.shape[0] != Yj.shape[0] or Uj.shape[1] != G.shape[0] or G.shape[1] != Yj.shape[1]:
        raise DataError(
            f"inconsistent shapes: Y {Yj.shape}, G {G.shape}, U {Uj.shape}"
        )
    if wj <= 0:
        raise DataError("view weight must be > 0")
    return 2.0 * wj * (Uj @ (Uj.T @ Yj) - Uj @ G)


@dataclass
class DgccaModel:
    """Per-view extractors and projections into the shared k-space."""

    extractors: list
    U: list
    input_means: list
    output_means: list
    view_names: list[str]
    k: int
    r: float
    weights: list[float]
    config: dict
    log: TrainLog | None = None
    g_train: np.ndarray | None = field(default=None, repr=False)

    def _index(self, view: str) -> int:
        try:
            return self.view_names.index(view)
        except ValueError:
            raise DataError(f"unknown view {view!r}; model has {self.view_names}") from None

    def embed(self, Z, view: str) -> np.ndarray:
        """U_j^T applied to the centered extractor output, rows as samples."""
        j = self._index(view)
        Z = np.asarray(Z, dtype=np.float64)
        out, _ = self.extractors[j].forward((Z - self.input_means[j]).T)
        return (self.U[j].T @ (out - self.output_means[j][:, None])).T

    def training_g(self) -> np.ndarray | None:
        """Shared representation of the train split from the final solve."""
        return self.g_train

    def save(self, model_dir) -> Path:
        model_dir = Path(model_dir)
        model_dir.mkdir(parents=True, exist_ok=True)
        for name, net, u, imean, omean in zip(
            self.view_names, self.extractors, self.U, self.input_means, self.output_means
        ):
            save_extractor(net, model_dir / f"extractor_{name}")
            write_fmat(model_dir / f"U_{name}.fmat", u)
            write_fmat(model_dir / f"input_mean_{name}.fmat", imean)
            write_fmat(model_dir / f"output_mean_{name}.fmat", omean)
        header = {
            "type": "dgcca",
            "views": self.view_names,
            "k": self.k,
            "r": self.r,
            "weights": self.weights,
            "config": self.config,
        }
        (model_dir / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
        return model_dir

    @classmethod
    def load(cls, model_dir) -> "DgccaModel":
        model_dir = Path(model_dir)
        header = json.loads((model_dir / "header.json").read_text())
        names = header["views"]
        return cls(
            extractors=[load_extractor(model_dir / f"extractor_{n}") for n in names],
            U=[read_fmat(model_dir / f"U_{n}.fmat") for n in names],
            input_means=[read_fmat(model_dir / f"input_mean_{n}.fmat").ravel() for n in names],
            output_means=[read_fmat(model_dir / f"output_mean_{n}.fmat").ravel() for n in names],
            view_names=list(names),
            k=int(header["k"]),
            r=float(header["r"]),
            weights=[float(w) for w in header["weights"]],
            config=header["config"],
        )


def train_dgcca(
    dataset: MultiviewDataset,
    views: list[str],
    config: ExperimentConfig,
    identity_extractors: bool = False,
    hidden: int | None = None,
) -> DgccaModel:
    """Train (deep or linear) generalized CCA on J >= 2 named views.

    Per batch: forward all extractors, closed-form solve, backprop the
    fixed-(G, U) reconstruction gradient, optimizer step. Per epoch: refit
    U_j on the full train split, score dev Recall@n for all J(J-1) ordered
    pairs and keep the best aggregate (max) snapshot. Identity extractors
    give the linear variant, which needs no epochs. Deterministic for a
    given seed.
    """
    if len(views) < 2:
        raise DataError("need at least 2 views")
    if len(set(views)) != len(views):
        raise DataError("view names must be distinct")
    data = [dataset.view(v).data for v in views]
    train_idx = dataset.require_split("train")
    dev_idx = dataset.require_split("dev")
    dims = [x.shape[1] for x in data]
    k = config.resolve_k(dims)
    weights = config.resolved_weights()
    if len(weights) != len(views):
        raise DataError("per-view weights must match the number of views")

    log = TrainLog()
    seeds = np.random.SeedSequence(config.seed).spawn(len(views) + 1)
    rng = np.random.default_rng(seeds[0])
    if identity_extractors:
        nets = [Identity(d) for d in dims]
    else:
        nets = [Mlp.init(d, k, seed=s, hidden=hidden) for d, s in zip(dims, seeds[1:])]

    input_means = [x[train_idx].mean(axis=0) for x in data]
    train_t = [(x[train_idx] - mu).T for x, mu in zip(data, input_means)]
    batch_size = clamp_batch_size(config.batch_size, len(train_idx), log)
    if k > batch_size:
        raise DataError(f"k={k} exceeds the batch size {batch_size}")

    wd = config.resolved_weight_decay()
    opts = [OptimizerState(lr=config.lr, weight_decay=wd) for _ in nets]

    model = DgccaModel(
        extractors=nets,
        U=[None] * len(views),
        input_means=input_means,
        output_means=[None] * len(views),
        view_names=list(views),
        k=k,
        r=config.r,
        weights=weights,
        config=config.snapshot(),
        log=log,
    )

    def solve_full() -> np.ndarray:
        outs = [net.forward(xt)[0] for net, xt in zip(nets, train_t)]
        g, u_maps, _ = gcca_solve(outs, k, config.r, weights)
        model.U = u_maps
        model.output_means = [o.mean(axis=1) for o in outs]
        return g

    def dev_report():
        emb = {
            v: model.embed(x[dev_idx], v) for v, x in zip(views, data)
        }
        return evaluate_all_pairs(emb, config.n, config.metric, split="dev")

    best = None
    best_score = -np.inf
    trainable = any(net.params() for net in nets)
    for epoch in range(config.max_epochs):
        loss_sum = 0.0
        n_batches = 0
        if trainable:
            for batch in iter_batches(len(train_idx), batch_size, rng):
                outs, caches = [], []
                for net, xt in zip(nets, train_t):
                    o, c = net.forward(xt[:, batch])
                    outs.append(o)
                    caches.append(c)
                g, u_maps, loss = gcca_solve(outs, k, config.train_r, weights)
                if not np.isfinite(loss):
                    raise NumericalError(f"non-finite loss at epoch {epoch}")
                for net, opt, o, c, u, w in zip(nets, opts, outs, caches, u_maps, weights):
                    if not net.params():
                        continue
                    centered = o - o.mean(axis=1, keepdims=True)
                    grads, _ = net.backward(c, dgcca_gradient(centered, g, u, w), need_dx=False)
                    net.set_params(opt.step(net.params(), grads))
                loss_sum += loss
                n_batches += 1

        solve_full()
        report = dev_report()
        scores = {f"{p.source}->{p.reference}": p.recall for p in report.pairs}
        aggregate = log.record(epoch, loss_sum / max(n_batches, 1), scores)
        if aggregate > best_score:
            best_score = aggregate
            best = snapshot_params(nets)
            log.selected_epoch = epoch
        if not trainable:
            break  # linear variant: nothing changes across epochs

    restore_params(nets, best)
    model.g_train = solve_full()
    return model
