"""Deep CCA: trace-norm correlation objective, its gradient, training loop.

The objective on a batch is the sum of all k singular values of the
whitened cross-covariance of the two extractor outputs, so its maximum is
k. Extractors are trained by gradient ascent on the batch objective; the
persisted projection is a linear CCA head fitted on the selected
extractors' full-train outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from corrspace.cca import CcaModel, fit_cca, inv_sqrt_spd, project
from corrspace.config import ExperimentConfig
from corrspace.data import MultiviewDataset, read_fmat, write_fmat
from corrspace.errors import DataError, NumericalError
from corrspace.nn import Identity, Mlp, OptimizerState, load_extractor, save_extractor
from corrspace.retrieval import recall_at_n
from corrspace.training import (
    TrainLog,
    clamp_batch_size,
    iter_batches,
    restore_params,
    snapshot_params,
)


def dcca_objective(Yx: np.ndarray, Yy: np.ndarray, r: float):
    """Batch correlation objective and its gradients w.r.t. both outputs.

    Inputs are k x m column batches, centered internally. Returns
    (corr, dYx, dYy) where corr is the sum of the k singular values of
    T = S11^{-1/2} S12 S22^{-1/2} and the gradients are the exact
    derivatives of corr (validated against finite differences in the
    test suite).
    """
    Yx = np.asarray(Yx, dtype=np.float64)
    Yy = np.asarray(Yy, dtype=np.float64)
    if Yx.ndim != 2 or Yy.ndim != 2 or Yx.shape[1] != Yy.shape[1]:
        raise DataError(f"batch shapes disagree: {Yx.shape} vs {Yy.shape}")
    k = max(Yx.shape[0], Yy.shape[0])
    m = Yx.shape[1]
    if m <= k:
        raise DataError(f"batch of {m} samples is too small for {k} output dims")

    hx = Yx - Yx.mean(axis=1, keepdims=True)
    hy = Yy - Yy.mean(axis=1, keepdims=True)
    s11 = hx @ hx.T / (m - 1) + r * np.eye(Yx.shape[0])
    s22 = hy @ hy.T / (m - 1) + r * np.eye(Yy.shape[0])
    s12 = hx @ hy.T / (m - 1)
    if not (np.all(np.isfinite(s11)) and np.all(np.isfinite(s22))):
        raise NumericalError("non-finite batch covariance (diverged extractor outputs?)")

    isq11 = inv_sqrt_spd(s11)
    isq22 = inv_sqrt_spd(s22)
    t = isq11 @ s12 @ isq22
    u, d, vt = np.linalg.svd(t, full_matrices=False)
    v = vt.T
    corr = float(d.sum())

    delta12 = isq11 @ u @ vt @ isq22
    delta11 = -0.5 * isq11 @ (u * d) @ u.T @ isq11
    delta22 = -0.5 * isq22 @ (v * d) @ v.T @ isq22
    dYx = (2.0 * delta11 @ hx + delta12 @ hy) / (m - 1)
    dYy = (2.0 * delta22 @ hy + delta12.T @ hx) / (m - 1)
    return corr, dYx, dYy


@dataclass
class DccaModel:
    """Two trained extractors plus the linear CCA head fitted on top."""

    net_x: Mlp | Identity
    net_y: Mlp | Identity
    cca_head: CcaModel
    input_mean_x: np.ndarray
    input_mean_y: np.ndarray
    view_x: str
    view_y: str
    config: dict
    log: TrainLog | None = None

    def _forward(self, Z: np.ndarray, view: str) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        if view == self.view_x:
            net, mean = self.net_x, self.input_mean_x
        elif view == self.view_y:
            net, mean = self.net_y, self.input_mean_y
        else:
            raise DataError(f"view {view!r} not in model ({self.view_x!r}, {self.view_y!r})")
        out, _ = net.forward((Z - mean).T)
        return out.T

    def embed(self, Z, view: str) -> np.ndarray:
        """Extractor output projected by the CCA head, rows as samples."""
        side = "x" if view == self.view_x else "y"
        return project(self.cca_head, self._forward(Z, view), side)

    def save(self, model_dir) -> Path:
        model_dir = Path(model_dir)
        model_dir.mkdir(parents=True, exist_ok=True)
        save_extractor(self.net_x, model_dir / "net_x")
        save_extractor(self.net_y, model_dir / "net_y")
        self.cca_head.save(model_dir / "cca_head")
        write_fmat(model_dir / "input_mean_x.fmat", self.input_mean_x)
        write_fmat(model_dir / "input_mean_y.fmat", self.input_mean_y)
        header = {"type": "dcca", "views": [self.view_x, self.view_y], "config": self.config}
        (model_dir / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
        return model_dir

    @classmethod
    def load(cls, model_dir) -> "DccaModel":
        model_dir = Path(model_dir)
        header = json.loads((model_dir / "header.json").read_text())
        return cls(
            net_x=load_extractor(model_dir / "net_x"),
            net_y=load_extractor(model_dir / "net_y"),
            cca_head=CcaModel.load(model_dir / "cca_head"),
            input_mean_x=read_fmat(model_dir / "input_mean_x.fmat").ravel(),
            input_mean_y=read_fmat(model_dir / "input_mean_y.fmat").ravel(),
            view_x=header["views"][0],
            view_y=header["views"][1],
            config=header["config"],
        )


def _dev_scores(model: DccaModel, dev_x, dev_y, n: int, metric: str) -> dict[str, float]:
    ex = model.embed(dev_x, model.view_x)
    ey = model.embed(dev_y, model.view_y)
    return {
        f"{model.view_x}->{model.view_y}": recall_at_n(ex, ey, n, metric),
        f"{model.view_y}->{model.view_x}": recall_at_n(ey, ex, n, metric),
    }


def train_dcca(
    dataset: MultiviewDataset,
    view_x: str,
    view_y: str,
    config: ExperimentConfig,
    identity_extractors: bool = False,
    hidden: int | None = None,
) -> DccaModel:
    """Train DCCA on two named views; deterministic for a given seed.

    Per epoch: shuffle the train split, ascend the batch objective, then
    score dev Recall@n in both directions through a temporary CCA head
    fitted on the epoch's train outputs. The snapshot with the highest
    aggregate (max of the two directions, first occurrence on ties) wins;
    the final head is refitted on its full-train outputs.

    `identity_extractors` runs the heads-only degenerate mode used to
    cross-check against plain linear CCA; `hidden` overrides the first
    layer width (tests only).
    """
    if view_x == view_y:
        raise DataError("the two views must be distinct")
    X = dataset.view(view_x).data
    Y = dataset.view(view_y).data
    train_idx = dataset.require_split("train")
    dev_idx = dataset.require_split("dev")
    dims = [X.shape[1], Y.shape[1]]
    k = config.resolve_k(dims)

    log = TrainLog()
    seeds = np.random.SeedSequence(config.seed).spawn(3)
    rng = np.random.default_rng(seeds[0])
    if identity_extractors:
        net_x, net_y = Identity(dims[0]), Identity(dims[1])
    else:
        net_x = Mlp.init(dims[0], k, seed=seeds[1], hidden=hidden)
        net_y = Mlp.init(dims[1], k, seed=seeds[2], hidden=hidden)

    mean_x = X[train_idx].mean(axis=0)
    mean_y = Y[train_idx].mean(axis=0)
    xt = (X[train_idx] - mean_x).T
    yt = (Y[train_idx] - mean_y).T

    wd = config.resolved_weight_decay()
    opt_x = OptimizerState(lr=config.lr, weight_decay=wd)
    opt_y = OptimizerState(lr=config.lr, weight_decay=wd)
    batch_size = clamp_batch_size(config.batch_size, len(train_idx), log)

    model = DccaModel(
        net_x=net_x, net_y=net_y, cca_head=None,  # head filled per eval
        input_mean_x=mean_x, input_mean_y=mean_y,
        view_x=view_x, view_y=view_y, config=config.snapshot(), log=log,
    )

    def fit_head() -> CcaModel:
        out_x, _ = net_x.forward(xt)
        out_y, _ = net_y.forward(yt)
        head = fit_cca(out_x.T, out_y.T, k=k, r=config.r)
        head.view_x, head.view_y = view_x, view_y
        return head

    best = None
    best_score = -np.inf
    dev_x, dev_y = X[dev_idx], Y[dev_idx]
    for epoch in range(config.max_epochs):
        objective = 0.0
        n_batches = 0
        if not identity_extractors:
            for batch in iter_batches(len(train_idx), batch_size, rng):
                bx, cache_x = net_x.forward(xt[:, batch])
                by, cache_y = net_y.forward(yt[:, batch])
                corr, d_bx, d_by = dcca_objective(bx, by, config.train_r)
                if not np.isfinite(corr):
                    raise NumericalError(f"non-finite objective at epoch {epoch}")
                grads_x, _ = net_x.backward(cache_x, -d_bx, need_dx=False)
                grads_y, _ = net_y.backward(cache_y, -d_by, need_dx=False)
                net_x.set_params(opt_x.step(net_x.params(), grads_x))
                net_y.set_params(opt_y.step(net_y.params(), grads_y))
                objective += corr
                n_batches += 1

        model.cca_head = fit_head()
        scores = _dev_scores(model, dev_x, dev_y, config.n, config.metric)
        aggregate = log.record(epoch, objective / max(n_batches, 1), scores)
        if aggregate > best_score:
            best_score = aggregate
            best = snapshot_params([net_x, net_y])
            log.selected_epoch = epoch
        if identity_extractors:
            break  # nothing changes across epochs without trainable extractors

    restore_params([net_x, net_y], best)
    model.cca_head = fit_head()
    return model
