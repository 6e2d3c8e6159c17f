"""Two-view linear CCA: covariances, whitening, SVD solution, projection.

The fitted transforms U, V maximise the summed correlation between the
projected views under unit-covariance constraints; canonical correlations
are the singular values of the whitened cross-covariance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from corrspace.data import ViewMatrix, read_fmat, write_fmat
from corrspace.errors import DataError

DEFAULT_REG = 1e-16

# relative eigenvalue floor protecting rank-deficient covariances
EIG_FLOOR_REL = 1e-12


def _as_matrix(x) -> tuple[np.ndarray, str]:
    if isinstance(x, ViewMatrix):
        return x.data, x.name
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr, ""


def default_k(*dims: int) -> int:
    """Default shared dimensionality: half the smallest view dimensionality."""
    return max(1, min(dims) // 2)


def covariance(X, Y, r: float = DEFAULT_REG):
    """Empirical (auto/cross) covariances of two row-aligned views.

    Columns are centered by their means and normalised by N - 1. The
    regulariser r is added to the diagonals of C_xx and C_yy only.
    Returns (C_xx, C_yy, C_xy, mean_x, mean_y).
    """
    X, _ = _as_matrix(X)
    Y, _ = _as_matrix(Y)
    n = X.shape[0]
    if Y.shape[0] != n:
        raise DataError(f"misaligned views: {n} vs {Y.shape[0]} rows")
    if n < 2:
        raise DataError("need at least 2 samples for a covariance")
    mean_x = X.mean(axis=0)
    mean_y = Y.mean(axis=0)
    Xc = X - mean_x
    Yc = Y - mean_y
    c_xx = (Xc.T @ Xc) / (n - 1) + r * np.eye(X.shape[1])
    c_yy = (Yc.T @ Yc) / (n - 1) + r * np.eye(Y.shape[1])
    c_xy = (Xc.T @ Yc) / (n - 1)
    return c_xx, c_yy, c_xy, mean_x, mean_y


def inv_sqrt_spd(C: np.ndarray, floor: float | None = None) -> np.ndarray:
    """Inverse square root of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues are clamped from below; `floor=None` uses a relative floor
    of EIG_FLOOR_REL times the largest eigenvalue, so nearly rank-deficient
    inputs degrade gracefully instead of blowing up.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DataError(f"expected a square matrix, got {C.shape}")
    if np.max(np.abs(C - C.T)) > 1e-8:
        raise DataError("matrix is not symmetric (beyond 1e-8)")
    lam, q = np.linalg.eigh(C)
    if floor is None:
        floor = max(float(lam[-1]), 0.0) * EIG_FLOOR_REL
    if floor <= 0.0:
        floor = np.finfo(np.float64).tiny
    lam = np.maximum(lam, floor)
    m = (q / np.sqrt(lam)) @ q.T
    return (m + m.T) / 2.0


@dataclass
class CcaModel:
    """Fitted two-view CCA: means, projections and canonical correlations."""

    mean_x: np.ndarray
    mean_y: np.ndarray
    U: np.ndarray
    V: np.ndarray
    correlations: np.ndarray
    k: int
    r: float
    view_x: str = "x"
    view_y: str = "y"

    def side(self, view: str) -> str:
        if view == self.view_x:
            return "x"
        if view == self.view_y:
            return "y"
        raise DataError(f"view {view!r} not in model ({self.view_x!r}, {self.view_y!r})")

    def embed(self, Z, view: str) -> np.ndarray:
        """Project rows of a named view into the shared space."""
        return project(self, Z, self.side(view))

    def save(self, model_dir) -> Path:
        model_dir = Path(model_dir)
        model_dir.mkdir(parents=True, exist_ok=True)
        write_fmat(model_dir / "U.fmat", self.U)
        write_fmat(model_dir / "V.fmat", self.V)
        write_fmat(model_dir / "mean_x.fmat", self.mean_x)
        write_fmat(model_dir / "mean_y.fmat", self.mean_y)
        write_fmat(model_dir / "correlations.fmat", self.correlations)
        header = {
            "type": "cca",
            "k": self.k,
            "r": self.r,
            "views": [self.view_x, self.view_y],
        }
        (model_dir / "header.json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
        return model_dir

    @classmethod
    def load(cls, model_dir) -> "CcaModel":
        model_dir = Path(model_dir)
        header = json.loads((model_dir / "header.json").read_text())
        return cls(
            mean_x=read_fmat(model_dir / "mean_x.fmat").ravel(),
            mean_y=read_fmat(model_dir / "mean_y.fmat").ravel(),
            U=read_fmat(model_dir / "U.fmat"),
            V=read_fmat(model_dir / "V.fmat"),
            correlations=read_fmat(model_dir / "correlations.fmat").ravel(),
            k=int(header["k"]),
            r=float(header["r"]),
            view_x=header["views"][0],
            view_y=header["views"][1],
        )


def fit_cca(X, Y, k: int | None = None, r: float = DEFAULT_REG) -> CcaModel:
    """Fit linear CCA on row-aligned views (training rows only).

    U (resp. V) whitens the X (resp. Y) covariance and rotates onto the
    top-k left (right) singular vectors of the whitened cross-covariance;
    correlations are the corresponding singular values. Sign convention:
    the largest-magnitude entry of each left singular vector is positive.
    """
    Xd, name_x = _as_matrix(X)
    Yd, name_y = _as_matrix(Y)
    d_x, d_y = Xd.shape[1], Yd.shape[1]
    if k is None:
        k = default_k(d_x, d_y)
    if not 1 <= k <= min(d_x, d_y):
        raise DataError(f"k={k} must lie in [1, min({d_x}, {d_y})]")

    c_xx, c_yy, c_xy, mean_x, mean_y = covariance(Xd, Yd, r)
    isq_x = inv_sqrt_spd(c_xx)
    isq_y = inv_sqrt_spd(c_yy)
    t = isq_x @ c_xy @ isq_y
    u, s, vt = np.linalg.svd(t, full_matrices=False)

    u = u[:, :k].copy()
    v = vt[:k].T.copy()
    for i in range(k):
        if u[np.argmax(np.abs(u[:, i])), i] < 0:
            u[:, i] = -u[:, i]
            v[:, i] = -v[:, i]

    return CcaModel(
        mean_x=mean_x,
        mean_y=mean_y,
        U=isq_x @ u,
        V=isq_y @ v,
        correlations=s[:k].copy(),
        k=k,
        r=r,
        view_x=name_x or "x",
        view_y=name_y or "y",
    )


def project(model: CcaModel, Z, side: str) -> np.ndarray:
    """Center rows of Z by the chosen side's mean and apply U (or V)."""
    Zd, _ = _as_matrix(Z)
    if side == "x":
        mean, w = model.mean_x, model.U
    elif side == "y":
        mean, w = model.mean_y, model.V
    else:
        raise DataError(f"side must be 'x' or 'y', got {side!r}")
    if Zd.shape[1] != mean.shape[0]:
        raise DataError(f"dimension mismatch: {Zd.shape[1]} columns vs side {side!r} dim {mean.shape[0]}")
    return (Zd - mean) @ w
