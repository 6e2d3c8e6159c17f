"""Aligned multiview feature data: validation, pooling, synthesis, storage.

A dataset is J row-aligned views of the same N samples, each view a dense
real matrix, plus a per-sample split label (train/dev/test). Matrices are
float64 in memory and float32 on disk.

On-disk layout is one FMAT file per view per split plus a JSON manifest:

    FMAT: magic "FMAT" | version u32 LE = 1 | rows u64 LE | cols u64 LE
          | rows*cols float32 LE, row-major
    manifest: {"views": [{"name": ..., "dim": ...,
                          "files": {"train": ..., "dev": ..., "test": ...}}]}
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from corrspace.errors import DataError

SPLITS = ("train", "dev", "test")

_FMAT_MAGIC = b"FMAT"
_FMAT_VERSION = 1


@dataclass(frozen=True)
class ViewMatrix:
    """One view's features: N samples x d dims, immutable after construction."""

    name: str
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True, order="C")
        if arr.ndim != 2:
            raise DataError(f"view {self.name!r}: expected a 2-D matrix, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"view {self.name!r}: empty matrix {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError(f"view {self.name!r}: non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MultiviewDataset:
    """J row-aligned views sharing sample identities and split labels."""

    views: tuple[ViewMatrix, ...]
    splits: np.ndarray  # per-sample label in {"train", "dev", "test"}

    def __post_init__(self):
        views = tuple(self.views)
        if not views:
            raise DataError("dataset has no views")
        names = [v.name for v in views]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate view names: {names}")
        n = views[0].n
        for v in views:
            if v.n != n:
                raise DataError(f"view {v.name!r} has {v.n} rows, expected {n}")
        splits = np.asarray(self.splits)
        if splits.shape != (n,):
            raise DataError(f"splits has shape {splits.shape}, expected ({n},)")
        bad = set(splits.tolist()) - set(SPLITS)
        if bad:
            raise DataError(f"unknown split labels: {sorted(bad)}")
        splits = splits.astype("U5")
        splits.flags.writeable = False
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "splits", splits)

    @property
    def n(self) -> int:
        return self.views[0].n

    @property
    def j(self) -> int:
        return len(self.views)

    @property
    def view_names(self) -> list[str]:
        return [v.name for v in self.views]

    def view(self, name: str) -> ViewMatrix:
        for v in self.views:
            if v.name == name:
                return v
        raise DataError(f"unknown view {name!r}; have {self.view_names}")

    def split_indices(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise DataError(f"unknown split {split!r}")
        return np.flatnonzero(self.splits == split)

    def require_split(self, split: str) -> np.ndarray:
        """Indices of a split, failing fast when the split is empty."""
        idx = self.split_indices(split)
        if idx.size == 0:
            raise DataError(f"split {split!r} is empty")
        return idx

    def rows(self, name: str, split: str) -> np.ndarray:
        return self.view(name).data[self.require_split(split)]


@dataclass(frozen=True)
class TokenSequence:
    """T' token-level vectors of a single sequence."""

    states: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.states, dtype=np.float64))
        if arr.shape[0] < 1 or arr.size == 0:
            raise DataError("token sequence is empty")
        if not np.all(np.isfinite(arr)):
            raise DataError("token sequence has non-finite entries")
        object.__setattr__(self, "states", arr)


@dataclass(frozen=True)
class FramePosteriors:
    """F frames x C class probabilities; every row is a distribution."""

    posteriors: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.posteriors, dtype=np.float64))
        if arr.shape[0] < 1 or arr.size == 0:
            raise DataError("no frames")
        if np.any(arr < 0) or np.any(arr > 1):
            raise DataError("posterior entries must lie in [0, 1]")
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise DataError("posterior rows must sum to 1 within 1e-6")
        object.__setattr__(self, "posteriors", arr)


def pool_tokens(seq: TokenSequence) -> np.ndarray:
    """Sequence embedding: component-wise mean of the token-level vectors."""
    return seq.states.mean(axis=0)


def pool_frames(fp: FramePosteriors) -> np.ndarray:
    """Utterance-level posterior: mean over frames (still a distribution)."""
    return fp.posteriors.mean(axis=0)


# ---------------------------------------------------------------------------
# FMAT + manifest storage
# ---------------------------------------------------------------------------

def write_fmat(path, matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    rows, cols = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_FMAT_MAGIC)
        fh.write(struct.pack("<I", _FMAT_VERSION))
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(matrix.astype("<f4").tobytes(order="C"))


def read_fmat(path) -> np.ndarray:
    """Load an FMAT file as float64, validating magic, version and size."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"matrix file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 24 or raw[:4] != _FMAT_MAGIC:
        raise DataError(f"{path}: not an FMAT file (bad magic bytes)")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != _FMAT_VERSION:
        raise DataError(f"{path}: unsupported FMAT version {version}")
    rows, cols = struct.unpack("<QQ", raw[8:24])
    expected = 24 + rows * cols * 4
    if len(raw) != expected:
        raise DataError(f"{path}: truncated FMAT ({len(raw)} bytes, expected {expected})")
    flat = np.frombuffer(raw, dtype="<f4", offset=24)
    return flat.astype(np.float64).reshape(rows, cols)


def read_tsv(path) -> np.ndarray:
    """Read a hand-written fixture: one sample per line, tab-separated reals."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"TSV file not found: {path}")
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split("\t")])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: ragged rows (widths {sorted(widths)})")
    return np.asarray(rows, dtype=np.float64)


def _check_view_name(name: str) -> None:
    if not name or any(c in name for c in "/\\") or name != name.strip():
        raise DataError(f"invalid view name {name!r}")


def save_dataset(dataset: MultiviewDataset, out_dir) -> Path:
    """Write one FMAT per view per split plus manifest.json; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    split_idx = {s: dataset.split_indices(s) for s in SPLITS}
    manifest = {"views": []}
    for view in dataset.views:
        _check_view_name(view.name)
        files = {}
        for split in SPLITS:
            fname = f"{view.name}.{split}.fmat"
            write_fmat(out_dir / fname, view.data[split_idx[split]])
            files[split] = fname
        manifest["views"].append({"name": view.name, "dim": view.dim, "files": files})
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def load_dataset(manifest_path) -> MultiviewDataset:
    """Load and validate a dataset; rows come back in train/dev/test order."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON ({exc})") from exc
    entries = manifest.get("views")
    if not isinstance(entries, list) or not entries:
        raise DataError(f"{manifest_path}: manifest must list at least one view")

    base = manifest_path.parent
    views = []
    split_counts: dict[str, int] | None = None
    for entry in entries:
        name = entry.get("name")
        if not isinstance(name, str):
            raise DataError(f"{manifest_path}: view entry without a name")
        _check_view_name(name)
        parts = {}
        for split in SPLITS:
            fname = entry.get("files", {}).get(split)
            if fname is None:
                raise DataError(f"view {name!r}: manifest lacks a {split!r} file")
            parts[split] = read_fmat(base / fname)
        counts = {s: parts[s].shape[0] for s in SPLITS}
        if split_counts is None:
            split_counts = counts
        elif counts != split_counts:
            raise DataError(
                f"view {name!r}: split row counts {counts} do not match {split_counts}"
            )
        dims = {parts[s].shape[1] for s in SPLITS if parts[s].shape[0] > 0}
        if len(dims) > 1:
            raise DataError(f"view {name!r}: inconsistent dims across splits: {dims}")
        declared = entry.get("dim")
        if declared is not None and dims and declared not in dims:
            raise DataError(f"view {name!r}: manifest dim {declared} != file dim {dims}")
        views.append(ViewMatrix(name, np.vstack([parts[s] for s in SPLITS])))

    labels = np.concatenate([np.full(split_counts[s], s, dtype="U5") for s in SPLITS])
    return MultiviewDataset(tuple(views), labels)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def synth_correlated(
    n_per_split: tuple[int, int, int],
    dims: list[int],
    latent_dim: int,
    noise_sigma: float,
    seed: int,
    view_names: list[str] | None = None,
) -> MultiviewDataset:
    """Linear-Gaussian multiview data with a shared latent per sample.

    Every sample draws one latent z ~ N(0, I); view j is A_j z plus
    isotropic noise, with A_j a fixed full-column-rank map drawn once from
    the seed. Columns of A_j are scaled by 1/sqrt(latent_dim) so view
    entries have unit variance and noise_sigma is on a comparable scale.
    Deterministic for a given seed.
    """
    n_train, n_dev, n_test = (int(x) for x in n_per_split)
    if min(n_train, n_dev, n_test) < 0 or n_train + n_dev + n_test < 1:
        raise DataError(f"invalid split sizes {n_per_split}")
    dims = [int(d) for d in dims]
    if not dims or min(dims) < 1:
        raise DataError(f"invalid view dims {dims}")
    if latent_dim < 1 or latent_dim > min(dims):
        raise DataError(f"latent_dim {latent_dim} must lie in [1, min(dims)={min(dims)}]")
    if noise_sigma < 0:
        raise DataError("noise_sigma must be >= 0")
    if view_names is None:
        view_names = [f"view{j}" for j in range(len(dims))]
    if len(view_names) != len(dims):
        raise DataError("view_names and dims disagree")

    rng = np.random.default_rng(seed)
    maps = []
    for d in dims:
        a = rng.standard_normal((d, latent_dim)) / np.sqrt(latent_dim)
        if np.linalg.matrix_rank(a) < latent_dim:  # probability-zero event
            raise DataError("drawn mixing map is rank-deficient; change the seed")
        maps.append(a)

    n_total = n_train + n_dev + n_test
    z = rng.standard_normal((n_total, latent_dim))
    views = []
    for name, d, a in zip(view_names, dims, maps):
        x = z @ a.T
        if noise_sigma > 0:
            x = x + noise_sigma * rng.standard_normal((n_total, d))
        views.append(ViewMatrix(name, x))

    labels = np.concatenate(
        [np.full(n, s, dtype="U5") for n, s in zip((n_train, n_dev, n_test), SPLITS)]
    )
    return MultiviewDataset(tuple(views), labels)
