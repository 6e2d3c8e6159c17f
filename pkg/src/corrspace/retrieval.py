"""Cross-view retrieval in the shared space: Recall@n and reporting.

Ground truth is row alignment: row i of the reference matrix is the true
match of row i of the source matrix. Exact distance ties break to the
lowest reference index, so degenerate embeddings stay deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from corrspace.errors import DataError

_CHUNK = 512


def random_baseline(n_refs: int, n: int) -> float:
    """Recall@n (percent) of picking n references uniformly at random."""
    if n < 1 or n > n_refs:
        raise DataError(f"n={n} must lie in [1, {n_refs}]")
    return 100.0 * n / n_refs


def _distances(source: np.ndarray, refs: np.ndarray, metric: str) -> np.ndarray:
    if metric == "cosine":
        def unit(m):
            norms = np.linalg.norm(m, axis=1, keepdims=True)
            out = np.zeros_like(m)
            nz = norms[:, 0] > 0
            out[nz] = m[nz] / norms[nz]
            return out

        return 1.0 - unit(source) @ unit(refs).T
    if metric == "euclidean":
        # squared distances rank identically and tie identically
        sq_s = np.sum(source * source, axis=1)
        sq_r = np.sum(refs * refs, axis=1)
        return sq_s[:, None] + sq_r[None, :] - 2.0 * (source @ refs.T)
    raise DataError(f"unknown metric {metric!r}")


def recall_at_n(source: np.ndarray, refs: np.ndarray, n: int, metric: str = "cosine") -> float:
    """Percentage of source rows whose true match is among the n nearest refs."""
    source = np.asarray(source, dtype=np.float64)
    refs = np.asarray(refs, dtype=np.float64)
    if source.ndim != 2 or refs.ndim != 2:
        raise DataError("source and refs must be 2-D")
    if source.shape != refs.shape:
        raise DataError(f"source {source.shape} and refs {refs.shape} must be row-aligned")
    n_rows = source.shape[0]
    if n_rows == 0:
        raise DataError("no rows to retrieve")
    if n < 1:
        raise DataError("n must be >= 1")
    if n >= n_rows:
        return 100.0

    col = np.arange(n_rows)
    hits = 0
    for lo in range(0, n_rows, _CHUNK):
        hi = min(lo + _CHUNK, n_rows)
        d = _distances(source[lo:hi], refs, metric)
        true_idx = col[lo:hi]
        d_true = d[np.arange(hi - lo), true_idx]
        closer = (d < d_true[:, None]).sum(axis=1)
        tied_lower = ((d == d_true[:, None]) & (col[None, :] < true_idx[:, None])).sum(axis=1)
        hits += int(((closer + tied_lower) < n).sum())
    return 100.0 * hits / n_rows


def top1_indices(source: np.ndarray, refs: np.ndarray, metric: str = "cosine") -> np.ndarray:
    """Index of the nearest reference per source row (ties: lowest index)."""
    source = np.asarray(source, dtype=np.float64)
    refs = np.asarray(refs, dtype=np.float64)
    if source.shape[1] != refs.shape[1]:
        raise DataError(f"dimension mismatch: {source.shape[1]} vs {refs.shape[1]}")
    out = np.empty(source.shape[0], dtype=np.int64)
    for lo in range(0, source.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, source.shape[0])
        d = _distances(source[lo:hi], refs, metric)
        out[lo:hi] = np.argmin(d, axis=1)  # argmin takes the first minimum
    return out


@dataclass(frozen=True)
class PairScore:
    source: str
    reference: str
    recall: float


@dataclass(frozen=True)
class RetrievalReport:
    """Recall@n for every ordered view pair, plus the aggregate (max)."""

    pairs: tuple[PairScore, ...]
    n: int
    metric: str
    split: str = ""
    model_id: str = ""
    baseline: float | None = None

    @property
    def aggregate(self) -> float:
        return max(p.recall for p in self.pairs)

    def score(self, source: str, reference: str) -> float:
        for p in self.pairs:
            if p.source == source and p.reference == reference:
                return p.recall
        raise DataError(f"no pair {source!r} -> {reference!r} in report")

    def to_dict(self) -> dict:
        d = {
            "model": self.model_id,
            "split": self.split,
            "metric": self.metric,
            "n": self.n,
            "pairs": [
                {"source": p.source, "reference": p.reference, "recall": p.recall}
                for p in self.pairs
            ],
            "aggregate": self.aggregate,
        }
        if self.baseline is not None:
            d["random_baseline"] = self.baseline
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RetrievalReport":
        return cls(
            pairs=tuple(
                PairScore(p["source"], p["reference"], float(p["recall"]))
                for p in d["pairs"]
            ),
            n=int(d["n"]),
            metric=d["metric"],
            split=d.get("split", ""),
            model_id=d.get("model", ""),
            baseline=d.get("random_baseline"),
        )


def evaluate_all_pairs(
    embeddings: dict[str, np.ndarray],
    n: int,
    metric: str = "cosine",
    split: str = "",
    model_id: str = "",
    baseline: float | None = None,
) -> RetrievalReport:
    """Recall@n for every ordered pair of distinct views (J*(J-1) scores)."""
    names = list(embeddings)
    if len(names) < 2:
        raise DataError("need at least 2 views for pairwise retrieval")
    sizes = {name: np.asarray(m).shape[0] for name, m in embeddings.items()}
    if len(set(sizes.values())) != 1:
        raise DataError(f"misaligned embeddings: row counts {sizes}")
    pairs = []
    for src in names:
        for ref in names:
            if src == ref:
                continue
            score = recall_at_n(np.asarray(embeddings[src]), np.asarray(embeddings[ref]), n, metric)
            pairs.append(PairScore(src, ref, score))
    return RetrievalReport(tuple(pairs), n=n, metric=metric, split=split,
                           model_id=model_id, baseline=baseline)


def format_report(report: RetrievalReport) -> str:
    """Aligned source-row x reference-column table, one table per split."""
    names = []
    for p in report.pairs:
        if p.source not in names:
            names.append(p.source)
        if p.reference not in names:
            names.append(p.reference)
    width = max(12, max(len(n) for n in names) + 2)
    title = f"Recall@{report.n} ({report.metric}"
    title += f", {report.split} split)" if report.split else ")"
    lines = [title, "-" * len(title)]
    header = "source".ljust(width) + "".join(n.rjust(width) for n in names)
    lines.append(header)
    for src in names:
        row = src.ljust(width)
        for ref in names:
            if src == ref:
                row += "-".rjust(width)
            else:
                row += f"{report.score(src, ref):.2f}".rjust(width)
        lines.append(row)
    tail = f"aggregate (max): {report.aggregate:.2f}"
    if report.baseline is not None:
        tail += f"    random baseline: {report.baseline:.4f}"
    lines.append(tail)
    return "\n".join(lines)
