"""Token edit distance with a compiled kernel and a pure-Python fallback.

The compiled backend (``corrspace._editdist``, Cython) is picked at import
time when available; otherwise the pure-Python implementation is used.
``BACKEND`` records which one is active. Both backends are kept
behaviourally identical and are compared in ``benchmarks/bench_editdist.py``
and in the test suite.

Public API works on token sequences (lists of strings). Tokens are
interned into int32 ids before hitting the kernels.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    from corrspace import _editdist as _kernel

    BACKEND = "cython"
except ImportError:  # compiled extension not built
    _kernel = None
    BACKEND = "python"

from corrspace import _editdist_py


def worker_count() -> int:
    """Worker cap from CORRSPACE_THREADS, defaulting to the CPU count."""
    env = os.environ.get("CORRSPACE_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("CORRSPACE_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def encode(sequences, vocab: dict[str, int] | None = None) -> list[np.ndarray]:
    """Intern token sequences into int32 id arrays sharing one vocabulary."""
    if vocab is None:
        vocab = {}
    out = []
    for seq in sequences:
        ids = np.empty(len(seq), dtype=np.int32)
        for i, tok in enumerate(seq):
            code = vocab.get(tok)
            if code is None:
                code = len(vocab)
                vocab[tok] = code
            ids[i] = code
        out.append(ids)
    return out


def _flatten(id_arrays):
    offsets = np.zeros(len(id_arrays) + 1, dtype=np.int64)
    for i, ids in enumerate(id_arrays):
        offsets[i + 1] = offsets[i] + len(ids)
    flat = np.concatenate(id_arrays) if id_arrays else np.empty(0, dtype=np.int32)
    return np.ascontiguousarray(flat, dtype=np.int32), offsets


def token_distance(a, b) -> int:
    """Unit-cost Levenshtein distance between two token sequences."""
    vocab: dict[str, int] = {}
    ia, ib = encode([a, b], vocab)
    if _kernel is not None:
        return _kernel.levenshtein(ia, ib)
    return _editdist_py.levenshtein(ia, ib)


def nearest(queries, refs, workers: int | None = None):
    """Index and distance of the closest reference for every query.

    `queries` and `refs` are token sequences; ties break to the lowest
    reference index. Returns (indices, distances) as int64 arrays.
    """
    if not refs:
        raise ValueError("reference corpus is empty")
    vocab: dict[str, int] = {}
    q_arrays = encode(queries, vocab)
    r_arrays = encode(refs, vocab)

    if _kernel is None:
        pairs = _editdist_py.nearest(q_arrays, r_arrays)
        idx = np.array([p[0] for p in pairs], dtype=np.int64)
        dist = np.array([p[1] for p in pairs], dtype=np.int64)
        return idx, dist

    q_ids, q_off = _flatten(q_arrays)
    r_ids, r_off = _flatten(r_arrays)
    nq = len(q_arrays)
    out_idx = np.zeros(nq, dtype=np.int64)
    out_dist = np.zeros(nq, dtype=np.int64)

    workers = workers if workers is not None else worker_count()
    workers = max(1, min(workers, nq))
    if workers == 1:
        _kernel.nearest_block(q_ids, q_off, r_ids, r_off, 0, nq, out_idx, out_dist)
    else:
        bounds = np.linspace(0, nq, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_kernel.nearest_block, q_ids, q_off, r_ids, r_off,
                            int(lo), int(hi), out_idx, out_dist)
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for f in futures:
                f.result()
    return out_idx, out_dist
