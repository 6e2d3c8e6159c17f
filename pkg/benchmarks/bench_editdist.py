"""Benchmark the compiled edit-distance kernel against the pure-Python one.

Usage: python benchmarks/bench_editdist.py [--refs 2000] [--queries 200]

Times the batch nearest-reference search (the hot path of WER-style
retrieval scoring) and the single-pair distance on the same synthetic
corpus, with identical results required from both backends.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from corrspace import _editdist_py, editdist


def make_corpus(rng, size, vocab=200, min_len=3, max_len=20):
    return [
        [str(t) for t in rng.integers(0, vocab, size=rng.integers(min_len, max_len))]
        for _ in range(size)
    ]


def bench_pairs(queries, refs):
    out = {}
    q_ids = editdist.encode(queries, vocab := {})
    r_ids = editdist.encode(refs, vocab)
    pairs = list(zip(q_ids, r_ids * (len(q_ids) // len(r_ids) + 1)))[: len(q_ids)]

    if editdist.BACKEND == "cython":
        from corrspace import _editdist as kernel

        start = time.perf_counter()
        cy = [kernel.levenshtein(a, b) for a, b in pairs]
        out["cython"] = (time.perf_counter() - start, cy)

    start = time.perf_counter()
    py = [_editdist_py.levenshtein(a, b) for a, b in pairs]
    out["python"] = (time.perf_counter() - start, py)
    return out


def bench_nearest(queries, refs):
    out = {}
    if editdist.BACKEND == "cython":
        start = time.perf_counter()
        idx, dist = editdist.nearest(queries, refs, workers=1)
        out["cython"] = (time.perf_counter() - start, (idx.tolist(), dist.tolist()))

    q_ids = editdist.encode(queries, vocab := {})
    r_ids = editdist.encode(refs, vocab)
    start = time.perf_counter()
    pairs = _editdist_py.nearest(q_ids, r_ids)
    out["python"] = (
        time.perf_counter() - start,
        ([p[0] for p in pairs], [p[1] for p in pairs]),
    )
    return out


def report(name, results):
    print(f"\n{name}")
    values = [v for _, v in results.values()]
    if len(values) == 2 and values[0] != values[1]:
        raise SystemExit(f"{name}: backends disagree")
    py_time = results["python"][0]
    for backend, (elapsed, _) in sorted(results.items()):
        speedup = f"  ({py_time / elapsed:5.1f}x vs python)" if backend != "python" else ""
        print(f"  {backend:8s} {elapsed * 1000:9.1f} ms{speedup}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--refs", type=int, default=2000)
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    refs = make_corpus(rng, args.refs)
    queries = make_corpus(rng, args.queries)
    print(f"active backend: {editdist.BACKEND}")
    print(f"{args.queries} queries x {args.refs} references")

    report("single-pair levenshtein", bench_pairs(queries, refs))
    report("nearest reference (batch)", bench_nearest(queries, refs))


if __name__ == "__main__":
    main()
