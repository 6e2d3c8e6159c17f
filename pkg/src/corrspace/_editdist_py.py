"""Pure-Python token edit distance, fallback for the compiled kernel.

Same call surface as ``corrspace._editdist``; see ``corrspace.editdist``
for the public API that picks a backend at import time.
"""

from __future__ import annotations


def levenshtein(a, b) -> int:
    """Unit-cost Levenshtein distance between two id sequences."""
    a = list(a)
    b = list(b)
    # iterate over the longer sequence so the DP row is the shorter one
    if len(a) > len(b):
        a, b = b, a
    n = len(a)
    if n == 0:
        return len(b)
    current = list(range(n + 1))
    for i, bi in enumerate(b, start=1):
        previous, current = current, [i] + [0] * n
        for j in range(1, n + 1):
            cost = 0 if a[j - 1] == bi else 1
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
    return current[n]


def nearest(queries, refs) -> list[tuple[int, int]]:
    """For each query, the (index, distance) of the closest reference.

    Ties go to the lowest reference index. The |len(q) - len(r)| lower
    bound skips references that cannot beat the current best.
    """
    ref_lists = [list(r) for r in refs]
    out = []
    for q in queries:
        q = list(q)
        best_idx, best_dist = 0, len(q) + len(ref_lists[0])
        for idx, r in enumerate(ref_lists):
            if abs(len(q) - len(r)) >= best_dist:
                continue
            d = levenshtein(q, r)
            if d < best_dist:
                best_idx, best_dist = idx, d
                if best_dist == 0:
                    break
        out.append((best_idx, best_dist))
    return out
