"""Pure-Python kernels; the compiled ``_kernels`` module mirrors this API.

All graphs arrive in CSR form: ``indptr`` of length ``n + 1`` and flat
per-edge arrays.  Labels are small non-negative ints.
"""
from __future__ import annotations

from collections import deque

BACKEND = "python"


def tau_closure(n, indptr, indices):
    """For each state, the sorted list of states reachable by zero or more tau edges."""
    out = []
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        out.append(sorted(seen))
    return out


def refine(n, indptr, labels, targets):
    """Coarsest partition stable under the labelled edges (strong bisimilarity).

    Returns block ids numbered by first occurrence.
    """
    block = [0] * n
    count = 1 if n else 0
    while True:
        ids = {}
        new = [0] * n
        for s in range(n):
            sig = (block[s],) + tuple(sorted({
                (labels[k], block[targets[k]]) for k in range(indptr[s], indptr[s + 1])
            }))
            new[s] = ids.setdefault(sig, len(ids))
        block = new
        if len(ids) == count:
            return block
        count = len(ids)


def gfp(n1, n2, nlabels,
        c1_ptr, c1_lab, c1_dst, c2_ptr, c2_lab, c2_dst,
        r1_ptr, r1_dst, r2_ptr, r2_dst):
    """Greatest relation R over side1 x side2 closed under the transfer game.

    ``c1`` are side-1 challenges (state -> label, target); ``r2`` gives, for
    side-2 state ``q`` and label ``a``, the responses at slot ``q*nlabels+a``.
    Symmetrically for ``c2``/``r1``.  Returns a bytearray, row-major n1 x n2.
    """
    rel = bytearray(b"\x01") * (n1 * n2)
    pred1 = _preds(n1, c1_ptr, c1_dst, r1_ptr, r1_dst, nlabels)
    pred2 = _preds(n2, c2_ptr, c2_dst, r2_ptr, r2_dst, nlabels)
    queued = bytearray(b"\x01") * (n1 * n2)
    work = deque(range(n1 * n2))
    while work:
        idx = work.popleft()
        queued[idx] = 0
        if not rel[idx]:
            continue
        p, q = divmod(idx, n2)
        if _holds(p, q, n2, nlabels, rel, c1_ptr, c1_lab, c1_dst, r2_ptr, r2_dst, False) and \
                _holds(q, p, n2, nlabels, rel, c2_ptr, c2_lab, c2_dst, r1_ptr, r1_dst, True):
            continue
        rel[idx] = 0
        for pp in pred1[p]:
            base = pp * n2
            for qq in pred2[q]:
                j = base + qq
                if rel[j] and not queued[j]:
                    queued[j] = 1
                    work.append(j)
    return rel


def _holds(s, t, n2, nlabels, rel, c_ptr, c_lab, c_dst, r_ptr, r_dst, flipped):
    for k in range(c_ptr[s], c_ptr[s + 1]):
        slot = t * nlabels + c_lab[k]
        s2 = c_dst[k]
        for m in range(r_ptr[slot], r_ptr[slot + 1]):
            t2 = r_dst[m]
            if rel[t2 * n2 + s2] if flipped else rel[s2 * n2 + t2]:
                break
        else:
            return False
    return True


def _preds(n, c_ptr, c_dst, r_ptr, r_dst, nlabels):
    pred = [set() for _ in range(n)]
    for s in range(n):
        for k in range(c_ptr[s], c_ptr[s + 1]):
            pred[c_dst[k]].add(s)
        for slot in range(s * nlabels, (s + 1) * nlabels):
            for m in range(r_ptr[slot], r_ptr[slot + 1]):
                pred[r_dst[m]].add(s)
    return [sorted(x) for x in pred]
