# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same API and results as ``_kernels_py``."""
from cpython.array cimport array
from libc.stdlib cimport malloc, free, qsort
from libc.string cimport memset

BACKEND = "cython"


cdef int _cmp_long(const void *a, const void *b) noexcept nogil:
    cdef long x = (<long *> a)[0]
    cdef long y = (<long *> b)[0]
    return (x > y) - (x < y)


cdef inline int[::1] _ints(obj):
    if isinstance(obj, array) and (<array> obj).ob_descr.typecode == b'i':
        return obj
    return array('i', obj)


def tau_closure(int n, indptr, indices):
    cdef int[::1] ptr = _ints(indptr)
    cdef int[::1] idx = _ints(indices)
    cdef int *mark = <int *> malloc(max(n, 1) * sizeof(int))
    cdef int *stack = <int *> malloc(max(n, 1) * sizeof(int))
    cdef int s, u, v, k, top, cnt
    out = []
    try:
        for s in range(n):
            mark[s] = -1
        for s in range(n):
            top = 0
            stack[top] = s
            top += 1
            mark[s] = s
            reach = [s]
            while top > 0:
                top -= 1
                u = stack[top]
                for k in range(ptr[u], ptr[u + 1]):
                    v = idx[k]
                    if mark[v] != s:
                        mark[v] = s
                        stack[top] = v
                        top += 1
                        reach.append(v)
            reach.sort()
            out.append(reach)
    finally:
        free(mark)
        free(stack)
    return out


def refine(int n, indptr, labels, targets):
    cdef int[::1] ptr = _ints(indptr)
    cdef int[::1] lab = _ints(labels)
    cdef int[::1] dst = _ints(targets)
    cdef int nedges = ptr[n] if n else 0
    cdef long *sig = <long *> malloc((max(nedges, 1) + 1) * sizeof(long))
    cdef int *block = <int *> malloc(max(n, 1) * sizeof(int))
    cdef int *nxt = <int *> malloc(max(n, 1) * sizeof(int))
    cdef int s, k, m, j, count, nb
    cdef long prev
    try:
        for s in range(n):
            block[s] = 0
        count = 1 if n else 0
        while True:
            nb = count + 1
            ids = {}
            for s in range(n):
                m = 0
                for k in range(ptr[s], ptr[s + 1]):
                    sig[m] = <long> lab[k] * nb + block[dst[k]]
                    m += 1
                qsort(sig, m, sizeof(long), _cmp_long)
                key = [block[s]]
                prev = -1
                for j in range(m):
                    if sig[j] != prev:
                        key.append(sig[j])
                        prev = sig[j]
                nxt[s] = ids.setdefault(tuple(key), len(ids))
            for s in range(n):
                block[s] = nxt[s]
            if len(ids) == count:
                break
            count = len(ids)
        return [block[s] for s in range(n)]
    finally:
        free(sig)
        free(block)
        free(nxt)


cdef bint _holds(int s, int t, int n2, int nlabels, unsigned char *rel,
                 int[::1] c_ptr, int[::1] c_lab, int[::1] c_dst,
                 int[::1] r_ptr, int[::1] r_dst, bint flipped) noexcept:
    cdef int k, m, slot, s2, t2
    cdef bint ok
    for k in range(c_ptr[s], c_ptr[s + 1]):
        slot = t * nlabels + c_lab[k]
        s2 = c_dst[k]
        ok = False
        for m in range(r_ptr[slot], r_ptr[slot + 1]):
            t2 = r_dst[m]
            if flipped:
                if rel[<long> t2 * n2 + s2]:
                    ok = True
                    break
            elif rel[<long> s2 * n2 + t2]:
                ok = True
                break
        if not ok:
            return False
    return True


cdef _preds(int n, int[::1] c_ptr, int[::1] c_dst, int[::1] r_ptr, int[::1] r_dst, int nlabels):
    cdef int s, k, m, slot
    pred = [set() for _ in range(n)]
    for s in range(n):
        for k in range(c_ptr[s], c_ptr[s + 1]):
            pred[c_dst[k]].add(s)
        for slot in range(s * nlabels, (s + 1) * nlabels):
            for m in range(r_ptr[slot], r_ptr[slot + 1]):
                pred[r_dst[m]].add(s)
    return [array('i', sorted(x)) for x in pred]


def gfp(int n1, int n2, int nlabels,
        c1_ptr, c1_lab, c1_dst, c2_ptr, c2_lab, c2_dst,
        r1_ptr, r1_dst, r2_ptr, r2_dst):
    cdef int[::1] a_ptr = _ints(c1_ptr)
    cdef int[::1] a_lab = _ints(c1_lab)
    cdef int[::1] a_dst = _ints(c1_dst)
    cdef int[::1] b_ptr = _ints(c2_ptr)
    cdef int[::1] b_lab = _ints(c2_lab)
    cdef int[::1] b_dst = _ints(c2_dst)
    cdef int[::1] ra_ptr = _ints(r1_ptr)
    cdef int[::1] ra_dst = _ints(r1_dst)
    cdef int[::1] rb_ptr = _ints(r2_ptr)
    cdef int[::1] rb_dst = _ints(r2_dst)
    cdef long total = <long> n1 * n2
    result = bytearray(b"\x01") * total
    cdef unsigned char *rel = result
    cdef unsigned char *queued = <unsigned char *> malloc(max(total, 1))
    cdef long *work = <long *> malloc(max(total, 1) * sizeof(long))
    cdef long head = 0, tail = 0, size = max(total, 1), idx, j
    cdef int p, q, pp, qq, x, y
    cdef int[::1] row1
    cdef int[::1] row2
    pred1 = _preds(n1, a_ptr, a_dst, ra_ptr, ra_dst, nlabels)
    pred2 = _preds(n2, b_ptr, b_dst, rb_ptr, rb_dst, nlabels)
    try:
        memset(queued, 1, total)
        for idx in range(total):
            work[idx] = idx
        tail = total
        # circular queue: each pair is queued at most once at a time
        while head != tail:
            idx = work[head % size]
            head += 1
            queued[idx] = 0
            if not rel[idx]:
                continue
            p = idx // n2
            q = idx % n2
            if _holds(p, q, n2, nlabels, rel, a_ptr, a_lab, a_dst, rb_ptr, rb_dst, False) and \
                    _holds(q, p, n2, nlabels, rel, b_ptr, b_lab, b_dst, ra_ptr, ra_dst, True):
                continue
            rel[idx] = 0
            row1 = pred1[p]
            row2 = pred2[q]
            for x in range(row1.shape[0]):
                pp = row1[x]
                for y in range(row2.shape[0]):
                    qq = row2[y]
                    j = <long> pp * n2 + qq
                    if rel[j] and not queued[j]:
                        queued[j] = 1
                        work[tail % size] = j
                        tail += 1
    finally:
        free(queued)
        free(work)
    return result
