from __future__ import annotations

import random

import pytest

from ccsni import kernels
from ccsni._kernels_py import gfp, refine, tau_closure


def csr(n, edges):
    rows = [[] for _ in range(n)]
    for s, lab, t in edges:
        rows[s].append((lab, t))
    indptr, labs, dsts = [0], [], []
    for r in rows:
        for lab, t in sorted(r):
            labs.append(lab)
            dsts.append(t)
        indptr.append(len(dsts))
    return indptr, labs, dsts


def random_graph(rng, n, nlabels, m):
    return [(rng.randrange(n), rng.randrange(nlabels), rng.randrange(n)) for _ in range(m)]


def test_tau_closure_small():
    indptr, _, dst = csr(4, [(0, 0, 1), (1, 0, 2), (3, 0, 0)])
    assert tau_closure(4, indptr, dst) == [[0, 1, 2], [1, 2], [2], [0, 1, 2, 3]]


def test_refine_separates_by_label():
    # 0 -a-> 2, 1 -b-> 2, 3 -a-> 2
    indptr, labs, dst = csr(4, [(0, 0, 2), (1, 1, 2), (3, 0, 2)])
    block = refine(4, indptr, labs, dst)
    assert block[0] == block[3] != block[1]
    assert len(set(block)) == 3


def test_gfp_trivial():
    # one state each, no moves: related
    empty = ([0, 0], [], [])
    r = gfp(1, 1, 1, *empty, *empty, [0, 0], [], [0, 0], [])
    assert r == bytearray(b"\x01")


def test_available_backends():
    assert "python" in kernels.available()
    assert kernels.BACKEND in kernels.available()
    with pytest.raises(ValueError):
        kernels.use("fortran")


@pytest.mark.skipif("cython" not in kernels.available(), reason="extension not built")
@pytest.mark.parametrize("seed", range(40))
def test_backends_agree(seed):
    rng = random.Random(seed)
    fast = kernels.available()["cython"]
    n1, n2, nl = rng.randint(1, 12), rng.randint(1, 12), rng.randint(1, 3)
    g1 = random_graph(rng, n1, nl, rng.randint(0, 3 * n1))
    g2 = random_graph(rng, n2, nl, rng.randint(0, 3 * n2))
    c1, c2 = csr(n1, g1), csr(n2, g2)
    assert fast.tau_closure(n1, c1[0], c1[2]) == tau_closure(n1, c1[0], c1[2])
    assert fast.refine(n1, *c1) == refine(n1, *c1)

    # responses: slot s * nl + label
    def responses(n, g):
        slots = [[] for _ in range(n * nl)]
        for s, lab, t in g:
            slots[s * nl + lab].append(t)
        ptr, dst = [0], []
        for x in slots:
            dst.extend(sorted(set(x)))
            ptr.append(len(dst))
        return ptr, dst

    r1, r2 = responses(n1, g1), responses(n2, g2)
    args = (n1, n2, nl, *c1, *c2, *r1, *r2)
    assert fast.gfp(*args) == gfp(*args)
