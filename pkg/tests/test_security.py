from __future__ import annotations

import random

import pytest

from ccsni.core import Channel, Par, Sum, prefixes
from ccsni.equiv import EquivKind, replay
from ccsni.gen import random_simple_typeable
from ccsni.lts import build_lts, restrict_high, with_phi
from ccsni.parser import parse_process
from ccsni.security import (
    AttackerNotHigh,
    LatticeNotTwoPoint,
    Status,
    check_bndc,
    check_bndc_with,
    check_pbndc,
    check_wbndc,
    enumerate_attackers,
    enumerate_processes,
)
from ccsni.typesys import infer_asym

from conftest import prog

A_H = Channel("a", "h")


@pytest.mark.parametrize("text, pbndc, wbndc", [
    ("a_h(x).'b_l<e>.0", "insecure", "insecure"),
    ("'a_h<v>.'b_l<v>.0", "insecure", "secure"),
    ("a_h(x).'b_l<e>.0 + 'b_l<e>.0", "secure", None),
    ("a_h(v).a_h(v).'b_l<r>.0 + 'b_l<r>.0", "insecure", "insecure"),
    ("'a_h<v>.'a_h<v>.'b_l<r>.0 + 'b_l<r>.0", "insecure", "secure"),
    ("a_h.b_l + b_l", "secure", None),
    ("a_l(x).0 + 'b_h<e>.0", "insecure", None),
])
def test_classification(text, pbndc, wbndc):
    p = prog(text)
    assert check_pbndc(p).status.value == pbndc
    if wbndc is not None:
        assert check_wbndc(p).status.value == wbndc


def test_pbndc_witness_replays():
    p = prog("a_h(x).'b_l<e>.0")
    v = check_pbndc(p)
    hidden, plain = build_lts(restrict_high(p)), build_lts(p)
    assert replay(EquivKind.UPTOHIGH, hidden, plain, v.witness.counterexample)
    assert v.to_json()["witness"]["kind"] == "uptohigh"


def test_wbndc_witness_replays():
    p = prog("a_h(v).a_h(v).'b_l<r>.0 + 'b_l<r>.0")
    v = check_wbndc(p)
    left, right = build_lts(p, main=with_phi(p)), build_lts(p)
    assert replay(EquivKind.REFINED, left, right, v.witness.counterexample)


def test_any_reachable_high_input_breaks_wbndc():
    # the sink only inputs, so high inputs of main never fire on the left
    assert check_wbndc(prog("a_h(x).0")).insecure
    assert check_wbndc(prog("a_h(v).b_l(r).0")).insecure
    assert infer_asym(prog("a_h(v).b_l(r).0")).typeable
    assert check_wbndc(prog("'a_h<v>.0")).secure


@pytest.mark.parametrize("seed", range(60))
def test_simple_typeable_is_pbndc(seed):
    p = random_simple_typeable(random.Random(seed))
    assert check_pbndc(p, 2000).secure


class TestBndc:
    @pytest.mark.parametrize("text", ["a_h(x).'b_l<e>.0", "a_h(x).0 + 'b_l<e>.0"])
    def test_refuted(self, text):
        p = prog(text)
        v = check_bndc(p, 2, 2)
        assert v.status is Status.INSECURE
        assert check_bndc_with(p, v.witness).insecure
        assert v.to_json()["bounds"] == {"k": 2, "w": 2}

    def test_survives_bound(self):
        v = check_bndc(prog("a_h(x).'b_l<e>.0 + 'b_l<e>.0"), 3, 2)
        assert v.status is Status.NO_CEX
        assert v.attackers_checked > 100
        assert not v.secure and not v.insecure

    def test_rows_claimed_secure_are_refuted(self):
        v4 = check_bndc(prog("a_h(v).a_h(v).'b_l<r>.0 + 'b_l<r>.0"), 1, 1)
        assert v4.insecure and str(v4.witness.branches[0][0]) == "'a_h<r>"
        v5 = check_bndc(prog("'a_h<v>.'a_h<v>.'b_l<r>.0 + 'b_l<r>.0"), 1, 1)
        assert v5.insecure and str(v5.witness.branches[0][0]).startswith("a_h(")

    def test_attacker_must_be_high(self):
        with pytest.raises(AttackerNotHigh):
            check_bndc_with(prog("a_h(x).0"), parse_process("'b_l<u>.0"))

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            check_bndc(prog("0"), 0, 2)


def test_two_point_lattice_required():
    p = prog("levels l < m < h\nmain = 'a_m<u>.0")
    for fn in (check_pbndc, check_wbndc, check_bndc):
        with pytest.raises(LatticeNotTwoPoint):
            fn(p)


class TestEnumeration:
    def test_depth_one(self):
        got = [str(p) for p in enumerate_attackers([A_H], ("u",), 1, 2)]
        assert len(got) == 3  # 0, a_h(x).0, 'a_h<u>.0

    def test_only_high_and_unique(self):
        chans = [A_H, Channel("c", "h")]
        procs = list(enumerate_processes(chans, ("u", "v"), 2, 2))
        assert len(procs) == len(set(procs))
        assert all(pre.chan in chans for p in procs for pre in prefixes(p))

    def test_width_and_depth(self):
        procs = list(enumerate_processes([A_H], ("u",), 2, 3))
        assert any(isinstance(p, Par) and len(p.parts) == 3 for p in procs)
        assert any(isinstance(p, Sum) and len(p.branches) == 3 for p in procs)
        assert not any(isinstance(p, Sum) and isinstance(p.branches[0][1], Sum)
                       and isinstance(p.branches[0][1].branches[0][1], Sum) for p in procs)

    def test_outputs_send_constants(self):
        procs = enumerate_processes([A_H], ("u", "v"), 2, 2)
        outs = {pre.arg for p in procs for pre in prefixes(p) if not hasattr(pre, "var")}
        assert outs == {"u", "v"}
