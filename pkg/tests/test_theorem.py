#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
主定理测试：前提、基例、轨迹重放与 n=6 的递归构造
"""

import sys
import os

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from core.certify import check_ham_cycle
from core.cube import CubeRegion, split
from core.exceptions import PreconditionViolation
from core.lemmas import parse_matching
from core.theorem import check_claim_a, check_theorem3, matching_bound, replay_trace, theorem3_ham_cycle
from models.data_models import CubeShape

Q54 = CubeShape(5, 4)
O5 = (0,) * 5


def test_matching_bound():
    assert matching_bound(4) == 0
    assert matching_bound(5) == 0
    assert matching_bound(6) == 4
    assert matching_bound(7) == 8


@pytest.mark.parametrize("shape, M, clause", [
    (CubeShape(4, 4), [], "n >= 5"),
    (CubeShape(5, 3), [], "k >= 4"),
    (Q54, [(O5, (0, 0, 0, 0, 1)), ((0, 0, 0, 0, 1), (0, 0, 0, 0, 2))], "matching"),
    (Q54, [(O5, (0, 0, 0, 0, 1))], "|M| <= 4n-20"),
])
def test_theorem_precondition_clauses(shape, M, clause):
    report = check_theorem3(CubeRegion(shape), parse_matching(shape, M))
    assert report.first_violation == clause


def test_oversized_matching_is_refused():
    """超过 4n-20 时不构造，直接报告子句"""
    with pytest.raises(PreconditionViolation) as info:
        theorem3_ham_cycle(Q54, [(O5, (1, 0, 0, 0, 0))])
    assert info.value.clause == "|M| <= 4n-20"


def test_empty_matching_on_q54():
    """n=5 时上限为 0：空匹配得到全部 1024 个顶点的哈密顿圈"""
    cert, trace = theorem3_ham_cycle(Q54)
    assert len(cert.order) == Q54.vertex_count == 1024
    assert check_ham_cycle(cert, [])
    assert trace.op == "theorem3"
    assert trace.serialize().startswith("trace theorem3")
    assert not trace.used_fallback()
    again, _ = theorem3_ham_cycle(Q54)
    assert again.digest() == cert.digest()


def test_replay_trace_matches_digest():
    _, trace = theorem3_ham_cycle(Q54)
    assert replay_trace(trace)


def test_replay_detects_tampering():
    _, trace = theorem3_ham_cycle(Q54)
    trace.digest = "0" * len(trace.digest)
    report = replay_trace(trace)
    assert not report
    assert report.first_violation.startswith("digest mismatch")


def test_claim_a_needs_a_proper_range():
    view = split(Q54, 1).range(1, 1)
    report = check_claim_a(view, O5, (1, 0, 0, 0, 1), (1, 0, 0, 1, 0), frozenset())
    assert report.first_violation == "p < q"


@pytest.mark.slow
def test_four_edges_on_q64():
    """n=6 时 |M| = 4n-20 = 4，递归一次后落到 n=5 的子立方体"""
    shape = CubeShape(6, 4)
    M = [
        ((0, 0, 0, 0, 0, 0), (0, 0, 0, 0, 0, 1)),
        ((1, 1, 1, 1, 1, 1), (1, 1, 1, 1, 1, 2)),
        ((2, 2, 2, 2, 2, 2), (3, 2, 2, 2, 2, 2)),
        ((0, 2, 0, 2, 0, 2), (0, 2, 0, 2, 1, 2)),
    ]
    cert, trace = theorem3_ham_cycle(shape, M, policy="relaxed", base_n=5)
    assert len(cert.order) == shape.vertex_count
    assert check_ham_cycle(cert, parse_matching(shape, M))
    assert trace.digest == cert.digest()
