#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
引用原语测试：前提子句、能力上限、Gray 码捷径与自同构共轭
"""

import sys
import os

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from core.certify import certify_solution, check_ham_cycle
from core.cube import CubeRegion, Edge, Transform, apply_transform, gray_cycle, split
from core.exceptions import CapabilityRefused, ConsistencyAlarm, PreconditionViolation, SideConditionUnmet
from core.lemmas import RECOVERABLE
from core.primitives import SearchProvider, primitive_spec, solve_primitive, validate_precondition
from models.data_models import (
    CubeShape,
    HamCycleCertificate,
    PathSystem,
    PrimitiveKind,
    SideCondition,
    VerifyReport,
)

K = PrimitiveKind
Q24 = CubeRegion(CubeShape(2, 4))
Q25 = CubeRegion(CubeShape(2, 5))
Q34 = CubeRegion(CubeShape(3, 4))
Q35 = CubeRegion(CubeShape(3, 5))
Q44 = CubeRegion(CubeShape(4, 4))
R34 = split(Q34.shape, 1).range(0, 1)
R34_WIDE = split(Q34.shape, 1).range(0, 2)
R44 = split(Q44.shape, 1).range(0, 1)

PATH_OF_THREE = [Edge.of((0, 0), (0, 1)), Edge.of((0, 1), (0, 2)), Edge.of((0, 2), (0, 3))]
FAR_34 = Edge.of((1, 1, 1), (1, 1, 2))


def make_spec(region, pairs=(), required=(), forbidden=()):
    return primitive_spec(region, pairs, required, forbidden)


MUTANTS = [
    # 通用子句
    (K.HAM_PATH_EVEN_PARITY, make_spec(R34, [((0, 0, 0), (0, 0, 1))]), "region must be a cube"),
    (K.RANGE_PATH, make_spec(Q34, [((0, 0, 0), (0, 0, 1))]), "region must be a range"),
    (K.HAM_CYCLE_THROUGH_MATCHING, make_spec(CubeRegion(CubeShape(1, 4))), "n >= 2"),
    (K.HAM_CYCLE_THROUGH_MATCHING, make_spec(Q24, [((0, 0), (0, 1))]), "cycle takes no endpoints"),
    (K.HAM_PATH_EVEN_PARITY, make_spec(Q24), "1 endpoint pair(s)"),
    (K.TWO_PATH_THROUGH_MATCHING, make_spec(Q34, [((0, 0, 0), (0, 0, 1))]), "2 endpoint pair(s)"),
    (K.HAM_PATH_EVEN_PARITY, make_spec(Q24, [((0, 0), (0, 0))]), "endpoints distinct"),
    (K.RANGE_PATH, make_spec(R34, [((0, 0, 0), (3, 0, 1))]), "endpoint outside region"),
    (K.RANGE_PATH, make_spec(R34, [((0, 0, 0), (0, 0, 1))], [Edge.of((3, 0, 0), (3, 0, 1))]), "edge outside region"),
    (K.HAM_PATH_EVEN_PARITY, make_spec(Q24, [((0, 0), (0, 1))], forbidden=[(2, 2)]), "no deleted vertices"),
    (K.HAM_CYCLE_THROUGH_MATCHING, make_spec(Q34, required=[Edge.of((0, 0, 0), (0, 0, 1)),
                                                        Edge.of((0, 0, 0), (0, 1, 0))]), "matching"),
    # HamCycleThroughForest
    (K.HAM_CYCLE_THROUGH_FOREST, make_spec(Q24, required=PATH_OF_THREE + [Edge.of((1, 0), (1, 1))]),
     "forest too large"),
    (K.HAM_CYCLE_THROUGH_FOREST, make_spec(Q24, required=[
        Edge.of((1, 1), (0, 1)), Edge.of((1, 1), (2, 1)), Edge.of((1, 1), (1, 0))]), "linear forest"),
    # HamCycleThroughMatching
    (K.HAM_CYCLE_THROUGH_MATCHING, make_spec(Q24, required=[Edge.of((0, 0), (0, 1))]), "matching too large"),
    # HamPathMinusVertices
    (K.HAM_PATH_MINUS_VERTICES, make_spec(Q24, [((0, 0), (0, 1))]), "k odd"),
    (K.HAM_PATH_MINUS_VERTICES, make_spec(Q25, [((0, 0), (0, 1))], [Edge.of((2, 2), (2, 3))]), "no required edges"),
    (K.HAM_PATH_MINUS_VERTICES, make_spec(Q25, [((0, 0), (0, 1))], forbidden=[(2, 2), (3, 3)]), "|U| <= 2n-3"),
    (K.HAM_PATH_MINUS_VERTICES, make_spec(Q25, [((0, 0), (0, 1))], forbidden=[(0, 0)]), "x,y not in U"),
    # HamPathEvenParity
    (K.HAM_PATH_EVEN_PARITY, make_spec(Q25, [((0, 0), (0, 1))]), "k even"),
    (K.HAM_PATH_EVEN_PARITY, make_spec(Q24, [((0, 0), (0, 1))], [Edge.of((2, 2), (2, 3))]), "no required edges"),
    (K.HAM_PATH_EVEN_PARITY, make_spec(Q24, [((0, 0), (1, 1))]), "parity"),
    # HamPathMinusOne
    (K.HAM_PATH_MINUS_ONE, make_spec(Q24, [((0, 0), (1, 1))], forbidden=[(0, 1)]), "n >= 3"),
    (K.HAM_PATH_MINUS_ONE, make_spec(Q35, [((0, 0, 0), (0, 1, 1))], forbidden=[(2, 2, 3)]), "k even"),
    (K.HAM_PATH_MINUS_ONE, make_spec(Q34, [((0, 0, 0), (0, 1, 1))], [Edge.of((3, 3, 3), (3, 3, 0))],
                                forbidden=[(2, 2, 3)]), "no required edges"),
    (K.HAM_PATH_MINUS_ONE, make_spec(Q34, [((0, 0, 0), (0, 1, 1))]), "exactly one deleted vertex"),
    (K.HAM_PATH_MINUS_ONE, make_spec(Q34, [((0, 0, 0), (0, 0, 1))], forbidden=[(2, 2, 3)]), "parity"),
    # HamPathThroughEdge
    (K.HAM_PATH_THROUGH_EDGE, make_spec(Q24, [((0, 0), (0, 1))]), "n >= 3"),
    (K.HAM_PATH_THROUGH_EDGE, make_spec(Q34, [((0, 0, 0), (0, 0, 2))]), "parity"),
    (K.HAM_PATH_THROUGH_EDGE, make_spec(Q34, [((0, 0, 0), (0, 0, 1))], [FAR_34, Edge.of((2, 2, 2), (2, 2, 3))]),
     "at most one edge"),
    (K.HAM_PATH_THROUGH_EDGE, make_spec(Q34, [((0, 0, 0), (0, 0, 1))], [Edge.of((0, 0, 0), (0, 0, 1))]),
     "{u,v} != {x,y}"),
    # TwoPathThroughMatching
    (K.TWO_PATH_THROUGH_MATCHING, make_spec(Q34, [((0, 0, 0), (0, 0, 1)), ((2, 2, 2), (2, 2, 3))], [FAR_34]),
     "|M| <= max{0,2n-7}"),
    (K.TWO_PATH_THROUGH_MATCHING, make_spec(Q34, [((0, 0, 0), (0, 0, 2)), ((1, 1, 1), (1, 1, 2))]),
     "uu', vv' edges"),
    (K.TWO_PATH_THROUGH_MATCHING, make_spec(Q44, [((0, 0, 0, 0), (0, 0, 0, 1)), ((2, 2, 2, 2), (2, 2, 2, 3))],
                                       [Edge.of((0, 0, 0, 0), (0, 0, 0, 1))]), "{u,v} disjoint from V(M)"),
    (K.TWO_PATH_THROUGH_MATCHING, make_spec(Q44, [((0, 0, 0, 0), (0, 0, 0, 1)), ((0, 0, 1, 2), (0, 0, 1, 1))],
                                       [Edge.of((0, 0, 0, 1), (0, 0, 1, 1))]), "u'v' not in M"),
    # RangePath
    (K.RANGE_PATH, make_spec(R34, [((0, 0, 0), (0, 0, 1))], [FAR_34]), "no required edges"),
    (K.RANGE_PATH, make_spec(R34, [((0, 0, 0), (0, 0, 2))]), "parity"),
    # RangePathThroughMatching
    (K.RANGE_PATH_THROUGH_MATCHING, make_spec(R34_WIDE, [((0, 0, 0), (0, 0, 1))], [
        Edge.of((1, 0, 0), (1, 0, 1)), Edge.of((1, 2, 2), (1, 2, 3)), Edge.of((1, 1, 3), (1, 1, 0))]),
     "|M_i| <= 2n-4"),
    (K.RANGE_PATH_THROUGH_MATCHING, make_spec(R34_WIDE, [((0, 0, 0), (0, 0, 1))], [
        Edge.of((0, 1, 1), (1, 1, 1)), Edge.of((0, 2, 2), (1, 2, 2))]), "|M ∩ E_d(i,i+1)| <= 1"),
    (K.RANGE_PATH_THROUGH_MATCHING, make_spec(R34_WIDE, [((0, 0, 0), (1, 0, 0))]), "xy in E(Q[p]) \\ M"),
    # RangeTwoPath
    (K.RANGE_TWO_PATH, make_spec(R34, [((0, 0, 0), (0, 0, 1)), ((0, 1, 1), (0, 1, 2))]), "n >= 4"),
    (K.RANGE_TWO_PATH, make_spec(R44, [((0, 0, 0, 0), (0, 0, 0, 1)), ((0, 1, 1, 0), (0, 1, 1, 1))],
                            [Edge.of((1, 2, 2, 2), (1, 2, 2, 3))]), "no required edges"),
    (K.RANGE_TWO_PATH, make_spec(R44, [((0, 0, 0, 0), (0, 0, 0, 2)), ((0, 1, 1, 0), (0, 1, 1, 1))]), "parity"),
    (K.RANGE_TWO_PATH, make_spec(R44, [((0, 0, 0, 0), (0, 0, 0, 1)), ((0, 1, 1, 0), (1, 1, 0, 1))]),
     "endpoint placement"),
]


@pytest.mark.parametrize("kind, spec, clause", MUTANTS, ids=[f"{kind.value}-{clause}" for kind, _, clause in MUTANTS])
def test_precondition_names_the_clause(kind, spec, clause):
    """违反的子句名原样出现在报告和异常里"""
    report = validate_precondition(kind, spec)
    assert not report
    assert report.first_violation == clause
    with pytest.raises(PreconditionViolation) as info:
        solve_primitive(kind, spec)
    assert info.value.clause == clause


def test_capability_refused_before_search():
    provider = SearchProvider(capability=10)
    spec = primitive_spec(Q24, [((0, 0), (0, 1))])
    with pytest.raises(CapabilityRefused):
        solve_primitive(K.HAM_PATH_EVEN_PARITY, spec, provider=provider)


def test_gray_shortcut_for_plain_cycle():
    """没有必经边时直接返回 Gray 码圈"""
    solution = solve_primitive(K.HAM_CYCLE_THROUGH_MATCHING, primitive_spec(Q24), provider=SearchProvider())
    assert isinstance(solution, HamCycleCertificate)
    assert solution.order == gray_cycle(Q24)


def test_cycle_through_forest():
    solution = solve_primitive(K.HAM_CYCLE_THROUGH_FOREST, primitive_spec(Q24, required=PATH_OF_THREE))
    assert check_ham_cycle(solution, PATH_OF_THREE)


def test_two_path_through_matching_reorients_pairs():
    """端点对内部无序；结果对原实例同样成立"""
    spec = primitive_spec(Q34, [((0, 0, 1), (0, 0, 0)), ((2, 2, 2), (2, 2, 3))])
    solution = solve_primitive(K.TWO_PATH_THROUGH_MATCHING, spec)
    assert isinstance(solution, PathSystem)
    assert solution.m == 2
    assert certify_solution(solution, spec)


def test_range_path_through_matching():
    view = split(Q34.shape, 1).range(0, 2)
    M = [Edge.of((1, 1, 1), (1, 1, 2)), Edge.of((1, 3, 3), (2, 3, 3))]
    spec = primitive_spec(view, [((0, 0, 0), (0, 0, 1))], required=M)
    assert validate_precondition(K.RANGE_PATH_THROUGH_MATCHING, spec)
    solution = solve_primitive(K.RANGE_PATH_THROUGH_MATCHING, spec)
    assert certify_solution(solution, spec)


def test_infeasible_spec_raises_consistency_alarm():
    """跳过前提直接求解一个无解实例：provider 报告不一致"""
    with pytest.raises(ConsistencyAlarm):
        SearchProvider().solve_spec(primitive_spec(Q24, [((0, 0), (1, 1))]))


def test_solution_conjugates_under_automorphism():
    """解在自同构下的像是像实例的解"""
    shape = Q34.shape
    spec = primitive_spec(Q34, [((0, 0, 0), (0, 1, 2))])
    solution = solve_primitive(K.HAM_PATH_EVEN_PARITY, spec)
    t = Transform.rotation(shape, 1, 2).compose(Transform.reflection(shape, 3)).compose(Transform.swap(shape, 1, 2))
    assert certify_solution(apply_transform(t, solution), apply_transform(t, spec))


def test_unmet_side_condition_is_recoverable(monkeypatch):
    """解都不满足附加条件时抛出可回退的 SideConditionUnmet，而不是预算错误"""
    monkeypatch.setattr("core.primitives.check_side_condition",
                        lambda solution, spec, side: VerifyReport.failed("trace in Q[1] has 6 pieces"))
    provider = SearchProvider(retries=2)
    with pytest.raises(SideConditionUnmet) as info:
        provider.solve_spec(make_spec(R34, [((0, 0, 0), (0, 0, 1))]), SideCondition.LAST_TRACE_PATH)
    assert info.value.violation == "trace in Q[1] has 6 pieces"
    assert isinstance(info.value, RECOVERABLE)
