#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
证书校验测试：每类违规都给出第一个违规的说明
"""

import sys
import os

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from core.certify import (
    check_balanced,
    check_cycle,
    check_ham_cycle,
    check_linear_forest,
    check_matching,
    check_path_system,
    check_side_condition,
)
from core.cube import CubeRegion, Edge, gray_cycle, split
from core.exceptions import NotApplicableError
from core.primitives import primitive_spec
from models.data_models import CubeShape, HamCycleCertificate, PathSystem, SideCondition

SHAPE = CubeShape(2, 4)


def gray_certificate(shape: CubeShape = SHAPE) -> HamCycleCertificate:
    return HamCycleCertificate(shape, gray_cycle(CubeRegion(shape)))


def test_gray_cycle_certifies():
    """无必经边时 Gray 码圈通过校验"""
    assert check_ham_cycle(gray_certificate(), [])


def test_swapped_vertices_give_non_edge_step():
    """交换两个顶点后出现非边步"""
    order = list(gray_certificate().order)
    order[1], order[5] = order[5], order[1]
    report = check_ham_cycle(HamCycleCertificate(SHAPE, tuple(order)), [])
    assert not report
    assert "non-edge step" in report.first_violation


def test_required_edge_absent():
    """(0,0)-(1,0) 不在 Gray 码圈上"""
    report = check_ham_cycle(gray_certificate(), [Edge.of((0, 0), (1, 0))])
    assert not report
    assert report.first_violation.startswith("required edge absent")


def test_required_edge_present():
    assert check_ham_cycle(gray_certificate(), [Edge.of((0, 0), (0, 1))])


def test_duplicate_vertex():
    order = list(gray_certificate().order)
    order[-1] = order[0]
    report = check_ham_cycle(HamCycleCertificate(SHAPE, tuple(order)), [])
    assert report.first_violation.startswith("duplicate vertex")


def test_invalid_vertex():
    order = list(gray_certificate().order)
    order[3] = (0, 9)
    report = check_ham_cycle(HamCycleCertificate(SHAPE, tuple(order)), [])
    assert report.first_violation.startswith("invalid vertex")


def test_region_cycle():
    """子立方体上的圈：离开子立方体即违规"""
    shape = CubeShape(3, 4)
    region = CubeRegion(shape, ((0, 1),))
    spec = primitive_spec(region)
    order = gray_cycle(region)
    assert check_cycle(order, spec)
    outside = ((0, 0, 0),) + order[1:]
    assert check_cycle(outside, spec).first_violation.startswith("vertex outside region")


def test_path_system_checks():
    """端点对无序比较；漏掉顶点时报告 missing vertex"""
    ring = CubeShape(1, 5)
    region = CubeRegion(ring)
    spec = primitive_spec(region, [((0,), (4,))])
    path = ((0,), (1,), (2,), (3,), (4,))
    assert check_path_system(PathSystem((path,)), spec)
    assert check_path_system(PathSystem((tuple(reversed(path)),)), spec)
    short = PathSystem((((0,), (4,)),))
    assert check_path_system(short, spec).first_violation.startswith("missing vertex")
    wrong = primitive_spec(region, [((0,), (3,))])
    assert check_path_system(PathSystem((path,)), wrong).first_violation == "endpoint mismatch"


def test_forbidden_vertices_are_skipped():
    ring = CubeShape(1, 5)
    spec = primitive_spec(CubeRegion(ring), [((0,), (3,))], forbidden=[(4,)])
    assert check_path_system(PathSystem((((0,), (1,), (2,), (3,)),)), spec)
    bad = PathSystem((((3,), (4,), (0,)),))
    assert not check_path_system(bad, primitive_spec(CubeRegion(ring), [((3,), (0,))], forbidden=[(4,)]))


@pytest.mark.parametrize("edges, violation", [
    ([((0, 0), (0, 1)), ((0, 1), (0, 2))], "shared vertex"),
    ([((0, 0), (0, 2))], "not an edge"),
    ([((0, 0), (0, 7))], "invalid vertex"),
])
def test_matching_violations(edges, violation):
    report = check_matching(SHAPE, edges)
    assert report.first_violation.startswith(violation)


def test_matching_ok():
    assert check_matching(SHAPE, [((0, 0), (0, 1)), ((2, 2), (3, 2))])


def test_linear_forest_violations():
    star = [((1, 1), (0, 1)), ((1, 1), (2, 1)), ((1, 1), (1, 0))]
    assert check_linear_forest(SHAPE, star).first_violation.startswith("vertex of degree 3")
    square = [((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (1, 0)), ((1, 0), (0, 0))]
    assert check_linear_forest(SHAPE, square).first_violation.startswith("cycle closed")
    assert check_linear_forest(SHAPE, square[:3])


def test_balanced():
    """偶数 k 下比较奇偶两类的个数，奇数 k 无定义"""
    assert check_balanced(SHAPE, [(0, 0), (0, 1)])
    assert not check_balanced(SHAPE, [(0, 0), (1, 1)])
    with pytest.raises(NotApplicableError):
        check_balanced(CubeShape(2, 5), [(0, 0), (0, 1)])


def test_side_condition_on_last_layer():
    """路径在 Q[q] 上的迹按分支数判定"""
    shape = CubeShape(2, 4)
    view = split(shape, 1).range(0, 1)
    # 先走完 Q[0] 的列，再走完 Q[1] 的列
    path = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 3), (1, 2), (1, 1), (1, 0))
    spec = primitive_spec(view, [((0, 0), (1, 0))])
    system = PathSystem((path,), view)
    assert check_path_system(system, spec)
    assert check_side_condition(system, spec, SideCondition.LAST_TRACE_PATH)
    assert not check_side_condition(system, spec, SideCondition.FIRST_TRACE_2PATH)
    zigzag = ((0, 0), (1, 0), (1, 1), (0, 1), (0, 2), (1, 2), (1, 3), (0, 3))
    spec2 = primitive_spec(view, [((0, 0), (0, 3))])
    system2 = PathSystem((zigzag,), view)
    assert check_path_system(system2, spec2)
    report = check_side_condition(system2, spec2, SideCondition.LAST_TRACE_PATH)
    assert "pieces" in report.first_violation
