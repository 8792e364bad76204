#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
拼装工具测试：Route 索引、边袋抽取、规范选择与平衡配对
"""

import sys
import os

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from core.assembly import Assembly, Route, balanced_pairing, first, joins
from core.exceptions import AssemblyError, ChoiceExhausted
from models.data_models import CubeShape, HamCycleCertificate, PathSystem

RING = CubeShape(1, 5)
ORDER = ((0,), (1,), (2,), (3,), (4,))


def test_route_on_cycle_wraps():
    route = Route.of(HamCycleCertificate(RING, ORDER))
    assert route.next((4,)) == (0,)
    assert route.prev((0,)) == (4,)
    assert route.dist((0,), (4,)) == 1
    assert route.segment((3,), (1,)) == ((3,), (4,), (0,), (1,))
    assert route.has_edge((4,), (0,))
    with pytest.raises(AssemblyError):
        route.closer((1,), (3,))


def test_route_on_path():
    route = Route.of(PathSystem((ORDER,)))
    assert route.next((4,)) is None
    assert route.prev((0,)) is None
    assert route.dist((0,), (4,)) == 4
    assert route.segment((3,), (1,)) == ((3,), (2,), (1,))
    assert route.closer((3,), (0,)) == (2,)
    assert route.closer((1,), (4,)) == (2,)
    assert route.ends == ((0,), (4,))
    with pytest.raises(AssemblyError):
        route.pos((9,))


def test_route_starting_reverses_when_needed():
    system = PathSystem((ORDER,))
    assert Route.starting(system, (4,)).order == tuple(reversed(ORDER))
    with pytest.raises(AssemblyError):
        Route.starting(system, (2,))


def test_assembly_closes_cycle():
    """路径加桥接边得到圈，再切开得到路径"""
    bag = Assembly(RING).add(Route(ORDER[:3])).link(((2,), (3,)), ((3,), (4,)), ((4,), (0,)))
    assert bag.cycle().order == ORDER
    bag.cut(((4,), (0,)))
    assert bag.components() == [((0,), (4,))]
    assert bag.paths([((0,), (4,))]).paths[0] == ORDER


def test_assembly_rejects_bad_links():
    bag = Assembly(RING).add(Route(ORDER[:2]))
    with pytest.raises(AssemblyError):
        bag.link(((0,), (2,)))
    with pytest.raises(AssemblyError):
        bag.link(((0,), (1,)))
    with pytest.raises(AssemblyError):
        bag.cut(((3,), (4,)))


def test_assembly_paths_must_cover_everything():
    bag = Assembly(RING).add(PathSystem((ORDER[:3], ORDER[3:])))
    with pytest.raises(AssemblyError):
        bag.paths([((0,), (2,))])
    with pytest.raises(AssemblyError):
        bag.cycle()


def test_first_takes_canonical_hit():
    assert first("x", [1, 2, 3], lambda v: v > 1) == 2
    with pytest.raises(ChoiceExhausted):
        first("nothing above three", [1, 2, 3], lambda v: v > 3)


def test_balanced_pairing():
    """衔接端点的奇偶性交替；不平衡时报错"""
    shape = CubeShape(2, 4)
    oriented = balanced_pairing(shape, [((0, 0), (0, 1)), ((1, 0), (1, 1))])
    assert oriented == [((0, 0), (0, 1)), ((1, 1), (1, 0))]
    assert joins(oriented) == [((0, 1), (1, 1)), ((1, 0), (0, 0))]
    with pytest.raises(AssemblyError):
        balanced_pairing(shape, [((0, 0), (1, 1))])
