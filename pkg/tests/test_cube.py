#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
立方体核心模型测试：邻接、距离、区域、划分、自同构与 Gray 码
"""

import sys
import os

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import networkx as nx
import pytest

from core.cube import (
    CubeRegion,
    Edge,
    Transform,
    apply_transform,
    distance_to_edge,
    gray_cycle,
    is_adjacent,
    is_linear_forest,
    lee_distance,
    make_edge,
    neighbors,
    parity,
    region_graph,
    restrict_matching,
    select_split_dimension,
    split,
)
from core.exceptions import InputError, NoDimensionError
from models.data_models import CubeShape


@pytest.mark.parametrize("n, k", [(0, 4), (3, 2), (2, 1)])
def test_shape_rejects_bad_parameters(n, k):
    """n < 1 或 k < 3 不是合法形状"""
    with pytest.raises(InputError):
        CubeShape(n, k)


def test_validate_vertex():
    """长度与数位都要检查"""
    shape = CubeShape(3, 4)
    assert shape.validate_vertex([0, 3, 1]) == (0, 3, 1)
    with pytest.raises(InputError):
        shape.validate_vertex((0, 4, 1))
    with pytest.raises(InputError):
        shape.validate_vertex((0, 1))


def test_adjacency_wraps_around():
    """±1 (mod k) 才相邻，包括回绕"""
    shape = CubeShape(2, 4)
    assert is_adjacent(shape, (0, 0), (3, 0))
    assert is_adjacent(shape, (0, 0), (0, 1))
    assert not is_adjacent(shape, (0, 0), (2, 0))
    assert not is_adjacent(shape, (0, 0), (1, 1))
    with pytest.raises(InputError):
        make_edge(shape, (0, 0), (2, 0))


@pytest.mark.parametrize("n, k", [(1, 4), (2, 3), (3, 4), (3, 5)])
def test_region_graph_matches_definition(n, k):
    """networkx 交叉校验：k^n 个顶点、n*k^n 条边、2n 正则且连通"""
    shape = CubeShape(n, k)
    graph = region_graph(CubeRegion(shape))
    assert graph.number_of_nodes() == shape.vertex_count
    assert graph.number_of_edges() == shape.edge_count
    assert {deg for _, deg in graph.degree()} == {2 * n}
    assert nx.is_connected(graph)
    v = (0,) * n
    assert set(graph.neighbors(v)) == set(neighbors(shape, v))


def test_distances_and_parity():
    """Lee 距离、点到边距离与奇偶性"""
    shape = CubeShape(3, 4)
    assert lee_distance(shape, (0, 0, 0), (3, 2, 1)) == 4
    e = Edge.of((1, 0, 0), (2, 0, 0))
    assert distance_to_edge(shape, (0, 0, 0), e) == 1
    assert parity(shape, (1, 1, 1)) == 1
    assert parity(shape, (3, 1, 0)) == 0


def test_edge_normalization():
    e = Edge.of((1, 2), (1, 1))
    assert e == Edge((1, 1), (1, 2))
    assert e.dim == 2
    assert e.other((1, 1)) == (1, 2)


@pytest.mark.parametrize("n, k", [(1, 5), (2, 3), (2, 4), (3, 4), (3, 5)])
def test_gray_cycle_is_hamiltonian(n, k):
    """Gray 码圈遍历每个顶点一次，相邻码字（含首尾）相邻"""
    shape = CubeShape(n, k)
    order = gray_cycle(CubeRegion(shape))
    assert len(order) == shape.vertex_count
    assert len(set(order)) == shape.vertex_count
    for a, b in zip(order, order[1:] + order[:1]):
        assert is_adjacent(shape, a, b)


def test_gray_cycle_on_subcube():
    """固定坐标的子立方体上的 Gray 码圈留在子立方体内"""
    shape = CubeShape(3, 4)
    region = CubeRegion(shape, ((1, 2),))
    order = gray_cycle(region)
    assert len(order) == 16
    assert all(v in region and v[1] == 2 for v in order)


def test_split_labels_and_rebase():
    """标号 = 坐标；rebased 以旧标号为 0，flip 反转方向"""
    shape = CubeShape(3, 4)
    ctx = split(shape, 2)
    v = (0, 3, 1)
    assert ctx.label(v) == 3
    assert ctx.at(v, 1) == (0, 1, 1)
    flipped = ctx.rebased(1, flip=True)
    assert flipped.label((0, 1, 0)) == 0
    assert flipped.label((0, 0, 0)) == 1
    assert flipped.label((0, 2, 0)) == 3
    assert flipped.cube_of(1) == ctx.cube_of(0)


def test_range_view_edges():
    """区间 Q[0,1] 含两个子立方体的边和一层 d-边，不含回绕边"""
    shape = CubeShape(3, 4)
    ctx = split(shape, 1)
    view = ctx.range(0, 1)
    assert view.size == 32
    assert sum(1 for _ in view.edges()) == 2 * 32 + 16
    assert view.is_edge((0, 0, 0), (1, 0, 0))
    assert not view.is_edge((0, 0, 0), (3, 0, 0))
    assert sum(1 for _ in ctx.crossing_edges(3)) == 16
    with pytest.raises(InputError):
        ctx.range(2, 1)


def test_matching_restrictions():
    """M_i、M[p,q] 与边界 d-边"""
    shape = CubeShape(3, 4)
    ctx = split(shape, 1)
    inside = Edge.of((0, 0, 0), (0, 0, 1))
    crossing = Edge.of((1, 2, 2), (2, 2, 2))
    wrap = Edge.of((3, 1, 1), (0, 1, 1))
    M = {inside, crossing, wrap}
    assert ctx.part(M, 0) == {inside}
    assert ctx.cross(M, 1) == {crossing}
    assert ctx.cross(M, 3) == {wrap}
    assert ctx.inner(M, 0, 2) == {inside, crossing}
    assert ctx.d_edges(M) == {crossing, wrap}
    inner, by_boundary = restrict_matching(M, ctx.range(0, 2))
    assert inner == {inside, crossing}
    assert by_boundary[1] == {crossing}
    assert by_boundary[3] == {wrap}
    assert by_boundary[0] == frozenset()


def test_select_split_dimension():
    """取 |M ∩ E_d| 最小的维度；没有可用维度时报错"""
    shape = CubeShape(3, 4)
    M = [Edge.of((0, 0, 0), (1, 0, 0)), Edge.of((2, 2, 2), (2, 3, 2))]
    assert select_split_dimension(shape, M, cap=3) == 3
    avoid = [Edge.of((1, 1, 0), (1, 1, 1))]
    assert select_split_dimension(shape, M, cap=1, avoid=avoid) == 1
    with pytest.raises(NoDimensionError):
        select_split_dimension(shape, M, cap=0, avoid=avoid)


def test_transform_inverse_and_adjacency():
    """自同构保持邻接，与其逆复合为恒等"""
    shape = CubeShape(3, 4)
    t = Transform.rotation(shape, 1, 3).compose(Transform.reflection(shape, 2)).compose(Transform.swap(shape, 1, 3))
    back = t.compose(t.inverse())
    region = CubeRegion(shape)
    for v in region.vertices():
        assert back.vertex(v) == v
    for e in region.edges():
        image = apply_transform(t, e)
        assert is_adjacent(shape, image.u, image.v)


def test_transform_moves_regions():
    """子立方体的像仍是子立方体，顶点随之移动"""
    shape = CubeShape(3, 4)
    region = CubeRegion(shape, ((0, 1),))
    t = Transform.rotation(shape, 1, 2)
    image = apply_transform(t, region)
    assert image.fixed == ((0, 3),)
    assert all(t.vertex(v) in image for v in region.vertices())


def test_linear_forest_recognition():
    """路径是线性森林，星和圈不是"""
    path = [Edge.of((0, 0), (0, 1)), Edge.of((0, 1), (0, 2))]
    star = path + [Edge.of((0, 1), (1, 1))]
    ring = [Edge.of((i,), ((i + 1) % 4,)) for i in range(4)]
    assert is_linear_forest(path)
    assert is_linear_forest([])
    assert not is_linear_forest(star)
    assert not is_linear_forest(ring)
