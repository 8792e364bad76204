#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
证书校验

构造产生的每个对象都在这里独立复核：匹配、带固定端点的生成 m-路径、
经过 M 的哈密顿圈以及平衡集。单遍扫描 + 访问位图，只报告第一个违规。
"""

import logging
from collections import Counter
from typing import Iterable, Sequence

from core.cube import CubeRegion, Edge, RangeView, is_adjacent, pack
from core.exceptions import InputError, NotApplicableError
from models.data_models import (
    ConstraintSpec,
    CubeShape,
    HamCycleCertificate,
    PathSystem,
    SideCondition,
    Vertex,
    VerifyReport,
    format_vertex,
)

logger = logging.getLogger(__name__)


def _valid(shape: CubeShape, v: Vertex) -> bool:
    try:
        shape.validate_vertex(v)
    except InputError:
        return False
    return True


def check_matching(shape: CubeShape, M: Iterable[Sequence[Vertex]]) -> VerifyReport:
    """边合法、端点相邻且两两不交"""
    seen = set()
    for a, b in sorted(tuple(e) for e in M):
        if not (_valid(shape, a) and _valid(shape, b)):
            return VerifyReport.failed(f"invalid vertex in {format_vertex(a)}-{format_vertex(b)}")
        if not is_adjacent(shape, a, b):
            return VerifyReport.failed(f"not an edge {format_vertex(a)}-{format_vertex(b)}")
        for w in (a, b):
            if w in seen:
                return VerifyReport.failed(f"shared vertex {format_vertex(w)}")
            seen.add(w)
    return VerifyReport.passed()


def check_linear_forest(shape: CubeShape, F: Iterable[Sequence[Vertex]]) -> VerifyReport:
    """每个连通分支都是路径：度不超过 2 且无圈"""
    degree = Counter()
    root = {}

    def find(w):
        while root.get(w, w) != w:
            w = root[w]
        return w

    for a, b in sorted(tuple(e) for e in F):
        if not (_valid(shape, a) and _valid(shape, b)) or not is_adjacent(shape, a, b):
            return VerifyReport.failed(f"not an edge {format_vertex(a)}-{format_vertex(b)}")
        degree[a] += 1
        degree[b] += 1
        if degree[a] > 2 or degree[b] > 2:
            w = a if degree[a] > 2 else b
            return VerifyReport.failed(f"vertex of degree 3 at {format_vertex(w)}")
        ra, rb = find(a), find(b)
        if ra == rb:
            return VerifyReport.failed(f"cycle closed by {format_vertex(a)}-{format_vertex(b)}")
        root[ra] = rb
    return VerifyReport.passed()


def _check_cover(spec: ConstraintSpec, sequences: Sequence[Sequence[Vertex]], cyclic: bool) -> VerifyReport:
    region = spec.region
    shape = region.shape
    visited = bytearray(shape.vertex_count)
    count = 0
    traversed = set()
    for seq in sequences:
        if not seq:
            return VerifyReport.failed("empty path")
        prev = None
        for v in seq:
            if not _valid(shape, v):
                return VerifyReport.failed(f"invalid vertex {v!r}")
            if v not in region:
                return VerifyReport.failed(f"vertex outside region {format_vertex(v)}")
            if v in spec.forbidden:
                return VerifyReport.failed(f"forbidden vertex visited {format_vertex(v)}")
            index = pack(shape, v)
            if visited[index]:
                return VerifyReport.failed(f"duplicate vertex {format_vertex(v)}")
            visited[index] = 1
            count += 1
            if prev is not None:
                if not region.is_edge(prev, v):
                    return VerifyReport.failed(f"non-edge step {format_vertex(prev)}->{format_vertex(v)}")
                traversed.add(Edge.of(prev, v))
            prev = v
        if cyclic:
            if len(seq) < 3 or not region.is_edge(seq[-1], seq[0]):
                return VerifyReport.failed(f"non-edge step {format_vertex(seq[-1])}->{format_vertex(seq[0])}")
            traversed.add(Edge.of(seq[-1], seq[0]))
    if count != spec.vertex_count:
        for v in region.vertices():
            if v not in spec.forbidden and not visited[pack(shape, v)]:
                return VerifyReport.failed(f"missing vertex {format_vertex(v)}")
    for e in sorted(spec.required):
        if Edge.of(*e) not in traversed:
            return VerifyReport.failed(f"required edge absent {format_vertex(e[0])}-{format_vertex(e[1])}")
    return VerifyReport.passed()


def check_path_system(system: PathSystem, spec: ConstraintSpec) -> VerifyReport:
    """生成、不交、端点对与规格一致（路径内无序、路径间无序）、经过全部必经边"""
    if system.m < 1 or system.m != len(spec.endpoint_pairs):
        return VerifyReport.failed(f"wrong path count {system.m}, expected {len(spec.endpoint_pairs)}")
    got = Counter(frozenset((path[0], path[-1])) for path in system.paths if path)
    want = Counter(frozenset(pair) for pair in spec.endpoint_pairs)
    if got != want:
        return VerifyReport.failed("endpoint mismatch")
    return _check_cover(spec, system.paths, cyclic=False)


def check_cycle(order: Sequence[Vertex], spec: ConstraintSpec) -> VerifyReport:
    """区域内（可去掉禁用顶点）的哈密顿圈"""
    return _check_cover(spec, [order], cyclic=True)


def check_ham_cycle(cert: HamCycleCertificate, M: Iterable[Edge]) -> VerifyReport:
    """整个 Q_n^k 上经过 M 的哈密顿圈"""
    spec = ConstraintSpec(CubeRegion(cert.shape), required=frozenset(Edge.of(*e) for e in M))
    return check_cycle(cert.order, spec)


def certify_solution(solution, spec: ConstraintSpec) -> VerifyReport:
    """按解的类型分派校验"""
    if isinstance(solution, PathSystem):
        return check_path_system(solution, spec)
    if isinstance(solution, HamCycleCertificate):
        if not spec.is_cycle:
            return VerifyReport.failed("cycle given for a path instance")
        return check_cycle(solution.order, spec)
    return VerifyReport.failed(f"unknown solution type {type(solution).__name__}")


def check_balanced(shape: CubeShape, S: Iterable[Vertex]) -> bool:
    """S 中奇偶两类顶点数相等

    Raises:
        NotApplicableError: k 为奇数
    """
    if not shape.is_bipartite:
        raise NotApplicableError("balance is only defined for even k")
    counts = Counter(sum(v) % 2 for v in S)
    return counts[0] == counts[1]


def _trace_edges(system: PathSystem, view: RangeView, label: int) -> int:
    ctx = view.ctx
    return sum(1 for a, b in system.edges() if ctx.label(a) == label and ctx.label(b) == label)


def check_side_condition(system: PathSystem, spec: ConstraintSpec, side: SideCondition) -> VerifyReport:
    """复核路径在 Q[q]/Q[p] 上的迹

    路径的迹是森林，其分支数 = 顶点数 - 边数，因此只需数边。
    """
    view = spec.region
    if side == SideCondition.NONE:
        return VerifyReport.passed()
    if not isinstance(view, RangeView):
        return VerifyReport.failed("side condition needs a range region")
    if view.is_single:
        return VerifyReport.passed()
    layer = view.ctx.cube_of(view.q).size
    pieces_q = layer - _trace_edges(system, view, view.q)
    if SideCondition.LAST_TRACE_PATH in side and pieces_q != 1:
        return VerifyReport.failed(f"trace in Q[{view.q}] has {pieces_q} pieces, expected a path")
    if SideCondition.LAST_TRACE_PATH_OR_2PATH in side and pieces_q not in (1, 2):
        return VerifyReport.failed(f"trace in Q[{view.q}] has {pieces_q} pieces, expected a path or 2-path")
    if SideCondition.FIRST_TRACE_2PATH in side:
        pieces_p = layer - _trace_edges(system, view, view.p)
        if pieces_p != 2:
            return VerifyReport.failed(f"trace in Q[{view.p}] has {pieces_p} pieces, expected a 2-path")
    return VerifyReport.passed()


def trace_pieces(system: PathSystem, view: RangeView, label: int) -> int:
    """路径系统在 Q[label] 上的迹的分支数"""
    return view.ctx.cube_of(label).size - _trace_edges(system, view, label)
