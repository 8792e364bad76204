#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
拼接工具

构造的每一步都是“若干路径/圈 + 若干桥接边 - 若干边”。Assembly 把这些片段
放进同一个边袋（networkx 无向图），最后按预期形状抽取路径系统或圈；
形状不符时抛出 AssemblyError，由构造层决定是否回退。

Route 是路径或圈上的位置索引，提供邻居、距离、子路径以及
“靠近 x 的邻居”等查询。
"""

import logging
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple, TypeVar

import networkx as nx

from core.cube import Edge, is_adjacent, parity
from core.exceptions import AssemblyError, ChoiceExhausted
from models.data_models import CubeShape, HamCycleCertificate, Pair, PathSystem, Vertex, format_vertex

logger = logging.getLogger(__name__)

T = TypeVar("T")


class Route:
    """路径或圈的顶点序列及其位置索引"""

    def __init__(self, order: Sequence[Vertex], cyclic: bool = False):
        self.order: Tuple[Vertex, ...] = tuple(order)
        self.cyclic = cyclic
        self._pos = {v: i for i, v in enumerate(self.order)}

    @classmethod
    def of(cls, solution) -> "Route":
        """单条路径的 PathSystem 或圈证书转为 Route"""
        if isinstance(solution, Route):
            return solution
        if isinstance(solution, HamCycleCertificate):
            return cls(solution.order, cyclic=True)
        if isinstance(solution, PathSystem):
            if solution.m != 1:
                raise AssemblyError(f"expected a single path, got {solution.m}")
            return cls(solution.paths[0])
        raise AssemblyError(f"cannot index {type(solution).__name__}")

    @classmethod
    def all_of(cls, system: PathSystem) -> List["Route"]:
        return [cls(path) for path in system.paths]

    @classmethod
    def starting(cls, system: PathSystem, start: Vertex) -> "Route":
        """路径系统中以 start 为端点的那条路径，从 start 出发"""
        for path in system.paths:
            if path[0] == start:
                return cls(path)
            if path[-1] == start:
                return cls(tuple(reversed(path)))
        raise AssemblyError(f"no path ends at {format_vertex(start)}")

    def __len__(self) -> int:
        return len(self.order)

    def __contains__(self, v) -> bool:
        return v in self._pos

    def __iter__(self) -> Iterator[Vertex]:
        return iter(self.order)

    @property
    def ends(self) -> Pair:
        return self.order[0], self.order[-1]

    def pos(self, v: Vertex) -> int:
        try:
            return self._pos[v]
        except KeyError:
            raise AssemblyError(f"{format_vertex(v)} is not on the route") from None

    def next(self, v: Vertex) -> Optional[Vertex]:
        i = self.pos(v) + 1
        if i == len(self.order):
            return self.order[0] if self.cyclic else None
        return self.order[i]

    def prev(self, v: Vertex) -> Optional[Vertex]:
        i = self.pos(v) - 1
        if i < 0:
            return self.order[-1] if self.cyclic else None
        return self.order[i]

    def neighbors(self, v: Vertex) -> List[Vertex]:
        return [w for w in (self.prev(v), self.next(v)) if w is not None]

    def dist(self, a: Vertex, b: Vertex) -> int:
        """d_P / d_C：沿路径或圈的距离"""
        gap = abs(self.pos(a) - self.pos(b))
        return min(gap, len(self.order) - gap) if self.cyclic else gap

    def dist_to_edge(self, w: Vertex, a: Vertex, b: Vertex) -> int:
        return min(self.dist(w, a), self.dist(w, b))

    def has_edge(self, a: Vertex, b: Vertex) -> bool:
        return a in self and b in self and b in self.neighbors(a)

    def edges(self) -> Iterator[Edge]:
        for a, b in zip(self.order, self.order[1:]):
            yield Edge.of(a, b)
        if self.cyclic and len(self.order) > 2:
            yield Edge.of(self.order[-1], self.order[0])

    def segment(self, a: Vertex, b: Vertex) -> Tuple[Vertex, ...]:
        """从 a 走到 b 的子路径 P[a,b]；圈上沿正向"""
        i, j = self.pos(a), self.pos(b)
        if not self.cyclic:
            return self.order[i:j + 1] if i <= j else tuple(reversed(self.order[j:i + 1]))
        if i <= j:
            return self.order[i:j + 1]
        return self.order[i:] + self.order[:j + 1]

    def closer(self, v: Vertex, target: Vertex) -> Vertex:
        """v 在子路径 P[target, v] 上的邻居"""
        if self.cyclic:
            raise AssemblyError("closer-to is only defined on paths")
        i, j = self.pos(v), self.pos(target)
        if i == j:
            raise AssemblyError(f"{format_vertex(v)} is the target itself")
        return self.order[i - 1] if j < i else self.order[i + 1]


def route_of(routes: Sequence[Route], v: Vertex) -> Route:
    """多条路径中包含 v 的那一条"""
    for route in routes:
        if v in route:
            return route
    raise AssemblyError(f"{format_vertex(v)} is on none of the routes")


def route_edges(routes: Iterable[Route]) -> Iterator[Edge]:
    for route in routes:
        yield from route.edges()


class Assembly:
    """边袋：累积路径、圈与桥接边，最后抽取预期形状"""

    def __init__(self, shape: CubeShape):
        self.shape = shape
        self.graph = nx.Graph()

    def add(self, *pieces) -> "Assembly":
        for piece in pieces:
            if isinstance(piece, PathSystem):
                for path in piece.paths:
                    self._add_sequence(path, cyclic=False)
            elif isinstance(piece, HamCycleCertificate):
                self._add_sequence(piece.order, cyclic=True)
            elif isinstance(piece, Route):
                self._add_sequence(piece.order, piece.cyclic)
            else:
                raise AssemblyError(f"cannot add {type(piece).__name__}")
        return self

    def _add_sequence(self, seq: Sequence[Vertex], cyclic: bool) -> None:
        self.graph.add_nodes_from(seq)
        for a, b in zip(seq, seq[1:]):
            self.link((a, b))
        if cyclic and len(seq) > 2:
            self.link((seq[-1], seq[0]))

    def link(self, *pairs: Pair) -> "Assembly":
        for a, b in pairs:
            if not is_adjacent(self.shape, a, b):
                raise AssemblyError(f"not an edge {format_vertex(a)}-{format_vertex(b)}")
            if self.graph.has_edge(a, b):
                raise AssemblyError(f"edge {format_vertex(a)}-{format_vertex(b)} added twice")
            self.graph.add_edge(a, b)
        return self

    def cut(self, *pairs: Pair) -> "Assembly":
        for a, b in pairs:
            if not self.graph.has_edge(a, b):
                raise AssemblyError(f"edge {format_vertex(a)}-{format_vertex(b)} is not present")
            self.graph.remove_edge(a, b)
        return self

    def detour(self, a: Vertex, b: Vertex, a2: Vertex, b2: Vertex) -> "Assembly":
        """把边 ab 换成 a-a2 ... b2-b（a2..b2 的路径另行加入）"""
        return self.cut((a, b)).link((a, a2), (b, b2))

    def drop(self, *vertices: Vertex) -> "Assembly":
        for v in vertices:
            if v not in self.graph:
                raise AssemblyError(f"{format_vertex(v)} is not present")
            self.graph.remove_node(v)
        return self

    def walk(self, start: Vertex) -> Tuple[Vertex, ...]:
        """从度为 1 的顶点出发走到另一端"""
        graph = self.graph
        if start not in graph or graph.degree(start) != 1:
            raise AssemblyError(f"{format_vertex(start)} is not a path end")
        seq = [start]
        prev, cur = None, start
        limit = graph.number_of_nodes()
        while True:
            ahead = [w for w in graph.neighbors(cur) if w != prev]
            if not ahead:
                break
            if len(ahead) > 1:
                raise AssemblyError(f"vertex of degree 3 at {format_vertex(cur)}")
            prev, cur = cur, ahead[0]
            seq.append(cur)
            if len(seq) > limit:
                raise AssemblyError("walk does not terminate")
        return tuple(seq)

    def _check_degree(self, bound: int) -> None:
        for v, deg in self.graph.degree():
            if deg > bound:
                raise AssemblyError(f"vertex of degree {deg} at {format_vertex(v)}")

    def paths(self, pairs: Sequence[Pair], region=None) -> PathSystem:
        """按端点对抽取生成 m-路径，边袋中不能有多余的分支"""
        self._check_degree(2)
        seen = 0
        result = []
        for a, b in pairs:
            seq = self.walk(a)
            if seq[-1] != b:
                raise AssemblyError(f"path from {format_vertex(a)} ends at {format_vertex(seq[-1])}, "
                                    f"expected {format_vertex(b)}")
            seen += len(seq)
            result.append(seq)
        rest = self.graph.number_of_nodes() - seen
        if rest:
            raise AssemblyError(f"{rest} vertices outside the requested paths")
        return PathSystem(tuple(result), region)

    def components(self) -> List[Pair]:
        """全部路径分支的端点对，按端点字典序"""
        self._check_degree(2)
        found = []
        done = set()
        for v in sorted(self.graph.nodes()):
            if v in done or self.graph.degree(v) != 1:
                continue
            seq = self.walk(v)
            done.update((seq[0], seq[-1]))
            found.append((seq[0], seq[-1]))
        return found

    def cycle(self) -> HamCycleCertificate:
        """抽取唯一的圈：所有顶点度为 2 且连通"""
        graph = self.graph
        for v, deg in graph.degree():
            if deg != 2:
                raise AssemblyError(f"vertex of degree {deg} at {format_vertex(v)}")
        if graph.number_of_nodes() < 3 or not nx.is_connected(graph):
            raise AssemblyError("edges do not form a single cycle")
        start = min(graph.nodes())
        order = [start]
        prev, cur = start, min(graph.neighbors(start))
        while cur != start:
            order.append(cur)
            ahead = [w for w in graph.neighbors(cur) if w != prev]
            prev, cur = cur, ahead[0]
        return HamCycleCertificate(self.shape, tuple(order))


def first(label: str, candidates: Iterable[T], pred: Optional[Callable[[T], bool]] = None) -> T:
    """“choose … such that”：按候选的规范顺序取第一个满足条件者

    Raises:
        ChoiceExhausted: 没有候选满足条件
    """
    for item in candidates:
        if pred is None or pred(item):
            return item
    raise ChoiceExhausted(label)


def balanced_pairing(shape: CubeShape, pairs: Sequence[Pair]) -> List[Pair]:
    """为生成 m-路径的端点安排首尾相接的顺序

    返回定向后的路径序列 [(s_1,t_1), ..., (s_m,t_m)]，使得每个衔接对
    (t_i, s_{i+1}) 以及 (t_m, s_1) 在 k 为偶数时奇偶性不同。
    端点集合平衡时贪心总能成功。

    Raises:
        AssemblyError: 端点集合不平衡
    """
    even = shape.is_bipartite
    oriented = [tuple(pairs[0])]
    remaining = [tuple(p) for p in pairs[1:]]
    while remaining:
        tail = oriented[-1][1]
        pick = None
        for idx, (a, b) in enumerate(remaining):
            for s, t in ((a, b), (b, a)):
                if not even or parity(shape, s) != parity(shape, tail):
                    pick = (idx, (s, t))
                    break
            if pick is not None:
                break
        if pick is None:
            raise AssemblyError("endpoint set is not balanced")
        idx, chosen = pick
        oriented.append(chosen)
        remaining.pop(idx)
    if even and parity(shape, oriented[-1][1]) == parity(shape, oriented[0][0]):
        raise AssemblyError("endpoint set is not balanced")
    return oriented


def joins(oriented: Sequence[Pair]) -> List[Pair]:
    """定向路径序列的衔接对 (t_i, s_{i+1})，最后一对回到 s_1"""
    m = len(oriented)
    return [(oriented[i][1], oriented[(i + 1) % m][0]) for i in range(m)]
