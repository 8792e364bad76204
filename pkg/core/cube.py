#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
k 元 n 立方体核心模型

该模块包含 Q_n^k 的顶点/边模型以及构造所需的全部几何操作：
1. 邻接、奇偶性与 Lee 距离
2. 立方体区域 CubeRegion（固定部分坐标得到的子立方体）
3. 维度划分 SplitContext 与区间视图 RangeView
4. 匹配限制与划分维度选择
5. 自同构变换 Transform（实现“由对称性不妨设”）
6. 模 k Gray 码哈密顿圈

维度 d 按 1 起始编号，子立方体标号 i 按 0 起始编号。
"""

import logging
from dataclasses import dataclass
from functools import singledispatch
from itertools import product
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from core.exceptions import InputError, NoDimensionError
from models.data_models import (
    ConstraintSpec,
    CubeShape,
    HamCycleCertificate,
    PathSystem,
    Vertex,
    format_vertex,
)

logger = logging.getLogger(__name__)


class Edge(NamedTuple):
    """无向边，较小端点在前"""
    u: Vertex
    v: Vertex

    @classmethod
    def of(cls, a: Vertex, b: Vertex) -> "Edge":
        return cls(a, b) if a <= b else cls(b, a)

    @property
    def dim(self) -> int:
        """端点不同的坐标位置（1 起始）"""
        for i, (a, b) in enumerate(zip(self.u, self.v)):
            if a != b:
                return i + 1
        raise InputError(f"degenerate edge {self}")

    def other(self, w: Vertex) -> Vertex:
        if w == self.u:
            return self.v
        if w == self.v:
            return self.u
        raise InputError(f"{format_vertex(w)} is not an endpoint of {self}")

    def __str__(self) -> str:
        return f"{format_vertex(self.u)}-{format_vertex(self.v)}"


Matching = FrozenSet[Edge]


def is_adjacent(shape: CubeShape, a: Vertex, b: Vertex) -> bool:
    """a, b 恰在一个位置上相差 ±1 (mod k)"""
    diff = 0
    for x, y in zip(a, b):
        if x != y:
            diff += 1
            if diff > 1 or (x - y) % shape.k not in (1, shape.k - 1):
                return False
    return diff == 1


def make_edge(shape: CubeShape, a: Sequence[int], b: Sequence[int]) -> Edge:
    """校验后构造边

    Raises:
        InputError: 顶点不合法或两者不相邻
    """
    a = shape.validate_vertex(a)
    b = shape.validate_vertex(b)
    if not is_adjacent(shape, a, b):
        raise InputError(f"not an edge: {format_vertex(a)}-{format_vertex(b)}")
    return Edge.of(a, b)


def neighbors(shape: CubeShape, v: Sequence[int]) -> FrozenSet[Vertex]:
    """v 的全部邻点，k >= 3 时恰有 2n 个"""
    v = shape.validate_vertex(v)
    result = set()
    for i in range(shape.n):
        for step in (1, -1):
            w = list(v)
            w[i] = (w[i] + step) % shape.k
            result.add(tuple(w))
    return frozenset(result)


def parity(shape: CubeShape, v: Sequence[int]) -> int:
    """坐标和 mod 2；只有 k 为偶数时才是二部划分"""
    return sum(shape.validate_vertex(v)) % 2


def lee_distance(shape: CubeShape, a: Vertex, b: Vertex) -> int:
    """Q_n^k 中的距离 d_Q(a, b)"""
    k = shape.k
    return sum(min((x - y) % k, (y - x) % k) for x, y in zip(a, b))


def distance_to_edge(shape: CubeShape, w: Vertex, e: Edge) -> int:
    """d_Q(w, uv) = min{d_Q(w, u), d_Q(w, v)}"""
    return min(lee_distance(shape, w, e.u), lee_distance(shape, w, e.v))


def pack(shape: CubeShape, v: Vertex) -> int:
    """顶点压缩为单个整数（字典序编号）"""
    index = 0
    for c in v:
        index = index * shape.k + c
    return index


def vertex_set(edges: Iterable[Edge]) -> FrozenSet[Vertex]:
    return frozenset(w for e in edges for w in e)


@dataclass(frozen=True)
class CubeRegion:
    """固定若干坐标得到的子立方体

    fixed 为 (0 起始位置, 取值) 的有序元组；不固定任何坐标时即整个 Q_n^k。
    """
    shape: CubeShape
    fixed: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        fixed = tuple(sorted(self.fixed))
        positions = [pos for pos, _ in fixed]
        if len(set(positions)) != len(positions):
            raise InputError("a coordinate is fixed twice")
        for pos, value in fixed:
            if not 0 <= pos < self.shape.n or not 0 <= value < self.shape.k:
                raise InputError(f"bad fixed coordinate ({pos}, {value})")
        object.__setattr__(self, "fixed", fixed)

    @property
    def free_positions(self) -> Tuple[int, ...]:
        pinned = {pos for pos, _ in self.fixed}
        return tuple(i for i in range(self.shape.n) if i not in pinned)

    @property
    def dim(self) -> int:
        return self.shape.n - len(self.fixed)

    n = dim

    @property
    def size(self) -> int:
        return self.shape.k ** self.dim

    def __contains__(self, v: Vertex) -> bool:
        return all(v[pos] == value for pos, value in self.fixed)

    def vertices(self) -> Iterator[Vertex]:
        """按字典序枚举区域内顶点"""
        free = self.free_positions
        base = [0] * self.shape.n
        for pos, value in self.fixed:
            base[pos] = value
        for digits in product(range(self.shape.k), repeat=len(free)):
            for pos, c in zip(free, digits):
                base[pos] = c
            yield tuple(base)

    def neighbors(self, v: Vertex) -> List[Vertex]:
        k = self.shape.k
        result = []
        for pos in self.free_positions:
            for step in (1, -1):
                w = list(v)
                w[pos] = (w[pos] + step) % k
                result.append(tuple(w))
        return sorted(result)

    def is_edge(self, a: Vertex, b: Vertex) -> bool:
        return a in self and b in self and is_adjacent(self.shape, a, b)

    def edges(self) -> Iterator[Edge]:
        for v in self.vertices():
            for w in self.neighbors(v):
                if v < w:
                    yield Edge(v, w)

    def fix(self, pos: int, value: int) -> "CubeRegion":
        return CubeRegion(self.shape, self.fixed + ((pos, value % self.shape.k),))

    def split(self, d: int, rotation: int = 0, reflect: bool = False) -> "SplitContext":
        return SplitContext(self, d, rotation, reflect)

    def describe(self) -> str:
        if not self.fixed:
            return str(self.shape)
        pinned = dict(self.fixed)
        digits = [str(pinned[i]) if i in pinned else "*" for i in range(self.shape.n)]
        return f"{self.shape}[{','.join(digits)}]"


@dataclass(frozen=True)
class SplitContext:
    """沿维度 d 把立方体区域划分为 k 个子立方体 Q[0..k-1]

    标号 i 对应实际坐标 (rotation ± i) mod k，reflect 为真时取负号。
    这样“由对称性不妨设”只需改变 rotation/reflect，区间始终以 0 <= p <= q <= k-1 呈现。
    """
    cube: CubeRegion
    d: int
    rotation: int = 0
    reflect: bool = False

    def __post_init__(self):
        if not 1 <= self.d <= self.cube.shape.n:
            raise InputError(f"dimension {self.d} out of range [1, {self.cube.shape.n}]")
        if self.d - 1 not in self.cube.free_positions:
            raise InputError(f"dimension {self.d} is fixed in {self.cube.describe()}")
        object.__setattr__(self, "rotation", self.rotation % self.cube.shape.k)

    @property
    def shape(self) -> CubeShape:
        return self.cube.shape

    @property
    def k(self) -> int:
        return self.cube.shape.k

    @property
    def n(self) -> int:
        return self.cube.dim

    @property
    def pos(self) -> int:
        return self.d - 1

    def coord(self, label: int) -> int:
        return (self.rotation + (-label if self.reflect else label)) % self.k

    def label(self, v: Vertex) -> int:
        offset = v[self.pos] - self.rotation
        return (-offset if self.reflect else offset) % self.k

    def at(self, v: Vertex, j: int) -> Vertex:
        """投影 u_j：把 v 的第 d 个坐标换成标号 j 对应的值"""
        w = list(v)
        w[self.pos] = self.coord(j)
        return tuple(w)

    def rebased(self, anchor: int, flip: bool = False) -> "SplitContext":
        """以旧标号 anchor 为新的 0，flip 时反转方向"""
        return SplitContext(self.cube, self.d, self.coord(anchor), self.reflect ^ flip)

    def subcube(self, i: int) -> "RangeView":
        return RangeView(self, i, i)

    def range(self, p: int, q: int) -> "RangeView":
        return RangeView(self, p, q)

    def cube_of(self, i: int) -> CubeRegion:
        return self.cube.fix(self.pos, self.coord(i))

    def part(self, edges: Iterable[Edge], i: int) -> FrozenSet[Edge]:
        """M_i：两端都在 Q[i] 的边"""
        return frozenset(e for e in edges
                         if e.u in self.cube and self.label(e.u) == i and self.label(e.v) == i)

    def inner(self, edges: Iterable[Edge], p: int, q: int) -> FrozenSet[Edge]:
        """M[p,q] = M ∩ E(Q[p,q])"""
        view = self.range(p, q)
        return frozenset(e for e in edges if view.is_edge(e.u, e.v))

    def cross(self, edges: Iterable[Edge], i: int) -> FrozenSet[Edge]:
        """M ∩ E_d(i, i+1)，标号按 mod k 取"""
        j = (i + 1) % self.k
        i %= self.k
        return frozenset(e for e in edges
                         if e.u in self.cube and e.dim == self.d
                         and {self.label(e.u), self.label(e.v)} == {i, j})

    def d_edges(self, edges: Iterable[Edge]) -> FrozenSet[Edge]:
        return frozenset(e for e in edges if e.u in self.cube and e.dim == self.d)

    def crossing_edges(self, i: int) -> Iterator[Edge]:
        """E_d(i, i+1) 的全部边"""
        for v in self.cube_of(i).vertices():
            yield Edge.of(v, self.at(v, i + 1))

    def transform(self) -> "Transform":
        """把实际坐标映射为标号坐标的自同构"""
        n, k = self.shape.n, self.k
        offsets = [0] * n
        flips = [False] * n
        if self.reflect:
            flips[self.pos] = True
            offsets[self.pos] = self.rotation % k
        else:
            offsets[self.pos] = (-self.rotation) % k
        return Transform(self.shape, tuple(range(n)), tuple(offsets), tuple(flips))

    def describe(self) -> str:
        text = f"d={self.d}"
        if self.rotation:
            text += f",rot={self.rotation}"
        if self.reflect:
            text += ",refl"
        return text


@dataclass(frozen=True)
class RangeView:
    """区间 Q[p,q]：子立方体 Q[p..q] 加上相邻标号之间的 d-边（不含回绕边）"""
    ctx: SplitContext
    p: int
    q: int

    def __post_init__(self):
        if not 0 <= self.p <= self.q <= self.ctx.k - 1:
            raise InputError(f"range [{self.p},{self.q}] not normalized for k={self.ctx.k}")

    @property
    def shape(self) -> CubeShape:
        return self.ctx.shape

    @property
    def n(self) -> int:
        return self.ctx.n

    @property
    def cube(self) -> CubeRegion:
        return self.ctx.cube

    @property
    def size(self) -> int:
        return (self.q - self.p + 1) * self.ctx.k ** (self.ctx.n - 1)

    @property
    def is_single(self) -> bool:
        return self.p == self.q

    def labels(self) -> range:
        return range(self.p, self.q + 1)

    def __contains__(self, v: Vertex) -> bool:
        return v in self.ctx.cube and self.p <= self.ctx.label(v) <= self.q

    def vertices(self) -> Iterator[Vertex]:
        found = []
        for i in self.labels():
            found.extend(self.ctx.cube_of(i).vertices())
        return iter(sorted(found))

    def neighbors(self, v: Vertex) -> List[Vertex]:
        ctx = self.ctx
        here = ctx.label(v)
        result = []
        for w in ctx.cube.neighbors(v):
            if w[ctx.pos] == v[ctx.pos]:
                if w in self:
                    result.append(w)
            elif abs(ctx.label(w) - here) == 1 and w in self:
                result.append(w)
        return result

    def is_edge(self, a: Vertex, b: Vertex) -> bool:
        if a not in self or b not in self or not is_adjacent(self.shape, a, b):
            return False
        if a[self.ctx.pos] == b[self.ctx.pos]:
            return True
        return abs(self.ctx.label(a) - self.ctx.label(b)) == 1

    def edges(self) -> Iterator[Edge]:
        for v in self.vertices():
            for w in self.neighbors(v):
                if v < w:
                    yield Edge(v, w)

    def subcube(self, i: int) -> "RangeView":
        if not self.p <= i <= self.q:
            raise InputError(f"label {i} outside [{self.p},{self.q}]")
        return self.ctx.subcube(i)

    def as_cube(self) -> CubeRegion:
        if not self.is_single:
            raise InputError("only a single-subcube range is a cube")
        return self.ctx.cube_of(self.p)

    def describe(self) -> str:
        return f"{self.ctx.cube.describe()}[{self.p},{self.q}]@{self.ctx.describe()}"


def whole(shape: CubeShape) -> CubeRegion:
    return CubeRegion(shape)


def split(shape: CubeShape, d: int) -> SplitContext:
    """沿维度 d（1 起始）划分整个 Q_n^k"""
    if not 1 <= d <= shape.n:
        raise InputError(f"dimension {d} out of range [1, {shape.n}]")
    return SplitContext(CubeRegion(shape), d)


def restrict_matching(M: Iterable[Edge], view: RangeView) -> Tuple[FrozenSet[Edge], Dict[int, FrozenSet[Edge]]]:
    """返回 (M[p,q], {i: M ∩ E_d(i,i+1)})"""
    M = frozenset(M)
    ctx = view.ctx
    crossing = {i: ctx.cross(M, i) for i in range(ctx.k)}
    return ctx.inner(M, view.p, view.q), crossing


def select_split_dimension(region, M: Iterable[Edge], cap: int,
                           avoid: Iterable[Edge] = (),
                           admissible: Optional[Callable[[int], bool]] = None) -> int:
    """选择划分维度

    在 avoid 中的边都不是 d-边、|M ∩ E_d| <= cap 的维度中，取计数最小者，平局取最小 d。

    Args:
        region: CubeShape 或 CubeRegion
        M: 匹配
        cap: |M ∩ E_d| 上限
        avoid: 不能落在 E_d 中的边
        admissible: 调用方附加的过滤条件

    Raises:
        NoDimensionError: 没有可用维度
    """
    cube = region if isinstance(region, CubeRegion) else CubeRegion(region)
    M = [e for e in M if e.u in cube]
    avoid_dims = {e.dim for e in avoid}
    best = None
    for pos in cube.free_positions:
        d = pos + 1
        if d in avoid_dims:
            continue
        count = sum(1 for e in M if e.dim == d)
        if count > cap:
            continue
        if admissible is not None and not admissible(d):
            continue
        if best is None or count < best[0]:
            best = (count, d)
    if best is None:
        raise NoDimensionError(f"cap={cap}, |M|={len(M)} in {cube.describe()}")
    logger.debug("选择划分维度 d=%d (|M∩E_d|=%d)", best[1], best[0])
    return best[1]


@dataclass(frozen=True)
class Transform:
    """Q_n^k 的自同构：输出位置 i 取输入位置 perm[i]，按需取反后加偏移"""
    shape: CubeShape
    perm: Tuple[int, ...]
    offsets: Tuple[int, ...]
    flips: Tuple[bool, ...]

    def __post_init__(self):
        n = self.shape.n
        if sorted(self.perm) != list(range(n)) or len(self.offsets) != n or len(self.flips) != n:
            raise InputError("malformed transform")
        object.__setattr__(self, "offsets", tuple(o % self.shape.k for o in self.offsets))

    @classmethod
    def identity(cls, shape: CubeShape) -> "Transform":
        n = shape.n
        return cls(shape, tuple(range(n)), (0,) * n, (False,) * n)

    @classmethod
    def rotation(cls, shape: CubeShape, d: int, amount: int) -> "Transform":
        offsets = [0] * shape.n
        offsets[d - 1] = amount
        return cls(shape, tuple(range(shape.n)), tuple(offsets), (False,) * shape.n)

    @classmethod
    def reflection(cls, shape: CubeShape, d: int) -> "Transform":
        flips = [False] * shape.n
        flips[d - 1] = True
        return cls(shape, tuple(range(shape.n)), (0,) * shape.n, tuple(flips))

    @classmethod
    def swap(cls, shape: CubeShape, a: int, b: int) -> "Transform":
        perm = list(range(shape.n))
        perm[a - 1], perm[b - 1] = perm[b - 1], perm[a - 1]
        return cls(shape, tuple(perm), (0,) * shape.n, (False,) * shape.n)

    def vertex(self, v: Vertex) -> Vertex:
        k = self.shape.k
        return tuple(((-v[src] if flip else v[src]) + off) % k
                     for src, off, flip in zip(self.perm, self.offsets, self.flips))

    def inverse(self) -> "Transform":
        n, k = self.shape.n, self.shape.k
        inv = [0] * n
        for i, src in enumerate(self.perm):
            inv[src] = i
        flips = tuple(self.flips[inv[j]] for j in range(n))
        offsets = tuple((self.offsets[inv[j]] if flips[j] else -self.offsets[inv[j]]) % k
                        for j in range(n))
        return Transform(self.shape, tuple(inv), offsets, flips)

    def compose(self, other: "Transform") -> "Transform":
        """self ∘ other：先作用 other 再作用 self"""
        k = self.shape.k
        perm, offsets, flips = [], [], []
        for j, src in enumerate(self.perm):
            perm.append(other.perm[src])
            flips.append(self.flips[j] ^ other.flips[src])
            inner = -other.offsets[src] if self.flips[j] else other.offsets[src]
            offsets.append((inner + self.offsets[j]) % k)
        return Transform(self.shape, tuple(perm), tuple(offsets), tuple(flips))

    def describe(self) -> str:
        parts = []
        if list(self.perm) != list(range(self.shape.n)):
            parts.append("perm=" + "".join(str(p + 1) for p in self.perm))
        for i, (off, flip) in enumerate(zip(self.offsets, self.flips)):
            if flip:
                parts.append(f"refl{i + 1}")
            if off:
                parts.append(f"rot{i + 1}+{off}")
        return ",".join(parts) or "id"


def apply_transform(t: Transform, x):
    """对顶点、边、匹配、区域、路径系统、圈证书或约束规格作用自同构"""
    return _transform(x, t)


@singledispatch
def _transform(x, t: Transform):
    raise InputError(f"cannot transform {type(x).__name__}")


@_transform.register
def _(x: tuple, t: Transform):
    if isinstance(x, Edge):
        return Edge.of(t.vertex(x.u), t.vertex(x.v))
    return t.vertex(x)


@_transform.register
def _(x: frozenset, t: Transform):
    return frozenset(_transform(item, t) for item in x)


@_transform.register
def _(x: CubeRegion, t: Transform):
    fixed = []
    pinned = dict(x.fixed)
    for i, src in enumerate(t.perm):
        if src in pinned:
            value = -pinned[src] if t.flips[i] else pinned[src]
            fixed.append((i, (value + t.offsets[i]) % t.shape.k))
    return CubeRegion(x.shape, tuple(fixed))


@_transform.register
def _(x: SplitContext, t: Transform):
    target = t.perm.index(x.pos)
    flip = t.flips[target]
    rotation = ((-x.rotation if flip else x.rotation) + t.offsets[target]) % t.shape.k
    return SplitContext(_transform(x.cube, t), target + 1, rotation, x.reflect ^ flip)


@_transform.register
def _(x: RangeView, t: Transform):
    return RangeView(_transform(x.ctx, t), x.p, x.q)


@_transform.register
def _(x: PathSystem, t: Transform):
    region = _transform(x.region, t) if x.region is not None else None
    return PathSystem(tuple(tuple(t.vertex(v) for v in path) for path in x.paths), region)


@_transform.register
def _(x: HamCycleCertificate, t: Transform):
    return HamCycleCertificate(x.shape, tuple(t.vertex(v) for v in x.order))


@_transform.register
def _(x: ConstraintSpec, t: Transform):
    return ConstraintSpec(
        region=_transform(x.region, t),
        required=frozenset(_transform(e, t) for e in x.required),
        endpoint_pairs=tuple((t.vertex(a), t.vertex(b)) for a, b in x.endpoint_pairs),
        forbidden=frozenset(t.vertex(v) for v in x.forbidden),
    )


def gray_cycle(region: CubeRegion) -> Tuple[Vertex, ...]:
    """模 k Gray 码给出的哈密顿圈

    相邻码字恰有一位加 1 (mod k)，末码字 (k-1,0,...,0) 回到全零，因此首尾也相邻。
    一维时退化为环 0,1,...,k-1。
    """
    k = region.shape.k
    free = region.free_positions
    m = len(free)
    if m == 0:
        raise InputError("a point region has no Hamiltonian cycle")
    digits = np.indices((k,) * m).reshape(m, -1).T
    codes = digits.copy()
    codes[:, 1:] = (digits[:, 1:] - digits[:, :-1]) % k
    base = np.zeros((len(codes), region.shape.n), dtype=np.int64)
    for pos, value in region.fixed:
        base[:, pos] = value
    base[:, list(free)] = codes
    return tuple(tuple(int(c) for c in row) for row in base)


def region_graph(region) -> nx.Graph:
    """区域的 networkx 图表示，供交叉校验使用"""
    graph = nx.Graph()
    graph.add_nodes_from(region.vertices())
    graph.add_edges_from(region.edges())
    return graph


def is_linear_forest(edges: Iterable[Edge]) -> bool:
    """每个连通分支都是路径"""
    graph = nx.Graph()
    graph.add_edges_from(edges)
    if graph.number_of_edges() == 0:
        return True
    return max(dict(graph.degree()).values()) <= 2 and nx.is_forest(graph)
