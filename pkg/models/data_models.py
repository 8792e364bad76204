#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
数据模型定义

该模块定义了应用程序中使用的所有数据模型，包括：
1. 立方体形状与顶点
2. 路径系统与哈密顿圈证书
3. 校验报告
4. 约束规格与搜索预算/结果
5. 原语种类与附加条件
6. 构造轨迹
"""

# 导入必要的类型和工具
import hashlib
from dataclasses import dataclass, field
from enum import Enum, Flag, auto
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Tuple

from core.exceptions import InputError

Vertex = Tuple[int, ...]
Pair = Tuple[Vertex, Vertex]


def format_vertex(v: Vertex) -> str:
    """顶点的紧凑文本形式，如 (0,1,3)"""
    return "(" + ",".join(str(c) for c in v) + ")"


@dataclass(frozen=True)
class CubeShape:
    """k 元 n 立方体 Q_n^k 的形状

    只接受 n >= 1 且 k >= 3，k = 2 的超立方体不在处理范围内。
    """
    n: int                      # 维数
    k: int                      # 基数

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise InputError(f"n must be an integer >= 1, got {self.n!r}")
        if not isinstance(self.k, int) or self.k < 3:
            raise InputError(f"k must be an integer >= 3, got {self.k!r}")

    @property
    def vertex_count(self) -> int:
        return self.k ** self.n

    @property
    def edge_count(self) -> int:
        return self.n * self.k ** self.n

    @property
    def is_bipartite(self) -> bool:
        return self.k % 2 == 0

    def validate_vertex(self, v: Any) -> Vertex:
        """校验并规范化顶点

        Args:
            v: 任意整数序列

        Returns:
            Vertex: 元组形式的顶点

        Raises:
            InputError: 长度或数位不合法
        """
        try:
            coords = tuple(v)
        except TypeError as exc:
            raise InputError(f"vertex {v!r} is not a sequence") from exc
        if len(coords) != self.n:
            raise InputError(f"vertex {v!r} has length {len(coords)}, expected {self.n}")
        for c in coords:
            if isinstance(c, bool) or not isinstance(c, int) or not 0 <= c < self.k:
                raise InputError(f"vertex {v!r} has digit {c!r} outside [0, {self.k - 1}]")
        return coords

    def __str__(self) -> str:
        return f"Q_{self.n}^{self.k}"


@dataclass(frozen=True)
class PathSystem:
    """生成 m-路径：m 条两两不交的路径，覆盖区域的全部顶点"""
    paths: Tuple[Tuple[Vertex, ...], ...]   # 每条路径的顶点序列
    region: Optional[Any] = None            # 所属区域（整体立方体或区间视图）

    @property
    def m(self) -> int:
        return len(self.paths)

    def endpoints(self) -> List[Pair]:
        return [(path[0], path[-1]) for path in self.paths]

    def vertices(self) -> Iterator[Vertex]:
        for path in self.paths:
            yield from path

    def edges(self) -> Iterator[Pair]:
        for path in self.paths:
            for a, b in zip(path, path[1:]):
                yield a, b

    def digest(self) -> str:
        text = "|".join(";".join(format_vertex(v) for v in path) for path in self.paths)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class HamCycleCertificate:
    """哈密顿圈证书：循环顶点序列"""
    shape: CubeShape                        # 所属立方体
    order: Tuple[Vertex, ...]               # 循环顺序，末尾隐式连回首个顶点

    def edges(self) -> Iterator[Pair]:
        order = self.order
        for i, a in enumerate(order):
            yield a, order[(i + 1) % len(order)]

    def digest(self) -> str:
        text = ";".join(format_vertex(v) for v in self.order)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class VerifyReport:
    """校验报告，只记录第一个违规"""
    ok: bool
    first_violation: Optional[str] = None

    @classmethod
    def passed(cls) -> "VerifyReport":
        return cls(True)

    @classmethod
    def failed(cls, violation: str) -> "VerifyReport":
        return cls(False, violation)

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class ConstraintSpec:
    """约束规格：构造、provider 与预言机之间的通用描述

    endpoint_pairs 为空表示求哈密顿圈。
    """
    region: Any                                         # 立方体区域或区间视图
    required: FrozenSet[Any] = frozenset()              # 必经边（匹配或线性森林）
    endpoint_pairs: Tuple[Pair, ...] = ()               # 端点对
    forbidden: FrozenSet[Vertex] = frozenset()          # 禁用顶点

    @property
    def is_cycle(self) -> bool:
        return not self.endpoint_pairs

    @property
    def shape(self) -> CubeShape:
        return self.region.shape

    @property
    def vertex_count(self) -> int:
        return self.region.size - sum(1 for v in self.forbidden if v in self.region)

    def describe(self) -> str:
        what = "cycle" if self.is_cycle else f"{len(self.endpoint_pairs)}-path"
        extra = f" minus {len(self.forbidden)}" if self.forbidden else ""
        return f"{what} on {self.region.describe()}{extra}, |required|={len(self.required)}"


@dataclass(frozen=True)
class SearchBudget:
    """搜索预算"""
    max_nodes: int = 50_000_000     # 回溯节点上限
    seed: int = 0                   # 0 表示完全规范的确定性顺序

    def __post_init__(self):
        if self.max_nodes < 1:
            raise InputError("max_nodes must be >= 1")


@dataclass(frozen=True)
class SearchOptions:
    """剪枝开关，关闭任一规则都不改变可满足性结论"""
    degree_cut: bool = True
    articulation_cut: bool = True
    chain_closure: bool = True
    stride_divisor: int = 256


class SearchStatus(Enum):
    FOUND = "found"
    EXHAUSTED = "exhausted"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class SearchResult:
    """搜索结果"""
    status: SearchStatus
    solution: Optional[Any] = None      # PathSystem 或 HamCycleCertificate
    nodes: int = 0                      # 已展开的节点数

    @property
    def found(self) -> bool:
        return self.status is SearchStatus.FOUND


class PrimitiveKind(Enum):
    """引用结果的十种契约"""
    HAM_PATH_MINUS_VERTICES = "HamPathMinusVertices"
    HAM_PATH_EVEN_PARITY = "HamPathEvenParity"
    HAM_PATH_MINUS_ONE = "HamPathMinusOne"
    HAM_PATH_THROUGH_EDGE = "HamPathThroughEdge"
    TWO_PATH_THROUGH_MATCHING = "TwoPathThroughMatching"
    RANGE_PATH = "RangePath"
    RANGE_PATH_THROUGH_MATCHING = "RangePathThroughMatching"
    RANGE_TWO_PATH = "RangeTwoPath"
    HAM_CYCLE_THROUGH_FOREST = "HamCycleThroughForest"
    HAM_CYCLE_THROUGH_MATCHING = "HamCycleThroughMatching"


class SideCondition(Flag):
    """调用方可以额外要求的结构性保证"""
    NONE = 0
    LAST_TRACE_PATH = auto()            # 在 Q[q] 上的迹是一条生成路径
    LAST_TRACE_PATH_OR_2PATH = auto()   # 在 Q[q] 上的迹是生成路径或 2-路径
    FIRST_TRACE_2PATH = auto()          # 在 Q[p] 上的迹是生成 2-路径


class FallbackPolicy(Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


@dataclass
class TraceStep:
    """构造轨迹中的一步"""
    label: str                                               # 如 "L15/Case 1/Subcase 1.2"
    transform: Optional[str] = None                          # 对称归一化所用变换
    choices: List[Tuple[str, str]] = field(default_factory=list)
    children: List["TraceStep"] = field(default_factory=list)
    fallback: Optional[str] = None                           # relaxed 策略下回退的原因
    provider: Optional[str] = None                           # 原语调用：种类、区域与种子

    def note(self, name: str, value: Any) -> None:
        if isinstance(value, tuple) and value and isinstance(value[0], int):
            value = format_vertex(value)
        elif isinstance(value, tuple) and value and isinstance(value[0], tuple):
            value = "-".join(format_vertex(v) for v in value)
        self.choices.append((name, str(value)))

    def serialize_lines(self, depth: int = 0) -> List[str]:
        pad = "  " * depth
        if self.provider:
            return [f"{pad}provider {self.provider}"]
        head = f"{pad}step {self.label}"
        if self.transform:
            head += f" transform={self.transform}"
        lines = [head]
        for name, value in self.choices:
            lines.append(f"{pad}  choice {name}={value}")
        if self.fallback:
            lines.append(f"{pad}  fallback {self.fallback}")
        for child in self.children:
            lines.extend(child.serialize_lines(depth + 1))
        return lines

    def walk(self) -> Iterator["TraceStep"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class ConstructionTrace:
    """构造轨迹：步骤树 + 可重放的调用记录"""
    op: str                                      # 顶层操作名
    arguments: Dict[str, Any]                    # 顶层调用参数
    root: TraceStep
    digest: Optional[str] = None                 # 证书摘要

    def serialize(self) -> str:
        lines = [f"trace {self.op}"]
        if self.digest:
            lines.append(f"digest {self.digest}")
        lines.extend(self.root.serialize_lines(0))
        return "\n".join(lines) + "\n"

    def used_fallback(self) -> bool:
        return any(step.fallback for step in self.root.walk())
