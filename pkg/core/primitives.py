#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
先验原语：十条被引用结论的契约与默认 provider

每种原语对应一条引用结果，validate_precondition 逐条转写其假设，
失败时报告违反的子句名。默认 provider 以约束搜索实现这些契约：
定理保证解存在，因此搜索判定无解只可能是实现或转写错误。
"""

import logging
from abc import ABC, abstractmethod
from typing import Iterable, Optional, Tuple

from config.settings import Config
from core.certify import certify_solution, check_linear_forest, check_matching, check_side_condition
from core.cube import CubeRegion, Edge, RangeView, gray_cycle, parity, vertex_set
from core.exceptions import (
    BudgetExceededError,
    CapabilityRefused,
    ConsistencyAlarm,
    PreconditionViolation,
    SideConditionUnmet,
)
from core.search_engine import search
from models.data_models import (
    ConstraintSpec,
    HamCycleCertificate,
    PrimitiveKind,
    SearchBudget,
    SearchOptions,
    SearchStatus,
    SideCondition,
    VerifyReport,
)

logger = logging.getLogger(__name__)

CUBE_KINDS = frozenset({
    PrimitiveKind.HAM_PATH_MINUS_VERTICES,
    PrimitiveKind.HAM_PATH_EVEN_PARITY,
    PrimitiveKind.HAM_PATH_MINUS_ONE,
    PrimitiveKind.HAM_PATH_THROUGH_EDGE,
    PrimitiveKind.TWO_PATH_THROUGH_MATCHING,
    PrimitiveKind.HAM_CYCLE_THROUGH_FOREST,
    PrimitiveKind.HAM_CYCLE_THROUGH_MATCHING,
})

RANGE_KINDS = frozenset({
    PrimitiveKind.RANGE_PATH,
    PrimitiveKind.RANGE_PATH_THROUGH_MATCHING,
    PrimitiveKind.RANGE_TWO_PATH,
})

# 各原语要求的最小维数
MIN_N = {
    PrimitiveKind.HAM_PATH_MINUS_VERTICES: 2,
    PrimitiveKind.HAM_PATH_EVEN_PARITY: 2,
    PrimitiveKind.HAM_PATH_MINUS_ONE: 3,
    PrimitiveKind.HAM_PATH_THROUGH_EDGE: 3,
    PrimitiveKind.TWO_PATH_THROUGH_MATCHING: 3,
    PrimitiveKind.RANGE_PATH: 3,
    PrimitiveKind.RANGE_PATH_THROUGH_MATCHING: 3,
    PrimitiveKind.RANGE_TWO_PATH: 4,
    PrimitiveKind.HAM_CYCLE_THROUGH_FOREST: 2,
    PrimitiveKind.HAM_CYCLE_THROUGH_MATCHING: 2,
}

# 端点对个数，None 表示求圈
PAIR_COUNT = {
    PrimitiveKind.HAM_PATH_MINUS_VERTICES: 1,
    PrimitiveKind.HAM_PATH_EVEN_PARITY: 1,
    PrimitiveKind.HAM_PATH_MINUS_ONE: 1,
    PrimitiveKind.HAM_PATH_THROUGH_EDGE: 1,
    PrimitiveKind.TWO_PATH_THROUGH_MATCHING: 2,
    PrimitiveKind.RANGE_PATH: 1,
    PrimitiveKind.RANGE_PATH_THROUGH_MATCHING: 1,
    PrimitiveKind.RANGE_TWO_PATH: 2,
    PrimitiveKind.HAM_CYCLE_THROUGH_FOREST: None,
    PrimitiveKind.HAM_CYCLE_THROUGH_MATCHING: None,
}


def as_cube(region) -> Optional[CubeRegion]:
    """单个子立方体的区间视图也按立方体处理"""
    if isinstance(region, CubeRegion):
        return region
    if isinstance(region, RangeView) and region.is_single:
        return region.as_cube()
    return None


def region_dim(kind: PrimitiveKind, region) -> int:
    """立方体类原语取区域自身维数，区间类原语取所在立方体的维数"""
    if kind in RANGE_KINDS:
        return region.n
    return as_cube(region).dim


def _split_parity(shape, a, b) -> bool:
    return not shape.is_bipartite or parity(shape, a) != parity(shape, b)


def _fail(clause: str) -> VerifyReport:
    return VerifyReport.failed(clause)


def _two_path_orientation(pairs, M) -> Optional[Tuple]:
    """两条边 uu'、vv' 的某个定向满足 {u,v}∩V(M)=∅ 且 u'v' ∉ M"""
    covered = vertex_set(M)
    (a, a2), (b, b2) = pairs
    for u, u2 in ((a, a2), (a2, a)):
        for v, v2 in ((b, b2), (b2, b)):
            if u in covered or v in covered:
                continue
            if Edge.of(u2, v2) in M:
                continue
            return (u, u2), (v, v2)
    return None


def validate_precondition(kind: PrimitiveKind, spec: ConstraintSpec) -> VerifyReport:
    """逐条检查引用结论的假设

    Args:
        kind: 原语种类
        spec: 约束规格；required 为 M 或 F，forbidden 为 U

    Returns:
        VerifyReport: 失败时 first_violation 为子句名
    """
    region = spec.region
    shape = spec.shape
    even = shape.is_bipartite

    if kind in CUBE_KINDS and as_cube(region) is None:
        return _fail("region must be a cube")
    if kind in RANGE_KINDS and not isinstance(region, RangeView):
        return _fail("region must be a range")
    n = region_dim(kind, region)
    if n < MIN_N[kind]:
        return _fail(f"n >= {MIN_N[kind]}")

    pairs = spec.endpoint_pairs
    want = PAIR_COUNT[kind]
    if want is None and pairs:
        return _fail("cycle takes no endpoints")
    if want is not None and len(pairs) != want:
        return _fail(f"{want} endpoint pair(s)")
    ends = [w for pair in pairs for w in pair]
    if len(set(ends)) != len(ends):
        return _fail("endpoints distinct")
    for w in ends:
        if w not in region:
            return _fail("endpoint outside region")
    for a, b in spec.required:
        if not region.is_edge(a, b):
            return _fail("edge outside region")

    allows_forbidden = kind in (PrimitiveKind.HAM_PATH_MINUS_VERTICES, PrimitiveKind.HAM_PATH_MINUS_ONE)
    if spec.forbidden and not allows_forbidden:
        return _fail("no deleted vertices")

    if kind is PrimitiveKind.HAM_CYCLE_THROUGH_FOREST:
        if not check_linear_forest(shape, spec.required):
            return _fail("linear forest")
        if len(spec.required) > 2 * n - 1:
            return _fail("forest too large")
        return VerifyReport.passed()

    M = frozenset(spec.required)
    if not check_matching(shape, M):
        return _fail("matching")

    if kind is PrimitiveKind.HAM_CYCLE_THROUGH_MATCHING:
        if len(M) > max(0, 3 * n - 8):
            return _fail("matching too large")
        return VerifyReport.passed()

    if kind is PrimitiveKind.HAM_PATH_MINUS_VERTICES:
        if even:
            return _fail("k odd")
        if M:
            return _fail("no required edges")
        if len(spec.forbidden) > 2 * n - 3:
            return _fail("|U| <= 2n-3")
        x, y = pairs[0]
        if x in spec.forbidden or y in spec.forbidden:
            return _fail("x,y not in U")
        return VerifyReport.passed()

    if kind is PrimitiveKind.HAM_PATH_EVEN_PARITY:
        if not even:
            return _fail("k even")
        if M:
            return _fail("no required edges")
        if not _split_parity(shape, *pairs[0]):
            return _fail("parity")
        return VerifyReport.passed()

    if kind is PrimitiveKind.HAM_PATH_MINUS_ONE:
        if not even:
            return _fail("k even")
        if M:
            return _fail("no required edges")
        if len(spec.forbidden) != 1:
            return _fail("exactly one deleted vertex")
        (u,) = tuple(spec.forbidden)
        x, y = pairs[0]
        if not parity(shape, u) != parity(shape, x) == parity(shape, y):
            return _fail("parity")
        return VerifyReport.passed()

    if kind is PrimitiveKind.HAM_PATH_THROUGH_EDGE:
        x, y = pairs[0]
        if not _split_parity(shape, x, y):
            return _fail("parity")
        if len(M) > 1:
            return _fail("at most one edge")
        if M and set(next(iter(M))) == {x, y}:
            return _fail("{u,v} != {x,y}")
        return VerifyReport.passed()

    if kind is PrimitiveKind.TWO_PATH_THROUGH_MATCHING:
        if len(M) > max(0, 2 * n - 7):
            return _fail("|M| <= max{0,2n-7}")
        for a, b in pairs:
            if not region.is_edge(a, b):
                return _fail("uu', vv' edges")
        if _two_path_orientation(pairs, M) is None:
            covered = vertex_set(M)
            if any(a in covered and b in covered for a, b in pairs):
                return _fail("{u,v} disjoint from V(M)")
            return _fail("u'v' not in M")
        return VerifyReport.passed()

    # 区间类
    view: RangeView = region
    ctx = view.ctx

    if kind is PrimitiveKind.RANGE_PATH:
        if M:
            return _fail("no required edges")
        if not _split_parity(shape, *pairs[0]):
            return _fail("parity")
        return VerifyReport.passed()

    if kind is PrimitiveKind.RANGE_PATH_THROUGH_MATCHING:
        x, y = pairs[0]
        for i in view.labels():
            if len(ctx.part(M, i)) > 2 * n - 4:
                return _fail("|M_i| <= 2n-4")
        for i in range(view.p, view.q):
            if len(ctx.cross(M, i)) > 1:
                return _fail("|M ∩ E_d(i,i+1)| <= 1")
        if not (ctx.label(x) == view.p and ctx.label(y) == view.p and view.is_edge(x, y)) \
                or Edge.of(x, y) in M:
            return _fail("xy in E(Q[p]) \\ M")
        return VerifyReport.passed()

    if kind is PrimitiveKind.RANGE_TWO_PATH:
        if M:
            return _fail("no required edges")
        (x, y), (u, v) = pairs
        if not (_split_parity(shape, x, y) and _split_parity(shape, u, v)):
            return _fail("parity")
        labels = [ctx.label(w) for w in (x, y, u, v)]
        all_first = all(lab == view.p for lab in labels)
        split_ends = labels[0] == labels[1] == view.p and labels[2] == labels[3] == view.q
        if not (all_first or split_ends):
            return _fail("endpoint placement")
        return VerifyReport.passed()

    return _fail(f"unknown kind {kind}")


def require_precondition(kind: PrimitiveKind, spec: ConstraintSpec) -> None:
    """validate_precondition 的抛异常版本

    Raises:
        PreconditionViolation: 子句名写在 clause 上
    """
    report = validate_precondition(kind, spec)
    if not report:
        raise PreconditionViolation(report.first_violation, f"{kind.value} on {spec.describe()}")


class PrimitiveProvider(ABC):
    """十条契约的实现者"""

    @abstractmethod
    def solve_spec(self, spec: ConstraintSpec, side: SideCondition = SideCondition.NONE,
                   budget: Optional[SearchBudget] = None):
        """直接求解约束规格，不检查任何引用结论的假设"""

    def solve(self, kind: PrimitiveKind, spec: ConstraintSpec, side: SideCondition = SideCondition.NONE,
              budget: Optional[SearchBudget] = None):
        """检查前提后求解

        Raises:
            PreconditionViolation: 前提不成立
        """
        require_precondition(kind, spec)
        if kind is PrimitiveKind.TWO_PATH_THROUGH_MATCHING:
            # 端点对内部无序，规范为满足假设的定向
            oriented = _two_path_orientation(spec.endpoint_pairs, frozenset(spec.required))
            spec = ConstraintSpec(spec.region, spec.required, oriented, spec.forbidden)
        return self.solve_spec(spec, side, budget)


class SearchProvider(PrimitiveProvider):
    """以约束搜索实现契约的默认 provider

    Args:
        capability: 可处理的最大区域顶点数
        attempt_nodes: 每次尝试的节点预算
        retries: 附加条件或预算失败时换种子的重试次数
        options: 搜索剪枝开关
        workers: 顶层分支并行数
    """

    def __init__(self, capability: int = Config.PROVIDER_CAPABILITY,
                 attempt_nodes: int = Config.PROVIDER_ATTEMPT_NODES,
                 retries: int = Config.SIDE_CONDITION_RETRIES,
                 options: Optional[SearchOptions] = None,
                 workers: int = Config.PARALLEL_WORKERS):
        self.capability = capability
        self.attempt_nodes = attempt_nodes
        self.retries = max(1, retries)
        self.options = options
        self.workers = workers
        self.calls = 0

    def _gray_shortcut(self, spec: ConstraintSpec):
        cube = as_cube(spec.region)
        if spec.is_cycle and cube is not None and not spec.required and not spec.forbidden and cube.dim >= 1:
            return HamCycleCertificate(spec.shape, gray_cycle(cube))
        return None

    def solve_spec(self, spec: ConstraintSpec, side: SideCondition = SideCondition.NONE,
                   budget: Optional[SearchBudget] = None):
        """多种子重试的搜索

        Raises:
            CapabilityRefused: 区域超过能力上限
            ConsistencyAlarm: 搜索完整地判定无解
            SideConditionUnmet: 有解但都不满足附加条件
            BudgetExceededError: 所有尝试都耗尽预算
        """
        self.calls += 1
        size = spec.region.size
        if size > self.capability:
            raise CapabilityRefused(spec.region.describe(), size, self.capability)
        budget = budget or SearchBudget(Config.SEARCH_BUDGET_NODES)
        shortcut = self._gray_shortcut(spec)
        if shortcut is not None and side == SideCondition.NONE:
            return shortcut
        per_attempt = min(budget.max_nodes, self.attempt_nodes)
        rejected = None
        for attempt in range(self.retries):
            seed = budget.seed + attempt
            result = search(spec, SearchBudget(per_attempt, seed), self.options, self.workers)
            if result.status is SearchStatus.EXHAUSTED:
                raise ConsistencyAlarm(f"no solution for {spec.describe()}")
            if result.status is SearchStatus.BUDGET_EXCEEDED:
                logger.debug("provider 第 %d 次尝试超出预算 (seed=%d)", attempt + 1, seed)
                continue
            report = certify_solution(result.solution, spec)
            if report and side != SideCondition.NONE:
                report = check_side_condition(result.solution, spec, side)
            if report:
                logger.debug("provider 求解 %s 成功 (seed=%d, 节点 %d)", spec.describe(), seed, result.nodes)
                return result.solution
            rejected = report.first_violation
            logger.debug("provider 结果被拒绝: %s (seed=%d)", rejected, seed)
        if rejected is not None:
            raise SideConditionUnmet(str(side.name), self.retries, rejected)
        raise BudgetExceededError(f"{spec.describe()}: {self.retries} attempts of {per_attempt} nodes")


_default_provider: Optional[PrimitiveProvider] = None


def default_provider() -> PrimitiveProvider:
    """进程内共享的默认 provider"""
    global _default_provider
    if _default_provider is None:
        _default_provider = SearchProvider()
    return _default_provider


def primitive_spec(region, pairs: Iterable = (), required: Iterable[Edge] = (),
                   forbidden: Iterable = ()) -> ConstraintSpec:
    """组装原语实例"""
    return ConstraintSpec(
        region=region,
        required=frozenset(Edge.of(*e) for e in required),
        endpoint_pairs=tuple((a, b) for a, b in pairs),
        forbidden=frozenset(forbidden),
    )


def solve_primitive(kind: PrimitiveKind, spec: ConstraintSpec, budget: Optional[SearchBudget] = None,
                    side: SideCondition = SideCondition.NONE,
                    provider: Optional[PrimitiveProvider] = None):
    """检查前提并通过 provider 求解一条引用结论

    Returns:
        PathSystem 或 HamCycleCertificate，已通过 certify 与附加条件复核
    """
    provider = provider or default_provider()
    solution = provider.solve(kind, spec, side, budget)
    logger.debug("原语 %s 完成: %s", kind.value, spec.describe())
    return solution

