#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
生成路径引理的递归构造

Constructor 是所有构造共用的上下文：
1. 原语调用经 provider 完成，并记录到轨迹
2. 每个子问题先检查前提，构造完成后独立复核
3. relaxed 策略下，子问题构造失败时整体交给 provider；strict 策略直接抛出

“由对称性不妨设”通过 SplitContext.rebased 换锚点/翻转方向实现，
“choose … such that”通过 assembly.first 按规范顺序扫描实现。
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from config.settings import Config
from core.assembly import Assembly, Route, first, route_edges, route_of
from core.certify import certify_solution, check_matching, check_side_condition
from core.cube import (
    CubeRegion,
    Edge,
    RangeView,
    SplitContext,
    lee_distance,
    make_edge,
    parity,
    select_split_dimension,
    split,
    vertex_set,
)
from core.exceptions import (
    AssemblyError,
    ChoiceExhausted,
    InputError,
    NotApplicableError,
    PreconditionViolation,
)
from core.primitives import PrimitiveProvider, default_provider, primitive_spec
from models.data_models import (
    ConstraintSpec,
    ConstructionTrace,
    CubeShape,
    FallbackPolicy,
    PathSystem,
    PrimitiveKind,
    SearchBudget,
    SideCondition,
    TraceStep,
    Vertex,
    VerifyReport,
    format_vertex,
)

logger = logging.getLogger(__name__)

K = PrimitiveKind
NONE = SideCondition.NONE

# relaxed 策略下可以回退的失败（SideConditionUnmet 属于 AssemblyError）；
# 预算、能力、一致性告警与程序错误总是向上传播
RECOVERABLE = (PreconditionViolation, ChoiceExhausted, AssemblyError, NotApplicableError)


# ---------------------------------------------------------------------------
# 前提检查
# ---------------------------------------------------------------------------

class Clauses:
    """按顺序检查前提子句，记住第一个失败者

    ok 可以是布尔值或无参函数；函数只在此前子句都成立时才求值。
    """

    def __init__(self):
        self.violation: Optional[str] = None

    def require(self, clause: str, ok) -> "Clauses":
        if self.violation is None and not (ok() if callable(ok) else ok):
            self.violation = clause
        return self

    def report(self) -> VerifyReport:
        if self.violation:
            return VerifyReport.failed(self.violation)
        return VerifyReport.passed()


def _differ(shape: CubeShape, a: Vertex, b: Vertex) -> bool:
    """k 为奇数时恒真，偶数时要求奇偶性不同"""
    return not shape.is_bipartite or parity(shape, a) != parity(shape, b)


def _base_clauses(region, min_n: int, ends: Sequence[Vertex]) -> Clauses:
    c = Clauses()
    c.require(f"n >= {min_n}", region.n >= min_n)
    c.require("k >= 4", region.shape.k >= 4)
    c.require("vertices distinct", len(set(ends)) == len(ends))
    c.require("vertex outside region", lambda: all(w in region for w in ends))
    return c


def _matching_clauses(c: Clauses, region, M) -> Clauses:
    c.require("matching", lambda: bool(check_matching(region.shape, M)))
    c.require("edge outside region", lambda: all(region.is_edge(e.u, e.v) for e in M))
    return c


def check_lemma9(view: RangeView, x: Vertex, y: Vertex, M) -> VerifyReport:
    c = _base_clauses(view, 4, (x, y))
    c.require("parity", lambda: _differ(view.shape, x, y))
    _matching_clauses(c, view, M)
    c.require("|M| <= 1", len(M) <= 1)
    c.require("xy not in M", lambda: Edge.of(x, y) not in M)
    c.require("endpoint placement",
              lambda: view.ctx.label(x) == view.p and view.ctx.label(y) in (view.p, view.q))
    return c.report()


def check_lemma10(view: RangeView, x: Vertex, y: Vertex, u: Vertex, v: Vertex, M) -> VerifyReport:
    c = _base_clauses(view, 4, (x, y, u, v))
    c.require("p < q", view.p < view.q)
    c.require("endpoints in Q[p]", lambda: all(view.ctx.label(w) == view.p for w in (x, y, u, v)))
    c.require("parity", lambda: _differ(view.shape, x, y) and _differ(view.shape, u, v))
    _matching_clauses(c, view, M)
    c.require("|M| <= 1", len(M) <= 1)
    c.require("|{x,y,u,v} ∩ V(M)| <= 1", lambda: len({x, y, u, v} & vertex_set(M)) <= 1)
    return c.report()


def check_lemma11(cube: CubeRegion, x: Vertex, y: Vertex, M) -> VerifyReport:
    c = _base_clauses(cube, 4, (x, y))
    c.require("parity", lambda: _differ(cube.shape, x, y))
    _matching_clauses(c, cube, M)
    c.require("|M| <= 2", len(M) <= 2)
    c.require("xy not in M", lambda: Edge.of(x, y) not in M)
    return c.report()


def check_lemma12(view: RangeView, x: Vertex, y: Vertex, M) -> VerifyReport:
    c = _base_clauses(view, 5, (x, y))
    c.require("endpoints in Q[p]", lambda: view.ctx.label(x) == view.ctx.label(y) == view.p)
    c.require("parity", lambda: _differ(view.shape, x, y))
    _matching_clauses(c, view, M)
    c.require("|M| <= 2", len(M) <= 2)
    c.require("xy not in M", lambda: Edge.of(x, y) not in M)
    return c.report()


def check_lemma13(cube: CubeRegion, x: Vertex, y: Vertex, u: Vertex, v: Vertex, M) -> VerifyReport:
    c = _base_clauses(cube, 5, (x, y, u, v))
    c.require("parity", lambda: _differ(cube.shape, x, y))
    c.require("uv edge", lambda: cube.is_edge(u, v))
    _matching_clauses(c, cube, M)
    c.require("|M| <= 1", len(M) <= 1)
    c.require("V(M) ∩ {u,v} = ∅", lambda: not ({u, v} & vertex_set(M)))
    c.require("xy not in M", lambda: Edge.of(x, y) not in M)
    return c.report()


def check_lemma14(cube: CubeRegion, x: Vertex, y: Vertex, u: Vertex, v: Vertex) -> VerifyReport:
    c = _base_clauses(cube, 4, (x, y, u, v))
    c.require("k even", cube.shape.is_bipartite)

    def pattern():
        px, py, pu, pv = (parity(cube.shape, w) for w in (x, y, u, v))
        return px == py != pu == pv

    c.require("p(x) = p(y) != p(u) = p(v)", pattern)
    return c.report()


def check_lemma15(cube: CubeRegion, pairs: Sequence[Tuple[Vertex, Vertex]], M) -> VerifyReport:
    ends = [w for pair in pairs for w in pair]
    c = _base_clauses(cube, 5, ends)
    c.require("three pairs", len(pairs) == 3)
    c.require("pair edges", lambda: all(cube.is_edge(a, b) for a, b in pairs))
    _matching_clauses(c, cube, M)
    c.require("|M| <= 2n-10", len(M) <= max(0, 2 * cube.dim - 10))
    c.require("{u,v,w} ∩ V(M) = ∅", lambda: not ({a for a, _ in pairs} & vertex_set(M)))

    def primes_free():
        primes = [b for _, b in pairs]
        return all(Edge.of(a, b) not in M for i, a in enumerate(primes) for b in primes[i + 1:])

    c.require("{u'v',u'w',v'w'} ∩ M = ∅", primes_free)
    return c.report()


def check_lemma16(cube: CubeRegion, x: Vertex, y: Vertex, M) -> VerifyReport:
    c = _base_clauses(cube, 4, (x, y))
    c.require("distance <= 3", lambda: lee_distance(cube.shape, x, y) <= 3)
    c.require("parity", lambda: _differ(cube.shape, x, y))
    _matching_clauses(c, cube, M)
    c.require("|M| <= 2n-8", len(M) <= max(0, 2 * cube.dim - 8))
    c.require("xy not in M", lambda: Edge.of(x, y) not in M)
    return c.report()


# ---------------------------------------------------------------------------
# 小工具
# ---------------------------------------------------------------------------

def proj(ctx: SplitContext, e: Edge, j: int) -> Edge:
    """边在 Q[j] 上的投影 u_j v_j"""
    return Edge.of(ctx.at(e.u, j), ctx.at(e.v, j))


def between(ctx: SplitContext, M, i: int, j: int) -> frozenset:
    """相邻标号 i, j 之间的 d-边（含回绕边界）"""
    return ctx.cross(M, i) if (i + 1) % ctx.k == j % ctx.k else ctx.cross(M, j)


def pivot(ctx: SplitContext, e: Edge, label: int) -> Vertex:
    """d-边在 Q[label] 一侧的端点"""
    return e.u if ctx.label(e.u) == label else e.v


def only(label: str, items) -> Any:
    """恰有一个元素的集合取出该元素"""
    items = list(items)
    if len(items) != 1:
        raise AssemblyError(f"{label}: expected one item, found {len(items)}")
    return items[0]


def facing(view: RangeView, v: Vertex) -> RangeView:
    """v 在 Q[q] 时翻转区间，使 v 落在 Q[p] 一端"""
    ctx = view.ctx
    if view.p != view.q and ctx.label(v) == view.q:
        return ctx.rebased(view.q, flip=True).range(0, view.q - view.p)
    return view


# ---------------------------------------------------------------------------
# 构造上下文
# ---------------------------------------------------------------------------

class Constructor:
    """构造上下文：provider、回退策略、预算与轨迹栈

    Args:
        provider: 原语实现，默认使用进程内共享的搜索 provider
        policy: strict 或 relaxed
        budget: 每次原语调用的搜索预算
        base_n: 定理 3 递归中 n <= base_n 的子问题直接交给 provider
    """

    def __init__(self, provider: Optional[PrimitiveProvider] = None,
                 policy=Config.DEFAULT_POLICY,
                 budget: Optional[SearchBudget] = None,
                 base_n: int = Config.CONSTRUCTION_BASE_N):
        self.provider = provider or default_provider()
        self.policy = FallbackPolicy(policy)
        self.budget = budget or SearchBudget(Config.SEARCH_BUDGET_NODES)
        self.base_n = base_n
        self.root = TraceStep("root")
        self._stack: List[TraceStep] = [self.root]
        self.fallbacks = 0
        self.primitive_calls = 0

    # -- 轨迹 --------------------------------------------------------------

    @property
    def current(self) -> TraceStep:
        return self._stack[-1]

    @staticmethod
    def _case(step: TraceStep, text: str) -> None:
        step.label = f"{step.label}/{text}"

    def trace(self, op: str, arguments: Dict[str, Any], digest: Optional[str] = None) -> ConstructionTrace:
        children = self.root.children
        root = children[0] if len(children) == 1 else self.root
        return ConstructionTrace(op, arguments, root, digest)

    # -- 原语与子问题 --------------------------------------------------------

    def _prim(self, kind: PrimitiveKind, region, pairs=(), required=(), forbidden=(),
              side: SideCondition = NONE):
        spec = primitive_spec(region, pairs, required, forbidden)
        self.current.children.append(
            TraceStep(kind.value, provider=f"{kind.value} {region.describe()} seed={self.budget.seed}"))
        self.primitive_calls += 1
        return self.provider.solve(kind, spec, side, self.budget)

    def _run(self, label: str, region, pairs, required, build: Callable[[TraceStep], Any],
             check: Optional[Callable[[], VerifyReport]] = None,
             side: SideCondition = NONE, forbidden=()):
        """执行一个子构造：前提 -> 构造 -> 复核 -> （必要时）回退

        前提失败直接抛给调用方，由调用方所在的子问题决定是否回退。
        """
        if check is not None:
            report = check()
            if not report:
                raise PreconditionViolation(report.first_violation, f"{label} on {region.describe()}")
        spec = primitive_spec(region, pairs, required, forbidden)
        step = TraceStep(label)
        self.current.children.append(step)
        self._stack.append(step)
        try:
            try:
                solution = build(step)
                report = certify_solution(solution, spec)
                if report and side != NONE:
                    report = check_side_condition(solution, spec, side)
                if not report:
                    raise AssemblyError(f"{label}: {report.first_violation}")
            except RECOVERABLE as exc:
                if self.policy is FallbackPolicy.STRICT:
                    raise
                solution = self._fallback(step, spec, side, exc)
        finally:
            self._stack.pop()
        return solution

    def _fallback(self, step: TraceStep, spec: ConstraintSpec, side: SideCondition, exc: Exception):
        step.children.clear()
        step.fallback = f"{type(exc).__name__}: {exc}"
        self.fallbacks += 1
        logger.warning("%s 回退到 provider: %s", step.label, exc)
        step.children.append(TraceStep(
            "fallback", provider=f"solve_spec {spec.region.describe()} seed={self.budget.seed}"))
        solution = self.provider.solve_spec(spec, side, self.budget)
        report = certify_solution(solution, spec)
        if report and side != NONE:
            report = check_side_condition(solution, spec, side)
        if not report:
            raise AssemblyError(f"provider fallback for {step.label}: {report.first_violation}")
        return solution

    # -- 常用片段 ------------------------------------------------------------

    def cube_path(self, cube: CubeRegion, x: Vertex, y: Vertex, M=frozenset()) -> PathSystem:
        """立方体内经过至多一条边的生成 x,y-路径"""
        if M:
            return self._prim(K.HAM_PATH_THROUGH_EDGE, cube, [(x, y)], M)
        if cube.shape.is_bipartite:
            return self._prim(K.HAM_PATH_EVEN_PARITY, cube, [(x, y)])
        return self._prim(K.HAM_PATH_MINUS_VERTICES, cube, [(x, y)])

    def cube_path_minus(self, cube: CubeRegion, x: Vertex, y: Vertex, U: Iterable[Vertex]) -> PathSystem:
        """去掉若干顶点后的生成 x,y-路径：奇数 k 用 L1，偶数 k 用 L3"""
        U = tuple(U)
        if cube.shape.is_bipartite:
            return self._prim(K.HAM_PATH_MINUS_ONE, cube, [(x, y)], forbidden=U)
        return self._prim(K.HAM_PATH_MINUS_VERTICES, cube, [(x, y)], forbidden=U)

    def range_path(self, view: RangeView, x: Vertex, y: Vertex, side: SideCondition = NONE) -> PathSystem:
        return self._prim(K.RANGE_PATH, view, [(x, y)], side=side)

    def range_path_m(self, view: RangeView, x: Vertex, y: Vertex, M,
                     side: SideCondition = NONE) -> PathSystem:
        """L7：xy 是 Q[p] 或 Q[q] 中的边，后者时先翻转区间"""
        view = facing(view, x)
        return self._prim(K.RANGE_PATH_THROUGH_MATCHING, view, [(x, y)], M, side=side)

    def range_two_path(self, view: RangeView, first_pair, second_pair) -> PathSystem:
        """L8：四个端点都在区间一端，或两对分处两端"""
        ctx = view.ctx
        a, b = tuple(first_pair), tuple(second_pair)
        if view.p != view.q:
            la = {ctx.label(w) for w in a}
            lb = {ctx.label(w) for w in b}
            if la == {view.q} and lb == {view.p}:
                a, b = b, a
            elif la == lb == {view.q}:
                view = ctx.rebased(view.q, flip=True).range(0, view.q - view.p)
        return self._prim(K.RANGE_TWO_PATH, view, [a, b])

    def subcube_two_path(self, view: RangeView, first_pair, second_pair) -> PathSystem:
        """单个子立方体内的生成 2-路径：奇偶交错时用 L8，否则用 L14"""
        shape = view.shape
        (x, y), (u, v) = first_pair, second_pair
        if _differ(shape, x, y) and _differ(shape, u, v):
            return self.range_two_path(view, first_pair, second_pair)
        return self.lemma14(view.as_cube(), x, y, u, v)

    def pick_bridge(self, label: str, ctx: SplitContext, routes: Sequence[Route], i: int, j: int, M,
                    exclude=frozenset(), extra: Optional[Callable[[Edge], bool]] = None) -> Tuple[Vertex, Vertex]:
        """路径上 Q[i] 内的一条边 ss'，不在 M 中且投影 s_j s'_j 不在 M 中"""

        def ok(e: Edge) -> bool:
            if e in M or e in exclude:
                return False
            if ctx.label(e.u) != i or ctx.label(e.v) != i:
                return False
            if proj(ctx, e, j) in M:
                return False
            return extra is None or extra(e)

        e = first(label, route_edges(routes), ok)
        return e.u, e.v

    def bridge_at(self, label: str, ctx: SplitContext, routes: Sequence[Route], i: int, j: int, M,
                  exclude=frozenset(), extra: Optional[Callable[[Edge], bool]] = None) -> Tuple[Vertex, Vertex]:
        """Q[i] 到 Q[j] 的桥：边界上有 M 的 d-边时以其端点为一端，否则任取可用边"""
        crossing = between(ctx, M, i, j)
        if not crossing:
            return self.pick_bridge(label, ctx, routes, i, j, M, exclude, extra)
        s = pivot(ctx, only(label, crossing), i)
        route = route_of(routes, s)

        def ok(w: Vertex) -> bool:
            e = Edge.of(s, w)
            return ctx.label(w) == i and e not in exclude and (extra is None or extra(e))

        return s, first(label, route.neighbors(s), ok)

    # -- Lemma 9 -------------------------------------------------------------

    def lemma9(self, view: RangeView, x: Vertex, y: Vertex, M, side: SideCondition = NONE) -> PathSystem:
        """区间内经过至多一条匹配边的生成 x,y-路径"""
        M = frozenset(M)
        return self._run("L9", view, [(x, y)], M, lambda step: self._lemma9(step, view, x, y, M),
                         check=lambda: check_lemma9(view, x, y, M), side=side)

    def _lemma9(self, step: TraceStep, view: RangeView, x: Vertex, y: Vertex, M) -> PathSystem:
        ctx, p, q = view.ctx, view.p, view.q
        shape = view.shape
        even = shape.is_bipartite
        if not M:
            self._case(step, "M empty")
            return self.range_path(view, x, y)
        if p == q:
            self._case(step, "q=p")
            return self.cube_path(view.as_cube(), x, y, M)
        asm = Assembly(shape)
        if ctx.label(y) == p:
            self._case(step, "Case 1")
            P = Route.of(self.cube_path(ctx.cube_of(p), x, y, ctx.part(M, p)))
            s, s2 = self.bridge_at("s_p s_p'", ctx, [P], p, p + 1, M)
            step.note("s_p s_p'", (s, s2))
            tail = self.range_path_m(ctx.range(p + 1, q), ctx.at(s, p + 1), ctx.at(s2, p + 1),
                                     ctx.inner(M, p + 1, q))
            asm.add(P, tail).detour(s, s2, ctx.at(s, p + 1), ctx.at(s2, p + 1))
            return asm.paths([(x, y)], view)

        self._case(step, "Case 2")
        free = [j for j in range(p, q) if not ctx.cross(M, j)]
        if free:
            j = free[0]

            def ok(s: Vertex) -> bool:
                s1 = ctx.at(s, j + 1)
                if s == x or s1 == y:
                    return False
                if even and parity(shape, s1) != parity(shape, x):
                    return False
                return Edge.of(x, s) not in M and Edge.of(s1, y) not in M

            s = first("s_j", ctx.cube_of(j).vertices(), ok)
            s1 = ctx.at(s, j + 1)
            step.note("j", j)
            step.note("s_j", s)
            left = self.lemma9(ctx.range(p, j), x, s, ctx.inner(M, p, j))
            right = self.lemma9(ctx.range(j + 1, q), s1, y, ctx.inner(M, j + 1, q))
            asm.add(left, right).link((s, s1))
            return asm.paths([(x, y)], view)

        # 只剩 q = p+1 且唯一的匹配边横跨两者
        sp = pivot(ctx, only("M ∩ E_d(p,p+1)", ctx.cross(M, p)), p)
        sq = ctx.at(sp, q)
        cube_p, cube_q = ctx.cube_of(p), ctx.cube_of(q)
        if y != sq:
            self._case(step, "y != s_q")
            s2 = first("s_p'", cube_p.neighbors(sp), lambda w: ctx.at(w, q) != y)
            s2q = ctx.at(s2, q)

            def ok_t(t1: Vertex) -> bool:
                t0 = ctx.at(t1, p)
                if t1 in (y, sq, s2q) or t0 == x or {x, t0} == {sp, s2}:
                    return False
                return not even or parity(shape, t0) != parity(shape, x)

            t1 = first("t_q", cube_q.vertices(), ok_t)
            t0 = ctx.at(t1, p)
            step.note("s_p'", s2)
            step.note("t_q", t1)
            head = self.cube_path(cube_p, x, t0, [Edge.of(sp, s2)])
            two = self.range_two_path(ctx.subcube(q), (sq, s2q), (y, t1))
            asm.add(head, two).cut((sp, s2)).link((sp, sq), (s2, s2q), (t0, t1))
        else:
            self._case(step, "y = s_q")
            t0 = first("t_p", cube_p.vertices(),
                       lambda t: t not in (x, sp) and (not even or parity(shape, t) != parity(shape, x)))
            P = Route.of(self.range_path(ctx.subcube(p), x, t0))
            s2 = P.closer(sp, x)
            s2q, t1 = ctx.at(s2, q), ctx.at(t0, q)
            step.note("t_p", t0)
            step.note("s_p'", s2)
            rest = self.cube_path_minus(cube_q, s2q, t1, [y])
            asm.add(P, rest).cut((sp, s2)).link((sp, sq), (s2, s2q), (t0, t1))
        return asm.paths([(x, y)], view)

    # -- Lemma 10 ------------------------------------------------------------

    def lemma10(self, view: RangeView, x: Vertex, y: Vertex, u: Vertex, v: Vertex, M) -> PathSystem:
        """区间内经过至多一条匹配边的生成 2-路径，四个端点都在 Q[p]"""
        M = frozenset(M)
        return self._run("L10", view, [(x, y), (u, v)], M,
                         lambda step: self._lemma10(step, view, x, y, u, v, M),
                         check=lambda: check_lemma10(view, x, y, u, v, M))

    def _lemma10(self, step, view, x, y, u, v, M) -> PathSystem:
        ctx, p, q = view.ctx, view.p, view.q
        asm = Assembly(view.shape)
        if not M:
            self._case(step, "M empty")
            return self.range_two_path(view, (x, y), (u, v))
        Mp = ctx.part(M, p)
        if Mp:
            self._case(step, "Case 1")
            a, b, c, e = (x, y, u, v) if not ({u, v} & vertex_set(M)) else (u, v, x, y)
            P = Route.of(self.cube_path(ctx.cube_of(p), a, b, Mp))
            inside = set(P.segment(c, e))
            c2 = first("u_p'", P.neighbors(c), lambda w: w not in inside)
            e2 = first("v_p'", P.neighbors(e), lambda w: w not in inside)
            step.note("u_p' v_p'", (c2, e2))
            c3, e3 = ctx.at(c2, p + 1), ctx.at(e2, p + 1)
            tail = self.range_path(ctx.range(p + 1, q), c3, e3)
            asm.add(P, tail).cut((c, c2), (e, e2)).link((c2, c3), (e2, e3))
        else:
            self._case(step, "Case 2")
            two = self.range_two_path(ctx.subcube(p), (x, y), (u, v))
            s, s2 = self.bridge_at("s_p s_p'", ctx, Route.all_of(two), p, p + 1, M)
            step.note("s_p s_p'", (s, s2))
            s3, s4 = ctx.at(s, p + 1), ctx.at(s2, p + 1)
            tail = self.range_path_m(ctx.range(p + 1, q), s3, s4, ctx.inner(M, p + 1, q))
            asm.add(two, tail).detour(s, s2, s3, s4)
        return asm.paths([(x, y), (u, v)], view)

    # -- Lemma 11 ------------------------------------------------------------

    def lemma11(self, cube: CubeRegion, x: Vertex, y: Vertex, M) -> PathSystem:
        """经过至多两条匹配边的生成 x,y-路径"""
        M = frozenset(M)
        return self._run("L11", cube, [(x, y)], M, lambda step: self._lemma11(step, cube, x, y, M),
                         check=lambda: check_lemma11(cube, x, y, M))

    def _lemma11(self, step, cube, x, y, M) -> PathSystem:
        ends = [(x, y)]
        if len(M) <= 1:
            self._case(step, "|M|<=1")
            return self.cube_path(cube, x, y, M)
        d = select_split_dimension(cube, M, cap=0)
        base = cube.split(d)
        ctx = base.rebased(base.label(x))
        k = ctx.k
        i = ctx.label(y)
        asm = Assembly(cube.shape)
        if i == 0:
            M0 = ctx.part(M, 0)
            step.transform = ctx.describe()
            if len(M0) <= 1:
                self._case(step, "Case 1/|M_0|<=1")
                P = Route.of(self.cube_path(ctx.cube_of(0), x, y, M0))
                s, s2 = self.pick_bridge("s_0 s_0'", ctx, [P], 0, 1, M)
                step.note("s_0 s_0'", (s, s2))
                s3, s4 = ctx.at(s, 1), ctx.at(s2, 1)
                tail = self.range_path_m(ctx.range(1, k - 1), s3, s4, ctx.inner(M, 1, k - 1))
                asm.add(P, tail).detour(s, s2, s3, s4)
                return asm.paths(ends, cube)
            uv, other = sorted(M0)
            P = Route.of(self.lemma9(ctx.subcube(0), x, y, {other}))
            if P.has_edge(*uv):
                self._case(step, "Case 1/uv on path")
                s, s2 = self.pick_bridge("s_0 s_0'", ctx, [P], 0, 1, M)
                s3, s4 = ctx.at(s, 1), ctx.at(s2, 1)
                tail = self.range_path_m(ctx.range(1, k - 1), s3, s4, frozenset())
                asm.add(P, tail).detour(s, s2, s3, s4)
                return asm.paths(ends, cube)
            self._case(step, "Case 1/uv off path")
            u, v = uv
            inside = set(P.segment(u, v))
            options = [(a, b) for a in P.neighbors(u) for b in P.neighbors(v) if (a in inside) != (b in inside)]
            a, b = first("u_0' v_0'", options)
            step.note("u_0' v_0'", (a, b))
            a1, b1 = ctx.at(a, 1), ctx.at(b, 1)
            tail = self.range_path(ctx.range(1, k - 1), a1, b1)
            asm.add(P, tail).link((u, v)).cut((u, a), (v, b)).link((a, a1), (b, b1))
            return asm.paths(ends, cube)

        self._case(step, "Case 2")
        if len(ctx.inner(M, i, k - 1)) > 1:
            x, y = y, x
            ctx = ctx.rebased(i)
            i = ctx.label(y)
            step.note("swap", "x,y")
        step.transform = ctx.describe()

        def ok(w: Vertex) -> bool:
            w_last = ctx.at(w, k - 1)
            return w_last != y and Edge.of(x, w) not in M and Edge.of(y, w_last) not in M

        x2 = first("x_0'", ctx.cube_of(0).neighbors(x), ok)
        step.note("x_0'", x2)
        x3 = ctx.at(x2, k - 1)
        left = self.range_path_m(ctx.range(0, i - 1), x, x2, ctx.inner(M, 0, i - 1))
        right = self.lemma9(ctx.range(i, k - 1), y, x3, ctx.inner(M, i, k - 1))
        asm.add(left, right).link((x2, x3))
        return asm.paths(ends, cube)

    # -- Lemma 12 ------------------------------------------------------------

    def lemma12(self, view: RangeView, x: Vertex, y: Vertex, M) -> PathSystem:
        """区间内经过至多两条匹配边的生成 x,y-路径，x,y 都在 Q[p]"""
        M = frozenset(M)
        return self._run("L12", view, [(x, y)], M, lambda step: self._lemma12(step, view, x, y, M),
                         check=lambda: check_lemma12(view, x, y, M))

    def _lemma12(self, step, view, x, y, M) -> PathSystem:
        ctx, p, q = view.ctx, view.p, view.q
        if p == q:
            self._case(step, "q=p")
            return self.lemma11(view.as_cube(), x, y, M)
        P = Route.of(self.lemma12(ctx.subcube(p), x, y, ctx.part(M, p)))
        rest = ctx.range(p + 1, q)
        crossing = sorted(ctx.cross(M, p))
        pivots = [pivot(ctx, e, p) for e in crossing]
        asm = Assembly(view.shape).add(P)
        if len(pivots) == 2 and P.dist(*pivots) > 1:
            self._case(step, "double bridge")
            s, t = pivots
            s2, t2 = first("s_p' t_p'", product(P.neighbors(s), P.neighbors(t)), lambda c: c[0] != c[1])
            step.note("s_p' t_p'", (s2, t2))
            up = lambda w: ctx.at(w, p + 1)
            two = self.range_two_path(rest, (up(s), up(s2)), (up(t), up(t2)))
            asm.add(two).detour(s, s2, up(s), up(s2)).detour(t, t2, up(t), up(t2))
            return asm.paths([(x, y)], view)
        if len(pivots) == 2:
            self._case(step, "adjacent pivots")
            s, s2 = pivots
        else:
            self._case(step, f"{len(pivots)} crossing")
            s, s2 = self.bridge_at("s_p s_p'", ctx, [P], p, p + 1, M)
        step.note("s_p s_p'", (s, s2))
        s3, s4 = ctx.at(s, p + 1), ctx.at(s2, p + 1)
        tail = self.lemma12(rest, s3, s4, ctx.inner(M, p + 1, q))
        asm.add(tail).detour(s, s2, s3, s4)
        return asm.paths([(x, y)], view)

    # -- Lemma 13 ------------------------------------------------------------

    def lemma13(self, cube: CubeRegion, x: Vertex, y: Vertex, u: Vertex, v: Vertex, M) -> PathSystem:
        """去掉一条边的两个端点 u,v 后，经过至多一条匹配边的生成 x,y-路径"""
        M = frozenset(M)
        return self._run("L13", cube, [(x, y)], M, lambda step: self._lemma13(step, cube, x, y, u, v, M),
                         check=lambda: check_lemma13(cube, x, y, u, v, M), forbidden=(u, v))

    def _lemma13(self, step, cube, x, y, u, v, M) -> PathSystem:
        shape = cube.shape
        even = shape.is_bipartite
        uv = Edge.of(u, v)
        d = select_split_dimension(cube, M, cap=0, avoid=[uv])
        base = cube.split(d)
        ctx = base.rebased(base.label(u))
        k = ctx.k
        i, j = ctx.label(x), ctx.label(y)
        M0 = ctx.part(M, 0)
        asm = Assembly(shape)

        if i == 0 and j == 0:
            self._case(step, "Case 1")
            step.transform = ctx.describe()
            P = Route.of(self.lemma12(ctx.subcube(0), x, y, M0 | {uv}))
            u2 = first("u_0'", P.neighbors(u), lambda w: w != v)
            v2 = first("v_0'", P.neighbors(v), lambda w: w != u)
            step.note("u_0' v_0'", (u2, v2))
            u3, v3 = ctx.at(u2, 1), ctx.at(v2, k - 1)
            tail = self.lemma9(ctx.range(1, k - 1), u3, v3, ctx.inner(M, 1, k - 1))
            asm.add(P, tail).drop(u, v).link((u2, u3), (v2, v3))
            return asm.paths([(x, y)], cube)

        if i == 0 or j == 0:
            self._case(step, "Case 2")
            a, b = (x, y) if i == 0 else (y, x)
            if ctx.label(b) == 1:
                ctx = ctx.rebased(0, flip=True)
            step.transform = ctx.describe()
            jb = ctx.label(b)
            c, e = (u, v) if not even or parity(shape, a) != parity(shape, u) else (v, u)
            P = Route.of(self.lemma12(ctx.subcube(0), a, c, M0 | {uv}))
            e2 = first("v_0'", P.neighbors(e), lambda w: w != c)
            step.note("v_0'", e2)
            head = Route(P.segment(a, e2))
            e3 = ctx.at(e2, 1)
            side = SideCondition.LAST_TRACE_PATH_OR_2PATH if jb < k - 1 else NONE
            mid = self.lemma9(ctx.range(1, jb), e3, b, ctx.inner(M, 1, jb), side=side)
            asm.add(head, mid).link((e2, e3))
            if jb < k - 1:
                r, r2 = self.pick_bridge("r_j r_j'", ctx, Route.all_of(mid), jb, jb + 1, M)
                step.note("r_j r_j'", (r, r2))
                r3, r4 = ctx.at(r, jb + 1), ctx.at(r2, jb + 1)
                tail = self.range_path_m(ctx.range(jb + 1, k - 1), r3, r4, ctx.inner(M, jb + 1, k - 1))
                asm.add(tail).detour(r, r2, r3, r4)
            return asm.paths([(x, y)], cube)

        self._case(step, "Case 3")
        if i > j:
            ctx = ctx.rebased(0, flip=True)
            i, j = ctx.label(x), ctx.label(y)
        if i == j == k - 1:
            ctx = ctx.rebased(0, flip=True)
            i = j = 1
        step.transform = ctx.describe()
        c, e = (u, v) if not even or parity(shape, x) == parity(shape, v) else (v, u)
        covered = vertex_set(M)

        def ok(pair) -> bool:
            c2, e2 = pair
            c1, e_last = ctx.at(c2, 1), ctx.at(e2, k - 1)
            if len({c, c2, e, e2}) != 4 or {c2, e2, c1, e_last} & covered:
                return False
            if c1 == x or e_last == y:
                return False
            if i < j:
                return Edge.of(c1, x) not in M and Edge.of(y, e_last) not in M
            return Edge.of(ctx.at(c2, k - 1), e_last) not in M

        c2, e2 = first("u_0' v_0'", product(ctx.cube_of(0).neighbors(c), ctx.cube_of(0).neighbors(e)), ok)
        step.note("u_0' v_0'", (c2, e2))
        forest = M0 | {uv, Edge.of(c, c2), Edge.of(e, e2)}
        C0 = Route.of(self._prim(K.HAM_CYCLE_THROUGH_FOREST, ctx.cube_of(0), (), forest))
        asm.add(C0).drop(c, e)

        if i < j:
            c1, e_last = ctx.at(c2, 1), ctx.at(e2, k - 1)
            side = SideCondition.LAST_TRACE_PATH_OR_2PATH if i + 1 < j else NONE
            A = self.lemma9(ctx.range(1, i), c1, x, ctx.inner(M, 1, i), side=side)
            B = self.lemma9(ctx.range(j, k - 1), y, e_last, ctx.inner(M, j, k - 1))
            asm.add(A, B).link((c2, c1), (e2, e_last))
            if i + 1 < j:
                t, t2 = self.pick_bridge("t_i t_i'", ctx, Route.all_of(A), i, i + 1, M)
                step.note("t_i t_i'", (t, t2))
                t3, t4 = ctx.at(t, i + 1), ctx.at(t2, i + 1)
                fill = self.range_path_m(ctx.range(i + 1, j - 1), t3, t4, ctx.inner(M, i + 1, j - 1))
                asm.add(fill).detour(t, t2, t3, t4)
            return asm.paths([(x, y)], cube)

        M1 = ctx.part(M, 1)

        def ok_s(edge: Edge) -> bool:
            if edge in forest:
                return False
            e1 = proj(ctx, edge, 1)
            return e1 != Edge.of(x, y) and not (set(e1) & vertex_set(M1))

        s, s2 = first("s_0 s_0'", C0.edges(), ok_s)
        step.note("s_0 s_0'", (s, s2))
        s1, s3 = ctx.at(s, 1), ctx.at(s2, 1)
        Pxy = self.lemma12(facing(ctx.range(1, i), x), x, y, ctx.inner(M, 1, i) | {Edge.of(s1, s3)})
        c3, e3 = ctx.at(c2, k - 1), ctx.at(e2, k - 1)
        R = self.lemma12(facing(ctx.range(i + 1, k - 1), c3), c3, e3, ctx.inner(M, i + 1, k - 1))
        asm.add(Pxy, R).cut((s, s2), (s1, s3)).link((s, s1), (s2, s3), (c2, c3), (e2, e3))
        return asm.paths([(x, y)], cube)

    # -- Lemma 14 ------------------------------------------------------------

    def lemma14(self, cube: CubeRegion, x: Vertex, y: Vertex, u: Vertex, v: Vertex) -> PathSystem:
        """偶数 k 下 p(x)=p(y)!=p(u)=p(v) 的生成 2-路径"""
        return self._run("L14", cube, [(x, y), (u, v)], (),
                         lambda step: self._lemma14(step, cube, x, y, u, v),
                         check=lambda: check_lemma14(cube, x, y, u, v))

    def _lemma14(self, step, cube, x, y, u, v) -> PathSystem:
        shape = cube.shape
        pos = first("d", cube.free_positions, lambda i: x[i] != y[i])
        base = cube.split(pos + 1)
        for swap_xy, flip, swap_uv in product((False, True), repeat=3):
            a, b = (y, x) if swap_xy else (x, y)
            c, e = (v, u) if swap_uv else (u, v)
            ctx = base.rebased(base.label(a), flip)
            m, i, j = ctx.label(b), ctx.label(c), ctx.label(e)
            if i <= j and i < m:
                break
        else:
            raise ChoiceExhausted("normal form")
        k = ctx.k
        at = ctx.at
        asm = Assembly(shape)
        pairs = [(x, y), (u, v)]

        if i == j:
            self._case(step, "Case 1")
            if i == 0:
                if m == 1:
                    ctx = ctx.rebased(0, flip=True)
                    at = ctx.at
                step.transform = ctx.describe()
                Puv = self.cube_path_minus(ctx.cube_of(0), c, e, [a])
                tail = self.range_path(ctx.range(1, k - 1), at(a, 1), b)
                asm.add(Puv, tail).link((a, at(a, 1)))
                return asm.paths(pairs, cube)
            step.transform = ctx.describe()
            s = first("s_i", ctx.cube_of(i).vertices(), lambda w: parity(shape, w) != parity(shape, c))
            step.note("s_i", s)
            Puv = self.cube_path_minus(ctx.cube_of(i), c, e, [s])
            left = self.range_path(ctx.range(0, i - 1), a, at(s, i - 1))
            right = self.range_path(ctx.range(i + 1, k - 1), b, at(s, i + 1))
            asm.add(Puv, left, right).link((at(s, i - 1), s), (s, at(s, i + 1)))
            return asm.paths(pairs, cube)

        self._case(step, "Case 2")
        step.transform = ctx.describe()
        top = min(j, m)
        Pxu = self._last_layer_spanned(step, ctx, a, c, top - 1)
        R = Route.starting(Pxu, a)
        layer = top - 1
        steps = [(s, r) for s, r in zip(R.order, R.order[1:]) if ctx.label(s) == layer == ctx.label(r)]
        same = lambda w, z: parity(shape, w) == parity(shape, z)

        if j < m:
            def ok(sr) -> bool:
                s, r = sr
                return e not in (at(s, j), at(r, j)) and at(s, j + 1) != b and same(s, e)

            s, r = first("s r", steps, ok)
            step.note("s r", (s, r))
            sj, rj, s_next = at(s, j), at(r, j), at(s, j + 1)
            Pv = self.cube_path_minus(ctx.cube_of(j), rj, e, [sj])
            Py = self.range_path(ctx.range(j + 1, k - 1), s_next, b)
            asm.add(Pxu, Pv, Py).cut((s, r)).link((s, sj), (sj, s_next), (r, rj))
            return asm.paths(pairs, cube)

        if j == m:
            def ok(sr) -> bool:
                s, r = sr
                return same(s, b) and not ({e, b} & {at(s, m), at(r, m)})

            s, r = first("s r", steps, ok)
            step.note("s r", (s, r))
            sm, rm = at(s, m), at(r, m)
            two = self.range_two_path(ctx.range(m, k - 1), (sm, b), (rm, e))
            asm.add(Pxu, two).cut((s, r)).link((s, sm), (r, rm))
            return asm.paths(pairs, cube)

        def ok(sr) -> bool:
            s, r = sr
            return b not in (at(s, m), at(r, m)) and not same(s, b)

        s, r = first("s r", steps, ok)
        step.note("s r", (s, r))
        sm, rm = at(s, m), at(r, m)
        Pb = self.cube_path_minus(ctx.cube_of(m), sm, b, [rm])
        Pv = self.range_path(ctx.range(m + 1, k - 1), at(r, m + 1), e)
        asm.add(Pxu, Pb, Pv).cut((s, r)).link((s, sm), (r, rm), (rm, at(r, m + 1)))
        return asm.paths(pairs, cube)

    def _last_layer_spanned(self, step, ctx: SplitContext, a: Vertex, c: Vertex, last: int) -> PathSystem:
        """Q[0..last] 中的生成 a,c-路径，在 Q[last] 上的迹是一条生成路径

        Q[last] 整层单独铺成一条路径，再接到 Q[0..last-1] 的路径上。
        """
        at = ctx.at
        shape = ctx.shape
        if last == 0:
            return self.range_path(ctx.range(0, 0), a, c)
        layer = ctx.cube_of(last)
        asm = Assembly(shape)
        if ctx.label(c) == last:
            w = first("w", ctx.cube_of(last - 1).vertices(), lambda z: parity(shape, z) == parity(shape, c))
            step.note("w", w)
            head = self.range_path(ctx.range(0, last - 1), a, w)
            asm.add(head, self.cube_path(layer, at(w, last), c)).link((w, at(w, last)))
        else:
            head = self.range_path(ctx.range(0, last - 1), a, c)
            inner = lambda e: ctx.label(e.u) == last - 1 == ctx.label(e.v)
            e = first("w w'", route_edges([Route.starting(head, a)]), inner)
            step.note("w w'", (e.u, e.v))
            sweep = self.cube_path(layer, at(e.u, last), at(e.v, last))
            asm.add(head, sweep).cut((e.u, e.v)).link((e.u, at(e.u, last)), (e.v, at(e.v, last)))
        return asm.paths([(a, c)], ctx.range(0, last))

    # -- Lemma 15 ------------------------------------------------------------

    def lemma15(self, cube: CubeRegion, pairs: Sequence[Tuple[Vertex, Vertex]], M) -> PathSystem:
        """三条不交边 uu', vv', ww' 的端点对上经过 M 的生成 3-路径"""
        M = frozenset(M)
        pairs = [tuple(pair) for pair in pairs]
        return self._run("L15", cube, pairs, M, lambda step: self._lemma15(step, cube, pairs, M),
                         check=lambda: check_lemma15(cube, pairs, M))

    def _lemma15(self, step, cube, pairs, M) -> PathSystem:
        if cube.dim <= 5:
            return self._lemma15_base(step, cube, pairs)
        shape = cube.shape
        k = shape.k
        edges = [Edge.of(*pair) for pair in pairs]
        ends = {w for pair in pairs for w in pair}

        def admissible(dd: int) -> bool:
            crossing = [e for e in M if e.dim == dd]
            return not any(set(e) & ends for e in crossing)

        d = select_split_dimension(cube, M, cap=1, avoid=edges, admissible=admissible)
        base = cube.split(d)
        labels = [base.label(a) for a, _ in pairs]
        asm = Assembly(shape)
        groups = len(set(labels))

        if groups == 1:
            ctx = base.rebased(labels[0])
            M0 = ctx.part(M, 0)
            if len(M0) <= len(M) - 2:
                self._case(step, "Case 1/Subcase 1.1")
                if ctx.cross(M, k - 1):
                    ctx = ctx.rebased(0, flip=True)
                step.transform = ctx.describe()
                three = self.lemma15(ctx.cube_of(0), pairs, M0)
                t, t2 = self.bridge_at("t_0 t_0'", ctx, Route.all_of(three), 0, 1, M)
                step.note("t_0 t_0'", (t, t2))
                t3, t4 = ctx.at(t, 1), ctx.at(t2, 1)
                tail = self.range_path_m(ctx.range(1, k - 1), t3, t4, ctx.inner(M, 1, k - 1))
                asm.add(three, tail).detour(t, t2, t3, t4)
                return asm.paths(pairs, cube)
            self._case(step, "Case 1/Subcase 1.2")
            return self._lemma15_cycle(step, ctx, pairs, edges, M)

        if groups == 2:
            self._case(step, "Case 2")
            lone = first("lone edge", range(3), lambda h: labels.count(labels[h]) == 1)
            g1, g2 = [h for h in range(3) if h != lone]
            ctx = base.rebased(labels[g1])
            j = ctx.label(pairs[lone][0])
            crossing = ctx.d_edges(M)
            link = [only("M ∩ E_d", crossing)] if len(crossing) == 1 else []
            if link and {ctx.label(link[0].u), ctx.label(link[0].v)} == {0, j}:
                self._case(step, "shared crossing")
                if j == k - 1:
                    ctx = ctx.rebased(0, flip=True)
                step.transform = ctx.describe()
                s0 = pivot(ctx, link[0], 0)
                s1 = ctx.at(s0, 1)
                M0, M1 = ctx.part(M, 0), ctx.part(M, 1)
                w, w2 = pairs[lone]
                blocked = vertex_set(M0) | {pairs[g1][0], pairs[g1][1], pairs[g2][0], pairs[g2][1]}

                def ok(s0p: Vertex) -> bool:
                    s1p = ctx.at(s0p, 1)
                    return s0p not in blocked and s1p not in (w, w2) and Edge.of(s1p, w2) not in M1

                s0p = first("s_0'", ctx.cube_of(0).neighbors(s0), ok)
                s1p = ctx.at(s0p, 1)
                step.note("s_0'", s0p)
                twoA = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(0), [pairs[g1], pairs[g2]],
                                  M0 | {Edge.of(s0, s0p)})
                twoB = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(1), [pairs[lone], (s1, s1p)], M1)
                r, r2 = self.pick_bridge("r_1 r_1'", ctx, Route.all_of(twoB), 1, 2, M)
                step.note("r_1 r_1'", (r, r2))
                r3, r4 = ctx.at(r, 2), ctx.at(r2, 2)
                tail = self.range_path_m(ctx.range(2, k - 1), r3, r4, ctx.inner(M, 2, k - 1))
                asm.add(twoA, twoB, tail).detour(s0, s0p, s1, s1p).detour(r, r2, r3, r4)
                return asm.paths(pairs, cube)

            for flip in (False, True):
                c = ctx.rebased(0, flip=True) if flip else ctx
                jj = c.label(pairs[lone][0])
                if not c.cross(M, k - 1) and not c.cross(M, jj - 1):
                    ctx, j = c, jj
                    break
            else:
                raise ChoiceExhausted("reflection keeping Q[0] and Q[j] boundaries free")
            step.transform = ctx.describe()
            twoA = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(0), [pairs[g1], pairs[g2]],
                              ctx.part(M, 0))
            Pw = self.range_path_m(ctx.range(j, k - 1), *pairs[lone], ctx.inner(M, j, k - 1))
            asm.add(twoA, Pw)
            if j > 1:
                r, r2 = self.bridge_at("r_0 r_0'", ctx, Route.all_of(twoA), 0, 1, M)
                step.note("r_0 r_0'", (r, r2))
                r3, r4 = ctx.at(r, 1), ctx.at(r2, 1)
                mid = self.range_path_m(ctx.range(1, j - 1), r3, r4, ctx.inner(M, 1, j - 1))
                asm.add(mid).detour(r, r2, r3, r4)
            return asm.paths(pairs, cube)

        self._case(step, "Case 3")
        crossing = base.d_edges(M)
        label_set = set(labels)
        link = only("M ∩ E_d", crossing) if len(crossing) == 1 else None
        if link is not None and {base.label(link.u), base.label(link.v)} <= label_set:
            self._case(step, "shared crossing")
            la, lb = base.label(link.u), base.label(link.v)
            lo = la if (la + 1) % k == lb else lb
            ctx = base.rebased(lo)
            step.transform = ctx.describe()
            h0 = labels.index(lo)
            h1 = labels.index((lo + 1) % k)
            h2 = 3 - h0 - h1
            j = ctx.label(pairs[h2][0])
            s0 = pivot(ctx, link, 0)
            s1 = ctx.at(s0, 1)
            M0, M1 = ctx.part(M, 0), ctx.part(M, 1)
            v, v2 = pairs[h1]

            def ok(s0p: Vertex) -> bool:
                s1p = ctx.at(s0p, 1)
                return (s0p not in vertex_set(M0) and s0p not in pairs[h0]
                        and s1p not in (v, v2) and Edge.of(s1p, v2) not in M1)

            s0p = first("s_0'", ctx.cube_of(0).neighbors(s0), ok)
            s1p = ctx.at(s0p, 1)
            step.note("s_0'", s0p)
            Pu = self.range_path_m(ctx.subcube(0), *pairs[h0], M0 | {Edge.of(s0, s0p)})
            Pw = self.range_path_m(ctx.range(j, k - 1), *pairs[h2], ctx.inner(M, j, k - 1))
            twoB = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(1), [pairs[h1], (s1, s1p)], M1)
            asm.add(Pu, Pw, twoB).detour(s0, s0p, s1, s1p)
            if j > 2:
                r, r2 = self.pick_bridge("r_1 r_1'", ctx, Route.all_of(twoB), 1, 2, M)
                step.note("r_1 r_1'", (r, r2))
                r3, r4 = ctx.at(r, 2), ctx.at(r2, 2)
                mid = self.range_path_m(ctx.range(2, j - 1), r3, r4, ctx.inner(M, 2, j - 1))
                asm.add(mid).detour(r, r2, r3, r4)
            return asm.paths(pairs, cube)

        for h, flip in product(sorted(range(3), key=lambda h: labels[h]), (False, True)):
            c = base.rebased(labels[h], flip)
            labs = [c.label(a) for a, _ in pairs]
            if not any(c.cross(M, (lab - 1) % k) for lab in labs):
                ctx = c
                break
        else:
            raise ChoiceExhausted("rotation keeping edge boundaries free")
        step.transform = ctx.describe()
        order = sorted(range(3), key=lambda h: labs[h])
        bounds = [labs[h] for h in order] + [k]
        for h, lo, hi in zip(order, bounds, bounds[1:]):
            asm.add(self.range_path_m(ctx.range(lo, hi - 1), *pairs[h], ctx.inner(M, lo, hi - 1)))
        return asm.paths(pairs, cube)

    def _lemma15_base(self, step, cube, pairs) -> PathSystem:
        """n = 5 时 M 为空，按三条边的分布直接拼接"""
        self._case(step, "base")
        edges = [Edge.of(*pair) for pair in pairs]
        d = select_split_dimension(cube, (), cap=0, avoid=edges)
        base = cube.split(d)
        labels = [base.label(a) for a, _ in pairs]
        k = base.k
        asm = Assembly(cube.shape)
        if len(set(labels)) == 1:
            self._case(step, "one subcube")
            ctx = base.rebased(labels[0])
            step.transform = ctx.describe()
            (x, y), (u, v), (s, t) = pairs
            two = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(0), [(x, y), (u, v)], [Edge.of(s, t)])
            R = route_of(Route.all_of(two), s)
            s2 = first("s_0'", R.neighbors(s), lambda w: w != t)
            t2 = first("t_0'", R.neighbors(t), lambda w: w != s)
            step.note("s_0' t_0'", (s2, t2))
            s3, t3 = ctx.at(s2, 1), ctx.at(t2, 1)
            s1, t1 = ctx.at(s, 1), ctx.at(t, 1)
            tail = self.range_two_path(ctx.range(1, k - 1), (s1, t1), (s3, t3))
            asm.add(two, tail).cut((s, s2), (t, t2), (s, t)).link((s, s1), (t, t1), (s2, s3), (t2, t3))
        elif len(set(labels)) == 2:
            self._case(step, "two subcubes")
            lone = first("lone edge", range(3), lambda h: labels.count(labels[h]) == 1)
            g1, g2 = [h for h in range(3) if h != lone]
            ctx = base.rebased(labels[g1])
            step.transform = ctx.describe()
            j = ctx.label(pairs[lone][0])
            asm.add(self.range_two_path(ctx.range(0, j - 1), pairs[g1], pairs[g2]),
                    self.range_path(ctx.range(j, k - 1), *pairs[lone]))
        else:
            self._case(step, "three subcubes")
            order = sorted(range(3), key=lambda h: labels[h])
            ctx = base.rebased(labels[order[0]])
            step.transform = ctx.describe()
            bounds = [ctx.label(pairs[h][0]) for h in order] + [k]
            for h, lo, hi in zip(order, bounds, bounds[1:]):
                asm.add(self.range_path(ctx.range(lo, hi - 1), *pairs[h]))
        return asm.paths(pairs, cube)

    def _lemma15_cycle(self, step, ctx: SplitContext, pairs, edges, M) -> PathSystem:
        """三条边都在 Q[0] 且 Q[0] 中匹配边较多：先取经过它们的圈，再拆成 6-路径"""
        k = ctx.k
        shape = ctx.shape
        cube = ctx.cube
        for flip in (False, True):
            c = ctx.rebased(0, flip=True) if flip else ctx
            if not (c.cross(M, k - 1) or c.cross(M, k - 2) or c.part(M, k - 1)):
                ctx = c
                break
        else:
            raise ChoiceExhausted("reflection keeping the last subcube free")
        step.transform = ctx.describe()
        at = ctx.at
        M0 = ctx.part(M, 0)
        M1 = ctx.part(M, 1)
        forest = M0 | set(edges)
        C0 = Route.of(self._prim(K.HAM_CYCLE_THROUGH_FOREST, ctx.cube_of(0), (), forest))

        # 沿圈正向依次遇到三条边，每条边先遇到的端点是“撇”端
        edge_set = set(edges)
        seen = [(a, b) for a, b in zip(C0.order, C0.order[1:] + C0.order[:1]) if Edge.of(a, b) in edge_set]
        starts = [seen[h][1] for h in range(3)]
        stops = [seen[(h + 1) % 3][0] for h in range(3)]
        pieces = [Route(C0.segment(starts[h], stops[h])) for h in range(3)]

        crossing = ctx.cross(M, 0)
        s0 = pivot(ctx, only("M ∩ E_d(0,1)", crossing), 0) if crossing else None
        picks = []
        for h, piece in enumerate(pieces):
            cands = [(a, b) for a, b in zip(piece.order, piece.order[1:]) if Edge.of(a, b) not in M0]
            if s0 is not None and s0 in piece:
                cands = [cand for cand in cands if s0 in cand]
            picks.append(first(f"edge on piece {h}", cands))

        even = shape.is_bipartite
        r = first("balanced pair", range(3),
                  lambda rr: not even or parity(shape, picks[rr][0]) != parity(shape, picks[(rr + 2) % 3][1]))
        (a0, a0p), (b0, b0p), (c0, c0p) = picks[r], picks[(r + 1) % 3], picks[(r + 2) % 3]
        step.note("a_0 a_0'", (a0, a0p))
        step.note("b_0 b_0'", (b0, b0p))
        step.note("c_0 c_0'", (c0, c0p))
        cut_set = {Edge.of(a0, a0p), Edge.of(b0, b0p), Edge.of(c0, c0p)}
        asm = Assembly(shape).add(C0).cut(*[tuple(e) for e in edges]).cut((a0, a0p), (b0, b0p), (c0, c0p))
        last = k - 1

        def last_two_path():
            links = [(a0p, at(a0p, last)), (b0, at(b0, last)), (b0p, at(b0p, last)), (c0, at(c0, last))]
            two = self.subcube_two_path(ctx.subcube(last), (at(a0p, last), at(b0, last)),
                                        (at(b0p, last), at(c0, last)))
            asm.add(two).link(*links)

        a1, c1p = at(a0, 1), at(c0p, 1)
        if s0 is None:
            last_two_path()
            if Edge.of(a1, c1p) not in M1:
                self._case(step, "direct")
                mid = self.lemma9(ctx.range(1, k - 2), a1, c1p, ctx.inner(M, 1, k - 2))
                asm.add(mid).link((a0, a1), (c0p, c1p))
                return asm.paths(pairs, cube)
            self._case(step, "a_1c_1' in M_1")

            def ok_r(e: Edge) -> bool:
                if e in M0 or e in cut_set:
                    return False
                return not ({a1, c1p} & set(proj(ctx, e, 1)))

            r0, r0p = first("r_0 r_0'", route_edges(pieces), ok_r)
            step.note("r_0 r_0'", (r0, r0p))
            r1, r1p = at(r0, 1), at(r0p, 1)
            R = Route.of(self.lemma13(ctx.cube_of(1), r1, r1p, a1, c1p, M1 - {Edge.of(a1, c1p)}))
            t1, t1p = first("t_1 t_1'", R.edges())
            step.note("t_1 t_1'", (t1, t1p))
            t2, t2p = at(t1, 2), at(t1p, 2)
            fill = self.range_path(ctx.range(2, k - 2), t2, t2p)
            asm.add(R, fill).link((a0, a1), (c0p, c1p), (a1, c1p))
            asm.detour(r0, r0p, r1, r1p).detour(t1, t1p, t2, t2p)
            return asm.paths(pairs, cube)

        if s0 in (a0, c0p):
            self._case(step, "crossing at a_0 or c_0'")
            last_two_path()
            mid = self.range_path(ctx.range(1, k - 2), a1, c1p)
            asm.add(mid).link((a0, a1), (c0p, c1p))
            return asm.paths(pairs, cube)

        self._case(step, "crossing elsewhere")
        two = self.subcube_two_path(ctx.subcube(1), (at(a0p, 1), at(b0, 1)), (at(b0p, 1), at(c0, 1)))
        a_last, c_last = at(a0, last), at(c0p, last)
        tail = self.range_path(ctx.range(2, last), a_last, c_last)
        asm.add(two, tail)
        asm.link((a0p, at(a0p, 1)), (b0, at(b0, 1)), (b0p, at(b0p, 1)), (c0, at(c0, 1)),
                 (a0, a_last), (c0p, c_last))
        return asm.paths(pairs, cube)

    # -- Lemma 16 ------------------------------------------------------------

    def lemma16(self, cube: CubeRegion, x: Vertex, y: Vertex, M) -> PathSystem:
        """x,y 距离不超过 3 时经过至多 2n-8 条匹配边的生成 x,y-路径"""
        M = frozenset(M)
        return self._run("L16", cube, [(x, y)], M, lambda step: self._lemma16(step, cube, x, y, M),
                         check=lambda: check_lemma16(cube, x, y, M))

    def _lemma16(self, step, cube, x, y, M) -> PathSystem:
        n = cube.dim
        if n <= 5:
            self._case(step, "n<=5")
            return self.lemma11(cube, x, y, M)
        d = select_split_dimension(cube, M, cap=1, admissible=lambda dd: x[dd - 1] == y[dd - 1])
        base = cube.split(d)
        ctx = base.rebased(base.label(x))
        k = ctx.k
        if ctx.cross(M, k - 1):
            ctx = ctx.rebased(0, flip=True)
        step.transform = ctx.describe()
        M0 = ctx.part(M, 0)
        extra = len(M0) - (2 * n - 10)
        if extra <= 0:
            self._case(step, "Case 1")
            P = Route.of(self.lemma16(ctx.cube_of(0), x, y, M0))
            return self._lemma16_bridge(step, ctx, P, x, y, M)
        free = [e for e in sorted(M0) if not ({e.u, e.v} & {x, y})]
        if extra == 1:
            self._case(step, "Case 2")
            uv = first("u_0 v_0", free)
            P = Route.of(self.lemma16(ctx.cube_of(0), x, y, M0 - {uv}))
            if P.has_edge(*uv):
                return self._lemma16_bridge(step, ctx, P, x, y, M)
            return self._lemma16_absorb(step, ctx, P, x, y, uv, M)

        self._case(step, "Case 3")
        if len(free) < 2:
            raise ChoiceExhausted("two matching edges away from x,y")
        uv, st = free[:2]
        step.note("u_0v_0 s_0t_0", (uv.u, uv.v, st.u, st.v))
        P = Route.of(self.lemma16(ctx.cube_of(0), x, y, M0 - {uv, st}))
        off = [e for e in (uv, st) if not P.has_edge(*e)]
        if not off:
            return self._lemma16_bridge(step, ctx, P, x, y, M)
        if len(off) == 1:
            return self._lemma16_absorb(step, ctx, P, x, y, off[0], M)

        (u, v), (s, t) = uv, st
        near = {z: P.closer(z, x) for z in (u, v, s, t)}
        asm = Assembly(cube.shape).add(P)
        asm.cut(*[(z, near[z]) for z in (u, v, s, t)]).link((u, v), (s, t))
        a0 = asm.walk(x)[-1]
        b0 = asm.walk(y)[-1]
        rest = [pair for pair in asm.components() if not ({x, y} & set(pair))]
        c0, d0 = only("third piece", rest)
        step.note("a_0 b_0 c_0 d_0", (a0, b0, c0, d0))
        up = lambda w: ctx.at(w, 1)
        two = self.subcube_two_path(ctx.subcube(1), (up(a0), up(c0)), (up(b0), up(d0)))
        r, r2 = first("r_1 r_1'", route_edges(Route.all_of(two)))
        step.note("r_1 r_1'", (r, r2))
        r3, r4 = ctx.at(r, 2), ctx.at(r2, 2)
        tail = self.range_path(ctx.range(2, k - 1), r3, r4)
        asm.add(two, tail).link((a0, up(a0)), (b0, up(b0)), (c0, up(c0)), (d0, up(d0)))
        asm.detour(r, r2, r3, r4)
        return asm.paths([(x, y)], cube)

    def _lemma16_bridge(self, step, ctx: SplitContext, P: Route, x, y, M) -> PathSystem:
        k = ctx.k
        w, w2 = self.bridge_at("w_0 w_0'", ctx, [P], 0, 1, M)
        step.note("w_0 w_0'", (w, w2))
        w3, w4 = ctx.at(w, 1), ctx.at(w2, 1)
        tail = self.range_path_m(ctx.range(1, k - 1), w3, w4, ctx.inner(M, 1, k - 1))
        return Assembly(ctx.shape).add(P, tail).detour(w, w2, w3, w4).paths([(x, y)], ctx.cube)

    def _lemma16_absorb(self, step, ctx: SplitContext, P: Route, x, y, uv: Edge, M) -> PathSystem:
        """把不在路径上的匹配边 uv 接入：断开 u,v 各一条路径边，缺口经 Q[1,k-1] 补上"""
        k = ctx.k
        up = lambda z: ctx.at(z, 1)
        u, v = uv
        inside = set(P.segment(u, v))
        options = [(a, b) for a in P.neighbors(u) for b in P.neighbors(v) if (a in inside) != (b in inside)]
        crossing = ctx.cross(M, 0)
        asm = Assembly(ctx.shape).add(P).link((u, v))
        if not crossing:
            a, b = first("u_0' v_0'", options, lambda o: Edge.of(up(o[0]), up(o[1])) not in M)
        else:
            w = pivot(ctx, only("M ∩ E_d(0,1)", crossing), 0)
            if P.dist_to_edge(w, u, v) == 1:
                a, b = first("u_0' v_0'", options, lambda o: w in o)
            else:
                self._case(step, "three bridges")
                a, b = first("u_0' v_0'", options)
                w2 = first("w_0'", P.neighbors(w), lambda z: len({a, b, w, z}) == 4)
                step.note("u_0' v_0' w_0'", (a, b, w2))
                two = self.range_two_path(ctx.range(1, k - 1), (up(a), up(b)), (up(w), up(w2)))
                asm.add(two).cut((u, a), (v, b), (w, w2))
                asm.link((a, up(a)), (b, up(b)), (w, up(w)), (w2, up(w2)))
                return asm.paths([(x, y)], ctx.cube)
        step.note("u_0' v_0'", (a, b))
        tail = self.lemma9(ctx.range(1, k - 1), up(a), up(b), ctx.inner(M, 1, k - 1))
        asm.add(tail).cut((u, a), (v, b)).link((a, up(a)), (b, up(b)))
        return asm.paths([(x, y)], ctx.cube)


# ---------------------------------------------------------------------------
# 公共入口
# ---------------------------------------------------------------------------

def as_region(shape_or_cube) -> CubeRegion:
    if isinstance(shape_or_cube, CubeRegion):
        return shape_or_cube
    if isinstance(shape_or_cube, CubeShape):
        return CubeRegion(shape_or_cube)
    raise InputError(f"expected a shape or cube region, got {type(shape_or_cube).__name__}")


def parse_matching(shape: CubeShape, M) -> frozenset:
    """任意端点对序列规范化为 Edge 集合

    Raises:
        InputError: 顶点不合法或端点不相邻
    """
    return frozenset(make_edge(shape, a, b) for a, b in M)


def _vertices(shape: CubeShape, *vs) -> List[Vertex]:
    return [shape.validate_vertex(v) for v in vs]


def lemma9_range_path_m1(view: RangeView, x, y, M=(), **options) -> PathSystem:
    x, y = _vertices(view.shape, x, y)
    return Constructor(**options).lemma9(view, x, y, parse_matching(view.shape, M))


def lemma10_range_2path_m1(view: RangeView, x, y, u, v, M=(), **options) -> PathSystem:
    x, y, u, v = _vertices(view.shape, x, y, u, v)
    return Constructor(**options).lemma10(view, x, y, u, v, parse_matching(view.shape, M))


def lemma11_path_m2(shape, x, y, M=(), **options) -> PathSystem:
    cube = as_region(shape)
    x, y = _vertices(cube.shape, x, y)
    return Constructor(**options).lemma11(cube, x, y, parse_matching(cube.shape, M))


def lemma12_range_path_m2(view: RangeView, x, y, M=(), **options) -> PathSystem:
    x, y = _vertices(view.shape, x, y)
    return Constructor(**options).lemma12(view, x, y, parse_matching(view.shape, M))


def lemma13_path_minus_uv(shape, x, y, u, v, M=(), **options) -> PathSystem:
    cube = as_region(shape)
    x, y, u, v = _vertices(cube.shape, x, y, u, v)
    return Constructor(**options).lemma13(cube, x, y, u, v, parse_matching(cube.shape, M))


def lemma14_2path_same_parity(shape, x, y, u, v, **options) -> PathSystem:
    cube = as_region(shape)
    x, y, u, v = _vertices(cube.shape, x, y, u, v)
    return Constructor(**options).lemma14(cube, x, y, u, v)


def lemma15_3path_matching(shape, u, u2, v, v2, w, w2, M=(), **options) -> PathSystem:
    cube = as_region(shape)
    u, u2, v, v2, w, w2 = _vertices(cube.shape, u, u2, v, v2, w, w2)
    return Constructor(**options).lemma15(cube, [(u, u2), (v, v2), (w, w2)], parse_matching(cube.shape, M))


def lemma16_path_dist3(shape, x, y, M=(), **options) -> PathSystem:
    cube = as_region(shape)
    x, y = _vertices(cube.shape, x, y)
    return Constructor(**options).lemma16(cube, x, y, parse_matching(cube.shape, M))


@dataclass(frozen=True)
class LemmaOp:
    """命令行与扫描使用的引理登记项"""
    name: str
    on_range: bool          # 区间类引理需要 split=(d, p, q)
    arity: int              # 端点个数
    with_matching: bool
    check: Callable
    method: str

    def region(self, shape: CubeShape, split_at: Optional[Sequence[int]]):
        if not self.on_range:
            return CubeRegion(shape)
        if split_at is None or len(split_at) != 3:
            raise InputError(f"{self.name} needs a split (d, p, q)")
        d, p, q = split_at
        return split(shape, d).range(p, q)

    def arguments(self, region, ends: Sequence[Vertex], M) -> tuple:
        if self.name == "lemma15":
            pairs = [(ends[0], ends[1]), (ends[2], ends[3]), (ends[4], ends[5])]
            return region, pairs, M
        if self.with_matching:
            return (region, *ends, M)
        return (region, *ends)

    def validate(self, region, ends: Sequence[Vertex], M) -> VerifyReport:
        return self.check(*self.arguments(region, ends, M))

    def spec(self, region, ends: Sequence[Vertex], M) -> ConstraintSpec:
        """引理输出应满足的约束规格"""
        if self.name == "lemma13":
            return primitive_spec(region, [(ends[0], ends[1])], M, forbidden=ends[2:])
        pairs = [(ends[i], ends[i + 1]) for i in range(0, self.arity, 2)]
        return primitive_spec(region, pairs, M)


LEMMA_OPS: Dict[str, LemmaOp] = {op.name: op for op in (
    LemmaOp("lemma9", True, 2, True, check_lemma9, "lemma9"),
    LemmaOp("lemma10", True, 4, True, check_lemma10, "lemma10"),
    LemmaOp("lemma11", False, 2, True, check_lemma11, "lemma11"),
    LemmaOp("lemma12", True, 2, True, check_lemma12, "lemma12"),
    LemmaOp("lemma13", False, 4, True, check_lemma13, "lemma13"),
    LemmaOp("lemma14", False, 4, False, check_lemma14, "lemma14"),
    LemmaOp("lemma15", False, 6, True, check_lemma15, "lemma15"),
    LemmaOp("lemma16", False, 2, True, check_lemma16, "lemma16"),
)}


def run_lemma(name: str, shape: CubeShape, endpoints: Sequence, M=(), split_at: Optional[Sequence[int]] = None,
              *, provider: Optional[PrimitiveProvider] = None, policy=Config.DEFAULT_POLICY,
              budget: Optional[SearchBudget] = None,
              base_n: int = Config.CONSTRUCTION_BASE_N) -> Tuple[PathSystem, ConstructionTrace]:
    """按名称运行一条引理，返回 (路径系统, 轨迹)

    Raises:
        InputError: 未知引理、端点个数不符或输入不合法
        PreconditionViolation: 引理前提不成立
    """
    op = LEMMA_OPS.get(name)
    if op is None:
        raise InputError(f"unknown lemma {name!r}; choose from {', '.join(LEMMA_OPS)}")
    ends = _vertices(shape, *endpoints)
    if len(ends) != op.arity:
        raise InputError(f"{name} takes {op.arity} endpoints, got {len(ends)}")
    M = parse_matching(shape, M)
    if M and not op.with_matching:
        raise InputError(f"{name} takes no matching")
    region = op.region(shape, split_at)
    budget = budget or SearchBudget(Config.SEARCH_BUDGET_NODES)
    constructor = Constructor(provider, policy, budget, base_n)
    result = getattr(constructor, op.method)(*op.arguments(region, ends, M))
    arguments = {
        "n": shape.n,
        "k": shape.k,
        "endpoints": [list(v) for v in ends],
        "matching": [[list(e.u), list(e.v)] for e in sorted(M)],
        "split": list(split_at) if split_at is not None else None,
        "policy": constructor.policy.value,
        "base_n": base_n,
        "seed": budget.seed,
        "budget_nodes": budget.max_nodes,
    }
    logger.info("%s 完成: %d 条路径, 回退 %d 次", name, result.m, constructor.fallbacks)
    return result, constructor.trace(name, arguments, result.digest())
