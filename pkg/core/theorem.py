#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
经过预设匹配的哈密顿圈

TheoremBuilder 在 Constructor 之上实现主定理的归纳构造：
1. 选择 |M ∩ E_d| <= 3 的维度 d，以匹配边最多的子立方体为 Q[0]
2. 在 Q[0] 上递归得到 C_0，它经过 M_0 中除至多四条“保留边”外的全部边
3. 按 C_0 上缺失的保留边条数分派：0 条 Claim 1，1 条 Claim 2，
   2 条 Claim 3，3 条 Claim 4，4 条收尾构造
4. n <= base_n 或 M 为空时直接交给 provider

所有子构造都经过前提检查与证书复核，relaxed 策略下失败的子问题整体回退。
"""

import logging
from itertools import product
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from config.settings import Config
from core.assembly import Assembly, Route, balanced_pairing, first
from core.certify import check_cycle, check_matching
from core.cube import (
    CubeRegion,
    Edge,
    RangeView,
    SplitContext,
    is_adjacent,
    select_split_dimension,
    vertex_set,
)
from core.exceptions import AssemblyError, InputError
from core.lemmas import (
    LEMMA_OPS,
    Clauses,
    Constructor,
    K,
    NONE,
    as_region,
    between,
    facing,
    only,
    parse_matching,
    pivot,
    proj,
    run_lemma,
)
from core.primitives import PrimitiveProvider, primitive_spec
from models.data_models import (
    ConstructionTrace,
    CubeShape,
    HamCycleCertificate,
    PathSystem,
    SearchBudget,
    SideCondition,
    Vertex,
    VerifyReport,
)

logger = logging.getLogger(__name__)

LAST = SideCondition.LAST_TRACE_PATH


# ---------------------------------------------------------------------------
# 前提
# ---------------------------------------------------------------------------

def matching_bound(n: int) -> int:
    """可嵌入的匹配规模上限 max(0, 4n-20)"""
    return max(0, 4 * n - 20)


def check_theorem3(cube: CubeRegion, M) -> VerifyReport:
    c = Clauses()
    c.require("n >= 5", cube.dim >= 5)
    c.require("k >= 4", cube.shape.k >= 4)
    c.require("matching", lambda: bool(check_matching(cube.shape, M)))
    c.require("edge outside region", lambda: all(cube.is_edge(e.u, e.v) for e in M))
    c.require("|M| <= 4n-20", len(M) <= matching_bound(cube.dim))
    return c.report()


def check_claim(ctx: SplitContext, C0: HamCycleCertificate, M, missing: Sequence[Edge]) -> VerifyReport:
    """C_0 经过 M_0 中除 missing 外的边，且 missing 不在 C_0 上"""
    c = Clauses()
    M0 = ctx.part(M, 0)
    bound = max(0, 2 * ctx.n - 10)
    c.require("k >= 4", ctx.k >= 4)
    c.require("matching", lambda: bool(check_matching(ctx.shape, M)))
    c.require("missing edges in M_0", set(missing) <= M0)
    c.require("C_0 through M_0",
              lambda: bool(check_cycle(C0.order, primitive_spec(ctx.cube_of(0), (), M0.difference(missing)))))
    c.require("missing edges off C_0",
              lambda: not any(Route.of(C0).has_edge(e.u, e.v) for e in missing))
    c.require("|M ∩ E_d| <= 3", len(ctx.d_edges(M)) <= 3)
    c.require("|M_i| <= 2n-10", all(len(ctx.part(M, i)) <= bound for i in range(1, ctx.k)))
    if missing:
        c.require(f"|M| - |M_0| <= {4 - len(missing)}", len(M) - len(M0) <= 4 - len(missing))
    return c.report()


def check_claim_a(view: RangeView, c: Vertex, x: Vertex, y: Vertex, M) -> VerifyReport:
    ctx, p, q = view.ctx, view.p, view.q
    cl = Clauses()
    cl.require("p < q", p < q)
    cl.require("q - p odd", not view.shape.is_bipartite or (q - p) % 2 == 1)
    cl.require("x in Q[p]", lambda: x in view and ctx.label(x) == p)
    cl.require("y in Q[q]", lambda: y in view and ctx.label(y) == q)
    cl.require("x adjacent to c_p", lambda: is_adjacent(view.shape, x, ctx.at(c, p)))
    cl.require("y adjacent to c_q", lambda: is_adjacent(view.shape, y, ctx.at(c, q)))
    cl.require("matching", lambda: bool(check_matching(view.shape, M)))
    cl.require("edge outside region", lambda: all(view.is_edge(e.u, e.v) for e in M))
    cl.require("no d-edges in M", lambda: not ctx.d_edges(M))
    cl.require("|M_i| <= 2n-10", lambda: all(len(ctx.part(M, i)) <= max(0, 2 * ctx.n - 10)
                                              for i in view.labels()))
    return cl.report()


# ---------------------------------------------------------------------------
# 小工具
# ---------------------------------------------------------------------------

def mirrored(ctx: SplitContext) -> SplitContext:
    """Q[0] 不动、标号反向：边界 i|i+1 变为 k-1-i|k-i"""
    return ctx.rebased(0, flip=True)


def layer_edges(asm: Assembly, ctx: SplitContext, i: int) -> List[Edge]:
    """边袋中落在 Q[i] 内的边，按规范顺序"""
    return sorted(Edge.of(a, b) for a, b in asm.graph.edges()
                  if ctx.label(a) == i and ctx.label(b) == i)


def layer_nbrs(asm: Assembly, ctx: SplitContext, v: Vertex, i: int) -> List[Vertex]:
    return sorted(w for w in asm.graph.neighbors(v) if ctx.label(w) == i)


def variants(ends: Sequence[Vertex]) -> Iterator[Tuple[Vertex, ...]]:
    """生成 m-路径端点序列的等价标号：整体反向或按路径轮换，衔接对集合不变"""
    ends = tuple(ends)
    for seq in (ends, ends[::-1]):
        for s in range(0, len(seq), 2):
            yield seq[s:] + seq[:s]


def crossing_pivots(ctx: SplitContext, M, i: int, label: int) -> List[Vertex]:
    return sorted(pivot(ctx, e, label) for e in ctx.cross(M, i))


# ---------------------------------------------------------------------------
# 构造
# ---------------------------------------------------------------------------

class TheoremBuilder(Constructor):
    """主定理的递归构造"""

    # -- 递归入口 ------------------------------------------------------------

    def theorem3(self, cube: CubeRegion, M) -> HamCycleCertificate:
        M = frozenset(M)
        return self._run("T3", cube, (), M, lambda step: self._theorem3(step, cube, M),
                         check=lambda: check_theorem3(cube, M))

    def _theorem3(self, step, cube: CubeRegion, M) -> HamCycleCertificate:
        if not M or cube.dim <= self.base_n:
            self._case(step, "base")
            return self._prim(K.HAM_CYCLE_THROUGH_MATCHING, cube, (), M)
        d = select_split_dimension(cube, M, cap=3)
        base = cube.split(d)
        heavy = max(range(cube.shape.k), key=lambda i: (len(base.part(M, i)), -i))
        ctx = base.rebased(heavy)
        step.note("d", d)
        step.transform = ctx.describe()
        M0 = ctx.part(M, 0)
        held = sorted(M0)[:max(0, len(M0) - matching_bound(cube.dim - 1))]
        C0 = self.theorem3(ctx.cube_of(0), M0.difference(held))
        ring = Route.of(C0)
        missing = [e for e in held if not ring.has_edge(e.u, e.v)]
        step.note("|M_0|", len(M0))
        step.note("missing", len(missing))
        logger.debug("%s: d=%d |M_0|=%d 缺失 %d", cube.describe(), d, len(M0), len(missing))
        if not missing:
            return self.claim1(C0, ctx, M)
        if len(missing) == 1:
            return self.claim2(C0, missing[0], ctx, M)
        if len(missing) == 2:
            return self.claim3(C0, missing, ctx, M)
        if len(missing) == 3:
            return self.claim4(C0, missing, ctx, M)
        return self.endgame(C0, missing, ctx, M)

    def _claim(self, label: str, ctx: SplitContext, C0, M, missing, build) -> HamCycleCertificate:
        M = frozenset(M)
        return self._run(label, ctx.cube, (), M, build, check=lambda: check_claim(ctx, C0, M, missing))

    # -- 公共片段 ------------------------------------------------------------

    def attach(self, asm: Assembly, ctx: SplitContext, i: int, p: int, q: int, M, name: str,
               side: SideCondition = NONE, through=None) -> Tuple[Vertex, Vertex]:
        """经 Q[i] 中的一条迹边 ss' 把区间 Q[p,q] 接入边袋

        Q[i] 与区间相邻端之间有 M 的 d-边时，以其端点为 s。
        through 默认是 L7，也可以换成 L9/L12。
        """
        j = p if (i + 1) % ctx.k == p else q
        crossing = between(ctx, M, i, j)
        if crossing:
            s = pivot(ctx, only(name, crossing), i)
            s2 = first(name, layer_nbrs(asm, ctx, s, i))
        else:
            s, s2 = first(name, layer_edges(asm, ctx, i),
                          lambda e: e not in M and proj(ctx, e, j) not in M)
        self.current.note(name, (s, s2))
        s3, s4 = ctx.at(s, j), ctx.at(s2, j)
        view = facing(ctx.range(p, q), s3)
        inner = ctx.inner(M, p, q)
        through = through or self.range_path_m
        tail = through(view, s3, s4, inner, side=side) if side != NONE else through(view, s3, s4, inner)
        asm.add(tail).detour(s, s2, s3, s4)
        return s, s2

    def _pair_bridge(self, asm: Assembly, ctx: SplitContext, j: int, M) -> None:
        """边界 j|j+1 上两条 d-边：C_j 经过 M_j 与三条边，Q[j+1] 上 L5 的 2-路径"""
        a, b = crossing_pivots(ctx, M, j, j)
        Mj, Mn = ctx.part(M, j), ctx.part(M, j + 1)
        layer = ctx.cube_of(j)

        def up(w):
            return ctx.at(w, j + 1)

        blocked = vertex_set(Mj) | {a, b}
        prior = ctx.cross(M, j - 1)
        if prior:
            s = pivot(ctx, only("s_{j-1}", prior), j - 1)
            s2 = first("s_{j-1}'", layer_nbrs(asm, ctx, s, j - 1))
        else:
            s, s2 = first("s_{j-1}s_{j-1}'", layer_edges(asm, ctx, j - 1),
                          lambda e: e not in M and not (set(proj(ctx, e, j)) & blocked))
        s3, s4 = ctx.at(s, j), ctx.at(s2, j)
        a2 = first("a_j'", layer.neighbors(a), lambda w: w not in blocked and w not in (s3, s4))
        b2 = first("b_j'", layer.neighbors(b),
                   lambda w: w not in blocked and w not in (a2, s3, s4) and Edge.of(up(a2), up(w)) not in Mn)
        self.current.note("s s'", (s, s2))
        self.current.note("a_j'", a2)
        self.current.note("b_j'", b2)
        forest = Mj | {Edge.of(s3, s4), Edge.of(a, a2), Edge.of(b, b2)}
        ring = self._prim(K.HAM_CYCLE_THROUGH_FOREST, layer, (), forest)
        two = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(j + 1),
                         [(up(a), up(a2)), (up(b), up(b2))], Mn)
        asm.add(ring, two).cut((s, s2), (s3, s4), (a, a2), (b, b2))
        asm.link((s, s3), (s2, s4), (a, up(a)), (a2, up(a2)), (b, up(b)), (b2, up(b2)))

    def _triple_bridge(self, asm: Assembly, ctx: SplitContext, j: int, M) -> None:
        """边界 j|j+1 上三条 d-边：C_j 经过 M_j 与四条边，Q[j+1] 上 L15 的 3-路径"""
        a, b, c = crossing_pivots(ctx, M, j, j)
        Mj, Mn = ctx.part(M, j), ctx.part(M, j + 1)
        layer = ctx.cube_of(j)

        def up(w):
            return ctx.at(w, j + 1)

        a2 = first("a_j'", layer.neighbors(a), lambda w: w not in (b, c))
        b2 = first("b_j'", layer.neighbors(b),
                   lambda w: w not in (a, a2, c) and Edge.of(up(a2), up(w)) not in Mn)
        c2 = first("c_j'", layer.neighbors(c),
                   lambda w: w not in (a, a2, b, b2)
                   and not ({Edge.of(up(a2), up(w)), Edge.of(up(b2), up(w))} & Mn))
        forest = Mj | {Edge.of(a, a2), Edge.of(b, b2), Edge.of(c, c2)}
        used = vertex_set(forest)
        w, w2 = first("w_{j-1}w_{j-1}'", layer_edges(asm, ctx, j - 1),
                      lambda e: e not in M and not (set(proj(ctx, e, j)) & used))
        w3, w4 = ctx.at(w, j), ctx.at(w2, j)
        for name, value in (("w w'", (w, w2)), ("a_j'", a2), ("b_j'", b2), ("c_j'", c2)):
            self.current.note(name, value)
        ring = self._prim(K.HAM_CYCLE_THROUGH_FOREST, layer, (), forest | {Edge.of(w3, w4)})
        three = self.lemma15(ctx.cube_of(j + 1), [(up(a), up(a2)), (up(b), up(b2)), (up(c), up(c2))], Mn)
        asm.add(ring, three).cut((w, w2), (w3, w4), (a, a2), (b, b2), (c, c2))
        asm.link((w, w3), (w2, w4), (a, up(a)), (a2, up(a2)), (b, up(b)), (b2, up(b2)),
                 (c, up(c)), (c2, up(c2)))

    def _split_pair(self, asm: Assembly, ctx: SplitContext, j: int, M, through=None) -> None:
        """边界 j|j+1 上两条 d-边 a_j a_{j+1}, b_j b_{j+1}，把 Q[j+1,k-1] 接入"""
        k = ctx.k
        a, b = crossing_pivots(ctx, M, j, j)
        rest = ctx.range(j + 1, k - 1)

        def up(w):
            return ctx.at(w, j + 1)

        if asm.graph.has_edge(a, b):
            self.current.note("a_j b_j", "adjacent")
            through = through or self.range_path_m
            tail = through(rest, up(a), up(b), ctx.inner(M, j + 1, k - 1))
            asm.add(tail).detour(a, b, up(a), up(b))
            return
        a2, b2 = first("a_j' b_j'", product(layer_nbrs(asm, ctx, a, j), layer_nbrs(asm, ctx, b, j)),
                       lambda pair: pair[0] != pair[1])
        self.current.note("a_j' b_j'", (a2, b2))
        two = self.range_two_path(rest, (up(a), up(a2)), (up(b), up(b2)))
        asm.add(two).detour(a, a2, up(a), up(a2)).detour(b, b2, up(b), up(b2))

    # -- Claim 1 -------------------------------------------------------------

    def claim1(self, C0: HamCycleCertificate, ctx: SplitContext, M) -> HamCycleCertificate:
        """C_0 经过全部 M_0：把其余子立方体接入"""
        return self._claim("Claim 1", ctx, C0, M, (), lambda step: self._claim1(step, C0, ctx, frozenset(M)))

    def _claim1(self, step, C0, ctx: SplitContext, M) -> HamCycleCertificate:
        k = ctx.k
        ring = Route.of(C0)
        asm = Assembly(ctx.shape).add(C0)
        counts = [len(ctx.cross(M, i)) for i in range(k)]
        top = max(counts)

        if top <= 1:
            self._case(step, "Case 1")
            if counts[0] and counts[k - 1]:
                a = pivot(ctx, only("a_0", ctx.cross(M, 0)), 0)
                c = pivot(ctx, only("c_0", ctx.cross(M, k - 1)), 0)
                a2, c2 = first("a_0' c_0'", product(ring.neighbors(a), ring.neighbors(c)),
                               lambda pair: Edge.of(a, pair[0]) != Edge.of(c, pair[1]))
                j = first("j", range(1, k - 1), lambda i: not counts[i])
                step.note("j", j)
                left = self.range_path_m(ctx.range(1, j), ctx.at(a, 1), ctx.at(a2, 1), ctx.inner(M, 1, j))
                right = self.range_path_m(ctx.range(j + 1, k - 1), ctx.at(c, k - 1), ctx.at(c2, k - 1),
                                          ctx.inner(M, j + 1, k - 1))
                asm.add(left, right)
                asm.detour(a, a2, ctx.at(a, 1), ctx.at(a2, 1))
                asm.detour(c, c2, ctx.at(c, k - 1), ctx.at(c2, k - 1))
            else:
                if counts[k - 1]:
                    ctx = mirrored(ctx)
                    step.transform = ctx.describe()
                self.attach(asm, ctx, 0, 1, k - 1, M, "w_0 w_0'")
            return asm.cycle()

        j = counts.index(top)
        if top == 2:
            self._case(step, "Case 2")
            if j in (0, k - 1):
                self._case(step, "Subcase 2.1")
                if j == k - 1:
                    ctx = mirrored(ctx)
                    step.transform = ctx.describe()
                self._pair_up(asm, ctx, ring, M)
                self.attach(asm, ctx, 0 if ctx.cross(M, k - 1) else 1, 2, k - 1, M, "s s'")
                return asm.cycle()
            self._case(step, "Subcase 2.2")
            if any(counts[i] for i in range(j + 1, k)):
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
                j = k - 1 - j
            if j > 1:
                self.attach(asm, ctx, 0, 1, j - 1, M, "r_0 r_0'", side=LAST)
            self._pair_bridge(asm, ctx, j, M)
            if j < k - 2:
                self.attach(asm, ctx, j + 1, j + 2, k - 1, M, "t t'")
            return asm.cycle()

        self._case(step, "Case 3")
        if j not in (0, k - 1):
            self._case(step, "Subcase 3.2")
            if j > 1:
                self.attach(asm, ctx, 0, 1, j - 1, M, "r_0 r_0'", side=LAST)
            self._triple_bridge(asm, ctx, j, M)
            if j < k - 2:
                self.attach(asm, ctx, j + 1, j + 2, k - 1, M, "t t'")
            return asm.cycle()

        self._case(step, "Subcase 3.1")
        if j == k - 1:
            ctx = mirrored(ctx)
            step.transform = ctx.describe()
        a, b, c = crossing_pivots(ctx, M, 0, 0)
        M1 = ctx.part(M, 1)

        def up(w):
            return ctx.at(w, 1)

        adjacent = [t for t in ((a, b, c), (a, c, b), (b, c, a)) if ring.has_edge(t[0], t[1])]
        if adjacent:
            self._case(step, "Subcase 3.1.1")
            a, b, c = adjacent[0]
            c2 = first("c_0'", ring.neighbors(c), lambda w: w not in (a, b))
            two = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(1), [(up(a), up(b)), (up(c), up(c2))], M1)
            asm.add(two).cut((a, b), (c, c2)).link((a, up(a)), (b, up(b)), (c, up(c)), (c2, up(c2)))
            self.attach(asm, ctx, 0, 2, k - 1, M, "s_0 s_0'")
            return asm.cycle()

        self._case(step, "Subcase 3.1.2")
        self._pair_up(asm, ctx, ring, M, (a, b))
        ring01 = Route.of(asm.cycle())
        c1 = up(c)
        c2, c3 = first("c_0' c_1''", [(ring01.next(c), ring01.next(c1)), (ring01.prev(c), ring01.prev(c1))],
                       lambda o: ctx.label(o[0]) == 0 and ctx.label(o[1]) == 1)
        step.note("c_0' c_1''", (c2, c3))
        chain = self.claim_a(ctx.range(2, k - 1), c, ctx.at(c3, 2), ctx.at(c2, k - 1), ctx.inner(M, 2, k - 1))
        asm.add(chain).cut((c, c2), (c1, c3))
        asm.link((c, c1), (c3, ctx.at(c3, 2)), (c2, ctx.at(c2, k - 1)))
        return asm.cycle()

    def _pair_up(self, asm: Assembly, ctx: SplitContext, ring: Route, M, pair=None) -> None:
        """边界 0|1 上的两条 d-边：把 Q[1] 接入 C_0 得到 C[0,1]"""
        a, b = pair or crossing_pivots(ctx, M, 0, 0)
        M1 = ctx.part(M, 1)

        def up(w):
            return ctx.at(w, 1)

        if ring.has_edge(a, b):
            path = self.range_path_m(ctx.subcube(1), up(a), up(b), M1)
            asm.add(path).detour(a, b, up(a), up(b))
            return
        around = ring.neighbors(a)
        b2 = first("b_0'", ring.neighbors(b), lambda w: w not in around)
        a2 = first("a_0'", around, lambda w: Edge.of(up(w), up(b2)) not in M1)
        self.current.note("a_0' b_0'", (a2, b2))
        two = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(1), [(up(a), up(a2)), (up(b), up(b2))], M1)
        asm.add(two).detour(a, a2, up(a), up(a2)).detour(b, b2, up(b), up(b2))

    # -- Claim A -------------------------------------------------------------

    def claim_a(self, view: RangeView, c: Vertex, x: Vertex, y: Vertex, M) -> PathSystem:
        """区间内经过各层匹配的生成 x,y-路径，x、y 分别与 c 的投影相邻"""
        M = frozenset(M)
        return self._run("Claim A", view, [(x, y)], M, lambda step: self._claim_a(step, view, c, x, y, M),
                         check=lambda: check_claim_a(view, c, x, y, M))

    def _claim_a(self, step, view: RangeView, c: Vertex, x: Vertex, y: Vertex, M) -> PathSystem:
        ctx, p, q = view.ctx, view.p, view.q
        asm = Assembly(view.shape)
        if q - p == 1:
            self._case(step, "q-p=1")
            s = first("s_p", ctx.cube_of(p).neighbors(x),
                      lambda w: Edge.of(x, w) not in M and ctx.at(w, q) != y
                      and Edge.of(ctx.at(w, q), y) not in M)
            s2 = ctx.at(s, q)
            step.note("s_p", s)
            asm.add(self.lemma16(ctx.cube_of(p), x, s, ctx.part(M, p)),
                    self.lemma16(ctx.cube_of(q), s2, y, ctx.part(M, q)))
            asm.link((s, s2))
        elif view.shape.is_bipartite:
            self._case(step, "k even")
            x2, x3 = ctx.at(x, p + 1), ctx.at(x, p + 2)
            asm.add(self.claim_a(ctx.range(p, p + 1), c, x, x2, ctx.inner(M, p, p + 1)),
                    self.claim_a(ctx.range(p + 2, q), c, x3, y, ctx.inner(M, p + 2, q)))
            asm.link((x2, x3))
        else:
            self._case(step, "k odd")
            s = first("s_p", ctx.cube_of(p).neighbors(ctx.at(c, p)), lambda w: w != x)
            s2 = ctx.at(s, p + 1)
            step.note("s_p", s)
            asm.add(self.lemma16(ctx.cube_of(p), x, s, ctx.part(M, p)),
                    self.claim_a(ctx.range(p + 1, q), c, s2, y, ctx.inner(M, p + 1, q)))
            asm.link((s, s2))
        return asm.paths([(x, y)], view)

    # -- Claim B 与 Claim 2 ----------------------------------------------------

    @staticmethod
    def _open_at(C0, ctx: SplitContext, xy: Edge, option) -> Tuple[Assembly, Route]:
        """C_0 + xy - xx' - yy'，得到生成 x',y'-路径"""
        (x, y), (xo, yo) = xy, option
        asm = Assembly(ctx.shape).add(C0).cut((x, xo), (y, yo)).link((x, y))
        return asm, Route(asm.walk(xo))

    def _claim_b(self, C0, ctx: SplitContext, xy: Edge, options, M, j: int,
                 side: SideCondition = NONE) -> Assembly:
        """由 x_0'y_0' 接出 Q[1] 上的 L12 路径得到 C[0,1]，再接到 Q[j]"""

        def up(w):
            return ctx.at(w, 1)

        M1 = ctx.part(M, 1)
        xo, yo = first("x_0' y_0'", options, lambda o: Edge.of(up(o[0]), up(o[1])) not in M1)
        self.current.note("x_0' y_0'", (xo, yo))
        asm, _ = self._open_at(C0, ctx, xy, (xo, yo))
        path = self.lemma12(ctx.subcube(1), up(xo), up(yo), M1)
        asm.add(path).link((xo, up(xo)), (yo, up(yo)))
        if j > 1:
            self.attach(asm, ctx, 1, 2, j, M, "r_1 r_1'", side=side)
        return asm

    def claim2(self, C0: HamCycleCertificate, xy: Edge, ctx: SplitContext, M) -> HamCycleCertificate:
        """C_0 缺一条匹配边 xy"""
        return self._claim("Claim 2", ctx, C0, M, (xy,),
                           lambda step: self._claim2(step, C0, xy, ctx, frozenset(M)))

    def _claim2(self, step, C0, xy: Edge, ctx: SplitContext, M) -> HamCycleCertificate:
        k = ctx.k
        x, y = xy
        ring = Route.of(C0)
        # x' 与 y' 分处 C_0 上两条 x,y-路径
        options = [(ring.next(x), ring.next(y)), (ring.prev(x), ring.prev(y))]
        outer = len(ctx.cross(M, 0)) + len(ctx.cross(M, k - 1))

        def up(w):
            return ctx.at(w, 1)

        def down(w):
            return ctx.at(w, k - 1)

        if outer == 0:
            self._case(step, "Case 1")
            counts = [len(ctx.cross(M, i)) for i in range(k)]
            top = max(counts)
            if top <= 1:
                self._case(step, "Subcase 1.1")
                if len(ctx.part(M, 1)) > 1:
                    ctx = mirrored(ctx)
                    step.transform = ctx.describe()
                return self._claim_b(C0, ctx, xy, options, M, k - 1).cycle()
            j = counts.index(top)
            if top == 2:
                self._case(step, "Subcase 1.2")
                if ctx.inner(M, j + 1, k - 1):
                    ctx = mirrored(ctx)
                    step.transform = ctx.describe()
                    j = k - 1 - j
                asm = self._claim_b(C0, ctx, xy, options, M, j, side=LAST)
                self._split_pair(asm, ctx, j, M)
                return asm.cycle()
            self._case(step, "Subcase 1.3")
            if j == 1:
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
                j = k - 2
            asm = self._claim_b(C0, ctx, xy, options, M, j - 1, side=LAST)
            self._triple_bridge(asm, ctx, j, M)
            if j < k - 2:
                self.attach(asm, ctx, j + 1, j + 2, k - 1, M, "t t'")
            return asm.cycle()

        if outer == 1:
            self._case(step, "Case 2")
            if ctx.cross(M, k - 1):
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
            a = pivot(ctx, only("a_0", ctx.cross(M, 0)), 0)
            if ring.dist_to_edge(a, x, y) == 1:
                self._case(step, "a_0 next to xy")
                near = [o for o in options if a in o]
                pairs = [i for i in range(1, k - 1) if len(ctx.cross(M, i)) == 2]
                if pairs:
                    asm = self._claim_b(C0, ctx, xy, near, M, pairs[0], side=LAST)
                    self._split_pair(asm, ctx, pairs[0], M)
                else:
                    asm = self._claim_b(C0, ctx, xy, near, M, k - 1)
                return asm.cycle()
            if not ctx.part(M, 1):
                self._case(step, "Subcase 2.1")
                xo, yo = options[0]
                asm, path = self._open_at(C0, ctx, xy, options[0])
                a2 = first("a_0'", path.neighbors(a), lambda w: w not in (xo, yo))
                step.note("a_0'", a2)
                body = self.lemma13(ctx.cube_of(1), up(xo), up(yo), up(a), up(a2), frozenset())
                asm.add(body).cut((a, a2))
                asm.link((xo, up(xo)), (yo, up(yo)), (a, up(a)), (a2, up(a2)), (up(a), up(a2)))
                if len(ctx.cross(M, 1)) == 2:
                    self._split_pair(asm, ctx, 1, M, through=self.lemma12)
                else:
                    self.attach(asm, ctx, 1, 2, k - 1, M, "w_1 w_1'", through=self.lemma12)
                return asm.cycle()
            self._case(step, "Subcase 2.2")
            j = first("j", range(1, k - 1), lambda i: not ctx.cross(M, i))
            (xo, yo), a2 = first("x_0' y_0' a_0'", product(options, ring.neighbors(a)),
                                 lambda o: o[1] not in o[0]
                                 and Edge.of(down(o[0][0]), down(o[0][1])) not in M)
            step.note("x_0' y_0'", (xo, yo))
            step.note("a_0'", a2)
            asm, _ = self._open_at(C0, ctx, xy, (xo, yo))
            left = self.lemma12(ctx.range(1, j), up(a), up(a2), ctx.inner(M, 1, j))
            right = self.lemma12(facing(ctx.range(j + 1, k - 1), down(xo)), down(xo), down(yo),
                                 ctx.inner(M, j + 1, k - 1))
            asm.add(left, right).detour(a, a2, up(a), up(a2)).link((xo, down(xo)), (yo, down(yo)))
            return asm.cycle()

        if outer == 2:
            self._case(step, "Case 3")
            if len(ctx.cross(M, k - 1)) == 2:
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
            j = max(i for i in range(1, k - 1) if not ctx.cross(M, i))
            step.note("j", j)
            if not ctx.cross(M, k - 1):
                return self._claim2_both_up(step, C0, xy, ctx, M, options, j)
            return self._claim2_split(step, C0, xy, ctx, M, options, j)

        self._case(step, "Case 4")
        return self._claim2_three(step, C0, xy, ctx, M, options)

    def _claim2_both_up(self, step, C0, xy, ctx: SplitContext, M, options, j: int) -> HamCycleCertificate:
        """两条 d-边都在边界 0|1"""
        k = ctx.k
        self._case(step, "Subcase 3.1")

        def up(w):
            return ctx.at(w, 1)

        def down(w):
            return ctx.at(w, k - 1)

        a, b = crossing_pivots(ctx, M, 0, 0)
        xo, yo = first("x_0' y_0'", options, lambda o: Edge.of(down(o[0]), down(o[1])) not in M)
        step.note("x_0' y_0'", (xo, yo))
        asm, path = self._open_at(C0, ctx, xy, (xo, yo))
        far = facing(ctx.range(j + 1, k - 1), down(xo))
        if path.has_edge(a, b):
            left = self.lemma9(ctx.range(1, j), up(a), up(b), ctx.inner(M, 1, j))
            right = self.lemma9(far, down(xo), down(yo), ctx.inner(M, j + 1, k - 1))
            asm.add(left, right).detour(a, b, up(a), up(b)).link((xo, down(xo)), (yo, down(yo)))
        elif {xo, yo} == {a, b}:
            body = self.lemma9(ctx.range(1, k - 1), up(xo), up(yo), ctx.inner(M, 1, k - 1))
            asm.add(body).link((xo, up(xo)), (yo, up(yo)))
        elif {xo, yo} & {a, b}:
            if yo in (a, b):
                xo, yo = yo, xo
            other = b if xo == a else a
            b2 = first("b_0'", path.neighbors(other),
                       lambda w: w not in (xo, yo) and Edge.of(up(w), up(yo)) not in M)
            step.note("b_0'", b2)
            two = self.lemma10(ctx.range(1, k - 1), up(xo), up(yo), up(other), up(b2), ctx.inner(M, 1, k - 1))
            asm.add(two).detour(other, b2, up(other), up(b2)).link((xo, up(xo)), (yo, up(yo)))
        else:
            a2, b2 = first("a_0' b_0'", product(path.neighbors(a), path.neighbors(b)),
                           lambda pair: pair[0] != pair[1] and Edge.of(up(pair[0]), up(pair[1])) not in M)
            step.note("a_0' b_0'", (a2, b2))
            if j == 1:
                two = self._prim(K.TWO_PATH_THROUGH_MATCHING, ctx.cube_of(1),
                                 [(up(a), up(a2)), (up(b), up(b2))], ctx.part(M, 1))
            else:
                two = self.lemma10(ctx.range(1, j), up(a), up(a2), up(b), up(b2), ctx.inner(M, 1, j))
            right = self.lemma9(far, down(xo), down(yo), ctx.inner(M, j + 1, k - 1))
            asm.add(two, right).detour(a, a2, up(a), up(a2)).detour(b, b2, up(b), up(b2))
            asm.link((xo, down(xo)), (yo, down(yo)))
        return asm.cycle()

    def _claim2_split(self, step, C0, xy, ctx: SplitContext, M, options, j: int) -> HamCycleCertificate:
        """边界 0|1 与 k-1|0 各一条 d-边"""
        k = ctx.k
        self._case(step, "Subcase 3.2")

        def up(w):
            return ctx.at(w, 1)

        def down(w):
            return ctx.at(w, k - 1)

        a = pivot(ctx, only("a_0", ctx.cross(M, 0)), 0)
        b = pivot(ctx, only("b_0", ctx.cross(M, k - 1)), 0)
        xo, yo = first("x_0' y_0'", options, lambda o: len(set(o) & {a, b}) <= 1)
        if not ({xo, yo} & {a, b}):
            if ctx.part(M, 1):
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
                a, b = b, a
                j = max(i for i in range(1, k - 1) if not ctx.cross(M, i))
            asm, path = self._open_at(C0, ctx, xy, (xo, yo))
            a2 = first("a_0'", path.neighbors(a), lambda w: w not in (xo, yo))
            b2 = first("b_0'", path.neighbors(b), lambda w: Edge.of(b, w) != Edge.of(a, a2))
            step.note("a_0' b_0'", (a2, b2))
            if j == 1:
                two = self.subcube_two_path(ctx.subcube(1), (up(a), up(a2)), (up(xo), up(yo)))
            else:
                two = self.lemma10(ctx.range(1, j), up(a), up(a2), up(xo), up(yo), ctx.inner(M, 1, j))
            tail = self.range_path_m(ctx.range(j + 1, k - 1), down(b), down(b2), ctx.inner(M, j + 1, k - 1))
            asm.add(two, tail).detour(a, a2, up(a), up(a2)).detour(b, b2, down(b), down(b2))
            asm.link((xo, up(xo)), (yo, up(yo)))
            return asm.cycle()
        if b in (xo, yo):
            ctx = mirrored(ctx)
            step.transform = ctx.describe()
            a, b = b, a
            j = max(i for i in range(1, k - 1) if not ctx.cross(M, i))
        if yo == a:
            xo, yo = yo, xo
        step.note("x_0' y_0'", (xo, yo))
        asm, path = self._open_at(C0, ctx, xy, (xo, yo))
        b2 = first("b_0'", path.neighbors(b))
        body = self.lemma9(ctx.range(1, j), up(xo), up(yo), ctx.inner(M, 1, j))
        tail = self.lemma9(facing(ctx.range(j + 1, k - 1), down(b)), down(b), down(b2),
                           ctx.inner(M, j + 1, k - 1))
        asm.add(body, tail).detour(b, b2, down(b), down(b2)).link((xo, up(xo)), (yo, up(yo)))
        return asm.cycle()

    def _claim2_three(self, step, C0, xy, ctx: SplitContext, M, options) -> HamCycleCertificate:
        """三条 d-边都在边界 0|1 或 k-1|0，M[1,k-1] 为空"""
        k = ctx.k
        pivots = set(crossing_pivots(ctx, M, 0, 0)) | set(crossing_pivots(ctx, M, k - 1, 0))
        xo, yo = first("x_0' y_0'", options, lambda o: len(set(o) & pivots) <= 1)
        shared = {xo, yo} & pivots
        if not shared:
            if len(ctx.cross(M, k - 1)) > len(ctx.cross(M, 0)):
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
        else:
            if shared & set(crossing_pivots(ctx, M, k - 1, 0)):
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
            if yo in shared:
                xo, yo = yo, xo
        step.note("x_0' y_0'", (xo, yo))
        asm, path = self._open_at(C0, ctx, xy, (xo, yo))
        ups = [w for w in crossing_pivots(ctx, M, 0, 0) if w != xo]
        downs = crossing_pivots(ctx, M, k - 1, 0)

        def up(w):
            return ctx.at(w, 1)

        def down(w):
            return ctx.at(w, k - 1)

        def same_way(group):
            """组内各点沿路径同一方向的邻居，六点互不相同"""
            for move in (path.next, path.prev):
                seconds = [move(w) for w in group]
                if None not in seconds and len(set(group) | set(seconds)) == 2 * len(group):
                    return seconds
            return None

        if not shared and len(ups) == 3:
            self._case(step, "Subcase 4.1.1")
            a, b, c = ups
            adjacent = [t for t in ((a, b, c), (a, c, b), (b, c, a)) if path.has_edge(t[0], t[1])]
            if adjacent:
                a, b, c = adjacent[0]
                c2 = first("c_0'", path.neighbors(c), lambda w: w not in (a, b))
                two = self.range_two_path(ctx.range(1, k - 2), (up(a), up(b)), (up(c), up(c2)))
                tail = self.range_path(ctx.subcube(k - 1), down(xo), down(yo))
                asm.add(two, tail).cut((a, b), (c, c2))
                asm.link((a, up(a)), (b, up(b)), (c, up(c)), (c2, up(c2)), (xo, down(xo)), (yo, down(yo)))
                return asm.cycle()
            seconds = same_way(ups)
            if seconds is None:
                raise AssemblyError("Claim 2/Subcase 4.1.1: no common direction")
            three = self.lemma15(ctx.cube_of(1), [(up(w), up(w2)) for w, w2 in zip(ups, seconds)], frozenset())
            tail = self.range_path(ctx.range(2, k - 1), down(xo), down(yo))
            asm.add(three, tail)
            for w, w2 in zip(ups, seconds):
                asm.detour(w, w2, up(w), up(w2))
            asm.link((xo, down(xo)), (yo, down(yo)))
            return asm.cycle()

        if not shared:
            self._case(step, "Subcase 4.1.2")
            a, b = ups
            c = only("c_0", downs)
            if path.has_edge(a, b):
                c2 = first("c_0'", path.neighbors(c), lambda w: w not in (xo, yo))
                two = self.subcube_two_path(ctx.subcube(k - 1), (down(c), down(c2)), (down(xo), down(yo)))
                body = self.range_path(ctx.range(1, k - 2), up(a), up(b))
                asm.add(two, body).detour(a, b, up(a), up(b)).detour(c, c2, down(c), down(c2))
                asm.link((xo, down(xo)), (yo, down(yo)))
                return asm.cycle()
            c2 = first("c_0'", path.neighbors(c), lambda w: w not in (xo, yo))
            seconds = same_way([a, b])
            if seconds is None or Edge.of(c, c2) in {Edge.of(a, seconds[0]), Edge.of(b, seconds[1])}:
                raise AssemblyError("Claim 2/Subcase 4.1.2: no admissible neighbours")
            a2, b2 = seconds
            two = self.range_two_path(ctx.range(1, k - 2), (up(a), up(a2)), (up(b), up(b2)))
            last = self.subcube_two_path(ctx.subcube(k - 1), (down(c), down(c2)), (down(xo), down(yo)))
            asm.add(two, last).detour(a, a2, up(a), up(a2)).detour(b, b2, up(b), up(b2))
            asm.detour(c, c2, down(c), down(c2)).link((xo, down(xo)), (yo, down(yo)))
            return asm.cycle()

        if not ups:
            self._case(step, "Subcase 4.2.1")
            b, c = downs
            segment = set(path.segment(b, c))
            b2 = first("b_0'", path.neighbors(b), lambda w: w not in segment)
            c2 = first("c_0'", path.neighbors(c), lambda w: w not in segment)
            two = self.subcube_two_path(ctx.subcube(k - 1), (down(b), down(b2)), (down(c), down(c2)))
            body = self.range_path(ctx.range(1, k - 2), up(xo), up(yo))
            asm.add(two, body).detour(b, b2, down(b), down(b2)).detour(c, c2, down(c), down(c2))
            asm.link((xo, up(xo)), (yo, up(yo)))
            return asm.cycle()

        if downs:
            self._case(step, "Subcase 4.2.2")
            b, c = only("b_0", ups), only("c_0", downs)
            b2 = first("b_0'", path.neighbors(b), lambda w: w not in (xo, yo))
            c2 = first("c_0'", path.neighbors(c), lambda w: Edge.of(c, w) != Edge.of(b, b2))
            two = self.range_two_path(ctx.range(1, k - 2), (up(xo), up(yo)), (up(b), up(b2)))
            tail = self.range_path(ctx.subcube(k - 1), down(c), down(c2))
            asm.add(two, tail).detour(b, b2, up(b), up(b2)).detour(c, c2, down(c), down(c2))
            asm.link((xo, up(xo)), (yo, up(yo)))
            return asm.cycle()

        self._case(step, "Subcase 4.2.3")
        (b, c), b2 = first("b_0'", ((pair, w) for pair in (tuple(ups), tuple(ups[::-1]))
                                    for w in path.neighbors(pair[0])),
                           lambda o: o[1] not in (xo, yo, *o[0]))
        step.note("b_0'", b2)
        body = self.lemma13(ctx.cube_of(1), up(xo), up(yo), up(b), up(b2), frozenset())
        c2 = path.closer(c, xo)
        c3 = Route.of(body).closer(up(c), up(yo))
        tail = self.range_path(ctx.range(2, k - 1), ctx.at(c3, 2), down(c2))
        asm.add(body, tail).cut((b, b2), (c, c2), (up(c), c3))
        asm.link((xo, up(xo)), (yo, up(yo)), (b, up(b)), (b2, up(b2)), (up(b), up(b2)),
                 (c, up(c)), (c3, ctx.at(c3, 2)), (c2, down(c2)))
        return asm.cycle()

    # -- Claim 3、Claim 4 与收尾 ---------------------------------------------

    def _open(self, C0, ctx: SplitContext, missing: Sequence[Edge]) -> Tuple[Assembly, Tuple[Vertex, ...]]:
        """C_0 + 缺失边 - 各端点的顺时针边，得到生成 m-路径及其平衡的端点序列"""
        ring = Route.of(C0)
        asm = Assembly(ctx.shape).add(C0)
        for e in missing:
            for w in e:
                asm.cut((w, ring.next(w)))
        asm.link(*missing)
        oriented = balanced_pairing(ctx.shape, asm.components())
        ends = tuple(w for pair in oriented for w in pair)
        self.current.note("ends", ends)
        return asm, ends

    def claim3(self, C0: HamCycleCertificate, missing: Sequence[Edge], ctx: SplitContext, M) -> HamCycleCertificate:
        """C_0 缺两条匹配边"""
        missing = tuple(missing)
        return self._claim("Claim 3", ctx, C0, M, missing,
                           lambda step: self._claim3(step, C0, missing, ctx, frozenset(M)))

    def _claim3(self, step, C0, missing, ctx: SplitContext, M) -> HamCycleCertificate:
        k = ctx.k
        asm, t = self._open(C0, ctx, missing)
        outer = len(ctx.cross(M, 0)) + len(ctx.cross(M, k - 1))

        def up(w):
            return ctx.at(w, 1)

        def down(w):
            return ctx.at(w, k - 1)

        def on_first(v):
            return lambda u: v in set(asm.walk(u[0]))

        if outer == 0:
            self._case(step, "Case 1")
            if all(ctx.cross(M, i) for i in range(1, k - 1)):
                self._case(step, "Subcase 1.2")
                c, d, e, f = t
                two = self.subcube_two_path(ctx.subcube(1), (up(c), up(f)), (up(d), up(e)))
                asm.add(two).link((c, up(c)), (f, up(f)), (d, up(d)), (e, up(e)))
                self.attach(asm, ctx, 1, 2, k - 1, M, "a_1 a_1'", through=self.lemma9)
                return asm.cycle()
            self._case(step, "Subcase 1.1")
            if len(ctx.part(M, 1)) > 1:
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
            j = first("j", range(1, k - 1), lambda i: not ctx.cross(M, i))
            step.note("j", j)
            t = first("c f", variants(t), lambda u: Edge.of(up(u[3]), up(u[0])) not in M)
            c, d, e, f = t
            body = self.lemma12(ctx.range(1, j), up(c), up(f), ctx.inner(M, 1, j))
            asm.add(body).link((c, up(c)), (f, up(f)))
            de = Edge.of(down(d), down(e))
            if de not in M:
                self._case(step, "Subcase 1.1.1")
                tail = self.lemma12(facing(ctx.range(j + 1, k - 1), down(d)), down(d), down(e),
                                    ctx.inner(M, j + 1, k - 1))
                asm.add(tail).link((d, down(d)), (e, down(e)))
                return asm.cycle()
            self._case(step, "Subcase 1.1.2")
            r, r2 = first("r_0 r_0'", layer_edges(asm, ctx, 0),
                          lambda g: g not in M and proj(ctx, g, k - 1) not in M
                          and not (set(proj(ctx, g, k - 1)) & set(de)))
            step.note("r_0 r_0'", (r, r2))
            last = self.lemma13(ctx.cube_of(k - 1), down(r), down(r2), down(d), down(e),
                                ctx.part(M, k - 1) - {de})
            asm.add(last).detour(r, r2, down(r), down(r2))
            asm.link((d, down(d)), (e, down(e)), (down(d), down(e)))
            if j < k - 2:
                self.attach(asm, ctx, k - 1, j + 1, k - 2, M, "w_{k-1} w_{k-1}'")
            return asm.cycle()

        if outer == 1:
            self._case(step, "Case 2")
            if ctx.cross(M, k - 1):
                ctx = mirrored(ctx)
                step.transform = ctx.describe()
            a = pivot(ctx, only("a_0", ctx.cross(M, 0)), 0)
            j = first("j", range(1, k - 1), lambda i: not ctx.cross(M, i))
            step.note("j", j)
            if a in t:
                self._case(step, "Subcase 2.1")
                c, d, e, f = first("c = a_0", variants(t), lambda u: u[0] == a)
                if Edge.of(down(d), down(e)) not in M:
                    body = self.lemma9(ctx.range(1, j), up(c), up(f), ctx.inner(M, 1, j))
                    tail = self.lemma9(facing(ctx.range(j + 1, k - 1), down(d)), down(d), down(e),
                                       ctx.inner(M, j + 1, k - 1))
                    asm.add(body, tail).link((c, up(c)), (f, up(f)), (d, down(d)), (e, down(e)))
                else:
                    two = self.lemma10(ctx.range(1, k - 1), up(c), up(f), up(d), up(e), ctx.inner(M, 1, k - 1))
                    asm.add(two).link((c, up(c)), (f, up(f)), (d, up(d)), (e, up(e)))
                return asm.cycle()
            self._case(step, "Subcase 2.2")
            if not ctx.inner(M, 1, j):
                c, d, e, f = first("d e", variants(t), lambda u: Edge.of(down(u[1]), down(u[2])) not in M)
                a2 = first("a_0'", layer_nbrs(asm, ctx, a, 0), lambda w: w not in (c, f))
                step.note("a_0'", a2)
                two = self.range_two_path(ctx.range(1, j), (up(c), up(f)), (up(a), up(a2)))
                tail = self.lemma9(facing(ctx.range(j + 1, k - 1), down(d)), down(d), down(e),
                                   ctx.inner(M, j + 1, k - 1))
                asm.add(two, tail).detour(a, a2, up(a), up(a2))
                asm.link((c, up(c)), (f, up(f)), (d, down(d)), (e, down(e)))
                return asm.cycle()
            c, d, e, f = t
            a2 = first("a_0'", layer_nbrs(asm, ctx, a, 0))
            step.note("a_0'", a2)
            two = self.range_two_path(ctx.range(j + 1, k - 1), (down(c), down(f)), (down(d), down(e)))
            body = self.lemma9(ctx.range(1, j), up(a), up(a2), ctx.inner(M, 1, j))
            asm.add(two, body).detour(a, a2, up(a), up(a2))
            asm.link((c, down(c)), (f, down(f)), (d, down(d)), (e, down(e)))
            return asm.cycle()

        self._case(step, "Case 3")
        if len(ctx.cross(M, k - 1)) == 2:
            ctx = mirrored(ctx)
            step.transform = ctx.describe()
        if len(ctx.cross(M, 0)) == 2:
            self._case(step, "Subcase 3.1")
            a, b = crossing_pivots(ctx, M, 0, 0)
            shared = [w for w in (a, b) if w in t]
            if not shared:
                a2, b2 = first("a_0' b_0'", product(layer_nbrs(asm, ctx, a, 0), layer_nbrs(asm, ctx, b, 0)),
                               lambda pair: len({a, b, *pair}) == 4)
                c, d, e, f = t
                two = self.range_two_path(ctx.range(1, k - 2), (up(a), up(a2)), (up(b), up(b2)))
                last = self.subcube_two_path(ctx.subcube(k - 1), (down(c), down(f)), (down(d), down(e)))
                asm.add(two, last).detour(a, a2, up(a), up(a2)).detour(b, b2, up(b), up(b2))
                asm.link((c, down(c)), (f, down(f)), (d, down(d)), (e, down(e)))
            elif len(shared) == 1:
                s = shared[0]
                other = b if s == a else a
                c, d, e, f = first("c = a_0", variants(t), lambda u: u[0] == s)
                b2 = first("b_0'", layer_nbrs(asm, ctx, other, 0), lambda w: w not in (c, f))
                two = self.range_two_path(ctx.range(1, k - 2), (up(c), up(f)), (up(other), up(b2)))
                tail = self.range_path(ctx.subcube(k - 1), down(d), down(e))
                asm.add(two, tail).detour(other, b2, up(other), up(b2))
                asm.link((c, up(c)), (f, up(f)), (d, down(d)), (e, down(e)))
            else:
                c, d, e, f = t
                two = self.range_two_path(ctx.range(1, k - 1), (up(c), up(f)), (up(d), up(e)))
                asm.add(two).link((c, up(c)), (f, up(f)), (d, up(d)), (e, up(e)))
            return asm.cycle()

        self._case(step, "Subcase 3.2")
        a = pivot(ctx, only("a_0", ctx.cross(M, 0)), 0)
        b = pivot(ctx, only("b_0", ctx.cross(M, k - 1)), 0)
        if a not in t and b not in t:
            t = first("a_0 on P_cd", variants(t), on_first(a))
            cd = Route(asm.walk(t[0]))
            if b in cd:
                if cd.pos(b) > cd.pos(a):
                    t = (t[1], t[0], t[3], t[2])
                    cd = Route(asm.walk(t[0]))
                a2, b2 = cd.next(a), cd.prev(b)
            else:
                a2 = first("a_0'", cd.neighbors(a), lambda w: w != t[0])
                b2 = first("b_0'", Route(asm.walk(t[2])).neighbors(b), lambda w: w != t[2])
            step.note("a_0' b_0'", (a2, b2))
            c, d, e, f = t
            two = self.range_two_path(ctx.range(1, k - 2), (up(a), up(a2)), (up(c), up(f)))
            last = self.subcube_two_path(ctx.subcube(k - 1), (down(b), down(b2)), (down(d), down(e)))
            asm.add(two, last).detour(a, a2, up(a), up(a2)).detour(b, b2, down(b), down(b2))
            asm.link((c, up(c)), (f, up(f)), (d, down(d)), (e, down(e)))
            return asm.cycle()
        if a not in t:
            ctx = mirrored(ctx)
            step.transform = ctx.describe()
            a, b = b, a
        c, d, e, f = first("c = a_0", variants(t), lambda u: u[0] == a)
        b2 = first("b_0'", layer_nbrs(asm, ctx, b, 0))
        two = self.range_two_path(ctx.range(1, k - 2), (up(c), up(f)), (up(d), up(e)))
        tail = self.range_path(ctx.subcube(k - 1), down(b), down(b2))
        asm.add(two, tail).detour(b, b2, down(b), down(b2))
        asm.link((c, up(c)), (f, up(f)), (d, up(d)), (e, up(e)))
        return asm.cycle()

    def claim4(self, C0: HamCycleCertificate, missing: Sequence[Edge], ctx: SplitContext, M) -> HamCycleCertificate:
        """C_0 缺三条匹配边"""
        missing = tuple(missing)
        return self._claim("Claim 4", ctx, C0, M, missing,
                           lambda step: self._claim4(step, C0, missing, ctx, frozenset(M)))

    def _claim4(self, step, C0, missing, ctx: SplitContext, M) -> HamCycleCertificate:
        k = ctx.k
        asm, t = self._open(C0, ctx, missing)
        if ctx.cross(M, k - 1):
            ctx = mirrored(ctx)
            step.transform = ctx.describe()

        def up(w):
            return ctx.at(w, 1)

        def down(w):
            return ctx.at(w, k - 1)

        crossing = ctx.cross(M, 0)
        if crossing:
            self._case(step, "one d-edge")
            a = pivot(ctx, only("a_0", crossing), 0)
            c, d, e, f, g, h = first("a_0 on P_cd", variants(t), lambda u: a in set(asm.walk(u[0])))
            a2 = first("a_0'", layer_nbrs(asm, ctx, a, 0))
            step.note("a_0'", a2)
            two = self.range_two_path(ctx.range(1, k - 2), (up(a), up(a2)), (up(f), up(g)))
            last = self.subcube_two_path(ctx.subcube(k - 1), (down(d), down(e)), (down(c), down(h)))
            asm.add(two, last).detour(a, a2, up(a), up(a2))
            asm.link((f, up(f)), (g, up(g)), (c, down(c)), (h, down(h)), (d, down(d)), (e, down(e)))
            return asm.cycle()

        self._case(step, "no d-edge at Q[0]")
        if ctx.part(M, k - 1) or ctx.cross(M, k - 2):
            ctx = mirrored(ctx)
            step.transform = ctx.describe()
        c, d, e, f, g, h = first("c h", variants(t), lambda u: Edge.of(up(u[5]), up(u[0])) not in M)
        last = self.subcube_two_path(ctx.subcube(k - 1), (down(d), down(e)), (down(f), down(g)))
        body = self.lemma9(ctx.range(1, k - 2), up(c), up(h), ctx.inner(M, 1, k - 2))
        asm.add(last, body)
        asm.link((c, up(c)), (h, up(h)), (d, down(d)), (e, down(e)), (f, down(f)), (g, down(g)))
        return asm.cycle()

    def endgame(self, C0: HamCycleCertificate, missing: Sequence[Edge], ctx: SplitContext, M) -> HamCycleCertificate:
        """C_0 缺四条匹配边，M 的其余边都在 Q[0] 中"""
        missing = tuple(missing)
        return self._claim("4-path", ctx, C0, M, missing,
                           lambda step: self._endgame(step, C0, missing, ctx))

    def _endgame(self, step, C0, missing, ctx: SplitContext) -> HamCycleCertificate:
        k = ctx.k
        asm, (a, b, c, d, e, f, g, h) = self._open(C0, ctx, missing)

        def up(w):
            return ctx.at(w, 1)

        def down(w):
            return ctx.at(w, k - 1)

        two = self.range_two_path(ctx.range(1, k - 2), (up(b), up(c)), (up(d), up(e)))
        last = self.subcube_two_path(ctx.subcube(k - 1), (down(f), down(g)), (down(a), down(h)))
        asm.add(two, last)
        asm.link((b, up(b)), (c, up(c)), (d, up(d)), (e, up(e)),
                 (f, down(f)), (g, down(g)), (a, down(a)), (h, down(h)))
        return asm.cycle()


# ---------------------------------------------------------------------------
# 公共入口
# ---------------------------------------------------------------------------

def _arguments(shape: CubeShape, M, builder: Constructor) -> Dict[str, Any]:
    return {
        "n": shape.n,
        "k": shape.k,
        "matching": [[list(e.u), list(e.v)] for e in sorted(M)],
        "policy": builder.policy.value,
        "base_n": builder.base_n,
        "seed": builder.budget.seed,
        "budget_nodes": builder.budget.max_nodes,
    }


def theorem3_ham_cycle(shape, M=(), *, provider: Optional[PrimitiveProvider] = None,
                       policy=Config.DEFAULT_POLICY, budget: Optional[SearchBudget] = None,
                       base_n: int = Config.CONSTRUCTION_BASE_N) -> Tuple[HamCycleCertificate, ConstructionTrace]:
    """构造 Q_n^k 中经过匹配 M 的哈密顿圈

    Args:
        shape: CubeShape，n >= 5，k >= 4
        M: 端点对序列，|M| <= 4n-20

    Returns:
        (证书, 轨迹)

    Raises:
        InputError: 顶点或边不合法
        PreconditionViolation: 前提不成立（strict 下也包括子问题的前提）
    """
    cube = as_region(shape)
    M = parse_matching(cube.shape, M)
    builder = TheoremBuilder(provider, policy, budget, base_n)
    cert = builder.theorem3(cube, M)
    logger.info("%s 上经过 %d 条匹配边的哈密顿圈完成: 原语 %d 次, 回退 %d 次",
                cube.shape, len(M), builder.primitive_calls, builder.fallbacks)
    return cert, builder.trace("theorem3", _arguments(cube.shape, M, builder), cert.digest())


def _claim_entry(method: str, *args, **options):
    return getattr(TheoremBuilder(**options), method)(*args)


def claim1_extend(C0: HamCycleCertificate, ctx: SplitContext, M, **options) -> HamCycleCertificate:
    return _claim_entry("claim1", C0, ctx, parse_matching(ctx.shape, M), **options)


def claim2_one_missing(C0: HamCycleCertificate, xy, ctx: SplitContext, M, **options) -> HamCycleCertificate:
    return _claim_entry("claim2", C0, Edge.of(*xy), ctx, parse_matching(ctx.shape, M), **options)


def claim3_two_missing(C0: HamCycleCertificate, missing, ctx: SplitContext, M, **options) -> HamCycleCertificate:
    return _claim_entry("claim3", C0, [Edge.of(*e) for e in missing], ctx, parse_matching(ctx.shape, M),
                        **options)


def claim4_three_missing(C0: HamCycleCertificate, missing, ctx: SplitContext, M, **options) -> HamCycleCertificate:
    return _claim_entry("claim4", C0, [Edge.of(*e) for e in missing], ctx, parse_matching(ctx.shape, M),
                        **options)


def claim_a_chain(view: RangeView, c, x, y, M=(), **options) -> PathSystem:
    return _claim_entry("claim_a", view, tuple(c), tuple(x), tuple(y), parse_matching(view.shape, M), **options)


def replay_trace(trace: ConstructionTrace, provider: Optional[PrimitiveProvider] = None) -> VerifyReport:
    """按轨迹记录的参数重跑顶层操作，比较证书摘要

    Raises:
        InputError: 轨迹的操作名未知或参数缺失
    """
    args = trace.arguments
    try:
        shape = CubeShape(args["n"], args["k"])
        budget = SearchBudget(args["budget_nodes"], args["seed"])
        options = dict(provider=provider, policy=args["policy"], budget=budget, base_n=args["base_n"])
        M = [(tuple(a), tuple(b)) for a, b in args["matching"]]
    except KeyError as exc:
        raise InputError(f"trace is missing argument {exc}") from None
    if trace.op == "theorem3":
        _, again = theorem3_ham_cycle(shape, M, **options)
    elif trace.op in LEMMA_OPS:
        ends = [tuple(v) for v in args.get("endpoints", [])]
        _, again = run_lemma(trace.op, shape, ends, M, args.get("split"), **options)
    else:
        raise InputError(f"cannot replay operation {trace.op!r}")
    if again.digest != trace.digest:
        return VerifyReport.failed(f"digest mismatch: recorded {trace.digest}, replayed {again.digest}")
    return VerifyReport.passed()
