#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
约束回溯搜索引擎

在立方体区域或区间视图上搜索带必经边、禁用顶点和固定端点的
哈密顿路径 / 生成 m-路径 / 哈密顿圈，同时提供微小实例的穷举预言机。

实现要点：
- 顶点编译为整数下标，邻接表按规范顺序排列
- 必经边预先收缩为强制链，链内部不能从外部进入
- m 条路径看作依次相连的段：到达 y_i 后下一步跳到 x_{i+1}（虚拟连接点）
- 剪枝：度数剪枝（含强制走步）、未访问部分的连通性剪枝、偶数 k 的奇偶预检
"""

import logging
import random
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from config.settings import Config
from core.cube import lee_distance
from core.exceptions import EnumerationRefused, InputError
from models.data_models import (
    ConstraintSpec,
    HamCycleCertificate,
    PathSystem,
    SearchBudget,
    SearchOptions,
    SearchResult,
    SearchStatus,
    format_vertex,
)

logger = logging.getLogger(__name__)


def validate_spec(spec: ConstraintSpec) -> None:
    """检查约束规格的内部一致性

    Raises:
        InputError: 必经边不在区域内、端点越界或端点对相交
    """
    region = spec.region
    for v in spec.forbidden:
        spec.shape.validate_vertex(v)
    for e in spec.required:
        a, b = e
        if not region.is_edge(a, b):
            raise InputError(f"required edge {format_vertex(a)}-{format_vertex(b)} not in {region.describe()}")
        if a in spec.forbidden or b in spec.forbidden:
            raise InputError(f"required edge {format_vertex(a)}-{format_vertex(b)} touches a forbidden vertex")
    seen = set()
    for x, y in spec.endpoint_pairs:
        for w in (x, y):
            spec.shape.validate_vertex(w)
            if w not in region:
                raise InputError(f"endpoint {format_vertex(w)} outside {region.describe()}")
            if w in spec.forbidden:
                raise InputError(f"endpoint {format_vertex(w)} is forbidden")
            if w in seen:
                raise InputError(f"endpoint {format_vertex(w)} used twice")
            seen.add(w)


class _Engine:
    """一次搜索的可变状态"""

    def __init__(self, spec: ConstraintSpec, budget: SearchBudget, options: SearchOptions,
                 heuristic: bool = True, first_move: Optional[int] = None):
        self.spec = spec
        self.budget = budget
        self.options = options
        self.heuristic = heuristic
        self.first_move = first_move
        self.rng = random.Random(budget.seed) if budget.seed else None
        self.nodes = 0

        region = spec.region
        self.shape = spec.shape
        self.verts = [v for v in region.vertices() if v not in spec.forbidden]
        self.index = {v: i for i, v in enumerate(self.verts)}
        index = self.index
        self.adj = [[index[w] for w in region.neighbors(v) if w in index] for v in self.verts]
        self.size = len(self.verts)
        self.cycle = spec.is_cycle
        self.starts = [index[x] for x, _ in spec.endpoint_pairs]
        self.ends = [index[y] for _, y in spec.endpoint_pairs]
        self.m = len(self.starts)
        self.start_of = {x: j for j, x in enumerate(self.starts)}
        self.end_of = {y: j for j, y in enumerate(self.ends)}

        self.req = [[] for _ in range(self.size)]
        for a, b in sorted(spec.required):
            self.req[index[a]].append(index[b])
            self.req[index[b]].append(index[a])
        self.closure = options.chain_closure
        self.stride = 1 if self.size <= options.stride_divisor else max(1, self.size // options.stride_divisor)

        self.visited = bytearray(self.size)
        self.trail: List[int] = []
        self.seg_pos: List[int] = []
        self.seg = 0
        self.anchor = -1
        self.chain: Dict[int, Tuple[int, ...]] = {}

    # ---------- 预处理 ----------

    def _build_chains(self) -> Optional[str]:
        """把必经边收缩为链；返回不可行原因或 None"""
        req = self.req
        for v, partners in enumerate(req):
            if len(partners) > 2:
                return "required degree above 2"
        covered = set()
        for v, partners in enumerate(req):
            if len(partners) != 1 or v in covered:
                continue
            walk = [v]
            prev, cur = v, partners[0]
            while True:
                walk.append(cur)
                nxt = [w for w in req[cur] if w != prev]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
            self.chain[v] = tuple(walk)
            self.chain[walk[-1]] = tuple(reversed(walk))
            covered.update(walk)
        if any(req[v] and v not in covered for v in range(self.size)):
            return "required edges close a cycle"
        return None

    def _infeasible(self) -> Optional[str]:
        if self.cycle and self.size < 3:
            return "region too small for a cycle"
        reason = self._build_chains()
        if reason:
            return reason
        endpoints = set(self.starts) | set(self.ends)
        for w in endpoints:
            if len(self.req[w]) > 1:
                return "endpoint carries two required edges"
        for a, walk in self.chain.items():
            b = walk[-1]
            if a in endpoints and b in endpoints:
                ja = self.start_of.get(a, self.end_of.get(a))
                jb = self.start_of.get(b, self.end_of.get(b))
                if ja != jb:
                    return "required chain joins two different paths"
        if self.shape.is_bipartite:
            colour = [sum(v) % 2 for v in self.verts]
            surplus = colour.count(0) - colour.count(1)
            expected = 0
            for x, y in zip(self.starts, self.ends):
                if colour[x] == colour[y]:
                    expected += 1 if colour[x] == 0 else -1
            if surplus != expected:
                return "parity"
        return None

    # ---------- 状态维护 ----------

    def _visit(self, v: int) -> None:
        self.visited[v] = 1
        self.trail.append(v)

    def _unvisit(self) -> None:
        v = self.trail.pop()
        self.visited[v] = 0

    def _expand(self, w: int) -> Sequence[int]:
        if self.closure and len(self.req[w]) == 1:
            return self.chain[w]
        return (w,)

    def _advance_segments(self) -> int:
        """段结束后跳到下一段起点；返回追加的顶点数"""
        added = 0
        if self.cycle:
            return 0
        while self.seg < self.m and self.trail[-1] == self.ends[self.seg]:
            self.seg += 1
            if self.seg < self.m:
                self.seg_pos.append(len(self.trail))
                for v in self._expand(self.starts[self.seg]):
                    self._visit(v)
                    added += 1
        return added

    def _apply(self, w: int) -> Tuple[int, int]:
        prev_seg = self.seg
        added = 0
        for v in self._expand(w):
            self._visit(v)
            added += 1
        added += self._advance_segments()
        return added, prev_seg

    def _undo(self, record: Tuple[int, int]) -> None:
        added, prev_seg = record
        for _ in range(added):
            self._unvisit()
        self.seg = prev_seg
        del self.seg_pos[prev_seg + 1:]

    # ---------- 合法性与剪枝 ----------

    def _is_endpoint(self, w: int) -> bool:
        return w in self.start_of or w in self.end_of

    def _target(self) -> int:
        return self.ends[self.seg] if not self.cycle and self.seg < self.m else -1

    def _legal(self, w: int) -> bool:
        """当前头部能否走到 w（链端点会带上整条链）"""
        if self.visited[w]:
            return False
        target = self._target()
        length = 1
        last = w
        if self.closure:
            degree = len(self.req[w])
            if degree == 2:
                return False
            if degree == 1:
                if self._is_endpoint(w):
                    return False
                walk = self.chain[w]
                last = walk[-1]
                length = len(walk)
        if self._is_endpoint(w) and w != target:
            return False
        if last != w and self._is_endpoint(last) and last != target:
            return False
        if last == target and self.seg == self.m - 1:
            return len(self.trail) + length == self.size
        return True

    def _need(self, w: int) -> int:
        base = 1 if self._is_endpoint(w) else 2
        if self.closure:
            base -= len(self.req[w])
        return base

    def _avail(self, w: int, head: int) -> int:
        """w 还可能使用的路径邻点数"""
        visited = self.visited
        count = 0
        partners = self.req[w] if self.closure else ()
        for u in self.adj[w]:
            if u == head:
                if self._legal(w):
                    count += 1
            elif u == self.anchor and self.cycle:
                count += 1
            elif not visited[u] and u not in partners and self._need(u) > 0:
                count += 1
        return count

    def _short(self, w: int, head: int) -> bool:
        return self._avail(w, head) < self._need(w)

    def _degree_ok(self, touched: Sequence[int]) -> bool:
        head = self.trail[-1]
        visited = self.visited
        for w in touched:
            if not visited[w] and self._need(w) > 0 and self._short(w, head):
                return False
        if self.cycle and len(self.trail) < self.size:
            partners = self.req[self.anchor] if self.closure else ()
            if not any(not visited[u] and u not in partners and self._need(u) > 0
                       for u in self.adj[self.anchor]):
                return False
        return True

    def _connected_ok(self) -> bool:
        visited = self.visited
        adj = self.adj
        comp = {}
        label = 0
        for v in range(self.size):
            if visited[v] or v in comp:
                continue
            comp[v] = label
            stack = [v]
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if not visited[w] and w not in comp:
                        comp[w] = label
                        stack.append(w)
            label += 1
        if label == 0:
            return True
        head = self.trail[-1]
        touched = {comp[w] for w in adj[head] if not visited[w]}
        if self.cycle:
            if label > 1:
                return False
            return bool(touched) and any(not visited[w] for w in adj[self.anchor])
        if self.seg >= self.m:
            return False
        claimed = set()
        current = comp[self.ends[self.seg]]
        if current not in touched:
            return False
        claimed.add(current)
        for j in range(self.seg + 1, self.m):
            cx, cy = comp[self.starts[j]], comp[self.ends[j]]
            if cx != cy:
                return False
            claimed.add(cx)
        return len(claimed) == label

    def _viable(self, record: Tuple[int, int], old_head: int) -> bool:
        if not self.cycle and self.seg >= self.m:
            return len(self.trail) == self.size
        if self.options.degree_cut:
            touched = set(self.adj[old_head])
            for v in self.trail[len(self.trail) - record[0]:]:
                touched.update(self.adj[v])
            if not self._degree_ok(touched):
                return False
        if self.options.articulation_cut:
            if record[1] != self.seg or self.nodes % self.stride == 0:
                if not self._connected_ok():
                    return False
        return True

    def _candidates(self) -> List[int]:
        head = self.trail[-1]
        legal = [w for w in self.adj[head] if self._legal(w)]
        if not legal:
            return []
        target = self._target()
        if self.options.degree_cut:
            forced = [w for w in legal if self._need(w) > 0 and self._avail(w, head) == self._need(w)]
            if len(forced) > 1:
                return []
            if forced:
                return forced
        if not self.heuristic:
            return legal
        verts = self.verts
        rng = self.rng
        last_segment = self.cycle or self.seg == self.m - 1
        goal = verts[target] if target >= 0 else None

        def key(w):
            ending = 1 if w == target or self._expand(w)[-1] == target else 0
            tie = rng.random() if rng else w
            if goal is None:
                return (ending, self._avail(w, head), tie)
            distance = lee_distance(self.shape, verts[w], goal)
            if last_segment:
                return (ending, self._avail(w, head), -distance, tie)
            return (distance, self._avail(w, head), tie)

        return sorted(legal, key=key)

    # ---------- 主循环 ----------

    def _complete(self) -> bool:
        if self.cycle:
            if len(self.trail) != self.size:
                return False
            head = self.trail[-1]
            if self.anchor not in self.adj[head]:
                return False
            if not self.closure:
                return self._required_used()
            return True
        if self.seg < self.m or len(self.trail) != self.size:
            return False
        return self.closure or self._required_used()

    def _required_used(self) -> bool:
        trail = self.trail
        used = set()
        cuts = set(self.seg_pos)
        for i in range(1, len(trail)):
            if i not in cuts:
                used.add(frozenset((trail[i - 1], trail[i])))
        if self.cycle:
            used.add(frozenset((trail[-1], trail[0])))
        return all(frozenset((self.index[a], self.index[b])) in used for a, b in self.spec.required)

    def _solution(self):
        verts = self.verts
        if self.cycle:
            return HamCycleCertificate(self.shape, tuple(verts[v] for v in self.trail))
        bounds = self.seg_pos + [len(self.trail)]
        paths = tuple(tuple(verts[v] for v in self.trail[bounds[j]:bounds[j + 1]]) for j in range(self.m))
        return PathSystem(paths, self.spec.region)

    def _start(self) -> None:
        if self.cycle:
            ends = sorted(v for v in self.chain if self.closure)
            self.anchor = ends[0] if ends else 0
            for v in self._expand(self.anchor):
                self._visit(v)
        else:
            self.seg_pos.append(0)
            for v in self._expand(self.starts[0]):
                self._visit(v)
            self._advance_segments()

    def run(self, on_solution: Callable[[object], bool]) -> SearchStatus:
        """深度优先搜索；on_solution 返回 True 表示停止"""
        reason = self._infeasible()
        if reason:
            logger.debug("预检不可行: %s (%s)", reason, self.spec.describe())
            return SearchStatus.EXHAUSTED
        self._start()
        if self._complete():
            if on_solution(self._solution()):
                return SearchStatus.FOUND
            return SearchStatus.EXHAUSTED
        if not self.cycle and self.seg >= self.m:
            return SearchStatus.EXHAUSTED
        first = self._candidates()
        if self.first_move is not None:
            first = [w for w in first if w == self.first_move]
        stack = [[first, 0, None]]
        found = False
        max_nodes = self.budget.max_nodes
        while stack:
            frame = stack[-1]
            if frame[2] is not None:
                self._undo(frame[2])
                frame[2] = None
            if frame[1] >= len(frame[0]):
                stack.pop()
                continue
            w = frame[0][frame[1]]
            frame[1] += 1
            old_head = self.trail[-1]
            record = self._apply(w)
            frame[2] = record
            self.nodes += 1
            if self.nodes > max_nodes:
                return SearchStatus.BUDGET_EXCEEDED
            if self._complete():
                found = True
                if on_solution(self._solution()):
                    return SearchStatus.FOUND
                continue
            if not self._viable(record, old_head):
                continue
            stack.append([self._candidates(), 0, None])
        return SearchStatus.FOUND if found else SearchStatus.EXHAUSTED


def search(spec: ConstraintSpec, budget: Optional[SearchBudget] = None,
           options: Optional[SearchOptions] = None, workers: int = 1) -> SearchResult:
    """搜索满足约束规格的路径系统或哈密顿圈

    Args:
        spec: 约束规格，endpoint_pairs 为空时求圈
        budget: 节点预算与种子；seed = 0 时输出是规格的确定性函数
        options: 剪枝开关
        workers: 大于 1 时并行探索顶层分支（不保证确定性）

    Returns:
        SearchResult: FOUND 时 solution 必能通过 certify；EXHAUSTED 表示确实无解
    """
    budget = budget or SearchBudget(Config.SEARCH_BUDGET_NODES)
    options = options or SearchOptions(**Config.SEARCH_PIPELINE,
                                       stride_divisor=Config.CONNECTIVITY_STRIDE_DIVISOR)
    validate_spec(spec)
    if workers > 1:
        return _parallel_search(spec, budget, options, workers)
    engine = _Engine(spec, budget, options)
    holder = []
    status = engine.run(lambda solution: holder.append(solution) or True)
    logger.debug("搜索结束 %s: %s, 节点数 %d", spec.describe(), status.value, engine.nodes)
    return SearchResult(status, holder[0] if holder else None, engine.nodes)


def _run_branch(spec: ConstraintSpec, budget: SearchBudget, options: SearchOptions, move: int) -> SearchResult:
    engine = _Engine(spec, budget, options, first_move=move)
    holder = []
    status = engine.run(lambda solution: holder.append(solution) or True)
    return SearchResult(status, holder[0] if holder else None, engine.nodes)


def _parallel_search(spec: ConstraintSpec, budget: SearchBudget, options: SearchOptions,
                     workers: int) -> SearchResult:
    root = _Engine(spec, budget, options)
    if root._infeasible():
        return SearchResult(SearchStatus.EXHAUSTED)
    root._start()
    if root._complete():
        return SearchResult(SearchStatus.FOUND, root._solution())
    moves = root._candidates()
    if not moves:
        return SearchResult(SearchStatus.EXHAUSTED)
    nodes = 0
    inconclusive = False
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = {pool.submit(_run_branch, spec, budget, options, w) for w in moves}
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for future in done:
                result = future.result()
                nodes += result.nodes
                if result.found:
                    for other in pending:
                        other.cancel()
                    return SearchResult(SearchStatus.FOUND, result.solution, nodes)
                if result.status is SearchStatus.BUDGET_EXCEEDED:
                    inconclusive = True
    status = SearchStatus.BUDGET_EXCEEDED if inconclusive else SearchStatus.EXHAUSTED
    return SearchResult(status, None, nodes)


def _canonical_cycle(order: Sequence) -> Tuple:
    start = order.index(min(order))
    rotated = list(order[start:]) + list(order[:start])
    backward = [rotated[0]] + rotated[:0:-1]
    return tuple(min(rotated, backward))


def enumerate_solutions(spec: ConstraintSpec, limit: Optional[int] = None,
                        options: Optional[SearchOptions] = None,
                        threshold: int = Config.ENUMERATION_THRESHOLD) -> List[object]:
    """穷举预言机：规范顺序下的全部（或前 limit 个）解

    圈按无向圈去重。默认关闭全部剪枝，作为搜索的独立参照。

    Raises:
        EnumerationRefused: 区域顶点数超过阈值
    """
    if spec.vertex_count > threshold:
        raise EnumerationRefused(f"{spec.region.describe()} has {spec.vertex_count} vertices, threshold is {threshold}")
    validate_spec(spec)
    options = options or SearchOptions(degree_cut=False, articulation_cut=False, chain_closure=False)
    engine = _Engine(spec, SearchBudget(max_nodes=10 ** 15), options, heuristic=False)
    solutions = []
    seen = set()

    def collect(solution) -> bool:
        if isinstance(solution, HamCycleCertificate):
            canon = _canonical_cycle(solution.order)
            if canon in seen:
                return False
            seen.add(canon)
            solution = HamCycleCertificate(solution.shape, canon)
        solutions.append(solution)
        return limit is not None and len(solutions) >= limit

    engine.run(collect)
    logger.debug("穷举 %s: %d 个解", spec.describe(), len(solutions))
    return solutions
