#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
扫描战役

四种模式：
1. theorem1: 线性森林（|F| <= 2n-1）都在某个哈密顿圈上
2. theorem2: 匹配（|M| <= 3n-8）都在某个哈密顿圈上
3. lemma-campaign: 每条引理随机抽取满足前提的实例，构造并复核
4. theorem3: 最大规模的随机匹配，统计无回退完成的比例

实例总数不超过 Config.SWEEP_EXHAUSTIVE_LIMIT 时穷举，否则按种子抽样。
每个实例的失败都记入报告，不会中断整个战役。
"""

import logging
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import Config
from core.certify import certify_solution, check_ham_cycle, check_matching
from core.cube import CubeRegion, Edge, is_linear_forest, neighbors, parity
from core.exceptions import EnumerationRefused, InputError, KCubeError
from core.lemmas import LEMMA_OPS, LemmaOp, run_lemma
from core.primitives import PrimitiveProvider, default_provider, primitive_spec
from core.search_engine import enumerate_solutions
from core.theorem import matching_bound, theorem3_ham_cycle
from models.data_models import ConstraintSpec, CubeShape, PrimitiveKind, SearchBudget, Vertex, format_vertex
from models.file_models import CampaignReport

logger = logging.getLogger(__name__)

# 每条引理允许的匹配规模上限
MATCHING_CAP = {
    "lemma9": lambda n: 1,
    "lemma10": lambda n: 1,
    "lemma11": lambda n: 2,
    "lemma12": lambda n: 2,
    "lemma13": lambda n: 1,
    "lemma14": lambda n: 0,
    "lemma15": lambda n: max(0, 2 * n - 10),
    "lemma16": lambda n: max(0, 2 * n - 8),
}

# 与实例无关的前提子句，首次抽样即失败说明该引理在此 (n, k) 下不适用
STRUCTURAL_CLAUSES = ("n >= 4", "n >= 5", "k >= 4", "k even")

# 失败实例的预言机结论；只有 ORACLE_FEASIBLE 计入 confirmed_failures
ORACLE_FEASIBLE = "oracle-confirmed feasible"
ORACLE_INFEASIBLE = "oracle found no solution"
ORACLE_REFUSED = "oracle refused"


@lru_cache(maxsize=64)
def region_edges(region) -> Tuple[Edge, ...]:
    return tuple(sorted(region.edges()))


def random_vertex(shape: CubeShape, rng: np.random.Generator, fixed: Optional[Tuple[int, int]] = None) -> Vertex:
    coords = [int(c) for c in rng.integers(0, shape.k, size=shape.n)]
    if fixed is not None:
        pos, value = fixed
        coords[pos] = value
    return tuple(coords)


def random_neighbor(shape: CubeShape, rng: np.random.Generator, v: Vertex, keep: Optional[int] = None) -> Vertex:
    """v 的随机邻居；keep 给定时不改变该位置"""
    options = sorted(w for w in neighbors(shape, v) if keep is None or w[keep] == v[keep])
    return options[int(rng.integers(0, len(options)))]


def flip_parity(shape: CubeShape, v: Vertex, keep: Optional[int] = None) -> Vertex:
    """某一位加 1 (mod k)，偶数 k 下奇偶性翻转"""
    pos = next(i for i in range(shape.n) if i != keep)
    w = list(v)
    w[pos] = (w[pos] + 1) % shape.k
    return tuple(w)


def describe_edges(edges) -> str:
    return "{" + ", ".join(f"{format_vertex(e.u)}-{format_vertex(e.v)}" for e in sorted(edges)) + "}"


def random_walk(shape: CubeShape, rng: np.random.Generator, v: Vertex, steps: int) -> Vertex:
    for _ in range(steps):
        v = random_neighbor(shape, rng, v)
    return v


def random_matching(edges: Sequence[Edge], size: int, rng: np.random.Generator,
                    avoid=frozenset()) -> Optional[frozenset]:
    """按随机顺序贪心取 size 条不交边，避开 avoid 中的顶点"""
    chosen: List[Edge] = []
    used = set(avoid)
    if size == 0:
        return frozenset()
    for idx in rng.permutation(len(edges)):
        e = edges[int(idx)]
        if e.u in used or e.v in used:
            continue
        chosen.append(e)
        used.update(e)
        if len(chosen) == size:
            return frozenset(chosen)
    return None


class Campaign:
    """一次扫描：实例生成、构造、复核与计数

    Args:
        mode: theorem1 | theorem2 | lemma-campaign | theorem3
        shape: 立方体形状
        max_size: 森林/匹配规模上限，默认取定理给出的界
        samples: 抽样模式下的实例数（lemma-campaign 为每条引理的实例数）
        seed: 抽样种子
    """

    def __init__(self, mode: str, shape: CubeShape, *, max_size: Optional[int] = None,
                 samples: int = Config.SWEEP_SAMPLES, seed: int = Config.SWEEP_SEED,
                 provider: Optional[PrimitiveProvider] = None, policy=Config.DEFAULT_POLICY,
                 budget: Optional[SearchBudget] = None, base_n: int = Config.CONSTRUCTION_BASE_N):
        if mode not in Config.SWEEP_MODES:
            raise InputError(f"unknown sweep mode {mode!r}; choose from {', '.join(Config.SWEEP_MODES)}")
        if samples < 1:
            raise InputError("samples must be >= 1")
        self.mode = mode
        self.shape = shape
        self.max_size = max_size
        self.samples = samples
        self.seed = seed
        self.provider = provider or default_provider()
        self.policy = policy
        self.budget = budget or SearchBudget(Config.SEARCH_BUDGET_NODES)
        self.base_n = base_n
        self.rng = np.random.default_rng(seed)
        self.report = CampaignReport(mode=mode, n=shape.n, k=shape.k, max_size=max_size,
                                     samples=samples, seed=seed)

    def run(self) -> CampaignReport:
        runner = {
            "theorem1": self._theorem1,
            "theorem2": self._theorem2,
            "lemma-campaign": self._lemma_campaign,
            "theorem3": self._theorem3,
        }[self.mode]
        runner()
        report = self.report
        logger.info("扫描 %s on %s 完成: %d/%d 通过, %d 失败", self.mode, self.shape,
                    report.passed, report.total, report.failed)
        return report

    # -- 计数 ----------------------------------------------------------------

    def _record(self, ok: bool, what: str, reason: Optional[str] = None,
                spec: Optional[ConstraintSpec] = None) -> None:
        """计数；失败实例附上预言机结论"""
        report = self.report
        report.total += 1
        if ok:
            report.passed += 1
            return
        report.failed += 1
        verdict = self._oracle_verdict(spec)
        report.oracle[verdict] = report.oracle.get(verdict, 0) + 1
        if verdict == ORACLE_FEASIBLE:
            report.confirmed_failures += 1
        logger.warning("实例失败 %s: %s; %s", what, reason, verdict)
        if len(report.failures) < Config.SWEEP_FAILURE_LOG:
            report.failures.append(f"{what}: {reason}; {verdict}")

    @staticmethod
    def _oracle_verdict(spec: Optional[ConstraintSpec]) -> str:
        """失败实例交给穷举预言机确认是否可行"""
        if spec is None:
            return ORACLE_REFUSED
        try:
            found = enumerate_solutions(spec, limit=1)
        except EnumerationRefused:
            return ORACLE_REFUSED
        return ORACLE_FEASIBLE if found else ORACLE_INFEASIBLE

    def _bound(self, theorem_bound: int) -> int:
        if self.max_size is None:
            return theorem_bound
        if self.max_size > theorem_bound:
            logger.warning("max_size %d 超过定理的界 %d，按界处理", self.max_size, theorem_bound)
            return theorem_bound
        return max(0, self.max_size)

    # -- theorem1 / theorem2 --------------------------------------------------

    def _subsets(self, edges: Sequence[Edge], bound: int,
                 accept: Callable[[Sequence[Edge]], bool]) -> Iterator[frozenset]:
        total = sum(comb(len(edges), size) for size in range(1, bound + 1))
        if total <= Config.SWEEP_EXHAUSTIVE_LIMIT:
            self.report.exhaustive = True
            for size in range(1, bound + 1):
                for combo in combinations(edges, size):
                    if accept(combo):
                        yield frozenset(combo)
            return
        for _ in range(self.samples):
            for _ in range(Config.SWEEP_DRAW_ATTEMPTS):
                size = int(self.rng.integers(1, bound + 1))
                picks = self.rng.choice(len(edges), size=size, replace=False)
                combo = [edges[int(i)] for i in picks]
                if accept(combo):
                    yield frozenset(combo)
                    break

    def _through(self, kind: PrimitiveKind, bound: int, accept) -> None:
        cube = CubeRegion(self.shape)
        if bound < 1:
            logger.info("%s 的界为 0，没有非空实例", self.shape)
            self.report.skipped.append(f"bound {bound}")
            return
        for F in self._subsets(region_edges(cube), bound, accept):
            spec = primitive_spec(cube, required=F)
            what = describe_edges(F)
            try:
                cert = self.provider.solve(kind, spec, budget=self.budget)
            except KCubeError as exc:
                self._record(False, what, f"{type(exc).__name__}: {exc}", spec)
                continue
            report = check_ham_cycle(cert, F)
            self._record(bool(report), what, report.first_violation, spec)

    def _theorem1(self) -> None:
        bound = self._bound(2 * self.shape.n - 1)
        self.report.max_size = bound
        self._through(PrimitiveKind.HAM_CYCLE_THROUGH_FOREST, bound, is_linear_forest)

    def _theorem2(self) -> None:
        bound = self._bound(max(0, 3 * self.shape.n - 8))
        self.report.max_size = bound
        self._through(PrimitiveKind.HAM_CYCLE_THROUGH_MATCHING, bound,
                      lambda combo: bool(check_matching(self.shape, combo)))

    # -- lemma-campaign ----------------------------------------------------------

    def draw_lemma(self, op: LemmaOp) -> Tuple[Optional[Tuple[int, int, int]], List[Vertex], frozenset]:
        """为一条引理随机抽取 (split, 端点, 匹配)，前提由调用方复核"""
        shape, rng = self.shape, self.rng
        n, k = shape.n, shape.k
        even = shape.is_bipartite
        split_at, fixed, keep = None, None, None
        if op.on_range:
            d = int(rng.integers(1, n + 1))
            p = int(rng.integers(0, k - 1))
            q = int(rng.integers(p + 1, k))
            split_at = (d, p, q)
            keep = d - 1
            fixed = (keep, p)

        def partner(x: Vertex, at=None) -> Vertex:
            y = random_vertex(shape, rng, at)
            if even and parity(shape, x) == parity(shape, y):
                y = flip_parity(shape, y, keep)
            return y

        name = op.name
        if name == "lemma9":
            x = random_vertex(shape, rng, fixed)
            other = (keep, split_at[2]) if rng.integers(0, 2) else fixed
            ends = [x, partner(x, other)]
        elif name == "lemma10":
            x = random_vertex(shape, rng, fixed)
            u = random_vertex(shape, rng, fixed)
            ends = [x, partner(x, fixed), u, partner(u, fixed)]
        elif name == "lemma12":
            x = random_vertex(shape, rng, fixed)
            ends = [x, partner(x, fixed)]
        elif name == "lemma13":
            x = random_vertex(shape, rng)
            u = random_vertex(shape, rng)
            ends = [x, partner(x), u, random_neighbor(shape, rng, u)]
        elif name == "lemma14":
            x = random_vertex(shape, rng)
            y = random_vertex(shape, rng)
            if even and parity(shape, y) != parity(shape, x):
                y = flip_parity(shape, y)
            u = partner(x)
            v = partner(x)
            ends = [x, y, u, v]
        elif name == "lemma15":
            ends = []
            for _ in range(3):
                a = random_vertex(shape, rng)
                ends.extend([a, random_neighbor(shape, rng, a)])
        elif name == "lemma16":
            x = random_vertex(shape, rng)
            steps = int(rng.choice([1, 3])) if even else int(rng.integers(1, 4))
            ends = [x, random_walk(shape, rng, x, steps)]
        else:
            x = random_vertex(shape, rng)
            ends = [x, partner(x)]

        region = op.region(shape, split_at)
        cap = MATCHING_CAP[name](region.n)
        size = int(rng.integers(0, cap + 1))
        if name in ("lemma10", "lemma13"):
            avoid = frozenset(ends if name == "lemma10" else ends[2:])
        elif name == "lemma15":
            avoid = frozenset(ends[0::2])
        else:
            avoid = frozenset()
        M = random_matching(region_edges(region), size, rng, avoid) or frozenset()
        return split_at, ends, M

    def _lemma_campaign(self) -> None:
        for name, op in LEMMA_OPS.items():
            stats = {"drawn": 0, "passed": 0, "failed": 0}
            self.report.per_op[name] = stats
            for index in range(self.samples):
                instance = self._accepted(op)
                if instance is None:
                    break
                stats["drawn"] += 1
                split_at, ends, M = instance
                spec = op.spec(op.region(self.shape, split_at), ends, M)
                what = f"{name}#{index}"
                try:
                    result, _ = run_lemma(name, self.shape, ends, M, split_at, provider=self.provider,
                                          policy=self.policy, budget=self.budget, base_n=self.base_n)
                except KCubeError as exc:
                    stats["failed"] += 1
                    self._record(False, what, f"{type(exc).__name__}: {exc}", spec)
                    continue
                report = certify_solution(result, spec)
                stats["passed" if report else "failed"] += 1
                self._record(bool(report), what, report.first_violation, spec)
            logger.info("%s: %d/%d 通过", name, stats["passed"], stats["drawn"])

    def _accepted(self, op: LemmaOp):
        """抽取一个满足前提的实例；结构性子句失败时整条引理跳过"""
        clause = None
        for _ in range(Config.SWEEP_DRAW_ATTEMPTS):
            split_at, ends, M = self.draw_lemma(op)
            report = op.validate(op.region(self.shape, split_at), ends, M)
            if report:
                return split_at, ends, M
            clause = report.first_violation
            if clause in STRUCTURAL_CLAUSES:
                break
        reason = f"{op.name}: {clause}"
        if reason not in self.report.skipped:
            self.report.skipped.append(reason)
            logger.info("跳过 %s", reason)
        return None

    # -- theorem3 --------------------------------------------------------------

    def _theorem3(self) -> None:
        size = self._bound(matching_bound(self.shape.n))
        self.report.max_size = size
        edges = region_edges(CubeRegion(self.shape))
        clean = 0
        for index in range(self.samples):
            M = random_matching(edges, size, self.rng)
            if M is None:
                self.report.skipped.append(f"sample {index}: no matching of size {size}")
                continue
            what = f"theorem3#{index} |M|={len(M)}"
            spec = primitive_spec(CubeRegion(self.shape), required=M)
            try:
                cert, trace = theorem3_ham_cycle(self.shape, sorted(M), provider=self.provider,
                                                 policy=self.policy, budget=self.budget, base_n=self.base_n)
            except KCubeError as exc:
                self._record(False, what, f"{type(exc).__name__}: {exc}", spec)
                continue
            report = check_ham_cycle(cert, M)
            self._record(bool(report), what, report.first_violation, spec)
            if report and not trace.used_fallback():
                clean += 1
        if self.report.passed:
            self.report.fallback_free = clean / self.report.passed
        logger.info("theorem3 无回退比例: %s", self.report.fallback_free)


def run_campaign(mode: str, shape: CubeShape, **options) -> CampaignReport:
    """运行一次扫描并返回报告"""
    return Campaign(mode, shape, **options).run()
