#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
搜索引擎测试：与穷举预言机一致、剪枝开关不改变结论、确定性
"""

import sys
import os
from itertools import combinations

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from core.certify import certify_solution
from core.cube import CubeRegion, Edge, split
from core.exceptions import EnumerationRefused, InputError
from core.primitives import primitive_spec
from core.search_engine import enumerate_solutions, search, validate_spec
from models.data_models import CubeShape, SearchBudget, SearchOptions, SearchStatus

NO_PRUNING = SearchOptions(degree_cut=False, articulation_cut=False, chain_closure=False)


CORPUS_SIZE = 500
QUICK_SIZE = 60

# 16 个顶点以内的立方体、子立方体与区间
CORPUS_REGIONS = (
    CubeRegion(CubeShape(1, 5)),
    CubeRegion(CubeShape(1, 8)),
    CubeRegion(CubeShape(2, 3)),
    CubeRegion(CubeShape(2, 4)),
    CubeRegion(CubeShape(3, 3), ((0, 1),)),
    CubeRegion(CubeShape(3, 4), ((2, 3),)),
    split(CubeShape(2, 4), 2).range(1, 2),
    split(CubeShape(2, 5), 1).range(0, 2),
    split(CubeShape(2, 6), 1).range(2, 3),
    split(CubeShape(3, 3), 3).range(0, 0),
)


def draw_spec(region, rng):
    """随机约束：圈、单路径、2-路径或去掉顶点的路径，外加至多两条必经边"""
    vertices = sorted(region.vertices())
    kind = int(rng.integers(0, 4))
    order = [vertices[int(i)] for i in rng.permutation(len(vertices))]
    forbidden = order[:int(rng.integers(1, 3))] if kind == 3 else []
    rest = order[len(forbidden):]
    pairs = [(rest[2 * i], rest[2 * i + 1]) for i in range((0, 1, 2, 1)[kind])]
    edges = [e for e in sorted(region.edges()) if not set(e) & set(forbidden)]
    required = [edges[int(i)] for i in rng.permutation(len(edges))[:int(rng.integers(0, 3))]]
    return primitive_spec(region, pairs, required, forbidden)


def frozen_corpus(size=CORPUS_SIZE, seed=20240611):
    rng = np.random.default_rng(seed)
    return [draw_spec(CORPUS_REGIONS[i % len(CORPUS_REGIONS)], rng) for i in range(size)]


CORPUS = frozen_corpus()


def corpus_params(specs):
    return [pytest.param(spec, id=f"{i}:{spec.describe()}") for i, spec in enumerate(specs)]


def check_oracle_agreement(spec):
    result = search(spec, SearchBudget(10_000_000))
    assert result.status is not SearchStatus.BUDGET_EXCEEDED
    oracle = enumerate_solutions(spec, limit=1)
    assert result.found == bool(oracle)
    if result.found:
        assert certify_solution(result.solution, spec)
        assert certify_solution(oracle[0], spec)


def check_pruning_verdict(spec):
    full = search(spec, SearchBudget(10_000_000))
    bare = search(spec, SearchBudget(10_000_000), NO_PRUNING)
    assert full.found == bare.found


def test_corpus_is_frozen_and_mixed():
    """同一种子得到同一语料；各类约束都出现"""
    assert frozen_corpus(20) == CORPUS[:20]
    assert len(CORPUS) == CORPUS_SIZE
    assert all(spec.vertex_count <= 36 for spec in CORPUS)
    assert any(spec.is_cycle for spec in CORPUS)
    assert any(len(spec.endpoint_pairs) == 2 for spec in CORPUS)
    assert any(spec.forbidden for spec in CORPUS)
    assert any(spec.required for spec in CORPUS)
    assert any(not isinstance(spec.region, CubeRegion) for spec in CORPUS)


@pytest.mark.parametrize("spec", corpus_params(CORPUS[:QUICK_SIZE]))
def test_search_agrees_with_oracle(spec):
    """搜索 Exhausted 当且仅当穷举为空；找到的解都能通过校验"""
    check_oracle_agreement(spec)


@pytest.mark.parametrize("spec", corpus_params(CORPUS[:QUICK_SIZE]))
def test_pruning_toggles_do_not_change_verdict(spec):
    check_pruning_verdict(spec)


@pytest.mark.slow
@pytest.mark.parametrize("spec", corpus_params(CORPUS[QUICK_SIZE:]))
def test_search_agrees_with_oracle_full_corpus(spec):
    check_oracle_agreement(spec)


@pytest.mark.slow
@pytest.mark.parametrize("spec", corpus_params(CORPUS[QUICK_SIZE:]))
def test_pruning_toggles_do_not_change_verdict_full_corpus(spec):
    check_pruning_verdict(spec)


def test_same_parity_endpoints_are_infeasible():
    """偶数 k 的平衡二部图中，同奇偶端点之间没有哈密顿路径"""
    region = CubeRegion(CubeShape(2, 4))
    spec = primitive_spec(region, [((0, 0), (1, 1))])
    assert search(spec).status is SearchStatus.EXHAUSTED
    assert enumerate_solutions(spec) == []


def test_ring_has_one_cycle():
    """Q_1^k 只有一个哈密顿圈"""
    for k in (3, 4, 5):
        spec = primitive_spec(CubeRegion(CubeShape(1, k)))
        assert len(enumerate_solutions(spec)) == 1


def test_oracle_counts_paths_on_ring():
    """环上相邻两点之间恰有一条哈密顿路径"""
    spec = primitive_spec(CubeRegion(CubeShape(1, 6)), [((0,), (1,))])
    solutions = enumerate_solutions(spec)
    assert len(solutions) == 1
    assert solutions[0].paths[0] in (((0,), (5,), (4,), (3,), (2,), (1,)), ((1,), (2,), (3,), (4,), (5,), (0,)))


def test_oracle_refuses_large_regions():
    with pytest.raises(EnumerationRefused):
        enumerate_solutions(primitive_spec(CubeRegion(CubeShape(3, 4))))


def test_search_is_deterministic_with_seed_zero():
    shape = CubeShape(3, 4)
    spec = primitive_spec(CubeRegion(shape), [((0, 0, 0), (1, 1, 1))], required=[Edge.of((2, 2, 2), (2, 2, 3))])
    first = search(spec, SearchBudget(5_000_000, 0))
    second = search(spec, SearchBudget(5_000_000, 0))
    assert first.found
    assert first.solution == second.solution
    assert certify_solution(first.solution, spec)


def test_search_on_range_with_two_paths():
    """区间视图上的生成 2-路径"""
    shape = CubeShape(3, 4)
    view = split(shape, 1).range(0, 1)
    spec = primitive_spec(view, [((0, 0, 0), (0, 0, 1)), ((0, 2, 2), (0, 2, 3))])
    result = search(spec, SearchBudget(5_000_000))
    assert result.found
    assert certify_solution(result.solution, spec)


def test_search_with_forbidden_vertex():
    """奇数 k 下去掉一个顶点的哈密顿路径"""
    shape = CubeShape(2, 5)
    spec = primitive_spec(CubeRegion(shape), [((0, 0), (2, 2))], forbidden=[(4, 4)])
    result = search(spec, SearchBudget(5_000_000))
    assert result.found
    assert certify_solution(result.solution, spec)
    assert (4, 4) not in set(result.solution.vertices())


def test_exhaustive_small_matchings_on_cycle_specs():
    """Q_2^4 中任意两条不交边都在某个哈密顿圈上"""
    region = CubeRegion(CubeShape(2, 4))
    edges = sorted(region.edges())[:8]
    for a, b in combinations(edges, 2):
        if set(a) & set(b):
            continue
        spec = primitive_spec(region, required=[a, b])
        result = search(spec, SearchBudget(5_000_000))
        assert result.found
        assert certify_solution(result.solution, spec)


def test_validate_spec_rejects_bad_specs():
    region = CubeRegion(CubeShape(2, 4), ((0, 0),))
    with pytest.raises(InputError):
        validate_spec(primitive_spec(region, required=[Edge.of((1, 0), (1, 1))]))
    with pytest.raises(InputError):
        validate_spec(primitive_spec(region, [((0, 0), (0, 1)), ((0, 1), (0, 2))]))
    with pytest.raises(InputError):
        validate_spec(primitive_spec(region, [((0, 0), (0, 1))], forbidden=[(0, 0)]))
