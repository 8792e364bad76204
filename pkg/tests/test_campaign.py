#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
扫描测试：实例抽取、定理扫描与报告计数
"""

import sys
import os

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from core.campaign import (ORACLE_FEASIBLE, ORACLE_INFEASIBLE, ORACLE_REFUSED, Campaign, random_matching,
                           region_edges, run_campaign)
from core.cube import CubeRegion
from core.exceptions import BudgetExceededError, InputError
from core.lemmas import LEMMA_OPS
from core.primitives import primitive_spec
from models.data_models import CubeShape


def test_campaign_rejects_bad_options():
    with pytest.raises(InputError):
        Campaign("theorem9", CubeShape(2, 4))
    with pytest.raises(InputError):
        Campaign("theorem1", CubeShape(2, 4), samples=0)


@pytest.mark.parametrize("name", sorted(LEMMA_OPS))
def test_drawn_instances_satisfy_preconditions(name):
    """n=5, k=4 下每条引理都能抽到满足前提的实例"""
    shape = CubeShape(5, 4)
    campaign = Campaign("lemma-campaign", shape, seed=7)
    op = LEMMA_OPS[name]
    instance = campaign._accepted(op)
    assert instance is not None
    split_at, ends, M = instance
    assert op.validate(op.region(shape, split_at), ends, M)


def test_structural_clause_skips_lemma():
    campaign = Campaign("lemma-campaign", CubeShape(4, 4), seed=0)
    assert campaign._accepted(LEMMA_OPS["lemma12"]) is None
    assert "lemma12: n >= 5" in campaign.report.skipped


def test_random_matching_is_a_matching():
    edges = region_edges(CubeRegion(CubeShape(3, 4)))
    M = random_matching(edges, 5, np.random.default_rng(3))
    assert len(M) == 5
    assert len({v for e in M for v in e}) == 10
    assert random_matching(edges, 0, np.random.default_rng(3)) == frozenset()


def test_theorem3_sweep_on_q54():
    """n=5 时上限为 0，每个样本都是无回退的 Gray 码圈"""
    report = run_campaign("theorem3", CubeShape(5, 4), samples=2)
    assert report.ok
    assert report.passed == report.total == 2
    assert report.fallback_free == 1.0
    assert report.max_size == 0


def test_theorem1_single_edges():
    """Q_2^4 的每条边都在某个哈密顿圈上"""
    report = run_campaign("theorem1", CubeShape(2, 4), max_size=1)
    assert report.exhaustive
    assert report.total == 32
    assert report.passed == 32


def test_theorem2_zero_bound_is_skipped():
    report = run_campaign("theorem2", CubeShape(2, 4))
    assert report.total == 0
    assert report.skipped == ["bound 0"]
    assert report.ok


class GivingUpProvider:
    """总是耗尽预算的 provider"""

    def solve(self, kind, spec, budget=None):
        raise BudgetExceededError(f"{spec.describe()}: gave up")


def test_failures_carry_oracle_verdict():
    """Q_2^4 上每条边都可行，provider 放弃的实例都被预言机确认"""
    report = run_campaign("theorem1", CubeShape(2, 4), max_size=1, provider=GivingUpProvider())
    assert report.failed == report.total == 32
    assert report.confirmed_failures == 32
    assert report.oracle == {ORACLE_FEASIBLE: 32}
    assert all(line.endswith(ORACLE_FEASIBLE) for line in report.failures)


def test_unconfirmed_failures_are_not_counted():
    campaign = Campaign("theorem1", CubeShape(2, 4))
    same_parity = primitive_spec(CubeRegion(CubeShape(2, 4)), [((0, 0), (1, 1))])
    campaign._record(False, "same parity", "no path", same_parity)
    campaign._record(False, "big", "no cycle", primitive_spec(CubeRegion(CubeShape(3, 4))))
    report = campaign.report
    assert report.failed == 2
    assert report.confirmed_failures == 0
    assert report.oracle == {ORACLE_INFEASIBLE: 1, ORACLE_REFUSED: 1}


@pytest.mark.slow
@pytest.mark.parametrize("k", [3, 4])
def test_theorem1_exhaustive(k):
    """|F| <= 3 的全部线性森林"""
    report = run_campaign("theorem1", CubeShape(2, k))
    assert report.exhaustive
    assert report.max_size == 3
    assert report.failed == 0, report.failures


@pytest.mark.slow
def test_theorem2_exhaustive_on_q34():
    report = run_campaign("theorem2", CubeShape(3, 4))
    assert report.exhaustive
    assert report.total == 192
    assert report.failed == 0, report.failures


@pytest.mark.slow
def test_lemma_campaign_on_q44():
    report = run_campaign("lemma-campaign", CubeShape(4, 4), samples=6, policy="relaxed")
    assert report.failed == 0, report.failures
    assert "lemma12: n >= 5" in report.skipped
    assert report.per_op["lemma11"]["passed"] == 6
    assert report.per_op["lemma14"]["passed"] == 6
