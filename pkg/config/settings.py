#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
系统配置管理
"""

from typing import Dict, Any

class Config:
    """系统配置类"""

    # 文件格式配置
    SCHEMA_TAG = "kcube-ham/1"
    LOG_FILE = "kcube_ham.log"

    # 搜索引擎配置
    SEARCH_BUDGET_NODES = 50_000_000     # 单次搜索的回溯节点上限
    CONNECTIVITY_STRIDE_DIVISOR = 256    # 连通性剪枝间隔 = max(1, V // 除数)
    PARALLEL_WORKERS = 1                 # 顶层分支并行数，1 表示串行
    ENUMERATION_THRESHOLD = 36           # 穷举预言机允许的最大区域顶点数

    # 先验原语(provider)配置
    PROVIDER_CAPABILITY = 4096           # provider 可处理的最大区域顶点数
    PROVIDER_ATTEMPT_NODES = 250_000     # 每次重启分配的节点预算
    SIDE_CONDITION_RETRIES = 8           # 附加条件未满足时换种子重试次数

    # 构造配置
    CONSTRUCTION_BASE_N = 4              # 定理3递归中 n <= base_n 的子问题直接交给 provider
    DEFAULT_POLICY = "relaxed"           # strict | relaxed

    # 扫描配置
    SWEEP_SAMPLES = 200
    SWEEP_SEED = 0
    SWEEP_MODES = ("theorem1", "theorem2", "lemma-campaign", "theorem3")
    SWEEP_EXHAUSTIVE_LIMIT = 20_000      # 实例总数不超过该值时穷举，否则抽样
    SWEEP_DRAW_ATTEMPTS = 50             # 每个样本允许的随机抽取次数
    SWEEP_FAILURE_LOG = 20               # 报告中保留的失败说明条数

    SEARCH_PIPELINE = {
        "degree_cut": True,
        "articulation_cut": True,
        "chain_closure": True,
    }

    @classmethod
    def get_search_config(cls) -> Dict[str, Any]:
        """获取搜索引擎完整配置"""
        return {
            "max_nodes": cls.SEARCH_BUDGET_NODES,
            "stride_divisor": cls.CONNECTIVITY_STRIDE_DIVISOR,
            "workers": cls.PARALLEL_WORKERS,
            **cls.SEARCH_PIPELINE,
        }

    @classmethod
    def get_construction_config(cls) -> Dict[str, Any]:
        """获取构造层完整配置"""
        return {
            "policy": cls.DEFAULT_POLICY,
            "base_n": cls.CONSTRUCTION_BASE_N,
            "capability": cls.PROVIDER_CAPABILITY,
            "retries": cls.SIDE_CONDITION_RETRIES,
            "attempt_nodes": cls.PROVIDER_ATTEMPT_NODES,
        }
