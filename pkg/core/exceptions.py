#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
异常定义

库代码只抛出异常，由命令行入口统一捕获并映射为退出码。
"""

from typing import Optional


class KCubeError(Exception):
    """所有领域异常的基类"""

    exit_code = 1


class InputError(KCubeError, ValueError):
    """顶点、边、约束或文件格式不合法"""

    exit_code = 4


class PreconditionViolation(KCubeError):
    """引理/原语的前提条件不成立

    Args:
        clause: 失败的前提子句名称，如 "parity"、"forest too large"
        detail: 附加说明
    """

    exit_code = 2

    def __init__(self, clause: str, detail: Optional[str] = None):
        self.clause = clause
        self.detail = detail
        message = clause if not detail else f"{clause}: {detail}"
        super().__init__(message)


class NoDimensionError(PreconditionViolation):
    """不存在满足条件的划分维度"""

    def __init__(self, detail: Optional[str] = None):
        super().__init__("no admissible dimension", detail)


class BudgetExceededError(KCubeError):
    """搜索预算耗尽，结论不确定"""

    exit_code = 3


class CapabilityRefused(KCubeError):
    """区域规模超过 provider 能力上限"""

    exit_code = 3

    def __init__(self, region: str, size: int, capability: int):
        self.region = region
        self.size = size
        self.capability = capability
        super().__init__(f"region {region} has {size} vertices, capability is {capability}")


class EnumerationRefused(KCubeError):
    """穷举预言机拒绝过大的区域"""

    exit_code = 3


class ConsistencyAlarm(KCubeError):
    """定理保证存在的实例被完整搜索判定为无解"""

    exit_code = 3


class ChoiceExhausted(KCubeError):
    """"choose ... such that" 扫描没有命中"""

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"no candidate for {label}")


class AssemblyError(KCubeError):
    """拼接得到的边集不构成预期的路径或圈"""


class NotApplicableError(KCubeError):
    """操作在当前参数下无意义，例如奇数 k 的平衡性检查"""

    exit_code = 2


class SideConditionUnmet(AssemblyError):
    """provider 的解都不满足附加条件"""

    def __init__(self, condition: str, attempts: int, violation: str):
        self.condition = condition
        self.violation = violation
        super().__init__(f"side condition {condition} not met after {attempts} attempts: {violation}")
