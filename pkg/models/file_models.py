#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
文件模型定义

命令行读写的 JSON 文件：实例文件、证书文件与扫描报告。
顶点一律序列化为整数数组，k > 10 时也没有歧义。
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import Config
from core.exceptions import InputError
from models.data_models import CubeShape, HamCycleCertificate, PathSystem, Vertex

VertexList = List[int]


class SchemaModel(BaseModel):
    """所有文件模型共用的 schema 标签"""
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    schema_tag: str = Field(default=Config.SCHEMA_TAG, alias="schema")

    @model_validator(mode="after")
    def check_schema(self):
        if self.schema_tag != Config.SCHEMA_TAG:
            raise ValueError(f"unsupported schema {self.schema_tag!r}, expected {Config.SCHEMA_TAG!r}")
        return self

    def dump(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2, exclude_none=True)


class InstanceFile(SchemaModel):
    """实例文件：立方体参数、匹配以及引理级调用的可选字段"""
    n: int                                          # 维数
    k: int                                          # 基数
    matching: List[List[VertexList]] = []           # 每项是一对顶点
    endpoints: Optional[List[VertexList]] = None    # 引理的端点，按引理参数顺序
    forbidden: Optional[List[VertexList]] = None    # 禁用顶点
    lemma: Optional[str] = None                     # 引理名，如 "lemma12"
    split: Optional[List[int]] = None               # 区间类引理的 (d, p, q)

    @model_validator(mode="after")
    def check_vertices(self):
        shape = self.shape()
        for pair in self.matching:
            if len(pair) != 2:
                raise ValueError(f"matching entry {pair!r} is not a vertex pair")
            for v in pair:
                shape.validate_vertex(v)
        for v in (self.endpoints or []) + (self.forbidden or []):
            shape.validate_vertex(v)
        return self

    def shape(self) -> CubeShape:
        return CubeShape(self.n, self.k)

    def pairs(self) -> List[tuple]:
        return [(tuple(a), tuple(b)) for a, b in self.matching]

    def vertices(self) -> List[Vertex]:
        return [tuple(v) for v in self.endpoints or []]


class CertificateFile(SchemaModel):
    """证书文件：圈或 m-路径的顶点序列及实例回显

    verified 只在进程内 certify 通过后置为 True。
    """
    kind: Literal["cycle", "m-path"]
    sequences: List[List[VertexList]]
    instance: InstanceFile
    digest: Optional[str] = None        # 证书摘要
    trace: Optional[str] = None         # 轨迹文件路径
    verified: bool = False

    @classmethod
    def of(cls, solution, instance: InstanceFile, trace: Optional[str] = None,
           verified: bool = False) -> "CertificateFile":
        if isinstance(solution, HamCycleCertificate):
            kind, sequences = "cycle", [solution.order]
        else:
            kind, sequences = "m-path", list(solution.paths)
        return cls(
            kind=kind,
            sequences=[[list(v) for v in seq] for seq in sequences],
            instance=instance,
            digest=solution.digest(),
            trace=trace,
            verified=verified,
        )

    def solution(self):
        """还原为 HamCycleCertificate 或 PathSystem"""
        sequences = tuple(tuple(tuple(v) for v in seq) for seq in self.sequences)
        if self.kind == "cycle":
            if len(sequences) != 1:
                raise InputError(f"a cycle certificate holds one sequence, got {len(sequences)}")
            return HamCycleCertificate(self.instance.shape(), sequences[0])
        return PathSystem(sequences)


class CampaignReport(SchemaModel):
    """扫描报告"""
    mode: str
    n: int
    k: int
    max_size: Optional[int] = None
    samples: Optional[int] = None
    seed: int = 0
    exhaustive: bool = False
    total: int = 0
    passed: int = 0
    failed: int = 0
    skipped: List[str] = []
    fallback_free: Optional[float] = None          # 无回退完成的比例，仅 theorem3 模式
    per_op: Dict[str, Dict[str, int]] = {}          # lemma-campaign 按引理统计
    failures: List[str] = []                        # 前若干个失败实例的说明
    confirmed_failures: int = 0                     # 预言机确认可行却构造失败的实例数
    oracle: Dict[str, int] = {}                     # 失败实例按预言机结论计数

    @property
    def ok(self) -> bool:
        return self.failed == 0
