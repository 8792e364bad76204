#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
工具函数模块

该模块包含应用程序中使用的各种辅助工具函数，包括：
1. 日志配置设置
2. 系统横幅打印
3. JSON 文件读写
4. DOT 渲染
"""

# 导入必要的模块
import logging
import sys
from pathlib import Path
from typing import Iterable, Optional, Type, TypeVar

from jinja2 import Environment, FileSystemLoader, StrictUndefined
from pydantic import BaseModel

from config.settings import Config
from core.exceptions import InputError
from models.data_models import ConstructionTrace, CubeShape, HamCycleCertificate, format_vertex

ModelT = TypeVar("ModelT", bound=BaseModel)

# 模板目录
TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"


def setup_logging(level: int = logging.INFO) -> logging.Logger:
    """设置日志配置

    Args:
        level: 日志级别，默认值为logging.INFO

    Returns:
        logging.Logger: 配置好的日志记录器实例
    """
    logging.basicConfig(
        level=level,                         # 设置日志级别
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',  # 日志格式
        handlers=[
            logging.StreamHandler(sys.stderr),  # 标准输出留给结果
            logging.FileHandler(Config.LOG_FILE, encoding='utf-8')  # 输出到日志文件
        ],
        force=True,
    )
    return logging.getLogger(__name__)  # 返回当前模块的日志记录器


def print_banner():
    """打印命令行横幅"""
    banner = f"""
    k 元 n 立方体：经过预设匹配的哈密顿圈
    ========================================
    命令说明:
    • construct - 构造哈密顿圈或引理的生成路径
    • verify    - 独立校验证书文件
    • sweep     - theorem1 / theorem2 / lemma-campaign / theorem3 扫描
    • enumerate - 小区域穷举计数
    ========================================
    文件格式: {Config.SCHEMA_TAG}
    """
    print(banner, file=sys.stderr)


def load_model(path: str, model: Type[ModelT]) -> ModelT:
    """读取并校验 JSON 文件

    Raises:
        InputError: 文件无法读取
        pydantic.ValidationError: 内容不是合法 JSON 或不符合模型
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return model.model_validate_json(text)


def save_text(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")


def split_dimension(trace: Optional[ConstructionTrace], default: int = 1) -> int:
    """轨迹根部使用的划分维度（1 起始）"""
    if trace is None:
        return default
    split_at = trace.arguments.get("split")
    if split_at:
        return int(split_at[0])
    for step in trace.root.walk():
        for name, value in step.choices:
            if name == "d":
                return int(value)
    return default


def render_dot(shape: CubeShape, solution, required: Iterable = (), dim: int = 1) -> str:
    """把圈或 m-路径渲染为 DOT，顶点按第 dim 维坐标分簇，必经边加粗"""
    if isinstance(solution, HamCycleCertificate):
        sequences = [tuple(solution.order) + (solution.order[0],)]
    else:
        sequences = list(solution.paths)
    marked = {frozenset(e) for e in required}
    pos = dim - 1
    clusters = []
    for value in range(shape.k):
        members = sorted(v for seq in sequences for v in set(seq) if v[pos] == value)
        clusters.append({"value": value, "vertices": [format_vertex(v) for v in members]})
    edges = []
    for seq in sequences:
        for a, b in zip(seq, seq[1:]):
            edges.append((format_vertex(a), format_vertex(b), frozenset((a, b)) in marked))
    env = Environment(loader=FileSystemLoader(str(TEMPLATE_DIR)), undefined=StrictUndefined,
                      trim_blocks=True, lstrip_blocks=True)
    return env.get_template("torus.dot.j2").render(
        name=str(shape),
        dim=dim,
        clusters=clusters,
        edges=edges,
    )
