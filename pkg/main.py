#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
主程序入口

批处理命令行：construct / verify / sweep / enumerate。
库代码只抛出异常，这里统一映射为退出码：
0 成功，1 校验失败或意外错误，2 前提不成立，3 预算/能力/穷举受限，4 输入不合法。
"""
# pylint: disable=broad-except

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from config.settings import Config
from core.certify import certify_solution, check_ham_cycle
from core.cube import CubeRegion
from core.exceptions import InputError, KCubeError
from core.campaign import run_campaign
from core.lemmas import LEMMA_OPS, parse_matching, run_lemma
from core.primitives import SearchProvider, primitive_spec
from core.search_engine import enumerate_solutions
from core.theorem import theorem3_ham_cycle
from models.data_models import CubeShape, HamCycleCertificate, SearchBudget, format_vertex
from models.file_models import CertificateFile, InstanceFile
from utils.helpers import load_model, print_banner, render_dot, save_text, setup_logging, split_dimension

logger = logging.getLogger("main")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kcube-ham", description="k 元 n 立方体中经过预设匹配的哈密顿圈")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v 输出 INFO 日志，-vv 输出 DEBUG")
    commands = parser.add_subparsers(dest="command", required=True)

    def shape_flags(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--n", type=int, required=True, help="维数")
        sub.add_argument("--k", type=int, required=True, help="基数，k >= 3")

    def construction_flags(sub: argparse.ArgumentParser, seed: bool = True) -> None:
        sub.add_argument("--policy", choices=("strict", "relaxed"), default=Config.DEFAULT_POLICY)
        sub.add_argument("--base-n", type=int, default=Config.CONSTRUCTION_BASE_N)
        sub.add_argument("--budget-nodes", type=int, default=Config.SEARCH_BUDGET_NODES)
        if seed:
            sub.add_argument("--seed", type=int, default=0, help="搜索种子，0 为确定性顺序")
        sub.add_argument("--workers", type=int, default=Config.PARALLEL_WORKERS)

    construct = commands.add_parser("construct", help="构造哈密顿圈或引理的生成路径")
    shape_flags(construct)
    construct.add_argument("--matching", required=True, metavar="FILE", help="实例文件")
    construct.add_argument("--lemma", choices=sorted(LEMMA_OPS), help="改为运行一条引理")
    construction_flags(construct)
    construct.add_argument("--out", metavar="FILE", help="输出文件，缺省写到标准输出")
    construct.add_argument("--format", choices=("json", "dot"), default="json")
    construct.add_argument("--trace", metavar="FILE", help="构造轨迹输出文件")

    verify = commands.add_parser("verify", help="独立校验证书")
    shape_flags(verify)
    verify.add_argument("--matching", required=True, metavar="FILE")
    verify.add_argument("--certificate", required=True, metavar="FILE")

    sweep = commands.add_parser("sweep", help="定理与引理扫描")
    shape_flags(sweep)
    sweep.add_argument("--mode", choices=Config.SWEEP_MODES, required=True)
    sweep.add_argument("--max-size", type=int)
    sweep.add_argument("--samples", type=int, default=Config.SWEEP_SAMPLES)
    sweep.add_argument("--seed", type=int, default=Config.SWEEP_SEED, help="实例抽样种子")
    construction_flags(sweep, seed=False)
    sweep.add_argument("--out", metavar="FILE", help="报告输出文件")

    enumerate_ = commands.add_parser("enumerate", help="穷举预言机计数")
    shape_flags(enumerate_)
    enumerate_.add_argument("--matching", metavar="FILE", help="可选实例文件：必经边与端点")
    enumerate_.add_argument("--limit", type=int)
    enumerate_.add_argument("--list", action="store_true", help="同时打印全部解")
    return parser


class KCubeCLI:
    """命令分派与文件读写"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.shape = CubeShape(args.n, args.k)

    def _provider(self) -> SearchProvider:
        return SearchProvider(workers=self.args.workers)

    def _budget(self, seed: Optional[int] = None) -> SearchBudget:
        return SearchBudget(self.args.budget_nodes, self.args.seed if seed is None else seed)

    def _instance(self, path: str) -> InstanceFile:
        instance = load_model(path, InstanceFile)
        if (instance.n, instance.k) != (self.shape.n, self.shape.k):
            raise InputError(f"instance file is for Q_{instance.n}^{instance.k}, command line says {self.shape}")
        return instance

    def _emit(self, text: str, path: Optional[str]) -> None:
        if path:
            save_text(path, text)
            logger.info("已写入 %s", path)
        else:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")

    # -- construct -----------------------------------------------------------

    def construct(self) -> int:
        args = self.args
        instance = self._instance(args.matching)
        lemma = args.lemma or instance.lemma
        M = parse_matching(self.shape, instance.pairs())
        options = dict(provider=self._provider(), policy=args.policy, budget=self._budget(), base_n=args.base_n)
        if lemma:
            op = LEMMA_OPS.get(lemma)
            if op is None:
                raise InputError(f"unknown lemma {lemma!r}")
            solution, trace = run_lemma(lemma, self.shape, instance.vertices(), M, instance.split, **options)
            region = op.region(self.shape, instance.split)
            report = certify_solution(solution, op.spec(region, instance.vertices(), M))
            instance = instance.model_copy(update={"lemma": lemma})
        else:
            solution, trace = theorem3_ham_cycle(self.shape, M, **options)
            report = check_ham_cycle(solution, M)
        if not report:
            # 构造层已经复核过，到这里说明两套校验不一致
            logger.critical("构造结果未通过独立校验: %s", report.first_violation)
            return EXIT_FAILED
        if args.trace:
            save_text(args.trace, trace.serialize())
        if args.format == "dot":
            text = render_dot(self.shape, solution, M, split_dimension(trace))
        else:
            text = CertificateFile.of(solution, instance, trace=args.trace, verified=True).dump()
        self._emit(text, args.out)
        logger.info("construct 完成: %s, 摘要 %s, 使用回退: %s", self.shape, solution.digest(), trace.used_fallback())
        return EXIT_OK

    # -- verify --------------------------------------------------------------

    def verify(self) -> int:
        instance = self._instance(self.args.matching)
        certificate = load_model(self.args.certificate, CertificateFile)
        M = parse_matching(self.shape, instance.pairs())
        solution = certificate.solution()
        if isinstance(solution, HamCycleCertificate):
            report = check_ham_cycle(HamCycleCertificate(self.shape, solution.order), M)
        else:
            lemma = instance.lemma or certificate.instance.lemma
            if lemma not in LEMMA_OPS:
                raise InputError("an m-path certificate needs the lemma of its instance")
            op = LEMMA_OPS[lemma]
            region = op.region(self.shape, instance.split or certificate.instance.split)
            report = certify_solution(solution, op.spec(region, instance.vertices(), M))
        if report:
            print("certificate verified")
            return EXIT_OK
        print(f"verification failed: {report.first_violation}")
        return EXIT_FAILED

    # -- sweep ---------------------------------------------------------------

    def sweep(self) -> int:
        args = self.args
        report = run_campaign(args.mode, self.shape, max_size=args.max_size, samples=args.samples,
                              seed=args.seed, provider=self._provider(), policy=args.policy,
                              budget=self._budget(seed=0), base_n=args.base_n)
        self._emit(report.dump(), args.out)
        if report.confirmed_failures:
            return 3
        if not report.ok:
            logger.warning("%d 个实例失败，均未经预言机确认可行: %s", report.failed, report.oracle)
        return EXIT_OK

    # -- enumerate -----------------------------------------------------------

    def enumerate(self) -> int:
        args = self.args
        region = CubeRegion(self.shape)
        if args.matching:
            instance = self._instance(args.matching)
            ends = instance.vertices()
            pairs = [(ends[i], ends[i + 1]) for i in range(0, len(ends) - 1, 2)]
            spec = primitive_spec(region, pairs, parse_matching(self.shape, instance.pairs()),
                                  [tuple(v) for v in instance.forbidden or []])
        else:
            spec = primitive_spec(region)
        solutions = enumerate_solutions(spec, limit=args.limit)
        print(f"{spec.describe()}: {len(solutions)}")
        if args.list:
            for solution in solutions:
                sequences = [solution.order] if isinstance(solution, HamCycleCertificate) else solution.paths
                print(" | ".join(" ".join(format_vertex(v) for v in seq) for seq in sequences))
        return EXIT_OK

    def run(self) -> int:
        return getattr(self, self.args.command)()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    setup_logging(level)
    if args.verbose:
        print_banner()
    logger.debug("搜索配置: %s", Config.get_search_config())
    logger.debug("构造配置: %s", Config.get_construction_config())
    try:
        return KCubeCLI(args).run()
    except KCubeError as exc:
        code = exc.exit_code if exc.exit_code in (2, 3, 4) else EXIT_FAILED
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    except (ValidationError, json.JSONDecodeError) as exc:
        logger.error("输入文件不合法: %s", exc)
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        logger.critical("意外错误: %s", exc, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
