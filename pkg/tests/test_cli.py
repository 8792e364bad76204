#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
命令行测试：construct / verify / sweep / enumerate 与退出码
"""

import sys
import os
import json

# 添加项目根目录到路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest

from main import main
from models.file_models import CampaignReport, CertificateFile, InstanceFile

SHAPE_FLAGS = ["--n", "5", "--k", "4"]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """在临时目录中运行，日志文件也写在这里"""
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_instance(path, **fields):
    fields.setdefault("n", 5)
    fields.setdefault("k", 4)
    path.write_text(InstanceFile(**fields).dump(), encoding="utf-8")
    return str(path)


def construct_cycle(workdir):
    instance = write_instance(workdir / "instance.json")
    code = main(["construct", *SHAPE_FLAGS, "--matching", instance, "--out", "cert.json", "--trace", "trace.txt"])
    assert code == 0
    return instance


def test_construct_writes_verified_certificate(workdir):
    construct_cycle(workdir)
    cert = CertificateFile.model_validate_json((workdir / "cert.json").read_text(encoding="utf-8"))
    assert cert.kind == "cycle"
    assert cert.verified
    assert len(cert.sequences[0]) == 1024
    assert cert.trace == "trace.txt"
    assert (workdir / "trace.txt").read_text(encoding="utf-8").startswith("trace theorem3")


def test_verify_accepts_and_rejects(workdir, capsys):
    instance = construct_cycle(workdir)
    capsys.readouterr()
    assert main(["verify", *SHAPE_FLAGS, "--matching", instance, "--certificate", "cert.json"]) == 0
    assert "certificate verified" in capsys.readouterr().out

    data = json.loads((workdir / "cert.json").read_text(encoding="utf-8"))
    seq = data["sequences"][0]
    seq[1], seq[5] = seq[5], seq[1]
    (workdir / "bad.json").write_text(json.dumps(data), encoding="utf-8")
    assert main(["verify", *SHAPE_FLAGS, "--matching", instance, "--certificate", "bad.json"]) == 1
    assert "non-edge step" in capsys.readouterr().out


def test_verify_reports_missing_required_edge(workdir, capsys):
    """Gray 码圈不经过 (0,0,0,0,0)-(1,0,0,0,0)"""
    construct_cycle(workdir)
    other = write_instance(workdir / "other.json", matching=[[[0, 0, 0, 0, 0], [1, 0, 0, 0, 0]]])
    capsys.readouterr()
    assert main(["verify", *SHAPE_FLAGS, "--matching", other, "--certificate", "cert.json"]) == 1
    assert "required edge absent" in capsys.readouterr().out


def test_oversized_matching_exits_with_precondition_code(workdir, capsys):
    instance = write_instance(workdir / "instance.json", matching=[[[0, 0, 0, 0, 0], [1, 0, 0, 0, 0]]])
    assert main(["construct", *SHAPE_FLAGS, "--matching", instance]) == 2
    assert "|M| <= 4n-20" in capsys.readouterr().err


def test_malformed_inputs_exit_with_input_code(workdir):
    (workdir / "broken.json").write_text("{not json", encoding="utf-8")
    assert main(["construct", *SHAPE_FLAGS, "--matching", "broken.json"]) == 4
    (workdir / "digit.json").write_text(json.dumps({"n": 5, "k": 4, "matching": [[[0, 0, 0, 0, 9], [0, 0, 0, 0, 0]]]}),
                                        encoding="utf-8")
    assert main(["construct", *SHAPE_FLAGS, "--matching", "digit.json"]) == 4
    instance = write_instance(workdir / "instance.json")
    assert main(["construct", "--n", "6", "--k", "4", "--matching", instance]) == 4
    assert main(["construct", *SHAPE_FLAGS, "--matching", "missing.json"]) == 4


def test_lemma_construct_and_verify(workdir, capsys):
    """引理级调用输出 m-路径证书，verify 按实例中的引理复核"""
    instance = write_instance(workdir / "lemma.json", n=4, lemma="lemma16",
                              endpoints=[[0, 0, 0, 0], [1, 1, 1, 0]])
    flags = ["--n", "4", "--k", "4"]
    assert main(["construct", *flags, "--matching", instance, "--policy", "relaxed", "--out", "path.json"]) == 0
    cert = CertificateFile.model_validate_json((workdir / "path.json").read_text(encoding="utf-8"))
    assert cert.kind == "m-path"
    capsys.readouterr()
    assert main(["verify", *flags, "--matching", instance, "--certificate", "path.json"]) == 0
    assert "certificate verified" in capsys.readouterr().out


def test_dot_output(workdir):
    instance = write_instance(workdir / "instance.json")
    assert main(["construct", *SHAPE_FLAGS, "--matching", instance, "--format", "dot", "--out", "cycle.dot"]) == 0
    text = (workdir / "cycle.dot").read_text(encoding="utf-8")
    assert text.startswith('graph "Q_5^4"')
    assert '"cluster_0"' in text
    assert text.count(" -- ") == 1024


def test_enumerate(workdir, capsys):
    assert main(["enumerate", "--n", "1", "--k", "4"]) == 0
    assert capsys.readouterr().out.strip().endswith(": 1")
    assert main(["enumerate", "--n", "3", "--k", "4"]) == 3


def test_sweep_writes_report(workdir):
    assert main(["sweep", *SHAPE_FLAGS, "--mode", "theorem3", "--samples", "1", "--out", "report.json"]) == 0
    report = CampaignReport.model_validate_json((workdir / "report.json").read_text(encoding="utf-8"))
    assert report.passed == 1
    assert report.fallback_free == 1.0


@pytest.mark.parametrize("confirmed,code", [(0, 0), (1, 3)])
def test_sweep_exit_code_follows_oracle(workdir, monkeypatch, confirmed, code):
    """只有预言机确认可行的失败实例才让 sweep 返回 3"""
    report = CampaignReport(mode="lemma-campaign", n=5, k=4, total=2, passed=0, failed=2,
                            confirmed_failures=confirmed,
                            oracle={"oracle refused": 2 - confirmed, "oracle-confirmed feasible": confirmed})
    monkeypatch.setattr("main.run_campaign", lambda *args, **kwargs: report)
    assert main(["sweep", *SHAPE_FLAGS, "--mode", "lemma-campaign", "--samples", "1", "--out", "report.json"]) == code
    written = CampaignReport.model_validate_json((workdir / "report.json").read_text(encoding="utf-8"))
    assert written.confirmed_failures == confirmed
