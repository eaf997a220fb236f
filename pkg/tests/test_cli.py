import json

import pytest

from folbench.cli import main
from folbench.dataset import read_dataset


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "data"
    assert main(["generate", "--offline", "--count", "3", "--seed", "4", "--out", str(out), "--workers", "1"]) == 0
    return out


def test_generate_writes_shards_and_snapshot(data, capsys):
    names = {p.name for p in data.iterdir()}
    assert names == {"easy.jsonl", "medium.jsonl", "hard.jsonl", "manifest.json", "config.json"}
    snapshot = json.loads((data / "config.json").read_text())
    assert snapshot["generate"]["seed"] == 4 and snapshot["generate"]["offline"] is True


def test_snapshot_reproduces(data, tmp_path):
    again = tmp_path / "again"
    assert main(["generate", "--config", str(data / "config.json"), "--out", str(again)]) == 0
    for tier in ("easy", "medium", "hard"):
        assert (again / f"{tier}.jsonl").read_bytes() == (data / f"{tier}.jsonl").read_bytes()


def test_verify(data, tmp_path, capsys):
    assert main(["verify", str(data)]) == 0
    assert "9 passed, 0 failed" in capsys.readouterr().out
    bad = tmp_path / "bad.jsonl"
    rows = (data / "easy.jsonl").read_text().splitlines()
    row = json.loads(rows[0])
    row["answer"] = "C" if row["answer"] != "C" else "A"
    bad.write_text("\n".join([json.dumps(row)] + rows[1:]) + "\n")
    assert main(["verify", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "1 failed" in out and "first failure: easy-00000" in out
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["verify", str(empty)]) == 1


def test_config_errors(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("FOLBENCH_API_KEY", raising=False)
    assert main(["generate", "--count", "1", "--out", str(tmp_path / "a")]) == 2
    assert main(["generate", "--count", "1", "--out", str(tmp_path / "a"),
                 "--model-name", "m", "--endpoint", "http://x"]) == 2
    assert main(["generate", "--offline", "--mode", "easy", "--depth-max", "5",
                 "--out", str(tmp_path / "a")]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generate": {"bogus": 1}}))
    assert main(["generate", "--config", str(cfg), "--offline"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_eval_writes_reports(data, tmp_path, capsys):
    out = tmp_path / "eval"
    assert main(["eval", str(data), "--model", "oracle", "--strategy", "cot", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["overall"] == 100.0 and report["strategy"] == "cot-2shot"
    assert (out / "records.jsonl").exists() and (out / "config.json").exists()
    assert "CoT Prompting" in capsys.readouterr().out
    assert main(["eval", str(data), "--model", "random", "--ablation", "--out", str(out)]) == 0
    assert len(json.loads((out / "ablation.json").read_text())) == 3


def test_eval_chat_needs_key(data, monkeypatch):
    monkeypatch.delenv("FOLBENCH_API_KEY", raising=False)
    assert main(["eval", str(data), "--model", "chat", "--model-name", "m", "--endpoint", "http://x"]) == 2


def test_transforms(data, tmp_path, capsys):
    assert main(["augment", str(data), "--out", str(tmp_path / "aug")]) == 0
    aug = read_dataset(tmp_path / "aug")
    assert {i.metadata["source"] for i in aug} == {"step", "uncertain"}
    assert main(["corrupt", str(data), "--out", str(tmp_path / "cor"), "--count", "5", "--seed", "1"]) == 0
    assert "0 true/false flips" in capsys.readouterr().out
    assert len(read_dataset(tmp_path / "cor")) == 5
    assert main(["verify", str(tmp_path / "aug")]) == 0


def test_export(data, tmp_path):
    assert main(["export", str(data), "--out", str(tmp_path / "p9")]) == 0
    files = sorted((tmp_path / "p9").iterdir())
    assert len(files) == 9
    text = files[0].read_text()
    assert text.startswith("formulas(assumptions).") and "formulas(goals)." in text


def test_translate_offline(data, tmp_path):
    assert main(["translate", str(data), "--offline", "--out", str(tmp_path / "tr")]) == 0
    assert main(["verify", str(tmp_path / "tr")]) == 0
    before = {i.id: i.answer for i in read_dataset(data)}
    assert {i.id: i.answer for i in read_dataset(tmp_path / "tr")} == before
