import json

import pytest

from folbench.dataset import read_jsonl
from folbench.evaluate import (
    COT, SEPARATOR, STANDARD, ChatModel, OracleModel, PromptStrategy, RandomModel, EvalItem,
    build_prompt, format_ablation_table, format_results_table, import_records, load_items,
    parse_reply, run_ablation, run_eval, write_records,
)
from folbench.nl.backends import BackendError


@pytest.mark.parametrize("raw, expected", [
    ('{"answer": "A"}', "A"),
    ('Sure! {"reasoning": "...", "answer": "B) False"}', "B"),
    ('{"answer": "(C)"}', "C"),
    ('{"answer": "True"}', None),
    ("The answer is A", None),
    ("", None),
])
def test_parse_reply(raw, expected):
    assert parse_reply(raw) == expected


def test_prompt_layout(golden_path):
    item = EvalItem.from_instance(read_jsonl(golden_path)[0])
    msgs = build_prompt(item, PromptStrategy(COT, 2))
    assert [m["role"] for m in msgs] == ["system", "user"]
    body = msgs[1]["content"]
    assert body.count(SEPARATOR) == 2
    assert body.rstrip().endswith("The correct option is:")
    assert '"reasoning"' in body and "Paola" in body
    std = build_prompt(item, PromptStrategy(STANDARD, 2))[1]["content"]
    assert '"reasoning"' not in std
    assert build_prompt(item, PromptStrategy(STANDARD, 5))[1]["content"].count(SEPARATOR) == 5


def test_strategy_validation():
    assert PromptStrategy(COT, 5).name == "cot-5shot"
    with pytest.raises(ValueError):
        PromptStrategy("tree")
    with pytest.raises(ValueError):
        PromptStrategy(STANDARD, 9)


def test_oracle_perfect(small_generated, golden_path):
    run = run_eval(small_generated + read_jsonl(golden_path), OracleModel(), PromptStrategy(COT))
    report = run.report()
    assert report["per_tier"] == {"easy": 100.0, "medium": 100.0, "hard": 100.0}
    assert report["overall"] == 100.0 and report["unparseable_count"] == 0


def test_random_is_seeded(small_generated):
    a = run_eval(small_generated, RandomModel(3)).report_json()
    assert a == run_eval(small_generated, RandomModel(3), workers=4).report_json()
    assert a != run_eval(small_generated, RandomModel(4)).report_json()


def test_chat_model_errors_counted(small_generated):
    class Broken:
        name = "broken"

        def complete(self, *args):
            raise BackendError("down")

    class Chatty:
        name = "chatty"

        def complete(self, *args):
            return "I think it is true."

    for backend in (Broken(), Chatty()):
        run = run_eval(small_generated, ChatModel(backend))
        assert run.unparseable_count == len(small_generated)
        assert run.report()["overall"] == 0.0


def test_tables(small_generated):
    reports = [run_eval(small_generated, m, PromptStrategy(k)).report()
               for k in (STANDARD, COT) for m in (OracleModel(), RandomModel(0))]
    table = format_results_table(reports)
    lines = table.splitlines()
    assert lines[0].split() == ["Model", "Easy", "Medium", "Hard"]
    assert "Standard Prompting" in lines and "CoT Prompting" in lines
    assert lines.index("Standard Prompting") < lines.index("CoT Prompting")
    rows = run_ablation(small_generated, OracleModel())
    abl = format_ablation_table(rows).splitlines()
    assert abl[0].split() == ["Distractions", "Shuffled", "Easy", "Medium", "Hard"]
    assert [line.split()[:2] for line in abl[2:]] == [["✓", "✓"], ["✗", "✓"], ["✗", "✗"]]
    assert all(line.split()[2:] == ["100.00"] * 3 for line in abl[2:])


def test_import_adapter(tmp_path):
    rows = [{"context": "Rex is wild.", "question": "Rex is wild?", "answer": "True"},
            {"context": ["a", "b"], "question": "q", "answer": "C", "tier": "hard"}]
    items = import_records(rows)
    assert [i.answer for i in items] == ["A", "C"] and items[1].tier == "hard"
    path = tmp_path / "foreign.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows))
    assert [i.answer for i in load_items(path)] == ["A", "C"]


def test_records_file(small_generated, tmp_path):
    run = run_eval(small_generated[:3], RandomModel(0))
    write_records(run, tmp_path / "r.jsonl")
    rows = [json.loads(l) for l in (tmp_path / "r.jsonl").read_text().splitlines()]
    assert len(rows) == 3 and {"id", "raw", "parsed", "gold", "correct"} <= set(rows[0])
