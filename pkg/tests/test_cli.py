import csv
import json

import pytest

from wamm.cli import main
from wamm.corpus import load_dataset, save_dataset, stratified_split
from wamm.seedcorpus import load_seed_corpus

FAST = ["--max-rounds", "6", "--max-features", "300", "--max-depth", "4"]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    small, _ = stratified_split(load_seed_corpus(), 0.15, seed=2)
    save_dataset(small, d / "small.jsonl")
    return d


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_pipeline(data_dir, capsys):
    d = data_dir
    code, out, _ = run(["dedupe", "--data", d / "small.jsonl", "--out", d / "dd.jsonl",
                        "--report", d / "dd.json"], capsys)
    assert code == 0 and json.loads(out)["kept"] <= json.loads(out)["input"]
    assert "removed_total" in json.loads((d / "dd.json").read_text())

    code, out, _ = run(["split", "--data", d / "dd.jsonl", "--train", d / "tr.jsonl",
                        "--test", d / "te.jsonl", "--seed", 7], capsys)
    assert code == 0

    code, out, _ = run(["train", "--data", d / "tr.jsonl", "--out", d / "m.wamm", "--seed", 7,
                        "--log", d / "log.json"] + FAST, capsys)
    assert code == 0 and json.loads(out)["rounds"] <= 6
    run(["train", "--data", d / "tr.jsonl", "--out", d / "m2.wamm", "--seed", 7] + FAST, capsys)
    assert (d / "m.wamm").read_bytes() == (d / "m2.wamm").read_bytes()

    code, out, err = run(["eval", "--model", d / "m.wamm", "--data", d / "te.jsonl",
                          "--json", d / "ev.json"], capsys)
    assert code == 0 and "accuracy" in err
    report = json.loads((d / "ev.json").read_text())
    assert {"accuracy", "macro_f1", "inference_time_ms"} <= set(report)
    assert 0 <= report["accuracy"] <= 1

    code, out, _ = run(["blockrate", "--model", d / "m.wamm", "--data", d / "te.jsonl",
                        "--json", d / "br.json", "--raw-only"], capsys)
    assert code == 0 and out.splitlines()[0].split()[:3] == ["ID", "Name", "samples"]
    rows = json.loads((d / "br.json").read_text())["rows"]
    assert {"capec_id", "name", "samples", "rule_rate", "model_rate", "delta"} <= set(rows[0])

    code, out, _ = run(["bench", "--model", d / "m.wamm", "--data", d / "te.jsonl",
                        "--iters", 1000, "--warmup", 10], capsys)
    assert code == 0 and json.loads(out)["samples"] == 1000


def test_augment_after_split(data_dir, capsys):
    d = data_dir
    code, out, _ = run(["split", "--data", d / "small.jsonl", "--train", d / "atr.jsonl",
                        "--test", d / "ate.jsonl", "--augment-after-split",
                        "--ops", "double_url_encode,case_toggle", "--variants", 1], capsys)
    assert code == 0
    tr, _ = load_dataset(d / "atr.jsonl")
    te, _ = load_dataset(d / "ate.jsonl")
    assert any(r.aug == "augmented:double_url_encode" for r in tr.records)
    original, _ = load_dataset(d / "small.jsonl")
    known = {r.record_id for r in original.records}
    assert {r.record_id for r in te.records} <= known  # test half holds no augmented copies
    assert any(r.record_id not in known for r in tr.records)
    lines = (d / "atr.jsonl").read_text().splitlines()
    assert any('"aug": "augmented:' in line for line in lines)


def test_augment_command(data_dir, capsys):
    d = data_dir
    code, out, _ = run(["augment", "--data", d / "small.jsonl", "--out", d / "aug.jsonl",
                        "--ops", "url_encode_all", "--variants", 1], capsys)
    res = json.loads(out)
    assert code == 0 and res["output"] > res["input"]
    code, _, err = run(["augment", "--data", d / "small.jsonl", "--out", d / "x.jsonl",
                        "--ops", "rot13"], capsys)
    assert code == 1 and json.loads(err)["error"] == "validation"


def test_flag_and_corrections(data_dir, capsys, tmp_path):
    d = data_dir
    code, out, _ = run(["flag-mislabels", "--data", d / "small.jsonl", "--json", tmp_path / "f.json"], capsys)
    assert code == 0 and json.loads(out)["flagged"] == 0
    fix = tmp_path / "fix.csv"
    ds, _ = load_dataset(d / "small.jsonl")
    rid = ds.records[0].record_id
    with open(fix, "w", newline="") as fh:
        csv.writer(fh).writerows([["record_id", "new_class"], [rid, "SSTI"]])
    code, out, _ = run(["apply-corrections", "--data", d / "small.jsonl", "--corrections", fix,
                        "--out", tmp_path / "c.jsonl"], capsys)
    assert code == 0
    fixed, _ = load_dataset(tmp_path / "c.jsonl")
    assert fixed.records[0].label.value == "SSTI"
    with open(fix, "a", newline="") as fh:
        csv.writer(fh).writerow([10**9, "SQLi"])
    code, _, err = run(["apply-corrections", "--data", d / "small.jsonl", "--corrections", fix,
                        "--out", tmp_path / "c.jsonl"], capsys)
    assert code == 1 and json.loads(err)["type"] == "UnknownRecordId"


def test_exit_codes(tmp_path, capsys, small_model_path):
    code, _, err = run(["eval", "--model", tmp_path / "missing.wamm", "--data", tmp_path / "x.jsonl"], capsys)
    assert code == 2 and json.loads(err)["error"] == "io"
    code, _, err = run(["train", "--out", tmp_path / "m.wamm", "--learning-rate", "-1"], capsys)
    assert code == 1 and json.loads(err)["error"] == "validation"
    code, _, err = run(["nonsense"], capsys)
    assert code == 1 and json.loads(err)["error"] == "usage"
    bad = tmp_path / "bad.wamm"
    bad.write_bytes(small_model_path.read_bytes()[:-5])
    code, _, err = run(["serve", "--model", bad, "--bind", "127.0.0.1:0"], capsys)
    assert code == 1 and json.loads(err)["type"] == "CorruptFile"
    assert len(err.strip().splitlines()) == 1


def test_serve_env_overrides(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("WAMM_MODEL", str(tmp_path / "from-env.wamm"))
    code, _, err = run(["serve", "--model", "ignored.wamm"], capsys)
    assert code == 2 and "from-env.wamm" in json.loads(err)["message"]
