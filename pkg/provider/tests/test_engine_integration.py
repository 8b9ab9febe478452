"""End-to-end: the engine pipeline shelling out to this provider."""

import base64
import json
import sys

import numpy as np

from docalign.cli import main as engine_main

VOCAB = ("alpha bravo charlie delta echo foxtrot golf hotel india juliet "
         "kilo lima mike november oscar papa").split()


def synth_text(rng, n_sentences):
    return " ".join(
        " ".join(rng.choice(VOCAB, size=rng.integers(4, 9))) + "."
        for _ in range(n_sentences))


def write_corpus(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for url, domain, doc_id, text in records:
            payload = base64.b64encode(text.encode("utf-8")).decode("ascii")
            fh.write(f"{url}\t{domain}\t{doc_id}\t{payload}\n")


def test_pipeline_with_provider_cli(tmp_path):
    rng = np.random.default_rng(13)
    src_records, tgt_records, gold_lines = [], [], []
    for i in range(5):
        text = synth_text(rng, int(rng.integers(3, 6)))
        tokens = text.split()
        tokens[int(rng.integers(0, len(tokens)))] = "quebec"
        src_records.append((f"http://d/s{i}", "d", f"s{i}", text))
        tgt_records.append((f"http://d/t{i}", "d", f"t{i}", " ".join(tokens)))
        gold_lines.append(f"s{i}\tt{i}")
    for i in range(5, 8):
        tgt_records.append((f"http://d/t{i}", "d", f"t{i}", synth_text(rng, 4)))

    src_path, tgt_path = tmp_path / "src.tsv", tmp_path / "tgt.tsv"
    gold_path = tmp_path / "gold.tsv"
    write_corpus(src_path, src_records)
    write_corpus(tgt_path, tgt_records)
    gold_path.write_text("".join(l + "\n" for l in gold_lines), encoding="utf-8")

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "workdir": str(tmp_path / "work"),
        "corpus": {"source": str(src_path), "target": str(tgt_path)},
        "provider": {"command": [sys.executable, "-m", "docalign_provider.embed",
                                 "--model", "hash"]},
        "segmentation": {"strategy": "ofls", "fl": 8, "or_rate": 0.5},
        "retrieval": {"k": 3},
        "rerank": {"method": "bimax"},
        "eval": {"gold": str(gold_path)},
    }), encoding="utf-8")

    assert engine_main(["pipeline", "--config", str(cfg_path)]) == 0
    report = json.loads((tmp_path / "work" / "eval.json").read_text(encoding="utf-8"))
    assert report["f1"] >= 0.8
