"""Subcommand-driven pipeline orchestration.

``docalign <stage> --config cfg.json [--section.key value ...]`` runs one
stage against a working directory of artifacts; ``docalign pipeline`` runs
them all in order. Every dotted config key can be overridden on the command
line. Each completed stage appends a manifest entry (params, input hashes,
outputs, wall time) so any artifact's provenance is reconstructible.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import shlex
import subprocess
import sys
import time
from pathlib import Path

from . import __version__
from .assignment import one_to_one, read_alignment, write_alignment
from .corpus import DocumentStore, dedup_exact, ingest_jsonl, ingest_tsv, write_tsv
from .docvec import DocVectorizer
from .embedding_io import read_emb1, write_emb1
from .errors import ConfigError, DocalignError, MissingArtifactError
from .evaluation import (
    EvalReport, f1_source_side, randomization_test, read_gold_tsv, recall,
    recall_by_length, soft_recall,
)
from .retrieval import TopKRetriever, read_candidates, write_candidates
from .scoring import RERANK_METHODS, WEIGHT_SCHEMES, read_scored_pairs, rerank, write_scored_pairs
from .segmentation import Segmenter, WhitespaceTokenizer, write_segments

STAGES = ("ingest", "segment", "embed", "docvec", "retrieve", "rerank",
          "assign", "eval", "sigtest")

# Artifact each stage must find, and the stage that produces it.
_UPSTREAM = {
    "segment": [("{side}.corpus.tsv", "ingest")],
    "embed": [("{side}.segments.txt", "segment"), ("{side}.segments.index.json", "segment")],
    "docvec": [("{side}.emb1", "embed"), ("{side}.segments.index.json", "segment")],
    "retrieve": [("{side}.docvec.emb1", "docvec"), ("{side}.docvec.index.json", "docvec")],
    "rerank": [("candidates.tsv", "retrieve"), ("{side}.emb1", "embed"),
               ("{side}.corpus.tsv", "ingest")],
    "assign": [("scored.tsv", "rerank")],
    "eval": [("alignment.tsv", "assign"), ("{side}.corpus.tsv", "ingest")],
    "sigtest": [("alignment.tsv", "assign")],
}

DEFAULT_CONFIG = {
    "workdir": "work",
    "corpus": {"source": None, "target": None, "format": "tsv"},
    "provider": {"command": None},
    "segmentation": {
        "strategy": "ofls", "fl": 30, "or_rate": 0.5, "max_tokens": 64,
        "blob_overlap": None, "blob_overlap_r": 0.15, "blob_overlap_n": 1,
    },
    "docvec": {"method": "mean", "windows": 8, "gamma": 16.0},
    "retrieval": {"k": 20, "block_size": 1024},
    "rerank": {"method": "bimax", "scheme": None, "eps": 0.05,
               "max_iter": 200, "tol": 1e-6},
    "eval": {"gold": None, "soft": False, "soft_threshold": 0.05,
             "bins": [0, 256, 1024, 2048], "length_side": "src", "seed": 42},
    "sigtest": {"baseline": None, "seed": None},  # falls back to eval.seed
    "threads": 1,
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _apply_dotted(cfg: dict, dotted: str, raw: str) -> None:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    *parents, leaf = dotted.split(".")
    for part in parents:
        node = node.setdefault(part, {})
    node[leaf] = value


def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = _merge(cfg, json.load(fh))
    if len(overrides) % 2 != 0:
        raise ConfigError([f"dangling override (flags come in '--key value' pairs): {overrides[-1]}"])
    for flag, raw in zip(overrides[::2], overrides[1::2]):
        if not flag.startswith("--"):
            raise ConfigError([f"override key must start with '--': {flag}"])
        _apply_dotted(cfg, flag[2:], raw)
    return cfg


def validate_config(cfg: dict, stage: str) -> None:
    """Collect every violation before failing, so one run reports them all."""
    errs: list[str] = []

    def check_enum(value, allowed, key):
        if value not in allowed:
            errs.append(f"{key} must be one of {allowed}, got {value!r}")

    if stage in ("ingest", "pipeline"):
        for side in ("source", "target"):
            p = cfg["corpus"].get(side)
            if not p:
                errs.append(f"corpus.{side} is required")
            elif not Path(p).exists():
                errs.append(f"corpus.{side} does not exist: {p}")
        check_enum(cfg["corpus"].get("format"), ("tsv", "jsonl"), "corpus.format")
    if stage in ("segment", "pipeline"):
        seg = cfg["segmentation"]
        check_enum(seg.get("strategy"), ("sbs", "blob", "ofls"), "segmentation.strategy")
        if seg.get("strategy") == "ofls":
            if not isinstance(seg.get("fl"), int) or seg["fl"] < 2:
                errs.append(f"segmentation.fl must be an int >= 2, got {seg.get('fl')!r}")
            if not 0.0 <= float(seg.get("or_rate", -1)) < 1.0:
                errs.append(f"segmentation.or_rate must be in [0, 1), got {seg.get('or_rate')!r}")
        if seg.get("strategy") == "blob":
            if not isinstance(seg.get("max_tokens"), int) or seg["max_tokens"] < 1:
                errs.append(f"segmentation.max_tokens must be an int >= 1, got {seg.get('max_tokens')!r}")
            if seg.get("blob_overlap") not in (None, "tok", "sent", "tok_lim"):
                errs.append(f"segmentation.blob_overlap must be tok|sent|tok_lim, got {seg.get('blob_overlap')!r}")
    if stage in ("embed", "pipeline"):
        if not cfg["provider"].get("command"):
            errs.append("provider.command is required for the embed stage")
    if stage in ("docvec", "pipeline"):
        check_enum(cfg["docvec"].get("method"), ("mean", "tkpert"), "docvec.method")
        if not isinstance(cfg["docvec"].get("windows"), int) or cfg["docvec"]["windows"] < 1:
            errs.append(f"docvec.windows must be an int >= 1, got {cfg['docvec'].get('windows')!r}")
    if stage in ("retrieve", "pipeline"):
        if not isinstance(cfg["retrieval"].get("k"), int) or cfg["retrieval"]["k"] < 1:
            errs.append(f"retrieval.k must be an int >= 1, got {cfg['retrieval'].get('k')!r}")
    if stage in ("rerank", "pipeline"):
        check_enum(cfg["rerank"].get("method"), RERANK_METHODS, "rerank.method")
        if cfg["rerank"].get("scheme") not in (None, *WEIGHT_SCHEMES):
            errs.append(f"rerank.scheme must be one of {WEIGHT_SCHEMES}, got {cfg['rerank'].get('scheme')!r}")
    if stage in ("eval", "sigtest"):
        gold = cfg["eval"].get("gold")
        if not gold:
            errs.append("eval.gold is required for evaluation")
        elif not Path(gold).exists():
            errs.append(f"eval.gold does not exist: {gold}")
    if stage == "sigtest":
        baseline = cfg["sigtest"].get("baseline")
        if not baseline:
            errs.append("sigtest.baseline is required")
        elif not Path(baseline).exists():
            errs.append(f"sigtest.baseline does not exist: {baseline}")
    if errs:
        raise ConfigError(errs)


def _workdir(cfg: dict) -> Path:
    path = Path(cfg["workdir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require(workdir: Path, stage: str) -> None:
    for pattern, producer in _UPSTREAM.get(stage, []):
        names = [pattern.format(side=s) for s in ("source", "target")] \
            if "{side}" in pattern else [pattern]
        for name in names:
            if not (workdir / name).exists():
                raise MissingArtifactError(
                    f"{name} not found; run {producer}", required_stage=producer)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _record_manifest(workdir: Path, stage: str, params: dict,
                     inputs: list[Path], outputs: list[Path], wall: float) -> None:
    manifest_path = workdir / "manifest.json"
    manifest = {}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    manifest[stage] = {
        "params": params,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_sec": wall,
        "version": __version__,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")


def _load_corpus(workdir: Path, side: str) -> DocumentStore:
    return ingest_tsv(workdir / f"{side}.corpus.tsv", side)


def _segmenter(cfg: dict, side: str) -> Segmenter:
    seg = dict(cfg["segmentation"])
    seg.update(seg.pop(side, {}) or {})
    seg.pop("source", None)
    seg.pop("target", None)
    return Segmenter(tokenizer=WhitespaceTokenizer(), **seg)


def _segment_side(cfg: dict, workdir: Path, side: str):
    store = _load_corpus(workdir, side)
    return store, _segmenter(cfg, side).transform(list(store))


def stage_ingest(cfg: dict, workdir: Path) -> list[Path]:
    outputs = []
    for side in ("source", "target"):
        path = cfg["corpus"][side]
        reader = ingest_tsv if cfg["corpus"]["format"] == "tsv" else ingest_jsonl
        store = dedup_exact(reader(path, side))
        out = workdir / f"{side}.corpus.tsv"
        write_tsv(store, out)
        outputs.append(out)
        print(f"ingest {side}: {len(store)} docs "
              f"({store.n_skipped} skipped lines)", file=sys.stderr)
    return outputs


def stage_segment(cfg: dict, workdir: Path) -> list[Path]:
    outputs = []
    for side in ("source", "target"):
        _, segdocs = _segment_side(cfg, workdir, side)
        seg_path = workdir / f"{side}.segments.txt"
        idx_path = workdir / f"{side}.segments.index.json"
        write_segments(segdocs, seg_path, idx_path)
        outputs.extend([seg_path, idx_path])
        print(f"segment {side}: {sum(len(d) for d in segdocs)} segments "
              f"over {len(segdocs)} docs", file=sys.stderr)
    return outputs


def stage_embed(cfg: dict, workdir: Path) -> list[Path]:
    command = cfg["provider"]["command"]
    if isinstance(command, str):
        command = shlex.split(command)
    outputs = []
    for side in ("source", "target"):
        seg_path = workdir / f"{side}.segments.txt"
        idx_path = workdir / f"{side}.segments.index.json"
        out_path = workdir / f"{side}.emb1"
        argv = [*command, str(seg_path), str(idx_path), str(out_path)]
        proc = subprocess.run(argv, capture_output=True, text=True)
        if proc.returncode != 0:
            raise DocalignError(
                f"embedding provider failed on {side} side "
                f"(exit {proc.returncode}):\n{proc.stderr.strip()}")
        read_emb1(out_path, idx_path, side=side)  # validate before accepting
        outputs.append(out_path)
    return outputs


def stage_docvec(cfg: dict, workdir: Path) -> list[Path]:
    outputs = []
    for side in ("source", "target"):
        _, segdocs = _segment_side(cfg, workdir, side)
        store = read_emb1(workdir / f"{side}.emb1",
                          workdir / f"{side}.segments.index.json", side=side)
        vectorizer = DocVectorizer(method=cfg["docvec"]["method"],
                                   windows=cfg["docvec"]["windows"],
                                   gamma=cfg["docvec"]["gamma"])
        vecs = vectorizer.fit(segdocs).transform(segdocs, store)
        emb_path = workdir / f"{side}.docvec.emb1"
        idx_path = workdir / f"{side}.docvec.index.json"
        write_emb1(emb_path, vecs.matrix)
        entries = [{"doc_id": doc_id, "start_line": i, "n_segments": 1}
                   for i, doc_id in enumerate(vecs.ids)]
        idx_path.write_text(json.dumps({"docs": entries}, ensure_ascii=False) + "\n",
                            encoding="utf-8")
        outputs.extend([emb_path, idx_path])
        if vectorizer.degenerate_ids_:
            print(f"docvec {side}: excluded degenerate docs: "
                  f"{', '.join(vectorizer.degenerate_ids_)}", file=sys.stderr)
    return outputs


def _load_docvecs(workdir: Path, side: str):
    from .docvec import DocVectorSet
    store = read_emb1(workdir / f"{side}.docvec.emb1",
                      workdir / f"{side}.docvec.index.json", side=side)
    return DocVectorSet(side=side, ids=store.doc_order, matrix=store.rows)


def stage_retrieve(cfg: dict, workdir: Path) -> list[Path]:
    src = _load_docvecs(workdir, "source")
    tgt = _load_docvecs(workdir, "target")
    retriever = TopKRetriever(k=cfg["retrieval"]["k"],
                              block_size=cfg["retrieval"]["block_size"])
    candidates = retriever.fit(tgt).query(src)
    out = workdir / "candidates.tsv"
    write_candidates(candidates, out)
    return [out]


def stage_rerank(cfg: dict, workdir: Path) -> list[Path]:
    candidates = read_candidates(workdir / "candidates.tsv")
    docs = {}
    stores = {}
    for side in ("source", "target"):
        _, segdocs = _segment_side(cfg, workdir, side)
        docs[side] = {d.doc_id: d for d in segdocs}
        stores[side] = read_emb1(workdir / f"{side}.emb1",
                                 workdir / f"{side}.segments.index.json", side=side)
    rk = cfg["rerank"]
    scored, report = rerank(
        candidates, rk["method"], docs["source"], docs["target"],
        stores["source"], stores["target"], scheme=rk["scheme"],
        eps=rk["eps"], max_iter=rk["max_iter"], tol=rk["tol"],
        threads=int(cfg.get("threads") or 1),
    )
    scored_path = workdir / "scored.tsv"
    write_scored_pairs(scored, scored_path)
    throughput_path = workdir / "throughput.json"
    throughput_path.write_text(
        json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"rerank {rk['method']}: {report.pairs} pairs at "
          f"{report.pairs_per_sec:.1f} pairs/sec", file=sys.stderr)
    return [scored_path, throughput_path]


def stage_assign(cfg: dict, workdir: Path) -> list[Path]:
    scored = read_scored_pairs(workdir / "scored.tsv")
    alignment = one_to_one(scored)
    out = workdir / "alignment.tsv"
    write_alignment(alignment, out)
    return [out]


def stage_eval(cfg: dict, workdir: Path) -> list[Path]:
    alignment = read_alignment(workdir / "alignment.tsv")
    gold = read_gold_tsv(cfg["eval"]["gold"])
    src_store = _load_corpus(workdir, "source")
    tgt_store = _load_corpus(workdir, "target")
    prec, rec, f1 = f1_source_side(alignment, gold)
    report = EvalReport(
        recall=rec, precision=prec, f1=f1,
        strict_recall=recall(alignment, gold),
        soft_recall=soft_recall(alignment, gold, src_store, tgt_store,
                                threshold=cfg["eval"]["soft_threshold"])
        if cfg["eval"]["soft"] else None,
        by_length=recall_by_length(
            alignment, gold,
            src_store if cfg["eval"]["length_side"] == "src" else tgt_store,
            bins=cfg["eval"]["bins"], side=cfg["eval"]["length_side"]),
    )
    json_path = workdir / "eval.json"
    text_path = workdir / "eval.txt"
    json_path.write_text(report.to_json() + "\n", encoding="utf-8")
    text_path.write_text(report.to_text() + "\n", encoding="utf-8")
    print(report.to_text(), file=sys.stderr)
    return [json_path, text_path]


def stage_sigtest(cfg: dict, workdir: Path) -> list[Path]:
    ours = read_alignment(workdir / "alignment.tsv")
    baseline = read_alignment(cfg["sigtest"]["baseline"])
    gold = read_gold_tsv(cfg["eval"]["gold"])
    seed = cfg["sigtest"]["seed"]
    if seed is None:
        seed = cfg["eval"]["seed"]
    p = randomization_test(ours, baseline, gold, seed=seed)
    payload = {
        "p_value": p,
        "metric": "f1_source_side",
        "f1_ours": f1_source_side(ours, gold)[2],
        "f1_baseline": f1_source_side(baseline, gold)[2],
        "seed": seed,
    }
    out = workdir / "sigtest.json"
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"sigtest: p = {p:.6f}", file=sys.stderr)
    return [out]


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "segment": stage_segment,
    "embed": stage_embed,
    "docvec": stage_docvec,
    "retrieve": stage_retrieve,
    "rerank": stage_rerank,
    "assign": stage_assign,
    "eval": stage_eval,
    "sigtest": stage_sigtest,
}

_STAGE_INPUT_KEYS = {
    "ingest": ["corpus"],
    "segment": ["segmentation"],
    "embed": ["provider"],
    "docvec": ["docvec", "segmentation"],
    "retrieve": ["retrieval"],
    "rerank": ["rerank", "segmentation", "threads"],
    "assign": [],
    "eval": ["eval"],
    "sigtest": ["sigtest", "eval"],
}


def run_stage(stage: str, cfg: dict) -> list[Path]:
    validate_config(cfg, stage)
    workdir = _workdir(cfg)
    _require(workdir, stage)
    inputs = [workdir / pattern.format(side=side)
              for pattern, _ in _UPSTREAM.get(stage, [])
              for side in (("source", "target") if "{side}" in pattern else ("",))]
    start = time.perf_counter()
    outputs = _STAGE_FUNCS[stage](cfg, workdir)
    wall = time.perf_counter() - start
    params = {key: cfg[key] for key in _STAGE_INPUT_KEYS[stage] if key in cfg}
    _record_manifest(workdir, stage, params, inputs, outputs, wall)
    return outputs


def run_pipeline(cfg: dict) -> None:
    validate_config(cfg, "pipeline")
    stages = ["ingest", "segment", "embed", "docvec", "retrieve", "rerank", "assign"]
    if cfg["eval"].get("gold"):
        stages.append("eval")
    for stage in stages:
        run_stage(stage, cfg)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="docalign",
        description="Cross-lingual document alignment pipeline")
    parser.add_argument("stage", choices=(*STAGES, "pipeline"))
    parser.add_argument("--config", help="JSON pipeline configuration")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap (fallback: DOCALIGN_THREADS, then 1)")
    args, overrides = parser.parse_known_args(argv)

    try:
        cfg = load_config(args.config, overrides)
        if args.threads is not None:
            cfg["threads"] = args.threads
        elif os.environ.get("DOCALIGN_THREADS"):
            cfg["threads"] = int(os.environ["DOCALIGN_THREADS"])
        if args.stage == "pipeline":
            run_pipeline(cfg)
        else:
            run_stage(args.stage, cfg)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except DocalignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
