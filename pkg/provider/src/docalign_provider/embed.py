"""Embed a segments file into EMB1.

Invocation forms (the engine appends paths positionally; flags win when
both are given)::

    docalign-embed SEGMENTS INDEX OUT [--model M] [--batch-size N]
    docalign-embed --segments S --index I --out O --model M --batch-size N
"""

from __future__ import annotations

import argparse
import json
import sys

from . import DEFAULT_MODEL
from .emb1 import write_emb1
from .models import load_encoder


def read_lines(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def index_segment_total(path) -> int:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return sum(entry["n_segments"] for entry in data["docs"])


def embed_batch(segments_path, index_path, out_path, model: str = DEFAULT_MODEL,
                batch_size: int = 32, dim: int = 256, device: str | None = None) -> int:
    lines = read_lines(segments_path)
    if index_path is not None:
        total = index_segment_total(index_path)
        if total != len(lines):
            raise ValueError(
                f"index lists {total} segments but {segments_path} has {len(lines)} lines")
    encoder = load_encoder(model, dim=dim, device=device)
    if lines:
        rows = encoder.encode(lines, batch_size=batch_size)
    else:
        import numpy as np
        rows = np.empty((0, encoder.dim), dtype=np.float32)
    if len(rows) != len(lines):
        raise RuntimeError(f"encoder produced {len(rows)} rows for {len(lines)} lines")
    write_emb1(out_path, rows)
    return len(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docalign-embed",
        description="Embed one segment per line into the EMB1 binary format")
    parser.add_argument("segments_pos", nargs="?", metavar="SEGMENTS")
    parser.add_argument("index_pos", nargs="?", metavar="INDEX")
    parser.add_argument("out_pos", nargs="?", metavar="OUT")
    parser.add_argument("--segments")
    parser.add_argument("--index")
    parser.add_argument("--out")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"model name or 'hash' (default: {DEFAULT_MODEL})")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--dim", type=int, default=256,
                        help="dimension of the hash encoder (real models use their own)")
    parser.add_argument("--device", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    segments = args.segments or args.segments_pos
    index = args.index or args.index_pos
    out = args.out or args.out_pos
    if not segments or not out:
        print("error: segments and output paths are required", file=sys.stderr)
        return 2
    try:
        n = embed_batch(segments, index, out, model=args.model,
                        batch_size=args.batch_size, dim=args.dim, device=args.device)
    except Exception as exc:  # model load/OOM/IO: message on stderr, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {n} embedding row(s) to {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
