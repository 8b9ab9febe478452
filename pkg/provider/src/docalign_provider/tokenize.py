"""Per-line token counts and character offsets, one JSON object per line::

    {"line": 0, "n_tokens": 5, "offsets": [[0, 3], [4, 9], ...]}

Offsets index into the input line, so the engine can slice fixed-length
windows out of the original text under the model's own tokenization.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import DEFAULT_MODEL
from .embed import read_lines
from .models import load_tokenizer


def tokenize_file(in_path, out_path, model: str = DEFAULT_MODEL) -> int:
    lines = read_lines(in_path)
    backend = load_tokenizer(model)
    spans = backend.offsets(lines)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for i, offs in enumerate(spans):
            fh.write(json.dumps(
                {"line": i, "n_tokens": len(offs),
                 "offsets": [[s, e] for s, e in offs]},
                ensure_ascii=False) + "\n")
    return len(lines)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="docalign-tokenize",
        description="Write per-line token counts and boundary offsets")
    parser.add_argument("in_path", metavar="IN")
    parser.add_argument("out_path", metavar="OUT")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"model name or 'hash' (default: {DEFAULT_MODEL})")
    args = parser.parse_args(argv)
    try:
        n = tokenize_file(args.in_path, args.out_path, model=args.model)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"tokenized {n} line(s) into {args.out_path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
