"""``emb-export``: manifest in, store file out."""
from __future__ import annotations

import argparse
import json
import sys

from .encoders import make_encoder
from .errors import ExportError
from .export import export_store
from .manifest import read_manifest


def main() -> None:
    parser = argparse.ArgumentParser(prog="emb-export")
    parser.add_argument("--manifest", required=True,
                        help="JSONL of {key, kind, source, photo_prompt}")
    parser.add_argument("--out", required=True, help="output store file")
    parser.add_argument("--model", default="hashed",
                        help="'hashed' or a CLIP checkpoint name")
    parser.add_argument("--dim", type=int, default=None,
                        help="expected dimension (checked against the encoder)")
    args = parser.parse_args()
    try:
        encoder = make_encoder(args.model, args.dim)
        manifest = read_manifest(args.manifest, dimension=args.dim,
                                 model=args.model)
        summary = export_store(manifest, args.out, encoder)
    except ExportError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        sys.exit(2)
    print(json.dumps({"count": summary["count"],
                      "dimension": summary["dimension"]}))


if __name__ == "__main__":
    main()
