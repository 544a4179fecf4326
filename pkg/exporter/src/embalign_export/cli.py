import argparse
import logging
import sys
from pathlib import Path

from .exporter import ExportConfig, Exporter, ExportError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embalign-export",
        description="Export encoder hidden states to an embalign container",
    )
    parser.add_argument("--corpus", type=Path, required=True)
    parser.add_argument("--model", type=str, required=True,
                        help="model identifier or local path")
    parser.add_argument("--layer", type=int, default=8)
    parser.add_argument("--max-len", type=int, default=512)
    parser.add_argument("--device", type=str, default="cpu")
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--skip-list", type=Path, default=None,
                        help="sidecar file listing skipped pair indices")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        exporter = Exporter(ExportConfig(model=args.model, layer=args.layer,
                                         max_len=args.max_len, device=args.device))
        blob, skipped = exporter.export(args.corpus.read_text(encoding="utf-8"))
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    args.out.write_bytes(blob)
    skip_path = args.skip_list or Path(str(args.out) + ".skipped")
    skip_path.write_text("".join(f"{i}\n" for i in skipped), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
