"""Export per-layer hidden states of a pretrained encoder into the binary
embedding container consumed by the embalign toolkit.

Container layout (little-endian): magic ``AWEC0001``; u32 pair_count; per
pair u32 n_src_subwords, u32 n_tgt_subwords, u32 dim, the two u32
subword-to-word index arrays, then both float32 embedding matrices
row-major.  Each side is encoded separately and special begin/end tokens
are dropped, so the aligner only ever sees content subwords.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

CONTAINER_MAGIC = b"AWEC0001"

log = logging.getLogger("embalign_export")


class ExportError(Exception):
    pass


@dataclass
class ExportConfig:
    model: str
    layer: int = 8
    max_len: int = 512
    device: str = "cpu"
    batch_size: int = 16


@dataclass
class SideEncoding:
    subword_to_word: list[int]
    embeddings: np.ndarray  # (n_subwords, dim) float32


def parse_corpus(text: str) -> list[tuple[list[str], list[str]]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        chunks = line.split("|||")
        if len(chunks) != 2:
            raise ExportError(f"line {lineno}: expected one ' ||| ' separator")
        src, tgt = chunks[0].split(), chunks[1].split()
        if not src or not tgt:
            raise ExportError(f"line {lineno}: empty side")
        pairs.append((src, tgt))
    return pairs


class Exporter:
    def __init__(self, config: ExportConfig):
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModel.from_pretrained(config.model)
        self.model.to(config.device)
        self.model.eval()
        depth = getattr(self.model.config, "num_hidden_layers", None)
        if depth is not None and not 0 <= config.layer <= depth:
            raise ExportError(
                f"layer {config.layer} outside model depth 0..{depth}"
            )

    @torch.no_grad()
    def encode_side(self, words: list[str]) -> SideEncoding | None:
        """Hidden states of the configured layer for one pre-tokenized side.

        Returns None when the subword sequence exceeds max_len (caller
        records the skip).
        """
        enc = self.tokenizer(words, is_split_into_words=True, return_tensors="pt",
                             truncation=False)
        if enc.input_ids.shape[1] > self.config.max_len:
            return None
        word_ids = enc.word_ids()
        keep = [pos for pos, wid in enumerate(word_ids) if wid is not None]
        if not keep:
            return None
        mapping = [word_ids[pos] for pos in keep]
        if sorted(set(mapping)) != list(range(len(words))):
            # a word vanished entirely in tokenization (rare; treat as skip)
            return None
        enc = {k: v.to(self.config.device) for k, v in enc.items()}
        hidden = self.model(**enc, output_hidden_states=True).hidden_states
        states = hidden[self.config.layer][0, keep, :]
        return SideEncoding(
            subword_to_word=mapping,
            embeddings=states.cpu().numpy().astype(np.float32),
        )

    def export(self, corpus_text: str) -> tuple[bytes, list[int]]:
        """Encode every pair; returns (container bytes, skipped indices)."""
        pairs = parse_corpus(corpus_text)
        records = []
        skipped = []
        for index, (src_words, tgt_words) in enumerate(pairs):
            src = self.encode_side(src_words)
            tgt = self.encode_side(tgt_words)
            if src is None or tgt is None:
                log.warning("skipping pair %d (exceeds max-len %d or untokenizable)",
                            index, self.config.max_len)
                skipped.append(index)
                continue
            records.append((src, tgt))
        return write_container(records), skipped


def write_container(records: list[tuple[SideEncoding, SideEncoding]]) -> bytes:
    out = bytearray()
    out += CONTAINER_MAGIC
    out += struct.pack("<I", len(records))
    for src, tgt in records:
        n_src, dim = src.embeddings.shape
        n_tgt, dim_t = tgt.embeddings.shape
        if dim != dim_t:
            raise ExportError("source/target hidden sizes differ")
        out += struct.pack("<III", n_src, n_tgt, dim)
        out += np.asarray(src.subword_to_word, dtype="<u4").tobytes()
        out += np.asarray(tgt.subword_to_word, dtype="<u4").tobytes()
        out += np.ascontiguousarray(src.embeddings, dtype="<f4").tobytes()
        out += np.ascontiguousarray(tgt.embeddings, dtype="<f4").tobytes()
    return bytes(out)
