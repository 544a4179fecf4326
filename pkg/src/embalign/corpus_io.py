"""Parsers and writers for parallel corpora, Pharaoh alignments and the
binary embedding container.

Formats:
  * parallel corpus: one pair per line, ``source tokens ||| target tokens``
  * alignments: space-separated ``i-j`` (sure) / ``ipj`` (possible) items
  * embedding container: little-endian binary, magic ``AWEC0001`` (see
    ``write_embedding_container``)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, FormatError, ParseError

CONTAINER_MAGIC = b"AWEC0001"

SEPARATOR = " ||| "


@dataclass
class TokenizedPair:
    """A parallel sentence pair with word tokens and subword-to-word maps."""

    src_words: list[str]
    tgt_words: list[str]
    src_subword_to_word: list[int]
    tgt_subword_to_word: list[int]

    def __post_init__(self):
        if not self.src_words or not self.tgt_words:
            raise ContractError("both sides of a pair must have at least one word")
        _check_subword_map(self.src_subword_to_word, len(self.src_words), "source")
        _check_subword_map(self.tgt_subword_to_word, len(self.tgt_words), "target")

    @property
    def n_words(self) -> int:
        return len(self.src_words)

    @property
    def m_words(self) -> int:
        return len(self.tgt_words)


def _check_subword_map(mapping: Sequence[int], n_words: int, side: str) -> None:
    if len(mapping) == 0:
        raise ContractError(f"{side} subword map is empty")
    prev = -1
    seen = set()
    for idx in mapping:
        if not 0 <= idx < n_words:
            raise ContractError(
                f"{side} subword map entry {idx} outside word range [0, {n_words})"
            )
        if idx < prev:
            raise ContractError(f"{side} subword map is not non-decreasing")
        prev = idx
        seen.add(idx)
    if len(seen) != n_words:
        missing = sorted(set(range(n_words)) - seen)
        raise ContractError(f"{side} subword map misses word indices {missing}")


@dataclass
class PairEmbeddings:
    """Per-subword embedding matrices for both sides of a pair."""

    src: np.ndarray
    tgt: np.ndarray

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.float64)
        self.tgt = np.asarray(self.tgt, dtype=np.float64)
        if self.src.ndim != 2 or self.tgt.ndim != 2:
            raise ContractError("embeddings must be 2-D matrices")
        if self.src.shape[1] != self.tgt.shape[1]:
            raise ContractError(
                f"embedding dims differ: src {self.src.shape[1]} vs tgt {self.tgt.shape[1]}"
            )
        if not (np.isfinite(self.src).all() and np.isfinite(self.tgt).all()):
            raise ContractError("embeddings contain non-finite values")

    @property
    def dim(self) -> int:
        return self.src.shape[1]


@dataclass
class AlignmentSet:
    """A set of (source word, target word) links, sure/possible partitioned.

    Hypothesis alignments live entirely in ``sure``.  At construction sure
    links are unioned into possible (S subset of P convention for AER).
    """

    sure: set[tuple[int, int]] = field(default_factory=set)
    possible: set[tuple[int, int]] = field(default_factory=set)

    def __post_init__(self):
        self.sure = set(self.sure)
        self.possible = set(self.possible) | self.sure


def parse_parallel_corpus(text: str) -> list[TokenizedPair]:
    """Parse fast_align-style ``src ||| tgt`` lines into TokenizedPairs.

    Subword maps are initialized to identity (one subword per word); an
    embedding container may later override them.
    """
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip() == "":
            continue
        chunks = line.split("|||")
        if len(chunks) != 2:
            raise ParseError(
                f"line {lineno}: expected exactly one ' ||| ' separator, found {len(chunks) - 1}"
            )
        src_words = chunks[0].split()
        tgt_words = chunks[1].split()
        if not src_words or not tgt_words:
            raise ParseError(f"line {lineno}: empty side of the pair")
        pairs.append(
            TokenizedPair(
                src_words=src_words,
                tgt_words=tgt_words,
                src_subword_to_word=list(range(len(src_words))),
                tgt_subword_to_word=list(range(len(tgt_words))),
            )
        )
    return pairs


def parse_gold_alignments(text: str, one_indexed: bool = False) -> list[AlignmentSet]:
    """Parse Pharaoh alignment lines: ``i-j`` sure links, ``ipj`` possible."""
    sets = []
    offset = 1 if one_indexed else 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        sure: set[tuple[int, int]] = set()
        possible: set[tuple[int, int]] = set()
        for itemno, item in enumerate(line.split(), start=1):
            if "-" in item:
                left, _, right = item.partition("-")
                target = sure
            elif "p" in item:
                left, _, right = item.partition("p")
                target = possible
            else:
                raise ParseError(
                    f"line {lineno} item {itemno}: {item!r} has no '-' or 'p' separator"
                )
            try:
                i, j = int(left), int(right)
            except ValueError:
                raise ParseError(
                    f"line {lineno} item {itemno}: {item!r} has non-integer indices"
                ) from None
            i -= offset
            j -= offset
            if i < 0 or j < 0:
                raise ParseError(f"line {lineno} item {itemno}: negative index in {item!r}")
            target.add((i, j))
        sets.append(AlignmentSet(sure=sure, possible=possible))
    return sets


def write_alignments(alignments: Iterable[AlignmentSet], one_indexed: bool = False) -> str:
    """Serialize hypothesis alignments, one line per pair, links sorted by (i, j).

    Only the sure field is written; each link is emitted as ``i-j``.
    """
    offset = 1 if one_indexed else 0
    lines = []
    for aset in alignments:
        items = [f"{i + offset}-{j + offset}" for i, j in sorted(aset.sure)]
        lines.append(" ".join(items))
    return "\n".join(lines) + "\n" if lines else ""


def write_embedding_container(
    records: Iterable[tuple[list[int], list[int], PairEmbeddings]]
) -> bytes:
    """Serialize (src subword map, tgt subword map, embeddings) records.

    Layout (little-endian): magic ``AWEC0001``; u32 pair_count; per pair
    u32 n_src_subwords, u32 n_tgt_subwords, u32 dim, the two u32 index
    arrays, then both float32 embedding matrices row-major.
    """
    records = list(records)
    out = bytearray()
    out += CONTAINER_MAGIC
    out += struct.pack("<I", len(records))
    for src_map, tgt_map, emb in records:
        src = np.ascontiguousarray(emb.src, dtype=np.float32)
        tgt = np.ascontiguousarray(emb.tgt, dtype=np.float32)
        if src.shape[0] != len(src_map) or tgt.shape[0] != len(tgt_map):
            raise ContractError("subword map lengths do not match embedding rows")
        out += struct.pack("<III", src.shape[0], tgt.shape[0], src.shape[1])
        out += np.asarray(src_map, dtype="<u4").tobytes()
        out += np.asarray(tgt_map, dtype="<u4").tobytes()
        out += src.astype("<f4").tobytes()
        out += tgt.astype("<f4").tobytes()
    return bytes(out)


def read_embedding_container(
    data: bytes,
) -> list[tuple[list[int], list[int], PairEmbeddings]]:
    """Decode a container produced by ``write_embedding_container``.

    Floating payloads are decoded bit-exactly (float32 in the file).
    """
    if data[:8] != CONTAINER_MAGIC:
        raise FormatError(f"bad magic at byte 0: {data[:8]!r}")
    offset = 8

    def take(nbytes: int) -> bytes:
        nonlocal offset
        if offset + nbytes > len(data):
            raise FormatError(f"truncated record at byte {offset}")
        chunk = data[offset : offset + nbytes]
        offset += nbytes
        return chunk

    (pair_count,) = struct.unpack("<I", take(4))
    records = []
    for _ in range(pair_count):
        n_src, n_tgt, dim = struct.unpack("<III", take(12))
        if dim == 0 or n_src == 0 or n_tgt == 0:
            raise FormatError(f"zero-sized record dims at byte {offset - 12}")
        src_map = np.frombuffer(take(4 * n_src), dtype="<u4").astype(int).tolist()
        tgt_map = np.frombuffer(take(4 * n_tgt), dtype="<u4").astype(int).tolist()
        src = np.frombuffer(take(4 * n_src * dim), dtype="<f4").reshape(n_src, dim)
        tgt = np.frombuffer(take(4 * n_tgt * dim), dtype="<f4").reshape(n_tgt, dim)
        records.append((src_map, tgt_map, PairEmbeddings(src=src.copy(), tgt=tgt.copy())))
    return records
