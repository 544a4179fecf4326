import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from embalign.corpus_io import (
    AlignmentSet,
    PairEmbeddings,
    TokenizedPair,
    parse_gold_alignments,
    parse_parallel_corpus,
    read_embedding_container,
    write_alignments,
    write_embedding_container,
)
from embalign.errors import ContractError, FormatError, ParseError


class TestParseParallelCorpus:
    def test_single_pair(self):
        (pair,) = parse_parallel_corpus("a b ||| c\n")
        assert pair.src_words == ["a", "b"]
        assert pair.tgt_words == ["c"]
        assert pair.src_subword_to_word == [0, 1]
        assert pair.tgt_subword_to_word == [0]

    def test_two_separators_rejected(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_parallel_corpus("a ||| b ||| c")

    def test_order_preserved(self):
        pairs = parse_parallel_corpus("a ||| x\nb ||| y\nc ||| z\n")
        assert [p.src_words[0] for p in pairs] == ["a", "b", "c"]

    def test_missing_separator(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_parallel_corpus("a ||| b\nno separator here")

    def test_empty_side(self):
        with pytest.raises(ParseError, match="empty side"):
            parse_parallel_corpus("a |||  \n")


class TestParseGoldAlignments:
    def test_one_indexed_sure_and_possible(self):
        (aset,) = parse_gold_alignments("1-2 3p4", one_indexed=True)
        assert aset.sure == {(0, 1)}
        assert aset.possible == {(0, 1), (2, 3)}

    def test_empty_line(self):
        (aset,) = parse_gold_alignments("\n")
        assert aset.sure == set() and aset.possible == set()

    def test_malformed_item(self):
        with pytest.raises(ParseError, match="line 1 item 1"):
            parse_gold_alignments("1-x")

    def test_negative_index(self):
        with pytest.raises(ParseError, match="negative"):
            parse_gold_alignments("0-0", one_indexed=True)

    def test_sure_unioned_into_possible(self):
        (aset,) = parse_gold_alignments("0-0 1p1")
        assert aset.sure <= aset.possible


class TestWriteAlignments:
    def test_basic(self):
        assert write_alignments([AlignmentSet(sure={(0, 0), (1, 2)})]) == "0-0 1-2\n"

    def test_empty_set(self):
        assert write_alignments([AlignmentSet()]) == "\n"

    def test_sorted_output(self):
        assert write_alignments([AlignmentSet(sure={(1, 0), (0, 1)})]) == "0-1 1-0\n"

    def test_round_trip_identity(self):
        text = "0-0 1-2 3-1\n0-1\n\n"
        parsed = parse_gold_alignments(text)
        assert write_alignments(parsed) == text

    @given(
        st.lists(
            st.sets(st.tuples(st.integers(0, 20), st.integers(0, 20))),
            min_size=1,
            max_size=5,
        )
    )
    def test_round_trip_property(self, link_sets):
        sets = [AlignmentSet(sure=s) for s in link_sets]
        reparsed = parse_gold_alignments(write_alignments(sets))
        assert [a.sure for a in reparsed] == [a.sure for a in sets]


class TestEmbeddingContainer:
    def test_single_record(self):
        emb = PairEmbeddings(src=np.arange(8, dtype=np.float32).reshape(2, 4),
                             tgt=np.ones((1, 4), dtype=np.float32))
        blob = write_embedding_container([([0, 0], [0], emb)])
        (record,) = read_embedding_container(blob)
        src_map, tgt_map, decoded = record
        assert src_map == [0, 0] and tgt_map == [0]
        assert decoded.src.shape == (2, 4) and decoded.tgt.shape == (1, 4)

    def test_bad_magic(self):
        with pytest.raises(FormatError, match="magic"):
            read_embedding_container(b"XXXX0001" + b"\x00" * 16)

    def test_truncated(self):
        emb = PairEmbeddings(src=np.zeros((2, 4)), tgt=np.zeros((1, 4)))
        blob = write_embedding_container([([0, 0], [0], emb)])
        with pytest.raises(FormatError, match="byte"):
            read_embedding_container(blob[:-5])

    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(0)
        records = []
        for _ in range(3):
            n, m, d = rng.integers(1, 6, size=3)
            emb = PairEmbeddings(
                src=rng.normal(size=(n, d)).astype(np.float32),
                tgt=rng.normal(size=(m, d)).astype(np.float32),
            )
            records.append((sorted(rng.integers(0, n, size=n).tolist()),
                            sorted(rng.integers(0, m, size=m).tolist()), emb))
        # maps must cover 0..k-1; force identity for validity
        records = [
            (list(range(len(s))), list(range(len(t))), e) for s, t, e in records
        ]
        decoded = read_embedding_container(write_embedding_container(records))
        for (s, t, e), (s2, t2, e2) in zip(records, decoded):
            assert s == s2 and t == t2
            np.testing.assert_array_equal(e.src.astype(np.float32), e2.src.astype(np.float32))
            np.testing.assert_array_equal(e.tgt.astype(np.float32), e2.tgt.astype(np.float32))


class TestTokenizedPair:
    def test_bad_map_rejected(self):
        with pytest.raises(ContractError):
            TokenizedPair(["a", "b"], ["c"], [0, 0], [0])  # word 1 never mapped

    def test_decreasing_map_rejected(self):
        with pytest.raises(ContractError, match="non-decreasing"):
            TokenizedPair(["a", "b"], ["c"], [1, 0], [0])

    def test_out_of_range_map_rejected(self):
        with pytest.raises(ContractError, match="outside word range"):
            TokenizedPair(["a"], ["c"], [0, 1], [0])
