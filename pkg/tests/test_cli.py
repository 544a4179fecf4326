import json

import numpy as np
import pytest

from synthetic import make_refinement_batch
from embalign.cli import main
from embalign.corpus_io import (
    parse_gold_alignments,
    read_embedding_container,
    write_alignments,
    write_embedding_container,
)


@pytest.fixture
def workdir(tmp_path):
    pairs, golds = make_refinement_batch(n_pairs=6)
    corpus = "\n".join(
        " ".join(p.src_words) + " ||| " + " ".join(p.tgt_words) for p, _ in pairs
    ) + "\n"
    (tmp_path / "corpus.txt").write_text(corpus)
    records = [(p.src_subword_to_word, p.tgt_subword_to_word, e) for p, e in pairs]
    (tmp_path / "embeddings.awec").write_bytes(write_embedding_container(records))
    (tmp_path / "gold.txt").write_text(write_alignments(golds))
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


class TestAlign:
    def test_diagonal_alignment(self, workdir):
        out = workdir / "hyp.txt"
        assert run("align", "--corpus", workdir / "corpus.txt",
                   "--embeddings", workdir / "embeddings.awec",
                   "--out", out) == 0
        hyps = parse_gold_alignments(out.read_text())
        assert all(h.sure == {(0, 0), (1, 1), (2, 2)} for h in hyps)

    def test_deterministic_reruns(self, workdir):
        out1, out2 = workdir / "a.txt", workdir / "b.txt"
        for out in (out1, out2):
            assert run("align", "--corpus", workdir / "corpus.txt",
                       "--embeddings", workdir / "embeddings.awec",
                       "--method", "entmax", "--out", out) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_count_mismatch_fatal(self, workdir, capsys):
        (workdir / "short.txt").write_text("a ||| b\n")
        code = run("align", "--corpus", workdir / "short.txt",
                   "--embeddings", workdir / "embeddings.awec",
                   "--out", workdir / "x.txt")
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error:") and "1" in err and "6" in err

    def test_manifest_written(self, workdir):
        out = workdir / "hyp.txt"
        run("align", "--corpus", workdir / "corpus.txt",
            "--embeddings", workdir / "embeddings.awec", "--out", out)
        manifest = json.loads((workdir / "hyp.txt.manifest.json").read_text())
        assert manifest["command"] == "align"
        assert len(manifest["inputs"]) == 2
        for digest in manifest["inputs"].values():
            assert len(digest) == 64


class TestEval:
    def test_perfect_score_json(self, workdir, capsys):
        hyp = workdir / "hyp.txt"
        run("align", "--corpus", workdir / "corpus.txt",
            "--embeddings", workdir / "embeddings.awec", "--out", hyp)
        assert run("eval", "--hyp", hyp, "--gold", workdir / "gold.txt",
                   "--json") == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["aer"] == 0.0
        assert payload["precision"] == 1.0

    def test_key_value_output(self, workdir, capsys):
        assert run("eval", "--hyp", workdir / "gold.txt",
                   "--gold", workdir / "gold.txt") == 0
        out = capsys.readouterr().out
        assert "aer=0.000000" in out


class TestRefine:
    def test_refined_container_loads(self, workdir):
        out = workdir / "refined.awec"
        assert run("refine", "--corpus", workdir / "corpus.txt",
                   "--embeddings", workdir / "embeddings.awec",
                   "--steps", 5, "--lr", 0.05, "--out", out) == 0
        records = read_embedding_container(out.read_bytes())
        assert len(records) == 6
        trace = json.loads((workdir / "refined.awec.trace.json").read_text())
        assert len(trace) == 5

    def test_supervised_gold(self, workdir):
        out = workdir / "refined.awec"
        assert run("refine", "--corpus", workdir / "corpus.txt",
                   "--embeddings", workdir / "embeddings.awec",
                   "--steps", 2, "--gold", workdir / "gold.txt",
                   "--out", out) == 0

    def test_deterministic(self, workdir):
        outs = []
        for name in ("r1.awec", "r2.awec"):
            out = workdir / name
            run("refine", "--corpus", workdir / "corpus.txt",
                "--embeddings", workdir / "embeddings.awec",
                "--steps", 3, "--out", out)
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSweep:
    def test_table_output(self, workdir):
        out = workdir / "sweep.tsv"
        assert run("sweep", "--corpus", workdir / "corpus.txt",
                   "--embeddings", workdir / "embeddings.awec",
                   "--gold", workdir / "gold.txt",
                   "--thresholds", "1e-6,0.001,0.1", "--out", out) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "threshold\taer\tlinks"
        assert len(lines) == 4


class TestPrepMask:
    @pytest.mark.parametrize("mode", ["mlm", "tlm", "psi"])
    def test_deterministic_jsonl(self, workdir, mode):
        outs = []
        for name in ("m1.jsonl", "m2.jsonl"):
            out = workdir / name
            assert run("prep-mask", "--corpus", workdir / "corpus.txt",
                       "--mode", mode, "--seed", 3, "--out", out) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        for line in outs[0].decode().splitlines():
            json.loads(line)

    def test_mlm_record_fields(self, workdir):
        out = workdir / "mlm.jsonl"
        run("prep-mask", "--corpus", workdir / "corpus.txt", "--mode", "mlm",
            "--seed", 0, "--out", out)
        record = json.loads(out.read_text().splitlines()[0])
        for key in ("input_tokens", "original_tokens", "masked_positions",
                    "substitution_kinds"):
            assert key in record


class TestBench:
    def test_reports_throughput(self, workdir, capsys):
        assert run("bench", "--embeddings", workdir / "embeddings.awec",
                   "--reps", 1) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["sentences_per_second"] > 0
        assert payload["method"] == "softmax"


class TestHeatmap:
    def test_pgm_output(self, workdir):
        out = workdir / "map.pgm"
        assert run("heatmap", "--embeddings", workdir / "embeddings.awec",
                   "--pair", 0, "--out", out) == 0
        data = out.read_bytes()
        assert data.startswith(b"P5\n3 3\n255\n")
        assert len(data) == len(b"P5\n3 3\n255\n") + 9

    def test_csv_round_trip(self, workdir):
        out = workdir / "map.csv"
        run("heatmap", "--embeddings", workdir / "embeddings.awec",
            "--pair", 1, "--format", "csv", "--out", out)
        rows = [[float(v) for v in line.split(",")]
                for line in out.read_text().splitlines()]
        records = read_embedding_container((workdir / "embeddings.awec").read_bytes())
        _, _, emb = records[1]
        np.testing.assert_array_equal(np.array(rows), emb.src @ emb.tgt.T)

    def test_index_out_of_range(self, workdir, capsys):
        assert run("heatmap", "--embeddings", workdir / "embeddings.awec",
                   "--pair", 99, "--out", workdir / "x.pgm") == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_constant_matrix_midgray(self, tmp_path):
        from embalign.corpus_io import PairEmbeddings
        emb = PairEmbeddings(src=[[1.0, 0.0]], tgt=[[0.0, 1.0]])
        path = tmp_path / "one.awec"
        path.write_bytes(write_embedding_container([([0], [0], emb)]))
        out = tmp_path / "one.pgm"
        run("heatmap", "--embeddings", path, "--pair", 0, "--out", out)
        assert out.read_bytes() == b"P5\n1 1\n255\n" + bytes([128])
