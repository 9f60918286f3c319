"""Parity suite: every binding call against the CLI on one fixed corpus."""

import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest

import ctxmover
import ctxmover_bindings as cmb

PARITY_CORPUS = """\
red apple sweet fruit
green apple sour fruit
red cherry sweet fruit
green pear sweet fruit
loud drum hard sound
soft drum low sound
loud horn high sound
soft bell low sound
"""

SCORING = dict(metric="euclidean", p=1, lam=0.1, iters=100, mixing=0.0,
               pc_removal=False, cost_mode="none", seed=0)


def run_cli(*argv):
    proc = subprocess.run([sys.executable, "-m", "ctxmover.cli", *argv],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def scoring_flags(d):
    return ["--vocab", str(d / "vocab.tsv"), "--hist", str(d / "hist.bin"),
            "--clusters-file", str(d / "clusters.bin"),
            "--embeddings", str(d / "emb.txt"),
            "--metric", SCORING["metric"], "--p", str(SCORING["p"]),
            "--lam", str(SCORING["lam"]), "--iters", str(SCORING["iters"]),
            "--mixing", str(SCORING["mixing"]), "--no-pc-removal",
            "--cost-mode", SCORING["cost_mode"], "--seed", str(SCORING["seed"])]


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    d = tmp_path_factory.mktemp("parity")
    (d / "corpus.txt").write_text(PARITY_CORPUS)
    gen = np.random.default_rng(0)
    run_cli("vocab", "--corpus", str(d / "corpus.txt"), "--min-count", "1",
            "-o", str(d / "vocab.tsv"))
    vocab = ctxmover.Vocabulary.load(d / "vocab.tsv")
    with open(d / "emb.txt", "w") as fh:
        for tok in vocab.tokens:
            vec = " ".join(f"{x:.6f}" for x in gen.standard_normal(3))
            fh.write(f"{tok} {vec}\n")
    run_cli("cooc", "--corpus", str(d / "corpus.txt"), "--vocab", str(d / "vocab.tsv"),
            "--window", "3", "-o", str(d / "cooc.bin"))
    run_cli("sppmi", "--cooc", str(d / "cooc.bin"), "--alpha", "0.55",
            "--shift", "1.0", "-o", str(d / "sppmi.bin"))
    run_cli("cluster", "--vocab", str(d / "vocab.tsv"), "--embeddings",
            str(d / "emb.txt"), "--clusters", "4", "--seed", "1",
            "-o", str(d / "clusters.bin"))
    run_cli("histograms", "--sppmi", str(d / "sppmi.bin"), "--clusters-file",
            str(d / "clusters.bin"), "--beta", "0.5", "-o", str(d / "hist.bin"))
    return d


@pytest.fixture(scope="session")
def store(artifacts):
    return cmb.load(vocab=artifacts / "vocab.tsv", hist=artifacts / "hist.bin",
                    clusters=artifacts / "clusters.bin",
                    embeddings=artifacts / "emb.txt", **SCORING)


class TestDistanceParity:
    @pytest.mark.parametrize("pair", [("apple", "fruit"), ("apple", "drum"),
                                      ("sweet", "sour"), ("red", "red")])
    def test_matches_cli_dist(self, artifacts, store, pair):
        out = run_cli("dist", *scoring_flags(artifacts), "--precision", "15", *pair)
        assert cmb.distance(store, *pair) == pytest.approx(float(out), abs=1e-12)

    def test_matches_library(self, artifacts, store):
        vocab = ctxmover.Vocabulary.load(artifacts / "vocab.tsv")
        hist = ctxmover.HistogramStore.load(artifacts / "hist.bin", mixing=0.0)
        clus = ctxmover.ContextClustering.load(artifacts / "clusters.bin")
        emb = ctxmover.load_embeddings(artifacts / "emb.txt", vocab)
        space = ctxmover.GroundSpace.assemble(clus.centroids, emb.vectors,
                                              metric="euclidean", p=1)
        ref = ctxmover.cmd(vocab.id_of["apple"], vocab.id_of["sound"],
                           hist, space, lam=0.1, iters=100)
        assert cmb.distance(store, "apple", "sound") == pytest.approx(ref, abs=1e-12)

    def test_oov_preserves_primary_error_name(self, store):
        with pytest.raises(ctxmover.errors.OovError):
            cmb.distance(store, "apple", "nosuchword")


class TestSentenceDistanceParity:
    def test_single_word_sentences_match_cli_dist(self, artifacts, store):
        out = run_cli("dist", *scoring_flags(artifacts), "--precision", "15",
                      "apple", "drum")
        got = cmb.sentence_distance(store, ["apple"], ["drum"])
        assert got == pytest.approx(float(out), abs=1e-12)

    def test_self_distance_small(self, artifacts, store):
        tight = cmb.load(vocab=artifacts / "vocab.tsv", hist=artifacts / "hist.bin",
                         clusters=artifacts / "clusters.bin",
                         embeddings=artifacts / "emb.txt",
                         **{**SCORING, "lam": 1e-3, "iters": 3000})
        sent = ["red", "apple", "sweet"]
        assert cmb.sentence_distance(tight, sent, sent) <= 1e-2

    def test_matches_library_sentence_cmd(self, artifacts, store):
        vocab = ctxmover.Vocabulary.load(artifacts / "vocab.tsv")
        hist = ctxmover.HistogramStore.load(artifacts / "hist.bin", mixing=0.0)
        clus = ctxmover.ContextClustering.load(artifacts / "clusters.bin")
        emb = ctxmover.load_embeddings(artifacts / "emb.txt", vocab)
        space = ctxmover.GroundSpace.assemble(clus.centroids, emb.vectors,
                                              metric="euclidean", p=1)
        ids = lambda toks: [vocab.id_of[t] for t in toks]
        ref = ctxmover.sentence_cmd(ids(["red", "apple"]), ids(["loud", "drum"]),
                                    hist, space, lam=0.1, iters=100)
        got = cmb.sentence_distance(store, ["red", "apple"], ["loud", "drum"])
        assert got == pytest.approx(ref, abs=1e-12)

    def test_oov_words_skipped_all_oov_raises(self, store):
        with pytest.raises(ctxmover.errors.EmptySentence):
            cmb.sentence_distance(store, ["zzz", "qqq"], ["apple"])


class TestNeighborsParity:
    def test_matches_cli_neighbors(self, artifacts, store):
        out = run_cli("neighbors", *scoring_flags(artifacts), "-k", "5", "apple")
        cli_rows = [line.split("\t") for line in out.strip().splitlines()]
        got = cmb.neighbors(store, "apple", k=5)
        assert [tok for tok, _ in got] == [row[1] for row in cli_rows]
        for (tok, dist), row in zip(got, cli_rows):
            assert dist == pytest.approx(float(row[2]), abs=1e-6)  # CLI prints 6dp

    def test_sentence_query(self, store):
        got = cmb.neighbors(store, ["red", "apple"], k=3)
        assert len(got) == 3
        dists = [d for _, d in got]
        assert dists == sorted(dists)


class TestEvaluateParity:
    def write_sts(self, d):
        data = d / "sts" / "sts12"
        data.mkdir(parents=True, exist_ok=True)
        (data / "toy.tsv").write_text(
            "red apple\tgreen apple\t4.5\n"
            "sweet fruit\tsour fruit\t3.8\n"
            "loud drum\tred apple\t0.5\n"
            "hard sound\tlow sound\t3.0\n"
            "red cherry\tloud horn\t0.2\n")
        return d / "sts"

    def test_sts_matches_cli_summary(self, artifacts, store):
        data = self.write_sts(artifacts)
        out_dir = artifacts / "sts-out"
        run_cli("eval-sts", *scoring_flags(artifacts), "--data", str(data),
                "--out-dir", str(out_dir))
        summary = dict(line.split("=", 1) for line in
                       (out_dir / "sts_summary.txt").read_text().splitlines())
        got = cmb.evaluate(store, data, task="sts")
        assert got["sts12/toy"] == pytest.approx(float(summary["pearson.sts12"]), abs=1e-6)
        assert got["average"] == pytest.approx(float(summary["pearson.average"]), abs=1e-6)

    def test_wordsim_matches_cli_summary(self, artifacts, store):
        data = artifacts / "ws"
        data.mkdir(exist_ok=True)
        (data / "toy.tsv").write_text(
            "apple\tfruit\t8.0\napple\tdrum\t1.0\nsweet\tsour\t6.0\n"
            "unknown\tfruit\t5.0\n")
        out_dir = artifacts / "ws-out"
        run_cli("eval-ws", *scoring_flags(artifacts), "--data", str(data),
                "--out-dir", str(out_dir))
        summary = dict(line.split("=", 1) for line in
                       (out_dir / "wordsim_summary.txt").read_text().splitlines())
        got = cmb.evaluate(store, data, task="wordsim")
        assert got["toy"] == pytest.approx(float(summary["spearman.toy"]), abs=1e-6)

    def test_hypernymy_matches_cli_summary(self, artifacts, store):
        data = artifacts / "hyp"
        data.mkdir(exist_ok=True)
        (data / "pairs.tsv").write_text(
            "apple\tfruit\tTrue\ndrum\tfruit\tFalse\nhorn\tsound\tTrue\n")
        out_dir = artifacts / "hyp-out"
        # euclidean scoring on both sides (the toy store has no entailment vectors)
        run_cli("eval-hyp", *scoring_flags(artifacts), "--data", str(data),
                "--out-dir", str(out_dir))
        summary = dict(line.split("=", 1) for line in
                       (out_dir / "hypernymy_summary.txt").read_text().splitlines())
        got = cmb.evaluate(store, data, task="hypernymy")
        assert got["pairs"] == pytest.approx(float(summary["ap.pairs"]), abs=1e-6)

    def test_unknown_task(self, store):
        with pytest.raises(ctxmover.errors.BadParameter):
            cmb.evaluate(store, ".", task="qa")


class TestHandleContract:
    def test_use_after_close(self, artifacts):
        handle = cmb.load(vocab=artifacts / "vocab.tsv", hist=artifacts / "hist.bin",
                          clusters=artifacts / "clusters.bin",
                          embeddings=artifacts / "emb.txt", **SCORING)
        assert handle.vocab_size > 0
        handle.close()
        with pytest.raises(cmb.ClosedHandleError):
            cmb.distance(handle, "apple", "fruit")
        with pytest.raises(cmb.ClosedHandleError):
            cmb.evaluate(handle, ".", task="sts")

    def test_context_manager(self, artifacts):
        with cmb.load(vocab=artifacts / "vocab.tsv", hist=artifacts / "hist.bin",
                      clusters=artifacts / "clusters.bin",
                      embeddings=artifacts / "emb.txt", **SCORING) as handle:
            assert cmb.distance(handle, "apple", "fruit") >= 0
        with pytest.raises(cmb.ClosedHandleError):
            cmb.distance(handle, "apple", "fruit")

    def test_concurrent_readers_match_serial(self, store):
        pairs = [("apple", "fruit"), ("drum", "sound"), ("red", "green"),
                 ("sweet", "sour"), ("cherry", "pear"), ("horn", "bell")] * 4
        serial = [cmb.distance(store, a, b) for a, b in pairs]
        with ThreadPoolExecutor(max_workers=4) as pool:
            threaded = list(pool.map(lambda p: cmb.distance(store, *p), pairs))
        assert threaded == pytest.approx(serial, abs=1e-12)

    def test_version_mirrors_core(self):
        assert cmb.__version__ == ctxmover.__version__
