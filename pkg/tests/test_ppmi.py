import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxmover.corpus import SparseCoocMatrix, accumulate_cooccurrences, build_vocabulary
from ctxmover.errors import BadParameter, FormatError
from ctxmover.ppmi import SppmiMatrix, compute_sppmi, load_sppmi, save_sppmi, sppmi_row


def dense_sppmi_oracle(counts, alpha, shift):
    """Direct dense evaluation of the SPPMI definition."""
    counts = np.asarray(counts, dtype=float)
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    col_pow = np.where(col > 0, col, 1.0) ** alpha
    col_pow[col == 0] = 0.0
    z_alpha = col_pow.sum()
    out = np.zeros_like(counts)
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            if counts[i, j] > 0:
                val = np.log(counts[i, j] * z_alpha / (row[i] * col_pow[j])) - np.log(shift)
                out[i, j] = max(val, 0.0)
    return out


def cooc_from_dense(counts):
    counts = np.asarray(counts, dtype=float)
    entries = {
        (i, j): float(counts[i, j])
        for i in range(counts.shape[0])
        for j in range(counts.shape[1])
        if counts[i, j] > 0
    }
    return SparseCoocMatrix(entries=entries, vocab_size=counts.shape[0], window=1)


FOUR_CELL = [[3.0, 1.0], [1.0, 3.0]]


class TestComputeSppmi:
    def test_hand_case_alpha1_shift1(self):
        mat = compute_sppmi(cooc_from_dense(FOUR_CELL), alpha=1.0, shift=1.0)
        # value(w1,c1) = log(3 * 8 / (4 * 4)) = log 1.5; the weak cells clip away
        assert mat.entries == pytest.approx(
            {(0, 0): np.log(1.5), (1, 1): np.log(1.5)}
        )

    def test_hand_case_shift2_empties_matrix(self):
        mat = compute_sppmi(cooc_from_dense(FOUR_CELL), alpha=1.0, shift=2.0)
        assert mat.entries == {}

    def test_zero_counts_stay_absent(self):
        mat = compute_sppmi(cooc_from_dense([[5.0, 0.0], [0.0, 5.0]]), alpha=1.0, shift=1.0)
        assert (0, 1) not in mat.entries
        assert (1, 0) not in mat.entries

    @pytest.mark.parametrize("alpha", [0.15, 0.5, 1.0])
    @pytest.mark.parametrize("shift", [1.0, 5.0, 15.0])
    def test_matches_dense_oracle(self, rng, alpha, shift):
        counts = rng.integers(0, 6, size=(40, 40)).astype(float)
        counts[counts.sum(axis=1) == 0, 0] = 1.0  # keep every row marginal positive
        mat = compute_sppmi(cooc_from_dense(counts), alpha=alpha, shift=shift)
        oracle = dense_sppmi_oracle(counts, alpha, shift)
        dense = np.zeros_like(oracle)
        for (i, j), v in mat.entries.items():
            dense[i, j] = v
        assert dense == pytest.approx(oracle, abs=1e-12)

    def test_monotone_in_shift(self, rng):
        counts = rng.integers(0, 10, size=(15, 15)).astype(float) + 0.5
        low = compute_sppmi(cooc_from_dense(counts), alpha=0.5, shift=1.0)
        high = compute_sppmi(cooc_from_dense(counts), alpha=0.5, shift=5.0)
        for key, v in high.entries.items():
            assert v <= low.entries[key] + 1e-12

    def test_shift_never_exceeds_ppmi(self, rng):
        counts = rng.random((10, 10)) * 4
        base = compute_sppmi(cooc_from_dense(counts), alpha=1.0, shift=1.0)
        shifted = compute_sppmi(cooc_from_dense(counts), alpha=1.0, shift=3.0)
        for key, v in shifted.entries.items():
            assert v <= base.entries[key]

    def test_uniform_counts_all_values_equal(self):
        counts = np.full((6, 6), 2.0)
        mat = compute_sppmi(cooc_from_dense(counts), alpha=0.5, shift=1.0)
        values = set(round(v, 12) for v in mat.entries.values())
        assert len(values) <= 1

    def test_parameter_validation(self):
        cooc = cooc_from_dense(FOUR_CELL)
        with pytest.raises(BadParameter):
            compute_sppmi(cooc, alpha=-0.1, shift=1.0)
        with pytest.raises(BadParameter):
            compute_sppmi(cooc, alpha=1.1, shift=1.0)
        with pytest.raises(BadParameter):
            compute_sppmi(cooc, alpha=0.5, shift=0.5)
        with pytest.raises(BadParameter):
            compute_sppmi(SparseCoocMatrix(entries={}, vocab_size=2, window=1),
                          alpha=0.5, shift=1.0)

    @given(shift_pair=st.tuples(st.floats(1.0, 20.0), st.floats(1.0, 20.0)))
    @settings(max_examples=25, deadline=None)
    def test_monotonicity_property(self, shift_pair):
        s1, s2 = sorted(shift_pair)
        counts = np.arange(1, 10, dtype=float).reshape(3, 3)
        low = compute_sppmi(cooc_from_dense(counts), alpha=0.55, shift=s1)
        high = compute_sppmi(cooc_from_dense(counts), alpha=0.55, shift=s2)
        for key, v in high.entries.items():
            assert v <= low.entries[key] + 1e-12


class TestSppmiRow:
    def test_hand_row(self):
        mat = compute_sppmi(cooc_from_dense(FOUR_CELL), alpha=1.0, shift=1.0)
        assert sppmi_row(mat, 0) == pytest.approx({0: np.log(1.5)})

    def test_empty_row(self):
        mat = compute_sppmi(cooc_from_dense([[2.0, 2.0], [0.0, 0.0]]), alpha=1.0, shift=1.0)
        # give row 1 a marginal but no surviving values
        assert sppmi_row(mat, 1) == {}

    def test_out_of_range(self):
        mat = compute_sppmi(cooc_from_dense(FOUR_CELL), alpha=1.0, shift=1.0)
        with pytest.raises(IndexError):
            sppmi_row(mat, 2)

    def test_rows_match_dense_oracle(self, rng):
        counts = rng.integers(1, 8, size=(50, 50)).astype(float)
        mat = compute_sppmi(cooc_from_dense(counts), alpha=0.5, shift=1.0)
        oracle = dense_sppmi_oracle(counts, 0.5, 1.0)
        for wid in range(50):
            row = sppmi_row(mat, wid)
            dense = np.zeros(50)
            for j, v in row.items():
                dense[j] = v
            assert dense == pytest.approx(oracle[wid], abs=1e-12)


class TestSppmiIo:
    def test_roundtrip(self, tmp_path, rng):
        words = [f"w{i}" for i in range(20)]
        stream = [list(rng.choice(words, size=400))]
        vocab = build_vocabulary(stream[0])
        cooc = accumulate_cooccurrences(stream, vocab, window=4)
        mat = compute_sppmi(cooc, alpha=0.55, shift=2.0)
        save_sppmi(mat, tmp_path / "m.bin")
        loaded = load_sppmi(tmp_path / "m.bin")
        assert loaded == mat
        assert loaded.alpha == 0.55
        assert loaded.shift == 2.0

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x.bin").write_bytes(b"CMVCOOC1" + b"\x00" * 40)
        with pytest.raises(FormatError):
            load_sppmi(tmp_path / "x.bin")

    def test_truncation(self, tmp_path):
        mat = SppmiMatrix(entries={(0, 1): 1.0}, vocab_size=2, alpha=1.0, shift=1.0)
        save_sppmi(mat, tmp_path / "m.bin")
        data = (tmp_path / "m.bin").read_bytes()
        (tmp_path / "t.bin").write_bytes(data[:-2])
        with pytest.raises(FormatError):
            load_sppmi(tmp_path / "t.bin")
