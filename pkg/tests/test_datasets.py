"""Generator and file-format tests."""

import json

import numpy as np
import pytest

from symlat import datasets


class TestFreqSum:
    def test_shapes_and_dtypes(self):
        ds = datasets.make_freqsum(12, seed=0)
        assert ds.x.shape == (12, 500, 6) and ds.x.dtype == np.float32
        assert ds.y.shape == (12,) and ds.y.dtype == np.int32
        assert ds.mask.shape == (12, 500) and ds.mask.dtype == np.uint8

    def test_mask_cardinality(self):
        # union of two 100-step windows: between 100 (full overlap) and 200
        ds = datasets.make_freqsum(30, seed=1)
        sizes = ds.mask.sum(axis=1)
        assert sizes.min() >= 100 and sizes.max() <= 200

    def test_class_balance(self):
        ds = datasets.make_freqsum(400, seed=2)
        rate = ds.y.mean()
        assert 0.4 <= rate <= 0.6

    def test_regeneration_bit_identical(self):
        a = datasets.make_freqsum(20, seed=3)
        b = datasets.make_freqsum(20, seed=3)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.mask, b.mask)

    def test_samples_independent_of_batch_size(self):
        # per-sample streams: a longer run reproduces a shorter prefix
        a = datasets.make_freqsum(5, seed=4)
        b = datasets.make_freqsum(10, seed=4)
        assert np.array_equal(a.x, b.x[:5])

    def test_masked_windows_carry_high_frequency_energy(self):
        # the discriminative sines (>= 10 cycles) dominate the baseline (<= 5)
        ds = datasets.make_freqsum(10, seed=5)
        for i in range(10):
            diffs = np.abs(np.diff(ds.x[i], axis=0)).sum(axis=1)
            inside = diffs[ds.mask[i][1:] == 1].mean()
            outside = diffs[ds.mask[i][1:] == 0].mean()
            assert inside > outside


class TestSeqComb:
    def test_windows_disjoint_and_marked(self):
        ds = datasets.make_seqcomb_uv(40, seed=0)
        sizes = ds.mask.sum(axis=1)
        np.testing.assert_array_equal(sizes, np.full(40, 40))  # two disjoint 20s

    def test_round_robin_exact_balance(self):
        ds = datasets.make_seqcomb_uv(40, seed=1)
        counts = np.bincount(ds.y, minlength=4)
        np.testing.assert_array_equal(counts, np.full(4, 10))

    def test_class_encodes_ordered_trends(self):
        """Fitted slopes of the two marked windows match the class bits."""
        ds = datasets.make_seqcomb_uv(24, seed=2, noise_sigma=0.05)
        for i in range(24):
            idx = np.flatnonzero(ds.mask[i])
            segments = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
            assert len(segments) == 2
            slopes = []
            for seg in segments:
                t = np.arange(len(seg))
                slopes.append(np.polyfit(t, ds.x[i, seg, 0].astype(float), 1)[0])
            bits = (0 if slopes[0] > 0 else 1, 0 if slopes[1] > 0 else 1)
            assert ds.y[i] == (bits[0] << 1) | bits[1]

    def test_multivariate_trends_land_on_single_channels(self):
        ds = datasets.make_seqcomb_mv(16, seed=3, noise_sigma=0.05)
        assert ds.x.shape == (16, 200, 4)
        for i in range(16):
            idx = np.flatnonzero(ds.mask[i])
            segments = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
            for seg in segments:
                spans = np.ptp(ds.x[i, seg, :].astype(float), axis=0)
                assert (spans > 5.0).sum() == 1  # the ramp spans ~19*0.5 on one channel


class TestLowVar:
    def test_window_variance_reduced(self):
        ds = datasets.make_lowvar(20, seed=0)
        for i in range(20):
            ch = ds.y[i] >> 1
            inside = ds.x[i, ds.mask[i] == 1, ch].astype(float)
            outside = ds.x[i, ds.mask[i] == 0, ch].astype(float)
            assert inside.var() < 0.25 * outside.var()

    def test_class_encodes_channel_and_shift(self):
        ds = datasets.make_lowvar(40, seed=1)
        for i in range(40):
            ch, pos = ds.y[i] >> 1, ds.y[i] & 1
            inside = ds.x[i, ds.mask[i] == 1, ch].astype(float)
            other = ds.x[i, ds.mask[i] == 1, 1 - ch].astype(float)
            assert abs(inside.mean()) > 1.0  # shifted channel
            assert abs(other.mean()) < 1.0  # untouched channel
            assert (inside.mean() > 0) == bool(pos)


class TestFarField:
    def test_label_recomputable_from_stored_series(self):
        ds = datasets.make_farfield(60, seed=0)
        for i in range(60):
            p = datasets.farfield_pairing_score(ds.x[i])
            assert ds.y[i] == (1 if p > 0 else 0)

    def test_pairing_score_two_points(self):
        assert datasets.farfield_pairing_score(np.array([1.0, 2.0])) == pytest.approx(2.0)

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError):
            datasets.make_farfield(4, seed=0, length=99)

    def test_no_mask(self):
        ds = datasets.make_farfield(4, seed=1)
        assert ds.mask is None

    def test_roughly_balanced(self):
        ds = datasets.make_farfield(400, seed=2)
        assert 0.35 <= ds.y.mean() <= 0.65


class TestRoundTrip:
    def test_save_load_bit_identical(self, tmp_path):
        ds = datasets.make_lowvar(8, seed=0)
        datasets.save_dataset(ds, tmp_path / "d")
        back = datasets.load_dataset(tmp_path / "d")
        assert np.array_equal(ds.x, back.x)
        assert np.array_equal(ds.y, back.y)
        assert np.array_equal(ds.mask, back.mask)
        assert back.provenance["generator"] == "lowvar"

    def test_maskless_round_trip(self, tmp_path):
        ds = datasets.make_farfield(6, seed=1)
        datasets.save_dataset(ds, tmp_path / "d")
        back = datasets.load_dataset(tmp_path / "d")
        assert back.mask is None
        assert np.array_equal(ds.x, back.x)

    def test_corrupt_header_rejected(self, tmp_path):
        ds = datasets.make_lowvar(4, seed=2)
        datasets.save_dataset(ds, tmp_path / "d")
        (tmp_path / "d" / "meta.json").write_text("{broken")
        with pytest.raises(datasets.DatasetFormatError):
            datasets.load_dataset(tmp_path / "d")

    def test_unknown_version_rejected(self, tmp_path):
        ds = datasets.make_lowvar(4, seed=3)
        datasets.save_dataset(ds, tmp_path / "d")
        meta = json.loads((tmp_path / "d" / "meta.json").read_text())
        meta["format_version"] = 99
        (tmp_path / "d" / "meta.json").write_text(json.dumps(meta))
        with pytest.raises(datasets.DatasetVersionError):
            datasets.load_dataset(tmp_path / "d")

    def test_truncated_blob_rejected(self, tmp_path):
        ds = datasets.make_lowvar(4, seed=4)
        datasets.save_dataset(ds, tmp_path / "d")
        blob = (tmp_path / "d" / "x.f32le").read_bytes()
        (tmp_path / "d" / "x.f32le").write_bytes(blob[:-8])
        with pytest.raises(datasets.DatasetFormatError):
            datasets.load_dataset(tmp_path / "d")

    def test_missing_meta_rejected(self, tmp_path):
        with pytest.raises(datasets.DatasetFormatError):
            datasets.load_dataset(tmp_path / "nothing")


class TestImportCsv:
    LAYOUT = {
        "length": 3,
        "sample_column": "sample",
        "label_column": "label",
        "value_columns": ["a", "b"],
    }

    def _write(self, path, rows):
        lines = ["sample,label,a,b"] + rows
        path.write_text("\n".join(lines) + "\n")

    def test_valid_import(self, tmp_path):
        f = tmp_path / "d.csv"
        self._write(f, [
            "s1,0,1.0,2.0", "s1,0,1.5,2.5", "s1,0,2.0,3.0",
            "s2,1,0.0,0.1", "s2,1,0.2,0.3", "s2,1,0.4,0.5",
        ])
        ds = datasets.import_csv(f, self.LAYOUT)
        assert ds.x.shape == (2, 3, 2)
        np.testing.assert_array_equal(ds.y, [0, 1])
        assert ds.x[1, 2, 1] == pytest.approx(0.5)

    def test_ragged_sample_rejected_with_location(self, tmp_path):
        f = tmp_path / "d.csv"
        self._write(f, [
            "s1,0,1.0,2.0", "s1,0,1.5,2.5",
            "s2,1,0.0,0.1", "s2,1,0.2,0.3", "s2,1,0.4,0.5",
        ])
        with pytest.raises(datasets.DatasetFormatError, match="s1"):
            datasets.import_csv(f, self.LAYOUT)

    def test_inconsistent_label_rejected(self, tmp_path):
        f = tmp_path / "d.csv"
        self._write(f, [
            "s1,0,1.0,2.0", "s1,1,1.5,2.5", "s1,0,2.0,3.0",
        ])
        with pytest.raises(datasets.DatasetFormatError, match="inconsistent"):
            datasets.import_csv(f, self.LAYOUT)

    def test_label_gap_rejected(self, tmp_path):
        f = tmp_path / "d.csv"
        self._write(f, [
            "s1,0,1.0,2.0", "s1,0,1.5,2.5", "s1,0,2.0,3.0",
            "s2,2,0.0,0.1", "s2,2,0.2,0.3", "s2,2,0.4,0.5",
        ])
        with pytest.raises(datasets.DatasetFormatError, match="labels"):
            datasets.import_csv(f, self.LAYOUT)

    def test_missing_column_rejected(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("sample,label,a\ns1,0,1.0\n")
        with pytest.raises(datasets.DatasetFormatError, match="missing"):
            datasets.import_csv(f, self.LAYOUT)

    def test_non_numeric_value_rejected(self, tmp_path):
        f = tmp_path / "d.csv"
        self._write(f, ["s1,0,oops,2.0", "s1,0,1.5,2.5", "s1,0,2.0,3.0"])
        with pytest.raises(datasets.DatasetFormatError, match="line 2"):
            datasets.import_csv(f, self.LAYOUT)
