import json

import numpy as np
import pytest

from pktdetect import dataset
from pktdetect.dataset import (ChannelTemplate, DatasetError, DatasetSpec,
                               Kind, LabeledBlock, generate, load, save, split)
from pktdetect.preamble import PREAMBLE_LEN

# small, fast channel template for unit tests (no multipath, no CFO)
_FAST = ChannelTemplate(multipath=False, cfo_max_hz=0.0)


@pytest.fixture(scope="module")
def small_blocks():
    spec = DatasetSpec(block_len=40, n_blocks=300, seed=1, channel=_FAST)
    return generate(spec)


class TestLabeledBlock:
    def test_amplitudes_stored_float32(self):
        blk = LabeledBlock(np.ones(8, dtype=np.float64), 3.0, 10.0, Kind.START)
        assert blk.amplitudes.dtype == np.float32

    def test_label_kind_consistency(self):
        with pytest.raises(ValueError):
            LabeledBlock(np.ones(8), 3.0, 10.0, Kind.NOISE_ONLY)
        with pytest.raises(ValueError):
            LabeledBlock(np.ones(8), -1.0, 10.0, Kind.START)

    def test_negative_amplitude_rejected(self):
        with pytest.raises(ValueError):
            LabeledBlock(np.array([1.0, -0.1]), -1.0, 10.0, Kind.NOISE_ONLY)


class TestDatasetSpec:
    def test_split_must_sum_to_one(self):
        with pytest.raises(ValueError):
            DatasetSpec(block_len=40, split=(0.5, 0.5, 0.5))

    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            DatasetSpec(block_len=40, frac_no_start=1.5)

    def test_block_longer_than_packet_needs_no_mid_tail(self):
        with pytest.raises(DatasetError):
            DatasetSpec(block_len=1600)
        # without mid/tail blocks the long length is fine
        DatasetSpec(block_len=1600, frac_noise_within_no_start=1.0)

    def test_default_name(self):
        assert DatasetSpec(block_len=80, n_blocks=10).name == "blocks80"

    def test_json_round_trip(self):
        spec = DatasetSpec(block_len=160, n_blocks=500, seed=3,
                           snr_range_db=(5.0, 15.0), channel=_FAST)
        assert DatasetSpec.from_json(spec.to_json()) == spec


class TestGenerate:
    def test_deterministic(self):
        spec = DatasetSpec(block_len=40, n_blocks=40, seed=2, channel=_FAST)
        a, b = generate(spec), generate(spec)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.amplitudes, y.amplitudes)
            assert (x.label, x.snr_db, x.kind) == (y.label, y.snr_db, y.kind)

    def test_block_shapes_and_labels(self, small_blocks):
        for blk in small_blocks:
            assert blk.amplitudes.shape == (40,)
            if blk.kind == Kind.START:
                assert 0 <= blk.label <= 39
            else:
                assert blk.label == -1.0
            assert 0.0 <= blk.snr_db <= 25.0

    def test_kind_proportions(self, small_blocks):
        counts = {k: sum(1 for b in small_blocks if b.kind == k) for k in Kind}
        n = len(small_blocks)
        assert counts[Kind.START] / n == pytest.approx(0.5, abs=0.1)
        assert counts[Kind.NOISE_ONLY] / n == pytest.approx(0.25, abs=0.1)
        assert counts[Kind.MID_TAIL] / n == pytest.approx(0.25, abs=0.1)

    def test_snr_uniformity(self):
        spec = DatasetSpec(block_len=40, n_blocks=2_000, seed=5, channel=_FAST,
                           frac_no_start=1.0, frac_noise_within_no_start=1.0)
        snrs = np.sort([b.snr_db for b in generate(spec)]) / 25.0
        # Kolmogorov-Smirnov distance against Uniform(0, 1)
        n = len(snrs)
        ecdf_hi = np.arange(1, n + 1) / n
        ecdf_lo = np.arange(0, n) / n
        ks = max(np.max(ecdf_hi - snrs), np.max(snrs - ecdf_lo))
        assert ks < 1.63 / np.sqrt(n)  # ~1% significance level

    def test_start_labels_cover_block(self, small_blocks):
        labels = [b.label for b in small_blocks if b.kind == Kind.START]
        assert min(labels) < 5
        assert max(labels) > 34

    def test_noise_only_variance_tracks_snr_tag(self):
        snr = 10.0
        spec = DatasetSpec(block_len=160, n_blocks=400, seed=7, channel=_FAST,
                           frac_no_start=1.0, frac_noise_within_no_start=1.0,
                           snr_range_db=(snr, snr))
        blocks = generate(spec)
        sim = dataset._Simulator(spec)
        expected = sim.noise_sigma2(snr)
        measured = np.mean([np.mean(b.amplitudes.astype(np.float64) ** 2)
                            for b in blocks])
        assert measured == pytest.approx(expected, rel=0.05)

    def test_start_block_contains_preamble_onset(self):
        # at high SNR the samples after the labeled start carry far more
        # power than the noise before it
        spec = DatasetSpec(block_len=160, n_blocks=60, seed=8, channel=_FAST,
                           frac_no_start=0.0, snr_range_db=(25.0, 25.0))
        for blk in generate(spec):
            tau = int(blk.label)
            if not 20 <= tau <= 140:
                continue
            before = np.mean(blk.amplitudes[:tau] ** 2)
            after = np.mean(blk.amplitudes[tau:] ** 2)
            assert after > 10 * before


class TestSplit:
    def test_partition_sizes(self, small_blocks):
        tr, va, te = split(small_blocks, (0.7, 0.15, 0.15), seed=0)
        assert len(tr) == 210
        assert len(tr) + len(va) + len(te) == len(small_blocks)

    def test_deterministic(self, small_blocks):
        a = split(small_blocks, seed=3)
        b = split(small_blocks, seed=3)
        for pa, pb in zip(a, b):
            assert [id(x) for x in pa] == [id(x) for x in pb]

    def test_class_balance(self, small_blocks):
        overall = np.mean([b.label >= 0 for b in small_blocks])
        for part in split(small_blocks, (0.7, 0.15, 0.15), seed=0):
            frac = np.mean([b.label >= 0 for b in part])
            assert abs(frac - overall) <= 0.02 + 1.0 / len(part)

    def test_bad_fractions(self, small_blocks):
        with pytest.raises(ValueError):
            split(small_blocks, (0.6, 0.3, 0.3))


class TestPersistence:
    def test_round_trip_bit_exact(self, small_blocks, tmp_path):
        spec = DatasetSpec(block_len=40, n_blocks=300, seed=1, channel=_FAST)
        save(small_blocks, tmp_path / "ds", spec)
        loaded, manifest = load(tmp_path / "ds")
        assert manifest["n_records"] == len(small_blocks)
        assert manifest["block_len"] == 40
        for a, b in zip(small_blocks, loaded):
            np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
            assert a.label == b.label
            assert a.snr_db == pytest.approx(b.snr_db, rel=1e-6)
            assert a.kind == b.kind

    def test_save_is_deterministic(self, small_blocks, tmp_path):
        save(small_blocks, tmp_path / "a")
        save(small_blocks, tmp_path / "b")
        assert ((tmp_path / "a.blocks.bin").read_bytes()
                == (tmp_path / "b.blocks.bin").read_bytes())

    def test_checksum_detects_corruption(self, small_blocks, tmp_path):
        save(small_blocks, tmp_path / "ds")
        bin_path = tmp_path / "ds.blocks.bin"
        data = bytearray(bin_path.read_bytes())
        data[100] ^= 0xFF
        bin_path.write_bytes(bytes(data))
        with pytest.raises(DatasetError):
            load(tmp_path / "ds")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetError):
            load(tmp_path / "absent")

    def test_version_mismatch(self, small_blocks, tmp_path):
        save(small_blocks, tmp_path / "ds")
        man_path = tmp_path / "ds.manifest.json"
        doc = json.loads(man_path.read_text())
        doc["format_version"] = 99
        man_path.write_text(json.dumps(doc))
        with pytest.raises(DatasetError):
            load(tmp_path / "ds")

    def test_truncated_payload(self, small_blocks, tmp_path):
        save(small_blocks, tmp_path / "ds")
        bin_path = tmp_path / "ds.blocks.bin"
        bin_path.write_bytes(bin_path.read_bytes()[:-17])
        with pytest.raises(DatasetError):
            load(tmp_path / "ds")
