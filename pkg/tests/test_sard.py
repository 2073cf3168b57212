import numpy as np
import pytest

from sarbench import sard
from sarbench.cnn.network import init_params
from sarbench.datasets import LabeledDataset, Sample, gen_shape_dataset
from sarbench.pgm import PgmError, read_pgm, write_pgm
from sarbench.scene import RoiGrid

FAST = dict(grid=RoiGrid(n=40), n_positions=30, n_t=30)


def small_dataset(seed=0):
    return gen_shape_dataset(n_per_class=2, seed=seed, **FAST)


class TestDatasetContainer:
    def test_round_trip_preserves_structure(self, tmp_path):
        ds = small_dataset()
        path = tmp_path / "shape.sard"
        sard.write_dataset(path, ds, task="shape")
        back = sard.read_dataset(path)
        assert back.class_count == ds.class_count
        assert len(back.samples) == len(ds.samples)
        assert (back.train_idx == ds.train_idx).all()
        assert (back.val_idx == ds.val_idx).all()
        assert (back.test_idx == ds.test_idx).all()
        for a, b in zip(ds.samples, back.samples):
            assert b.label == a.label
            assert (b.input == a.input.astype(np.float32).astype(np.float64)).all()

    def test_same_seed_byte_identical(self, tmp_path):
        p1, p2 = tmp_path / "a.sard", tmp_path / "b.sard"
        sard.write_dataset(p1, small_dataset(9), task="shape")
        sard.write_dataset(p2, small_dataset(9), task="shape")
        assert p1.read_bytes() == p2.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        p1, p2 = tmp_path / "a.sard", tmp_path / "b.sard"
        sard.write_dataset(p1, small_dataset(1), task="shape")
        sard.write_dataset(p2, small_dataset(2), task="shape")
        assert p1.read_bytes() != p2.read_bytes()

    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "busted.sard"
        sard.write_dataset(path, small_dataset(), task="shape")
        path.write_bytes(path.read_bytes()[:-100])
        with pytest.raises(sard.SardFormatError):
            sard.read_dataset(path)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "not.sard"
        path.write_bytes(b"NOPE" + bytes(64))
        with pytest.raises(sard.SardFormatError):
            sard.read_dataset(path)

    def test_checkpoint_is_not_a_dataset(self, tmp_path):
        path = tmp_path / "model.sard"
        params = init_params(16, 2, 1, 5, rng=np.random.default_rng(0))
        sard.write_checkpoint(path, params)
        with pytest.raises(sard.SardFormatError):
            sard.read_dataset(path)


class TestCheckpointContainer:
    def make_params(self, dtype=np.float64):
        rng = np.random.default_rng(4)
        params = init_params(20, 3, n_filters=2, filter_size=5, rng=rng, dtype=dtype)
        params.bn_batches = 11
        params.bn_mean = rng.normal(size=2).astype(dtype)
        params.bn_var = np.abs(rng.normal(size=2)).astype(dtype)
        return params

    @pytest.mark.parametrize("dtype", [np.float64, np.float32])
    def test_bit_exact_round_trip(self, tmp_path, dtype):
        params = self.make_params(dtype)
        path = tmp_path / "model.sard"
        sard.write_checkpoint(path, params)
        back = sard.read_checkpoint(path)
        for key in (
            "conv_w", "conv_b", "bn_scale", "bn_offset",
            "bn_mean", "bn_var", "fc_w", "fc_b",
        ):
            a, b = getattr(params, key), getattr(back, key)
            assert a.dtype == b.dtype
            assert a.tobytes() == b.tobytes()
        assert back.input_size == 20 and back.filter_size == 5
        assert back.n_filters == 2 and back.n_classes == 3
        assert back.bn_batches == 11
        assert back.bn_eps == params.bn_eps
        assert back.normalize_inputs == params.normalize_inputs

    def test_rewrite_is_byte_identical(self, tmp_path):
        params = self.make_params()
        p1, p2 = tmp_path / "a.sard", tmp_path / "b.sard"
        sard.write_checkpoint(p1, params)
        sard.write_checkpoint(p2, sard.read_checkpoint(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_dataset_is_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "data.sard"
        sard.write_dataset(path, small_dataset(), task="shape")
        with pytest.raises(sard.SardFormatError):
            sard.read_checkpoint(path)


class TestPgm:
    def test_8bit_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        values = np.round(rng.uniform(size=(9, 9)) * 255) / 255
        path = tmp_path / "img.pgm"
        write_pgm(path, values, maxval=255)
        back = read_pgm(path)
        assert back.shape == (9, 9)
        assert np.abs(back - values).max() < 1e-12

    def test_16bit_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        values = np.round(rng.uniform(size=(5, 7)) * 65535) / 65535
        path = tmp_path / "img16.pgm"
        write_pgm(path, values, maxval=65535)
        back = read_pgm(path)
        assert back.shape == (5, 7)
        assert np.abs(back - values).max() < 1e-12

    def test_all_black_loads_as_zeros(self, tmp_path):
        path = tmp_path / "black.pgm"
        write_pgm(path, np.zeros((4, 4)))
        assert not read_pgm(path).any()

    def test_comments_in_header(self, tmp_path):
        path = tmp_path / "c.pgm"
        raster = bytes(range(6))
        path.write_bytes(b"P5\n# a comment\n3 2\n# another\n255\n" + raster)
        img = read_pgm(path)
        assert img.shape == (2, 3)
        assert img[1, 2] == pytest.approx(5 / 255)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "p2.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
        with pytest.raises(PgmError) as err:
            read_pgm(path)
        assert "p2.pgm" in str(err.value)

    def test_truncated_raster_rejected(self, tmp_path):
        path = tmp_path / "short.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
        with pytest.raises(PgmError) as err:
            read_pgm(path)
        assert "short.pgm" in str(err.value)
