import numpy as np
import pytest

from conftest import build_texture_root, make_texture
from sarbench import sard
from sarbench.datasets import LabeledDataset, Sample, load_ice_dataset
from sarbench.pgm import write_pgm


@pytest.fixture()
def small_root(tmp_path):
    return build_texture_root(tmp_path / "ice", n_per_class=4, size=16, seed=0)


class TestIceLoader:
    def test_load_counts_and_split(self, small_root):
        ds = load_ice_dataset(small_root, n_per_class=4, seed=0)
        assert len(ds.samples) == 32
        assert ds.class_count == 8
        labels = np.array([s.label for s in ds.samples])
        assert (np.bincount(labels, minlength=9)[1:] == 4).all()
        assert sum(ds.split_sizes()) == 32

    def test_values_in_unit_interval(self, small_root):
        ds = load_ice_dataset(small_root, n_per_class=2, seed=0)
        for s in ds.samples:
            assert s.input.min() >= 0.0 and s.input.max() <= 1.0
            assert s.input.shape == (16, 16)

    def test_deterministic_subsampling(self, small_root):
        a = load_ice_dataset(small_root, n_per_class=2, seed=3)
        b = load_ice_dataset(small_root, n_per_class=2, seed=3)
        assert [s.provenance["file"] for s in a.samples] == [
            s.provenance["file"] for s in b.samples
        ]

    def test_missing_root_message_mentions_supply(self, tmp_path):
        with pytest.raises(FileNotFoundError) as err:
            load_ice_dataset(tmp_path / "nowhere")
        assert "supply" in str(err.value)

    def test_missing_class_directory_named(self, small_root):
        (small_root / "5" / "img_000.pgm").unlink()
        for p in (small_root / "5").iterdir():
            p.unlink()
        (small_root / "5").rmdir()
        with pytest.raises(FileNotFoundError) as err:
            load_ice_dataset(small_root, n_per_class=2)
        assert str(small_root / "5") in str(err.value)

    def test_undersized_class_reported(self, small_root):
        with pytest.raises(ValueError) as err:
            load_ice_dataset(small_root, n_per_class=100)
        assert "holds 4 images" in str(err.value)

    def test_malformed_image_names_file(self, small_root):
        bad = small_root / "2" / "img_001.pgm"
        bad.write_bytes(b"P5\n16 16\n255\n" + bytes(10))
        with pytest.raises(ValueError) as err:
            load_ice_dataset(small_root, n_per_class=4)
        assert "img_001.pgm" in str(err.value)

    def test_inconsistent_size_names_file(self, small_root):
        odd = small_root / "3" / "img_002.pgm"
        write_pgm(odd, np.zeros((8, 8)))
        with pytest.raises(ValueError) as err:
            load_ice_dataset(small_root, n_per_class=4)
        assert "img_002.pgm" in str(err.value)

    def test_rectangular_image_rejected(self, small_root):
        odd = small_root / "1" / "img_000.pgm"
        write_pgm(odd, np.zeros((16, 12)))
        with pytest.raises(ValueError) as err:
            load_ice_dataset(small_root, n_per_class=4)
        assert "square" in str(err.value)

    def test_all_black_image_loads_as_zeros(self, tmp_path):
        root = build_texture_root(tmp_path / "ice", n_per_class=1, size=8, seed=0)
        black = root / "4" / "img_000.pgm"
        write_pgm(black, np.zeros((8, 8)))
        ds = load_ice_dataset(root, n_per_class=1, seed=0)
        sample = next(s for s in ds.samples if s.label == 4)
        assert not sample.input.any()

    def test_sard_container_in_class_directory(self, tmp_path):
        # class 7 holds one graymap plus a container; the other classes
        # hold two graymaps, so n_per_class=2 must reach into the container
        root = build_texture_root(tmp_path / "ice", n_per_class=2, size=8, seed=1)
        (root / "7" / "img_001.pgm").unlink()
        rng = np.random.default_rng(5)
        extra = [Sample(rng.uniform(0, 1, (8, 8)), 1, {}) for _ in range(3)]
        packed = LabeledDataset(extra, 1, np.arange(3), [], [])
        sard.write_dataset(root / "7" / "extra.sard", packed, task="ice")
        ds = load_ice_dataset(root, n_per_class=2, seed=0)
        sevens = [s for s in ds.samples if s.label == 7]
        assert len(sevens) == 2
        assert any("extra.sard#" in s.provenance["file"] for s in sevens)

    def test_pgm_graymap_round_trip_through_loader(self, tmp_path):
        # directory-contract round trip: what is written is what loads
        root = tmp_path / "ice"
        rng = np.random.default_rng(8)
        expected = {}
        for label in range(1, 9):
            (root / str(label)).mkdir(parents=True)
            img = np.round(rng.uniform(size=(8, 8)) * 255) / 255
            write_pgm(root / str(label) / "only.pgm", img)
            expected[label] = img
        ds = load_ice_dataset(root, n_per_class=1, seed=0)
        for s in ds.samples:
            assert np.abs(s.input - expected[s.label]).max() < 1e-12
