import gzip

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from quadls.dataio import (
    BadBatchSizeError,
    BadMagicError,
    LengthMismatchError,
    MiniBatchSampler,
    ParseError,
    WrongModeError,
    load_cifar10,
    load_mnist,
    load_wdbc,
    one_hot,
    parse_wdbc,
    read_cifar_batch,
    read_idx_images,
    read_idx_labels,
)

from synthdata import write_cifar_batch, write_idx_images, write_idx_labels


def _tiny_wdbc(path, rows):
    path.write_text("\n".join(rows) + "\n")
    return path


def test_parse_wdbc_maps_diagnosis(tmp_path):
    row_m = "91544,M," + ",".join(str(float(v)) for v in range(30))
    row_b = "91545,B," + ",".join(str(float(v + 1)) for v in range(30))
    path = _tiny_wdbc(tmp_path / "wdbc.data", [row_m, row_b])
    features, labels = parse_wdbc(path)
    assert features.shape == (2, 30)
    np.testing.assert_array_equal(labels, [1.0, 0.0])
    assert features[0, 0] == 0.0 and features[1, 0] == 1.0


@pytest.mark.parametrize("row", [
    "1,M,1.0,2.0",                                # too few fields
    "1,X," + ",".join(["1.0"] * 30),              # bad diagnosis letter
    "1,M," + ",".join(["1.0"] * 29 + ["oops"]),   # non-numeric feature
])
def test_parse_wdbc_rejects_malformed_rows(tmp_path, row):
    path = _tiny_wdbc(tmp_path / "bad.data", [row])
    with pytest.raises(ParseError):
        parse_wdbc(path)


def test_parse_wdbc_rejects_empty_file(tmp_path):
    path = tmp_path / "empty.data"
    path.write_text("")
    with pytest.raises(ParseError):
        parse_wdbc(path)


def test_wdbc_corpus_shape_and_column_order(wdbc_path):
    features, labels = parse_wdbc(wdbc_path)
    assert features.shape == (569, 30)
    assert labels.sum() == 212  # malignant count
    # first row of the table starts 17.99, 10.38, 122.8, 1001
    np.testing.assert_allclose(features[0, :4], [17.99, 10.38, 122.8, 1001.0])


def test_load_wdbc_split_and_standardization(wdbc_path):
    data = load_wdbc(wdbc_path, seed=0)
    assert data.n_train == 400 and data.n_test == 169
    assert data.train_targets.shape == (400, 1)
    assert data.n_outputs == 1
    # standardized with train statistics only
    np.testing.assert_allclose(data.train_inputs.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(data.train_inputs.std(axis=0), 1.0, atol=1e-12)
    assert np.abs(data.test_inputs.mean(axis=0)).max() > 1e-4

    again = load_wdbc(wdbc_path, seed=0)
    np.testing.assert_array_equal(again.train_inputs, data.train_inputs)
    other = load_wdbc(wdbc_path, seed=1)
    assert not np.array_equal(other.train_inputs, data.train_inputs)


def test_load_wdbc_train_size_bounds(wdbc_path):
    with pytest.raises(ValueError):
        load_wdbc(wdbc_path, train_size=569)
    data = load_wdbc(wdbc_path, train_size=100)
    assert data.n_train == 100 and data.n_test == 469


def test_idx_images_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(5, 4, 3), dtype=np.uint8)
    path = tmp_path / "imgs"
    write_idx_images(path, images)
    out = read_idx_images(path)
    assert out.shape == (5, 12)
    np.testing.assert_allclose(out, images.reshape(5, 12) / 255.0)


def test_idx_reader_handles_gzip(tmp_path):
    images = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
    plain = tmp_path / "imgs"
    write_idx_images(plain, images)
    gz = tmp_path / "imgs.gz"
    gz.write_bytes(gzip.compress(plain.read_bytes()))
    np.testing.assert_array_equal(read_idx_images(gz), read_idx_images(plain))


def test_idx_bad_magic_and_truncation(tmp_path):
    images = np.zeros((2, 2, 2), dtype=np.uint8)
    path = tmp_path / "imgs"
    write_idx_images(path, images)
    blob = path.read_bytes()

    bad = tmp_path / "bad"
    bad.write_bytes(b"\x00\x00\x08\x01" + blob[4:])
    with pytest.raises(BadMagicError):
        read_idx_images(bad)

    short = tmp_path / "short"
    short.write_bytes(blob[:-3])
    with pytest.raises(ParseError):
        read_idx_images(short)

    labels = tmp_path / "labels"
    write_idx_labels(labels, np.arange(12, dtype=np.uint8) % 10)
    assert read_idx_labels(labels).tolist() == [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1]
    # a label file is long enough to parse the image header, magic then mismatches
    with pytest.raises(BadMagicError):
        read_idx_images(labels)


def _write_mnist_dir(root, n_train=8, n_test=4, rows=5, cols=5, mismatch=False):
    rng = np.random.default_rng(1)
    write_idx_images(root / "train-images-idx3-ubyte",
                     rng.integers(0, 256, size=(n_train, rows, cols), dtype=np.uint8))
    write_idx_labels(root / "train-labels-idx1-ubyte",
                     rng.integers(0, 10, size=n_train - (1 if mismatch else 0),
                                  dtype=np.uint8))
    write_idx_images(root / "t10k-images-idx3-ubyte",
                     rng.integers(0, 256, size=(n_test, rows, cols), dtype=np.uint8))
    write_idx_labels(root / "t10k-labels-idx1-ubyte",
                     rng.integers(0, 10, size=n_test, dtype=np.uint8))


def test_load_mnist_synthetic_dir(tmp_path):
    _write_mnist_dir(tmp_path)
    data = load_mnist(tmp_path)
    assert data.train_inputs.shape == (8, 25)
    assert data.train_targets.shape == (8, 10)
    assert data.test_inputs.shape == (4, 25)
    np.testing.assert_array_equal(data.train_targets.sum(axis=1), np.ones(8))
    assert data.train_inputs.min() >= 0.0 and data.train_inputs.max() <= 1.0


def test_load_mnist_count_mismatch(tmp_path):
    _write_mnist_dir(tmp_path, mismatch=True)
    with pytest.raises(LengthMismatchError):
        load_mnist(tmp_path)


def test_cifar_batch_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    labels = rng.integers(0, 10, size=7, dtype=np.uint8)
    pixels = rng.integers(0, 256, size=(7, 3072), dtype=np.uint8)
    path = tmp_path / "data_batch_1.bin"
    write_cifar_batch(path, labels, pixels)
    x, y = read_cifar_batch(path)
    assert x.shape == (7, 3072)
    np.testing.assert_array_equal(y, labels)
    np.testing.assert_allclose(x, pixels / 255.0)


def test_cifar_batch_rejects_bad_sizes_and_labels(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"\x00" * 100)
    with pytest.raises(ParseError):
        read_cifar_batch(bad)

    overlabel = tmp_path / "overlabel.bin"
    write_cifar_batch(overlabel, np.array([11], dtype=np.uint8),
                      np.zeros((1, 3072), dtype=np.uint8))
    with pytest.raises(ParseError):
        read_cifar_batch(overlabel)


def test_load_cifar10_concatenates_train_files(tmp_path):
    rng = np.random.default_rng(3)
    for name, n in (("data_batch_1.bin", 4), ("data_batch_2.bin", 3), ("test_batch.bin", 2)):
        write_cifar_batch(tmp_path / name,
                          rng.integers(0, 10, size=n, dtype=np.uint8),
                          rng.integers(0, 256, size=(n, 3072), dtype=np.uint8))
    data = load_cifar10(tmp_path, train_files=("data_batch_1", "data_batch_2"))
    assert data.train_inputs.shape == (7, 3072)
    assert data.train_targets.shape == (7, 10)
    assert data.test_inputs.shape == (2, 3072)

    default = load_cifar10(tmp_path)
    assert default.train_inputs.shape == (4, 3072)


def test_one_hot():
    np.testing.assert_array_equal(one_hot([0, 2], 3), [[1, 0, 0], [0, 0, 1]])
    with pytest.raises(ParseError):
        one_hot([3], 3)


def test_sampler_full_mode_returns_all_indices():
    s = MiniBatchSampler("full", n_total=6)
    np.testing.assert_array_equal(s.next_batch(), np.arange(6))
    np.testing.assert_array_equal(s.next_batch(), np.arange(6))
    with pytest.raises(WrongModeError):
        s.refresh_static()


def test_sampler_static_holds_batch_until_refresh():
    s = MiniBatchSampler("static", n_total=50, m=8, seed=4)
    first = s.next_batch()
    np.testing.assert_array_equal(s.next_batch(), first)
    np.testing.assert_array_equal(s.next_batch(), first)
    refreshed = s.refresh_static()
    np.testing.assert_array_equal(s.next_batch(), refreshed)
    assert not np.array_equal(refreshed, first)


def test_sampler_dynamic_draws_fresh_batches():
    s = MiniBatchSampler("dynamic", n_total=50, m=8, seed=4)
    a, b = s.next_batch(), s.next_batch()
    assert not np.array_equal(a, b)
    with pytest.raises(WrongModeError):
        s.refresh_static()


def test_sampler_determinism_under_seed():
    a = MiniBatchSampler("dynamic", n_total=100, m=10, seed=7)
    b = MiniBatchSampler("dynamic", n_total=100, m=10, seed=7)
    for _ in range(5):
        np.testing.assert_array_equal(a.next_batch(), b.next_batch())


def test_sampler_rejects_bad_batch_sizes():
    with pytest.raises(BadBatchSizeError):
        MiniBatchSampler("dynamic", n_total=10, m=0)
    with pytest.raises(BadBatchSizeError):
        MiniBatchSampler("static", n_total=10, m=11)
    with pytest.raises(BadBatchSizeError):
        MiniBatchSampler("dynamic", n_total=10)
    with pytest.raises(ValueError):
        MiniBatchSampler("sliding", n_total=10, m=2)


def test_sampler_overlap_matches_subsampling_rate():
    # expected overlap of two independent 10-of-400 draws is 10*10/400 = 0.25
    s = MiniBatchSampler("dynamic", n_total=400, m=10, seed=11)
    overlaps = []
    prev = s.next_batch()
    for _ in range(200):
        cur = s.next_batch()
        overlaps.append(len(np.intersect1d(prev, cur)))
        prev = cur
    mean = np.mean(overlaps)
    assert 0.1 < mean < 0.45


@seed(20260816)
@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(["static", "dynamic", "full"]),
    st.integers(min_value=1, max_value=200),
    st.integers(min_value=0, max_value=2 ** 31 - 1),
    st.data(),
)
def test_sampler_batches_are_sorted_unique_in_range(mode, n_total, sampler_seed, data):
    m = None
    if mode != "full":
        m = data.draw(st.integers(min_value=1, max_value=n_total))
    s = MiniBatchSampler(mode, n_total=n_total, m=m, seed=sampler_seed)
    for _ in range(3):
        batch = s.next_batch()
        assert batch.shape == (s.m,)
        assert np.all(np.diff(batch) > 0) or batch.size == 1
        assert batch.min() >= 0 and batch.max() < n_total
