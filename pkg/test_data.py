#!/usr/bin/env python3
"""
Tests for dataset ingestion, synthetic generators, splitting and minibatches
"""

import gzip
import os
import sys
import tempfile

import numpy as np
import pytest
from scipy import sparse

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from data import (Dataset, draw_minibatch, gen_synthetic_sparse, gen_synthetic_svm2d, label_probability,
                  read_libsvm, train_test_split, write_libsvm)
from errors import ContractViolationError, DataFormatError


@pytest.fixture
def tmp_dir():
    with tempfile.TemporaryDirectory() as tmp:
        yield tmp


def write_text(directory, name, text):
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    return path


class TestReadLibsvm:
    def test_basic_file(self, tmp_dir):
        path = write_text(tmp_dir, 'small.txt', "+1 1:0.5 3:2\n-1 2:1.5\n")
        data = read_libsvm(path)
        assert (data.n, data.d) == (2, 3)
        np.testing.assert_array_equal(data.y, [1.0, -1.0])
        np.testing.assert_array_equal(data.dense(), [[0.5, 0.0, 2.0], [0.0, 1.5, 0.0]])

    def test_zero_labels_map_to_negative(self, tmp_dir):
        path = write_text(tmp_dir, 'zero.txt', "0 1:1\n1 1:2\n")
        np.testing.assert_array_equal(read_libsvm(path).y, [-1.0, 1.0])

    def test_expected_dimension_pads(self, tmp_dir):
        path = write_text(tmp_dir, 'pad.txt', "1 1:1\n")
        assert read_libsvm(path, expected_dim=5).d == 5

    def test_index_beyond_expected_dimension(self, tmp_dir):
        path = write_text(tmp_dir, 'wide.txt', "1 7:1\n")
        with pytest.raises((DataFormatError, ValueError)):
            read_libsvm(path, expected_dim=5)

    def test_unsorted_indices(self, tmp_dir):
        path = write_text(tmp_dir, 'unsorted.txt', "1 3:3 1:1\n-1 2:2\n")
        np.testing.assert_array_equal(read_libsvm(path).dense(), [[1.0, 0.0, 3.0], [0.0, 2.0, 0.0]])

    def test_malformed_token_reports_line(self, tmp_dir):
        path = write_text(tmp_dir, 'bad.txt', "1 1:1\n-1 2:2\n1 3-4\n")
        with pytest.raises(DataFormatError) as excinfo:
            read_libsvm(path)
        assert excinfo.value.line_number == 3
        assert "line 3" in str(excinfo.value)

    def test_duplicate_index(self, tmp_dir):
        path = write_text(tmp_dir, 'dup.txt', "1 2:1 2:3\n")
        with pytest.raises(DataFormatError):
            read_libsvm(path)

    def test_unknown_label(self, tmp_dir):
        path = write_text(tmp_dir, 'label.txt', "1 1:1\n2 1:1\n")
        with pytest.raises(DataFormatError) as excinfo:
            read_libsvm(path)
        assert excinfo.value.line_number == 2

    def test_missing_file(self, tmp_dir):
        with pytest.raises(OSError):
            read_libsvm(os.path.join(tmp_dir, 'absent.txt'))

    def test_gzip_input(self, tmp_dir):
        path = os.path.join(tmp_dir, 'small.txt.gz')
        with gzip.open(path, 'wt', encoding='utf-8') as f:
            f.write("1 1:1 2:1\n-1 2:4\n")
        np.testing.assert_array_equal(read_libsvm(path).dense(), [[1.0, 1.0], [0.0, 4.0]])

    def test_write_then_read_is_exact(self, tmp_dir):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(6, 4)) * (rng.uniform(size=(6, 4)) < 0.5)
        data = Dataset(X, rng.choice([-1.0, 1.0], size=6))
        path = os.path.join(tmp_dir, 'roundtrip.txt')
        write_libsvm(data, path)
        back = read_libsvm(path, expected_dim=4)
        np.testing.assert_array_equal(back.dense(), data.dense())
        np.testing.assert_array_equal(back.y, data.y)


class TestDataset:
    def test_arrays_are_read_only(self):
        data = Dataset(np.ones((3, 2)), np.ones(3))
        with pytest.raises(ValueError):
            data.X[0, 0] = 5.0
        with pytest.raises(ValueError):
            data.y[0] = -1.0

    def test_caller_arrays_stay_writable(self):
        X = sparse.random(10, 500, density=0.5, random_state=0, format='csr')
        dense = np.ones((3, 2))
        labels = np.ones(10)
        data = Dataset(X, labels)
        Dataset(dense, np.ones(3))
        assert X.data.flags.writeable and X.indices.flags.writeable and X.indptr.flags.writeable
        assert dense.flags.writeable and labels.flags.writeable
        before = data.content_hash()
        X.data[:] = 7.0
        assert data.content_hash() == before

    def test_sparse_storage_for_wide_data(self):
        X = sparse.random(10, 500, density=0.5, random_state=0, format='csr')
        assert Dataset(X, np.ones(10)).is_sparse

    def test_sparse_storage_for_mostly_empty_data(self):
        X = np.zeros((10, 5))
        X[0, 0] = 1.0
        assert Dataset(X, np.ones(10)).is_sparse

    def test_dense_storage_for_small_dense_data(self):
        assert not Dataset(sparse.csr_matrix(np.ones((4, 3))), np.ones(4)).is_sparse

    def test_rejects_bad_labels(self):
        with pytest.raises(ContractViolationError):
            Dataset(np.ones((2, 2)), [1.0, 0.5])

    def test_rejects_row_mismatch(self):
        with pytest.raises(ContractViolationError):
            Dataset(np.ones((3, 2)), [1.0, -1.0])

    def test_subset_and_empty(self):
        data = Dataset(np.arange(8.0).reshape(4, 2) + 1.0, [1, -1, 1, -1])
        sub = data.subset([3, 1])
        np.testing.assert_array_equal(sub.dense(), [[7.0, 8.0], [3.0, 4.0]])
        np.testing.assert_array_equal(sub.y, [-1.0, -1.0])
        empty = Dataset.empty(2)
        assert (empty.n, empty.d) == (0, 2)

    def test_content_hash(self):
        X = np.arange(6.0).reshape(3, 2) + 1.0
        a = Dataset(X, [1, -1, 1])
        assert a.content_hash() == Dataset(X.copy(), [1, -1, 1]).content_hash()
        assert a.content_hash() != Dataset(X, [1, 1, 1]).content_hash()


class TestMinibatch:
    def test_full_batch_consumes_no_randomness(self):
        data = Dataset(np.ones((5, 2)), np.ones(5))
        rng = np.random.default_rng(3)
        batch = draw_minibatch(data, 5, rng)
        assert batch.scale == 1.0
        assert rng.uniform() == np.random.default_rng(3).uniform()

    def test_draw_without_replacement(self):
        data = Dataset(np.ones((20, 2)), np.ones(20))
        batch = draw_minibatch(data, 7, np.random.default_rng(0))
        assert len(set(batch.indices.tolist())) == 7
        assert batch.scale == pytest.approx(20 / 7)

    @pytest.mark.parametrize("size", [0, 21])
    def test_size_out_of_range(self, size):
        data = Dataset(np.ones((20, 2)), np.ones(20))
        with pytest.raises(ContractViolationError):
            draw_minibatch(data, size, np.random.default_rng(0))

    def test_every_row_is_drawn_equally_often(self):
        data = Dataset(np.ones((10, 1)), np.ones(10))
        rng = np.random.default_rng(1)
        counts = np.zeros(10)
        for _ in range(5000):
            counts[draw_minibatch(data, 3, rng).indices] += 1
        np.testing.assert_allclose(counts / 5000, 0.3, atol=0.03)


class TestSplitAndSynthetic:
    def test_split_is_seeded_and_disjoint(self):
        X = np.arange(40.0).reshape(20, 2) + 1.0
        data = Dataset(X, np.ones(20))
        train, test = train_test_split(data, 0.25, seed=5)
        again_train, _ = train_test_split(data, 0.25, seed=5)
        assert (train.n, test.n) == (15, 5)
        np.testing.assert_array_equal(train.dense(), again_train.dense())
        train_rows = {tuple(r) for r in train.dense()}
        assert not train_rows & {tuple(r) for r in test.dense()}

    def test_split_fraction_range(self):
        with pytest.raises(ContractViolationError):
            train_test_split(Dataset(np.ones((4, 1)), np.ones(4)), 1.0)

    def test_label_probability_symmetry(self):
        rng = np.random.default_rng(0)
        eta, X = rng.normal(size=2), rng.normal(size=(10, 2))
        np.testing.assert_allclose(label_probability(eta, X) + label_probability(-eta, X), 1.0)
        np.testing.assert_allclose(label_probability(np.zeros(2), X), 0.5)

    def test_svm2d_generator(self):
        data, eta = gen_synthetic_svm2d(500, seed=1)
        again, eta_again = gen_synthetic_svm2d(500, seed=1)
        assert (data.n, data.d) == (500, 2)
        np.testing.assert_array_equal(eta, eta_again)
        np.testing.assert_array_equal(data.y, again.y)
        assert np.all((data.dense() >= 0.0) & (data.dense() <= 1.0))

    def test_sparse_generator(self):
        data, eta = gen_synthetic_sparse(200, 30, 4, seed=2)
        assert np.count_nonzero(eta) == 4
        assert set(np.abs(eta[eta != 0])) == {1.0}
        assert (data.n, data.d) == (200, 30)

    def test_sparse_generator_support_range(self):
        with pytest.raises(ContractViolationError):
            gen_synthetic_sparse(10, 3, 4)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
