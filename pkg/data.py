"""
Dataset ingestion (libsvm text format), synthetic generators, splitting and minibatches
"""

import gzip
import hashlib
import logging
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.special import expit
from sklearn.datasets import load_svmlight_file

import config
from errors import ContractViolationError, DataFormatError
from potential import Minibatch

logger = logging.getLogger(__name__)

_LABEL_MAP = {-1.0: -1.0, 0.0: -1.0, 1.0: 1.0}


def _freeze(X):
    if sparse.issparse(X):
        for arr in (X.data, X.indices, X.indptr):
            arr.flags.writeable = False
    else:
        X.flags.writeable = False
    return X


def _choose_storage(X, d: int):
    """Sparse rows for wide or mostly-empty data, dense otherwise"""
    n_rows = X.shape[0]
    nnz = X.nnz if sparse.issparse(X) else int(np.count_nonzero(X))
    density = nnz / float(n_rows * d) if n_rows and d else 1.0
    if d > config.SPARSE_DIM_THRESHOLD or density < config.SPARSE_DENSITY_THRESHOLD:
        return sparse.csr_matrix(X, dtype=float, copy=True)
    if sparse.issparse(X):
        return np.asarray(X.toarray(), dtype=float)
    return np.array(X, dtype=float)


class Dataset:
    """Immutable feature matrix with +/-1 labels"""

    def __init__(self, X, y, d: Optional[int] = None):
        y = np.array(y, dtype=float).ravel()
        if sparse.issparse(X):
            X = X.tocsr()
        else:
            X = np.asarray(X, dtype=float)
            if X.ndim == 1:
                X = X.reshape(len(y), -1) if len(y) else X.reshape(0, d or 0)
        if X.shape[0] != y.size:
            raise ContractViolationError(f"{X.shape[0]} feature rows but {y.size} labels")
        bad = np.flatnonzero((y != 1.0) & (y != -1.0))
        if bad.size:
            raise ContractViolationError(f"Label {y[bad[0]]} at row {bad[0]} is not +1 or -1")
        d = X.shape[1] if d is None else int(d)
        if X.shape[1] != d:
            if sparse.issparse(X) and X.shape[1] < d:
                X = sparse.csr_matrix((X.data, X.indices, X.indptr), shape=(X.shape[0], d))
            else:
                raise ContractViolationError(f"Feature matrix has {X.shape[1]} columns, expected {d}")
        self._X = _freeze(_choose_storage(X, d))
        y.flags.writeable = False
        self._y = y
        self._d = d

    @property
    def X(self):
        return self._X

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def n(self) -> int:
        return self._y.size

    @property
    def d(self) -> int:
        return self._d

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self._X)

    def __len__(self):
        return self.n

    def rows(self, indices) -> Tuple[object, np.ndarray]:
        """Feature rows and labels for the given indices"""
        indices = np.asarray(indices)
        return self._X[indices], self._y[indices]

    def subset(self, indices) -> "Dataset":
        X, y = self.rows(indices)
        return Dataset(X, y, d=self._d)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self._X.toarray()
        return np.array(self._X)

    def content_hash(self) -> str:
        """sha256 over the labels and the feature values"""
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self._y).tobytes())
        digest.update(str(self._d).encode())
        if self.is_sparse:
            for arr in (self._X.data, self._X.indices, self._X.indptr):
                digest.update(np.ascontiguousarray(arr).tobytes())
        else:
            digest.update(np.ascontiguousarray(self._X).tobytes())
        return digest.hexdigest()

    @classmethod
    def empty(cls, d: int) -> "Dataset":
        return cls(np.zeros((0, d)), np.zeros(0), d=d)


def _open_text(path: str):
    if path.endswith('.gz'):
        return gzip.open(path, 'rt', encoding='utf-8')
    return open(path, 'r', encoding='utf-8')


def _map_label(token: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(f"Label '{token}' is not numeric", line_number)
    if value not in _LABEL_MAP:
        raise DataFormatError(f"Unknown label value {token}", line_number)
    return _LABEL_MAP[value]


def _parse_libsvm_lines(path: str, expected_dim: Optional[int]) -> Dataset:
    """Line-by-line parser; tolerates unsorted indices, reports the offending line"""
    labels, rows, cols, vals = [], [], [], []
    max_index = 0
    with _open_text(path) as f:
        for line_number, raw in enumerate(f, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(_map_label(tokens[0], line_number))
            row = len(labels) - 1
            seen = set()
            for token in tokens[1:]:
                if token.startswith('qid:'):
                    continue
                idx_text, sep, val_text = token.partition(':')
                if not sep:
                    raise DataFormatError(f"Feature token '{token}' is not idx:val", line_number)
                try:
                    idx = int(idx_text)
                    val = float(val_text)
                except ValueError:
                    raise DataFormatError(f"Feature token '{token}' is not idx:val", line_number)
                if idx < 1:
                    raise DataFormatError(f"Feature index {idx} is not 1-based", line_number)
                if idx in seen:
                    raise DataFormatError(f"Duplicate feature index {idx}", line_number)
                seen.add(idx)
                rows.append(row)
                cols.append(idx - 1)
                vals.append(val)
                max_index = max(max_index, idx)
    d = _resolve_dim(max_index, expected_dim)
    X = sparse.csr_matrix((vals, (rows, cols)), shape=(len(labels), d), dtype=float)
    return Dataset(X, np.array(labels), d=d)


def _resolve_dim(max_index: int, expected_dim: Optional[int]) -> int:
    if expected_dim is None:
        return max_index
    if max_index > expected_dim:
        raise DataFormatError(f"Feature index {max_index} exceeds expected dimension {expected_dim}")
    return int(expected_dim)


def _check_labels(path: str, y: np.ndarray) -> np.ndarray:
    known = np.isin(y, list(_LABEL_MAP))
    if not np.all(known):
        # rows skip blanks and comments, so rescan to report the real line
        return _parse_libsvm_lines(path, None).y
    return np.where(y > 0, 1.0, -1.0)


def read_libsvm(path: str, expected_dim: Optional[int] = None) -> Dataset:
    """Read a libsvm/svmlight text file (1-based indices, gzip transparent)"""
    logger.info(f"Reading libsvm data from {path}")
    try:
        X, y = load_svmlight_file(path, n_features=expected_dim, zero_based=False, dtype=np.float64)
    except FileNotFoundError:
        raise
    except ValueError as e:
        logger.debug(f"Fast libsvm reader rejected {path} ({e}); falling back to line parser")
        return _parse_libsvm_lines(path, expected_dim)
    y = _check_labels(path, y)
    d = X.shape[1] if expected_dim is None else int(expected_dim)
    dataset = Dataset(X, y, d=d)
    logger.info(f"Loaded {dataset.n} rows with {dataset.d} features")
    return dataset


def write_libsvm(dataset: Dataset, path: str) -> None:
    """Write 1-based libsvm text with repr precision so values round-trip exactly"""
    X = sparse.csr_matrix(dataset.X)
    with open(path, 'w', encoding='utf-8') as f:
        for i in range(dataset.n):
            start, end = X.indptr[i], X.indptr[i + 1]
            order = np.argsort(X.indices[start:end])
            cols = X.indices[start:end][order]
            values = X.data[start:end][order]
            features = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(cols, values) if v != 0.0)
            label = "1" if dataset.y[i] > 0 else "-1"
            f.write(f"{label} {features}".rstrip() + "\n")


def label_probability(eta, X, c: float = config.DEFAULT_C) -> np.ndarray:
    """Bernoulli parameter P(y=1) / (P(y=1) + P(y=-1)) under the unnormalized hinge likelihood"""
    margin = np.atleast_2d(np.asarray(X, dtype=float)) @ np.asarray(eta, dtype=float)
    log_pos = -c * np.maximum(0.0, 1.0 - margin)
    log_neg = -c * np.maximum(0.0, 1.0 + margin)
    return expit(log_pos - log_neg)


def gen_synthetic_svm2d(n: int = 1000, prior_precision: float = config.SYNTHETIC_PRIOR_PRECISION,
                        c: float = config.DEFAULT_C, seed: int = 0) -> Tuple[Dataset, np.ndarray]:
    """Uniform [0,1]^2 inputs, eta ~ N(0, I / prior_precision), hinge-Bernoulli labels"""
    if n < 1:
        raise ContractViolationError("Synthetic dataset needs at least one row")
    rng = np.random.default_rng(seed)
    eta = rng.normal(0.0, 1.0 / np.sqrt(prior_precision), size=2)
    X = rng.uniform(0.0, 1.0, size=(n, 2))
    alpha = label_probability(eta, X, c)
    y = np.where(rng.uniform(size=n) < alpha, 1.0, -1.0)
    logger.info(f"Generated {n} synthetic 2-D SVM rows, true eta = {eta}")
    return Dataset(X, y), eta


def gen_synthetic_sparse(n: int, d: int, support_size: int, seed: int = 0) -> Tuple[Dataset, np.ndarray]:
    """Gaussian inputs with a +/-1 weight vector on a random support, logistic labels"""
    if support_size > d or support_size < 0:
        raise ContractViolationError(f"Support size {support_size} must lie in [0, {d}]")
    rng = np.random.default_rng(seed)
    eta = np.zeros(d)
    support = rng.choice(d, size=support_size, replace=False)
    eta[support] = rng.choice([-1.0, 1.0], size=support_size)
    X = rng.normal(size=(n, d))
    y = np.where(rng.uniform(size=n) < expit(X @ eta), 1.0, -1.0)
    logger.info(f"Generated {n}x{d} sparse logistic rows with support {sorted(support.tolist())}")
    return Dataset(X, y), eta


def draw_minibatch(dataset: Dataset, batch_size: int, rng: np.random.Generator) -> Minibatch:
    """Uniform draw without replacement; the full batch consumes no randomness"""
    n = dataset.n
    if batch_size < 1 or batch_size > n:
        raise ContractViolationError(f"Batch size {batch_size} must lie in [1, {n}]")
    if batch_size == n:
        return Minibatch.full(n)
    indices = rng.choice(n, size=batch_size, replace=False)
    return Minibatch(indices=indices, scale=n / batch_size)


def train_test_split(dataset: Dataset, test_fraction: float = 0.2, seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Seeded shuffle split"""
    if not 0.0 < test_fraction < 1.0:
        raise ContractViolationError(f"Test fraction {test_fraction} must lie in (0, 1)")
    order = np.random.default_rng(seed).permutation(dataset.n)
    n_test = max(1, int(round(test_fraction * dataset.n)))
    return dataset.subset(np.sort(order[n_test:])), dataset.subset(np.sort(order[:n_test]))
