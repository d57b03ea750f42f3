"""Gradient-boosted decision trees with a multiclass softmax objective.

Per boosting round one regression tree is grown for each class on the
class-weighted softmax gradients ``p - 1{y=c}`` and hessians ``p(1-p)``.
Splits are exact greedy over all stored column values; leaves take the
Newton step ``-G / (H + lambda)``, shrunk by the learning rate.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .corpus import AttackClass
from .errors import ShapeMismatch, SchemaMismatch, SingleClassInput
from .features import HANDCRAFTED_SCHEMA, FeaturePipeline, FeatureVector

log = logging.getLogger(__name__)

FORMAT_VERSION = (1, 0)
_HESS_FLOOR = 1e-16


@dataclass(frozen=True)
class TrainConfig:
    max_depth: int = 6
    learning_rate: float = 0.3
    max_rounds: int = 200
    early_stopping_patience: int = 10
    min_samples_leaf: int = 5
    min_gain: float = 1e-6
    validation_fraction: float = 0.1
    seed: int = 0
    reg_lambda: float = 1.0

    def __post_init__(self):
        if self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("max_depth and min_samples_leaf must be positive")
        if self.learning_rate <= 0 or self.reg_lambda < 0 or self.min_gain < 0:
            raise ValueError("learning_rate must be positive; reg_lambda and min_gain non-negative")
        if self.max_rounds < 0 or self.early_stopping_patience < 0:
            raise ValueError("max_rounds and early_stopping_patience must be non-negative")
        if not 0.0 < self.validation_fraction <= 0.5:
            raise ValueError("validation_fraction must be in (0, 0.5]")


@dataclass(frozen=True)
class Tree:
    """Flat binary tree. Leaves have ``feature == -1`` and no children."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.feature)

    @property
    def used_features(self) -> set[int]:
        return set(int(f) for f in self.feature if f >= 0)

    def __call__(self, x: np.ndarray) -> float:
        nd = 0
        while self.feature[nd] >= 0:
            nd = self.left[nd] if x[self.feature[nd]] < self.threshold[nd] else self.right[nd]
        return float(self.value[nd])


@dataclass
class RoundLog:
    round: int
    train_loss: float
    valid_loss: float | None


@dataclass
class TrainLog:
    rounds: list[RoundLog] = field(default_factory=list)
    best_round: int = 0
    stopped_early: bool = False
    n_train: int = 0
    n_valid: int = 0

    @property
    def train_losses(self) -> list[float]:
        return [r.train_loss for r in self.rounds]

    def to_dict(self) -> dict:
        return {
            "best_round": self.best_round,
            "stopped_early": self.stopped_early,
            "n_train": self.n_train,
            "n_valid": self.n_valid,
            "rounds": [asdict(r) for r in self.rounds],
        }


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def weighted_log_loss(scores: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    m = scores.max(axis=1, keepdims=True)
    lse = (m + np.log(np.exp(scores - m).sum(axis=1, keepdims=True)))[:, 0]
    nll = lse - scores[np.arange(len(y)), y]
    return float(np.dot(w, nll) / w.sum())


def softmax_gradients(scores: np.ndarray, y: np.ndarray, w: np.ndarray):
    p = softmax(scores)
    onehot = np.zeros_like(p)
    onehot[np.arange(len(y)), y] = 1.0
    g = (p - onehot) * w[:, None]
    h = np.maximum(p * (1.0 - p), _HESS_FLOOR) * w[:, None]
    return g, h


def _check_tree(t: Tree, n_features: int) -> None:
    """Structural checks that keep the unchecked prediction kernels in bounds."""
    n = len(t)
    if n == 0 or not all(len(a) == n for a in (t.threshold, t.left, t.right, t.value)):
        raise ValueError("tree arrays must be non-empty and of equal length")
    inner = np.flatnonzero(t.feature >= 0)
    if np.any(t.feature[inner] >= n_features):
        raise ValueError("tree reads a feature beyond the model width")
    left, right = t.left[inner], t.right[inner]
    # children sit after their parent (so routing terminates) and right = left + 1
    if np.any(left <= inner) or np.any(right != left + 1) or np.any(right >= n):
        raise ValueError("malformed tree node links")


class GbdtModel:
    """A trained ensemble plus the featurizer it was trained with."""

    def __init__(self, classes, trees, base_score, learning_rate, n_features,
                 vectorizer=None, feature_schema=HANDCRAFTED_SCHEMA, config=None,
                 format_version=FORMAT_VERSION):
        self.classes: tuple[AttackClass, ...] = tuple(AttackClass.parse(c) for c in classes)
        self.trees: list[Tree] = list(trees)
        self.base_score = np.asarray(base_score, dtype=np.float64)
        self.learning_rate = float(learning_rate)
        self.n_features = int(n_features)
        self.vectorizer = vectorizer
        self.feature_schema = tuple(feature_schema)
        self.config = config
        self.format_version = tuple(format_version)
        if len(self.trees) % max(len(self.classes), 1):
            raise ValueError("tree count must be a multiple of the class count")
        self._pack()

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def completed_rounds(self) -> int:
        return len(self.trees) // self.n_classes

    @property
    def pipeline(self) -> FeaturePipeline | None:
        return None if self.vectorizer is None else FeaturePipeline(self.vectorizer)

    @property
    def used_features(self) -> set[int]:
        out: set[int] = set()
        for t in self.trees:
            out |= t.used_features
        return out

    def _pack(self):
        sizes = [len(t) for t in self.trees]
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        for t in self.trees:
            _check_tree(t, self.n_features)
        if self.trees:
            feat = np.concatenate([t.feature for t in self.trees]).astype(np.int32)
            left = np.concatenate([t.left + o for t, o in zip(self.trees, offsets)]).astype(np.int32)
            right = np.concatenate([t.right + o for t, o in zip(self.trees, offsets)]).astype(np.int32)
            thr = np.concatenate([t.threshold for t in self.trees])
            val = np.concatenate([t.value for t in self.trees])
        else:
            feat = left = right = np.zeros(0, dtype=np.int32)
            thr = val = np.zeros(0)
        self._packed = (feat, thr, left, right, val, offsets[:-1].astype(np.int32))

    # -- scoring ---------------------------------------------------------

    def _as_matrix(self, X):
        if isinstance(X, FeatureVector):
            X = X.to_dense()[None, :]
        elif isinstance(X, (list, tuple)) and X and isinstance(X[0], FeatureVector):
            X = np.vstack([v.to_dense() for v in X])
        if sp.issparse(X):
            X = sp.csr_matrix(X, dtype=np.float64)
            X.sort_indices()
        else:
            X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def raw_scores(self, X) -> np.ndarray:
        X = self._as_matrix(X)
        feat, thr, left, right, val, roots = self._packed
        if sp.issparse(X):
            acc = _kernels.ensemble_raw_csr(X.indptr.astype(np.int64), X.indices.astype(np.int64),
                                            X.data, feat, thr, left, right, val, roots, self.n_classes)
        else:
            acc = _kernels.ensemble_raw_dense(np.ascontiguousarray(X), feat, thr, left, val,
                                              roots, self.n_classes)
        return self.base_score[None, :] + self.learning_rate * acc

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities; 1-D for a single vector, 2-D for a batch."""
        single = isinstance(X, FeatureVector) or (not sp.issparse(X) and np.ndim(X) == 1)
        p = softmax(self.raw_scores(X))
        return p[0] if single else p

    def predict(self, X):
        p = self.predict_proba(X)
        if p.ndim == 1:
            return self.classes[int(np.argmax(p))]
        return [self.classes[i] for i in np.argmax(p, axis=1)]

    def classify(self, text: str) -> tuple[AttackClass, np.ndarray]:
        if self.vectorizer is None:
            raise SchemaMismatch("model was trained without a feature pipeline")
        p = self.predict_proba(self.pipeline.featurize(text))
        return self.classes[int(np.argmax(p))], p

    def save(self, path) -> None:
        from .model_io import save_model
        save_model(self, path)

    @classmethod
    def load(cls, path) -> "GbdtModel":
        from .model_io import load_model
        return load_model(path)


def predict_proba(model: GbdtModel, x) -> np.ndarray:
    return model.predict_proba(x)


def predict(model: GbdtModel, x):
    return model.predict(x)


# -- training ------------------------------------------------------------

def _to_csr(X) -> sp.csr_matrix:
    if isinstance(X, (list, tuple)) and X and isinstance(X[0], FeatureVector):
        widths = {v.width for v in X}
        if len(widths) != 1:
            raise ShapeMismatch("feature vectors have differing widths")
        X = np.vstack([v.to_dense() for v in X])
    X = sp.csr_matrix(X, dtype=np.float64)
    X.eliminate_zeros()
    X.sort_indices()
    return X


class _ColumnIndex:
    """Per-column entries sorted by value, for exact split enumeration."""

    def __init__(self, X: sp.csr_matrix):
        coo = X.tocoo()
        order = np.lexsort((coo.row, coo.data, coo.col))
        self.col_row = coo.row[order].astype(np.int64)
        self.col_val = coo.data[order].astype(np.float64)
        counts = np.bincount(coo.col, minlength=X.shape[1])
        self.col_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.indptr = X.indptr.astype(np.int64)
        self.indices = X.indices.astype(np.int64)
        self.data = X.data
        self.n_rows = X.shape[0]


def _grow_tree(cols: _ColumnIndex, g: np.ndarray, h: np.ndarray, cfg: TrainConfig):
    n = cols.n_rows
    lam = cfg.reg_lambda
    feat = [-1]
    thr = [0.0]
    left = [-1]
    right = [-1]
    row_node = np.zeros(n, dtype=np.int64)
    G = np.array([g.sum()])
    H = np.array([h.sum()])
    C = np.array([n])
    open_nodes = [0]
    for _ in range(cfg.max_depth):
        cand = [nd for nd in open_nodes if C[nd] >= 2 * cfg.min_samples_leaf]
        if not cand:
            break
        slot_of = np.full(len(feat), -1, dtype=np.int64)
        slot_of[cand] = np.arange(len(cand))
        row_slot = slot_of[row_node]
        gains, feats, thrs = _kernels.best_splits(
            cols.col_ptr, cols.col_row, cols.col_val, row_slot, g, h,
            G[cand], H[cand], C[cand], lam, cfg.min_samples_leaf)
        open_nodes = []
        for s, nd in enumerate(cand):
            if feats[s] < 0 or not gains[s] > cfg.min_gain:
                continue
            lo, hi = len(feat), len(feat) + 1
            feat[nd], thr[nd], left[nd], right[nd] = int(feats[s]), float(thrs[s]), lo, hi
            feat += [-1, -1]
            thr += [0.0, 0.0]
            left += [-1, -1]
            right += [-1, -1]
            open_nodes += [lo, hi]
        if not open_nodes:
            break
        _kernels.route_rows(cols.indptr, cols.indices, cols.data, row_node,
                            np.asarray(feat, dtype=np.int64), np.asarray(thr),
                            np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64))
        m = len(feat)
        G = np.bincount(row_node, weights=g, minlength=m)
        H = np.bincount(row_node, weights=h, minlength=m)
        C = np.bincount(row_node, minlength=m)
    feat_a = np.asarray(feat, dtype=np.int32)
    value = np.where(feat_a < 0, -G / (H + lam), 0.0)
    tree = Tree(feat_a, np.asarray(thr, dtype=np.float64), np.asarray(left, dtype=np.int32),
                np.asarray(right, dtype=np.int32), value.astype(np.float64))
    return tree, value[row_node]


def _validation_mask(y: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    mask = np.zeros(len(y), dtype=bool)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if len(idx) < 2:
            continue
        k = min(int(np.floor(fraction * len(idx) + 0.5)), len(idx) - 1)
        if k > 0:
            mask[idx[rng.permutation(len(idx))[:k]]] = True
    return mask


def train(X, y, weights=None, cfg: TrainConfig = TrainConfig(),
          pipeline: FeaturePipeline | None = None) -> tuple[GbdtModel, TrainLog]:
    """Fit a boosted ensemble.

    ``weights`` maps each class to its sample weight (see
    ``corpus.class_weights``); ``None`` means unweighted. Early stopping is
    driven by a stratified validation slice held out from ``X`` and the
    returned model is truncated to the best validation round.
    """
    X = _to_csr(X)
    labels = [AttackClass.parse(v) for v in y]
    if X.shape[0] != len(labels):
        raise ShapeMismatch(f"{X.shape[0]} feature rows but {len(labels)} labels")
    if pipeline is not None and X.shape[1] != pipeline.width:
        raise ShapeMismatch(f"feature width {X.shape[1]} does not match pipeline width {pipeline.width}")
    classes = [c for c in AttackClass if c in set(labels)]
    K = len(classes)
    if K < 2:
        raise SingleClassInput("training needs at least two classes")
    if len(labels) < 2 * K:
        raise ShapeMismatch(f"need at least {2 * K} samples for {K} classes")
    code = {c: i for i, c in enumerate(classes)}
    yi = np.array([code[c] for c in labels], dtype=np.int64)
    w = np.ones(len(yi)) if weights is None else np.array([float(weights[c]) for c in labels])

    use_valid = cfg.early_stopping_patience > 0
    vmask = _validation_mask(yi, cfg.validation_fraction, cfg.seed) if use_valid else np.zeros(len(yi), bool)
    if use_valid and not vmask.any():
        use_valid = False
    tr = ~vmask
    Xt, yt, wt = X[tr], yi[tr], w[tr]
    Xv, yv, wv = X[vmask], yi[vmask], w[vmask]
    Xv.sort_indices()

    mass = np.bincount(yt, weights=wt, minlength=K)
    if np.any(mass <= 0):
        raise SingleClassInput("every class needs training samples after the validation hold-out")
    base = np.log(mass / mass.sum())

    cols = _ColumnIndex(Xt)
    Ft = np.tile(base, (len(yt), 1))
    Fv = np.tile(base, (len(yv), 1))
    vptr, vind = Xv.indptr.astype(np.int64), Xv.indices.astype(np.int64)
    lr = cfg.learning_rate

    trees: list[Tree] = []
    tlog = TrainLog(n_train=int(tr.sum()), n_valid=int(vmask.sum()))
    best_loss, best_round, since_best = np.inf, 0, 0
    for rnd in range(1, cfg.max_rounds + 1):
        g, h = softmax_gradients(Ft, yt, wt)
        step_t = np.zeros_like(Ft)
        step_v = np.zeros_like(Fv)
        for c in range(K):
            tree, leaf_vals = _grow_tree(cols, np.ascontiguousarray(g[:, c]), np.ascontiguousarray(h[:, c]), cfg)
            trees.append(tree)
            step_t[:, c] = leaf_vals
            if use_valid:
                step_v[:, c] = _kernels.tree_predict_csr(
                    vptr, vind, Xv.data, tree.feature.astype(np.int64), tree.threshold,
                    tree.left.astype(np.int64), tree.right.astype(np.int64), tree.value)
        Ft += lr * step_t
        Fv += lr * step_v
        train_loss = weighted_log_loss(Ft, yt, wt)
        valid_loss = weighted_log_loss(Fv, yv, wv) if use_valid else None
        tlog.rounds.append(RoundLog(rnd, train_loss, valid_loss))
        log.debug("round %d train %.6f valid %s", rnd, train_loss, valid_loss)
        if not use_valid:
            best_round = rnd
            continue
        if valid_loss < best_loss:
            best_loss, best_round, since_best = valid_loss, rnd, 0
        else:
            since_best += 1
            if since_best >= cfg.early_stopping_patience:
                tlog.stopped_early = True
                break

    tlog.best_round = best_round
    trees = trees[: best_round * K]
    vectorizer = pipeline.vectorizer if pipeline is not None else None
    model = GbdtModel(classes, trees, base, lr, X.shape[1], vectorizer,
                      HANDCRAFTED_SCHEMA, cfg)
    return model, tlog
