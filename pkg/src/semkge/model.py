"""Multi-relational embedding model with block-diagonal normal relation maps.

Entities are real vectors of dimension ``dim``.  Each relation is a linear
map on that space stored as ``dim`` parameters: ``s`` scalar diagonal
entries followed by ``b`` two-by-two blocks ``[[a, -c], [c, a]]`` (parameters
interleaved as ``a1, c1, a2, c2, ...``), with ``s + 2b == dim``.  Maps of
this form commute with their transpose, and applying one to a row vector
costs O(dim).

A triple (h, r, t) is scored as ``<v_h^T W_r, v_t>``; training minimizes the
logistic loss ``-log sigmoid(y * score)`` over observed triples and sampled
negatives with plain SGD.
"""

import copy
import json
import logging

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator

from .errors import DataError, NumericalError, SamplingError
from .graph import DatasetSplit, LabeledExample, Triple, Vocabulary, sample_negatives

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

# Key spaces up to this size use a dense boolean table for the
# "is this corruption a known positive?" test inside training.
_DENSE_KEY_LIMIT = 50_000_000


def default_scalar_count(dim: int) -> int:
    """Half the dimensions as 2x2 blocks (rounded down to pairs), rest scalars."""
    return dim - 2 * (dim // 4)


def _check_block_split(dim: int, scalar_count: int) -> None:
    if dim <= 0:
        raise DataError(f"dim must be positive, got {dim}")
    if not 0 <= scalar_count <= dim or (dim - scalar_count) % 2:
        raise DataError(
            f"scalar_count={scalar_count} incompatible with dim={dim}: "
            "the remaining dimensions must form 2x2 blocks")


def map_rows(params: np.ndarray, scalar_count: int, rows: np.ndarray) -> np.ndarray:
    """Apply relation maps to row vectors: returns ``rows @ M``.

    ``params`` and ``rows`` are broadcast against each other; both are
    (..., dim) with the same leading shape (or one of them 1-D).
    """
    s = scalar_count
    params = np.atleast_2d(params)
    rows = np.atleast_2d(rows)
    out = np.empty(np.broadcast_shapes(params.shape, rows.shape))
    np.multiply(rows[:, :s], params[:, :s], out=out[:, :s])
    a = params[:, s::2]
    c = params[:, s + 1::2]
    x1 = rows[:, s::2]
    x2 = rows[:, s + 1::2]
    out[:, s::2] = x1 * a + x2 * c
    out[:, s + 1::2] = x2 * a - x1 * c
    return out


def map_rows_transpose(params: np.ndarray, scalar_count: int, rows: np.ndarray) -> np.ndarray:
    """Apply transposed maps to row vectors: returns ``rows @ M.T``."""
    return map_rows(transpose_params(params, scalar_count), scalar_count, rows)


def transpose_params(params: np.ndarray, scalar_count: int) -> np.ndarray:
    """Parameters of ``M.T``: rotation components flip sign."""
    out = np.array(params, dtype=float, copy=True)
    out[..., scalar_count + 1::2] *= -1.0
    return out


def block_determinants(params: np.ndarray, scalar_count: int):
    """(scalars, per-block determinants a^2 + c^2) of one parameter vector."""
    s = scalar_count
    a = params[..., s::2]
    c = params[..., s + 1::2]
    return params[..., :s], a * a + c * c


def is_invertible(params: np.ndarray, scalar_count: int, tol: float = 1e-9) -> bool:
    scalars, dets = block_determinants(params, scalar_count)
    return bool(np.all(np.abs(scalars) >= tol) and np.all(np.abs(dets) >= tol))


def inverse_params(params: np.ndarray, scalar_count: int, tol: float = 1e-9) -> np.ndarray:
    """Parameters of ``M^{-1}`` (closed under this map family).

    Scalars invert to reciprocals; a 2x2 block inverts to
    ``[[a, c], [-c, a]] / (a^2 + c^2)``.
    """
    s = scalar_count
    scalars, dets = block_determinants(params, scalar_count)
    if np.any(np.abs(scalars) < tol) or np.any(np.abs(dets) < tol):
        raise DataError("relation map is singular or near-singular")
    out = np.empty_like(np.asarray(params, dtype=float))
    out[..., :s] = 1.0 / params[..., :s]
    out[..., s::2] = params[..., s::2] / dets
    out[..., s + 1::2] = -params[..., s + 1::2] / dets
    return out


def map_rows_inverse(params: np.ndarray, scalar_count: int, rows: np.ndarray,
                     tol: float = 1e-9) -> np.ndarray:
    """Returns ``rows @ M^{-1}``; raises DataError on singular blocks."""
    return map_rows(inverse_params(params, scalar_count, tol), scalar_count, rows)


def _as_examples(X, y=None):
    """Normalize input to (triples (n,3) int64, labels (n,) float64).

    Accepts a list of LabeledExample (y omitted), a list/array of triples
    plus labels, or an (n,3) array plus labels.  Missing y defaults to +1.
    """
    if y is None and len(X) and isinstance(X[0], LabeledExample):
        triples = np.array([ex.triple for ex in X], dtype=np.int64)
        labels = np.array([ex.label for ex in X], dtype=np.float64)
        return triples, labels
    if len(X) == 0:
        return np.zeros((0, 3), dtype=np.int64), np.zeros(0)
    triples = np.asarray(X, dtype=np.int64)
    if triples.ndim == 1 and triples.size == 3:
        triples = triples.reshape(1, 3)
    if triples.ndim != 2 or triples.shape[1] != 3:
        raise DataError(f"expected (n, 3) triples, got shape {triples.shape}")
    if y is None:
        labels = np.ones(len(triples))
    else:
        labels = np.asarray(y, dtype=np.float64).reshape(-1)
        if len(labels) != len(triples):
            raise DataError("labels and triples length mismatch")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise DataError("labels must be +1 or -1")
    return triples, labels


class Gradients:
    """Loss gradients restricted to the parameters a batch touches."""

    def __init__(self, entity_index, entity_grads, relation_index, relation_grads,
                 n_entities, n_relations):
        self.entity_index = entity_index
        self.entity_grads = entity_grads
        self.relation_index = relation_index
        self.relation_grads = relation_grads
        self.n_entities = n_entities
        self.n_relations = n_relations

    def entity_row(self, i: int) -> np.ndarray:
        pos = np.searchsorted(self.entity_index, i)
        if pos < len(self.entity_index) and self.entity_index[pos] == i:
            return self.entity_grads[pos]
        return np.zeros(self.entity_grads.shape[1])

    def relation_row(self, r: int) -> np.ndarray:
        pos = np.searchsorted(self.relation_index, r)
        if pos < len(self.relation_index) and self.relation_index[pos] == r:
            return self.relation_grads[pos]
        return np.zeros(self.relation_grads.shape[1])

    def dense(self):
        dim = self.entity_grads.shape[1]
        e = np.zeros((self.n_entities, dim))
        w = np.zeros((self.n_relations, dim))
        e[self.entity_index] = self.entity_grads
        w[self.relation_index] = self.relation_grads
        return e, w


def _segment_sum(values: np.ndarray, index: np.ndarray):
    """Sum rows of ``values`` sharing an index; returns (unique_index, sums)."""
    order = np.argsort(index, kind="stable")
    vi = values[order]
    ii = index[order]
    starts = np.flatnonzero(np.r_[True, ii[1:] != ii[:-1]])
    return ii[starts], np.add.reduceat(vi, starts, axis=0)


class AnalogyEmbedding(BaseEstimator):
    """Knowledge-graph embedding estimator with SGD training.

    Parameters
    ----------
    dim : int
        Embedding dimension for entities; relation maps use the same
        number of parameters.
    scalar_count : int or None
        Number of scalar diagonal entries in each relation map; the rest
        of the dimensions form 2x2 blocks.  None picks half/half.
    learning_rate, weight_decay : float
        SGD step size and L2 penalty coefficient.  The penalty applies
        once per batch to the parameters that batch touches.
    decay_entities, decay_relations : bool
        Which parameter groups receive weight decay.
    negative_ratio : int
        Negatives sampled per positive, corrupting head or tail uniformly
        and avoiding unique train positives.
    max_epochs, batch_size : int
        Epoch budget and positives per SGD batch.
    init_noise : float
        Half-width of the uniform noise added to the near-identity
        relation-map initialization.
    warm_start : bool
        When True and the estimator is already fitted, ``fit`` continues
        from the current parameters instead of reinitializing.
    random_state : int
        Seed controlling initialization, shuffling and negative sampling.
        Fits with the same seed produce bitwise-identical parameters.

    Attributes
    ----------
    entity_vectors_ : ndarray (n_entities, dim)
    relation_params_ : ndarray (n_relations, dim)
    entity_vocab_, relation_vocab_ : Vocabulary
    scalar_count_ : int
    history_ : list of per-epoch records from the most recent fit
    """

    def __init__(self, dim=100, scalar_count=None, learning_rate=0.1,
                 weight_decay=1e-3, decay_entities=True, decay_relations=True,
                 negative_ratio=9, max_epochs=150, batch_size=128,
                 init_noise=0.01, warm_start=False, random_state=0):
        self.dim = dim
        self.scalar_count = scalar_count
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.decay_entities = decay_entities
        self.decay_relations = decay_relations
        self.negative_ratio = negative_ratio
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.init_noise = init_noise
        self.warm_start = warm_start
        self.random_state = random_state

    # -- basic state ---------------------------------------------------

    @property
    def is_fitted(self) -> bool:
        return hasattr(self, "entity_vectors_")

    def _check_fitted(self):
        if not self.is_fitted:
            raise DataError("model is not fitted")

    def _effective_scalar_count(self) -> int:
        s = self.scalar_count if self.scalar_count is not None else default_scalar_count(self.dim)
        _check_block_split(self.dim, s)
        return s

    def _validate_params_config(self):
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise DataError("learning_rate must be positive and weight_decay >= 0")
        if self.negative_ratio < 0 or self.max_epochs < 0 or self.batch_size < 1:
            raise DataError("negative_ratio/max_epochs must be >= 0 and batch_size >= 1")

    def copy(self) -> "AnalogyEmbedding":
        return copy.deepcopy(self)

    def _initialize(self, n_entities, n_relations, rng):
        s = self._effective_scalar_count()
        bound = 6.0 / np.sqrt(self.dim)
        self.entity_vectors_ = rng.uniform(-bound, bound, size=(n_entities, self.dim))
        w = np.zeros((n_relations, self.dim))
        w[:, :s] = 1.0
        w[:, s::2] = 1.0
        w += rng.uniform(-self.init_noise, self.init_noise, size=w.shape)
        self.relation_params_ = w
        self.scalar_count_ = s

    # -- scoring -------------------------------------------------------

    def score_triples(self, X) -> np.ndarray:
        """Scores ``<v_h^T W_r, v_t>`` for an (n, 3) array of index triples."""
        self._check_fitted()
        triples, _ = _as_examples(X)
        self._check_indices(triples)
        return self._scores(triples[:, 0], triples[:, 1], triples[:, 2])

    predict = score_triples

    def score(self, head: int, relation: int, tail: int) -> float:
        return float(self.score_triples([(head, relation, tail)])[0])

    def _check_indices(self, triples):
        n_e = len(self.entity_vectors_)
        n_r = len(self.relation_params_)
        if len(triples) == 0:
            return
        if triples.min() < 0 or triples[:, (0, 2)].max() >= n_e or triples[:, 1].max() >= n_r:
            raise DataError("triple index out of range for this model")

    def _scores(self, h, r, t):
        hw = map_rows(self.relation_params_[r], self.scalar_count_, self.entity_vectors_[h])
        return np.einsum("ij,ij->i", hw, self.entity_vectors_[t])

    def scores_against_all(self, fixed_entity: int, relation: int,
                           side: str) -> np.ndarray:
        """Scores of every entity completing a query.

        ``side='tail'`` scores (fixed, r, e) for all e; ``side='head'``
        scores (e, r, fixed).
        """
        self._check_fitted()
        w = self.relation_params_[relation]
        v = self.entity_vectors_[fixed_entity]
        if side == "tail":
            projected = map_rows(w, self.scalar_count_, v)[0]
        elif side == "head":
            projected = map_rows_transpose(w, self.scalar_count_, v)[0]
        else:
            raise DataError(f"side must be 'head' or 'tail', got {side!r}")
        return self.entity_vectors_ @ projected

    # -- loss and gradients --------------------------------------------

    def _decay_terms(self, e_idx, r_idx):
        """(unique touched entity ids, unique touched relation ids) honoring flags."""
        eu = np.unique(e_idx) if self.decay_entities else np.empty(0, dtype=np.int64)
        ru = np.unique(r_idx) if self.decay_relations else np.empty(0, dtype=np.int64)
        return eu, ru

    def loss(self, X, y=None) -> float:
        """Summed logistic loss of a batch plus its weight-decay penalty."""
        self._check_fitted()
        triples, labels = _as_examples(X, y)
        if len(triples) == 0:
            raise DataError("loss requires a non-empty batch")
        self._check_indices(triples)
        scores = self._scores(triples[:, 0], triples[:, 1], triples[:, 2])
        data_term = np.logaddexp(0.0, -labels * scores).sum()
        eu, ru = self._decay_terms(np.concatenate([triples[:, 0], triples[:, 2]]),
                                   triples[:, 1])
        penalty = 0.5 * self.weight_decay * (
            np.sum(self.entity_vectors_[eu] ** 2) + np.sum(self.relation_params_[ru] ** 2))
        return float(data_term + penalty)

    def gradients(self, X, y=None) -> Gradients:
        """Analytic loss gradients for the entity rows and relation maps a
        batch touches; everything untouched has zero gradient."""
        self._check_fitted()
        triples, labels = _as_examples(X, y)
        if len(triples) == 0:
            raise DataError("gradients require a non-empty batch")
        self._check_indices(triples)
        h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
        e_idx, e_grads, r_idx, r_grads = self._raw_gradients(h, r, t, labels)
        return Gradients(e_idx, e_grads, r_idx, r_grads,
                         len(self.entity_vectors_), len(self.relation_params_))

    def _batch_terms(self, h, r, t, labels):
        """Scores plus segment-summed data gradients for one batch.

        The batch is processed one relation at a time, so relation
        parameters broadcast as single vectors instead of being gathered
        per example; the returned sums are independent of that grouping.
        Scores come back in input order.
        """
        E = self.entity_vectors_
        W = self.relation_params_
        s = self.scalar_count_
        scores = np.empty(len(h))
        e_parts_idx, e_parts_grad = [], []
        r_ids, r_rows = [], []

        order = np.argsort(r, kind="stable")
        bounds = np.flatnonzero(np.r_[True, r[order][1:] != r[order][:-1], True])
        for k in range(len(bounds) - 1):
            sel = order[bounds[k]:bounds[k + 1]]
            rel = int(r[sel[0]])
            wp = W[rel]
            a, c = wp[s::2], wp[s + 1::2]
            hh, tt = h[sel], t[sel]
            vh = E[hh]
            vt = E[tt]
            x1, x2 = vh[:, s::2], vh[:, s + 1::2]
            y1, y2 = vt[:, s::2], vt[:, s + 1::2]

            hw = np.empty_like(vh)
            np.multiply(vh[:, :s], wp[:s], out=hw[:, :s])
            hw[:, s::2] = x1 * a + x2 * c
            hw[:, s + 1::2] = x2 * a - x1 * c
            sc = np.einsum("ij,ij->i", hw, vt)
            scores[sel] = sc

            lab = labels[sel]
            g = (-lab * expit(-lab * sc))[:, None]
            dvh = np.empty_like(vt)  # rows of vt through the transposed map
            np.multiply(vt[:, :s], wp[:s], out=dvh[:, :s])
            dvh[:, s::2] = y1 * a - y2 * c
            dvh[:, s + 1::2] = y2 * a + y1 * c
            dvh *= g
            dw = np.empty_like(vh)
            np.multiply(vh[:, :s], vt[:, :s], out=dw[:, :s])
            dw[:, s::2] = x1 * y1 + x2 * y2
            dw[:, s + 1::2] = x2 * y1 - x1 * y2
            dw *= g
            dvt = hw
            dvt *= g  # hw is not needed once the scores exist

            hi, hg = _segment_sum(dvh, hh)
            ti, tg = _segment_sum(dvt, tt)
            e_parts_idx.extend((hi, ti))
            e_parts_grad.extend((hg, tg))
            r_ids.append(rel)
            r_rows.append(dw.sum(axis=0))

        e_idx, e_grads = _segment_sum(np.concatenate(e_parts_grad),
                                      np.concatenate(e_parts_idx))
        r_idx, r_grads = _segment_sum(np.array(r_rows), np.array(r_ids))
        return scores, e_idx, e_grads, r_idx, r_grads

    def _raw_gradients(self, h, r, t, labels, scale=1.0):
        """Batch gradients including weight decay on the touched parameters.

        ``scale`` multiplies the data term only; SGD batches pass the
        reciprocal of the positive count so step sizes are independent of
        the batch size, while weight decay stays a once-per-batch pull on
        the touched parameters.
        """
        _, e_idx, e_grads, r_idx, r_grads = self._batch_terms(h, r, t, labels)
        if scale != 1.0:
            e_grads *= scale
            r_grads *= scale
        if self.weight_decay:
            if self.decay_entities:
                e_grads += self.weight_decay * self.entity_vectors_[e_idx]
            if self.decay_relations:
                r_grads += self.weight_decay * self.relation_params_[r_idx]
        return e_idx, e_grads, r_idx, r_grads

    # -- training ------------------------------------------------------

    def fit(self, split: DatasetSplit, entities: Vocabulary = None,
            relations: Vocabulary = None, callback=None) -> "AnalogyEmbedding":
        """Train on the split's train triples with sampled negatives.

        Each epoch shuffles the observation multiset (a triple counted k
        times is visited k times).  ``callback(epoch, model)`` runs after
        every epoch; returning a truthy value stops training early.
        Raises NumericalError if the loss stops being finite.
        """
        self._validate_params_config()
        rng = np.random.default_rng(self.random_state)
        if self.warm_start and self.is_fitted:
            if (len(self.entity_vectors_) != split.n_entities
                    or len(self.relation_params_) != split.n_relations):
                raise DataError(
                    f"model vocabulary ({len(self.entity_vectors_)} entities, "
                    f"{len(self.relation_params_)} relations) does not match split "
                    f"({split.n_entities}, {split.n_relations})")
        else:
            self.entity_vocab_ = entities if entities is not None else Vocabulary.of_size(
                split.n_entities, "e")
            self.relation_vocab_ = relations if relations is not None else Vocabulary.of_size(
                split.n_relations, "r")
            if len(self.entity_vocab_) != split.n_entities or \
                    len(self.relation_vocab_) != split.n_relations:
                raise DataError("vocabulary sizes do not match split")
            self._initialize(split.n_entities, split.n_relations, rng)

        h_u, r_u, t_u, counts = split.train.arrays()
        h_all = np.repeat(h_u, counts)
        r_all = np.repeat(r_u, counts)
        t_all = np.repeat(t_u, counts)
        sampler = _NegativeSampler(split, rng)

        self.history_ = []
        for epoch in range(1, self.max_epochs + 1):
            order = rng.permutation(len(h_all))
            epoch_loss = 0.0
            n_examples = 0
            for start in range(0, len(order), self.batch_size):
                sel = order[start:start + self.batch_size]
                loss = self._sgd_batch(h_all[sel], r_all[sel], t_all[sel], sampler)
                if not np.isfinite(loss):
                    example = Triple(int(h_all[sel][0]), int(r_all[sel][0]),
                                     int(t_all[sel][0]))
                    raise NumericalError(
                        f"non-finite loss at epoch {epoch}, batch starting at "
                        f"position {start} (first positive {example})")
                epoch_loss += loss
                n_examples += len(sel) * (1 + self.negative_ratio)
            record = {"epoch": epoch,
                      "mean_loss": epoch_loss / max(n_examples, 1),
                      "learning_rate": self.learning_rate}
            self.history_.append(record)
            if callback is not None and callback(epoch, self):
                break
        self.n_epochs_ = len(self.history_)
        return self

    def _sgd_batch(self, h, r, t, sampler) -> float:
        n = len(h)
        if self.negative_ratio:
            nh, nr, nt = sampler.draw(h, r, t, self.negative_ratio)
            bh = np.concatenate([h, nh])
            br = np.concatenate([r, nr])
            bt = np.concatenate([t, nt])
            labels = np.concatenate([np.ones(n), -np.ones(len(nh))])
        else:
            bh, br, bt, labels = h, r, t, np.ones(n)

        scores, e_idx, e_grads, r_idx, r_grads = self._batch_terms(bh, br, bt, labels)
        batch_loss = float(np.logaddexp(0.0, -labels * scores).sum())
        scale = 1.0 / n
        e_grads *= scale
        r_grads *= scale
        if self.weight_decay:
            if self.decay_entities:
                e_grads += self.weight_decay * self.entity_vectors_[e_idx]
            if self.decay_relations:
                r_grads += self.weight_decay * self.relation_params_[r_idx]
        self.entity_vectors_[e_idx] -= self.learning_rate * e_grads
        self.relation_params_[r_idx] -= self.learning_rate * r_grads
        return batch_loss

    # -- persistence ---------------------------------------------------

    def save(self, path) -> None:
        """Write a checkpoint: vocabularies, block split, all parameters
        at full precision, and the estimator configuration."""
        self._check_fitted()
        meta = {"format_version": CHECKPOINT_VERSION,
                "scalar_count": int(self.scalar_count_),
                "params": {k: v for k, v in self.get_params().items()}}
        np.savez(path,
                 meta=json.dumps(meta),
                 entity_names=np.array(self.entity_vocab_.names, dtype=str),
                 relation_names=np.array(self.relation_vocab_.names, dtype=str),
                 entity_vectors=self.entity_vectors_,
                 relation_params=self.relation_params_)

    @classmethod
    def load(cls, path) -> "AnalogyEmbedding":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("format_version") != CHECKPOINT_VERSION:
                raise DataError(
                    f"unsupported checkpoint version {meta.get('format_version')!r}")
            model = cls(**meta["params"])
            model.entity_vocab_ = Vocabulary(str(n) for n in data["entity_names"])
            model.relation_vocab_ = Vocabulary(str(n) for n in data["relation_names"])
            model.entity_vectors_ = np.array(data["entity_vectors"], dtype=np.float64)
            model.relation_params_ = np.array(data["relation_params"], dtype=np.float64)
        model.scalar_count_ = meta["scalar_count"]
        model.history_ = []
        return model


class _NegativeSampler:
    """Vectorized filtered corruption sampling for training batches.

    Mirrors :func:`semkge.graph.sample_negatives`: per negative, a fair
    coin picks the corrupted side, the replacement entity is uniform, and
    draws colliding with a unique positive of the split are redrawn (coin
    included).  Positives stuck after many rounds fall back to the
    enumerating sampler.
    """

    def __init__(self, split: DatasetSplit, rng: np.random.Generator):
        self.split = split
        self.rng = rng
        self.n_entities = split.n_entities
        n_r = split.n_relations
        positives = split.positive_triples()
        if positives:
            arr = np.array(sorted(positives), dtype=np.int64)
            keys = (arr[:, 0] * n_r + arr[:, 1]) * self.n_entities + arr[:, 2]
        else:
            keys = np.zeros(0, dtype=np.int64)
        space = self.n_entities * n_r * self.n_entities
        if space <= _DENSE_KEY_LIMIT:
            self._table = np.zeros(space, dtype=bool)
            self._table[keys] = True
            self._sorted_keys = None
        else:
            self._table = None
            self._sorted_keys = np.unique(keys)
        self._n_relations = n_r

    def _is_positive(self, keys):
        if self._table is not None:
            return self._table[keys]
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.minimum(pos, len(self._sorted_keys) - 1)
        return self._sorted_keys[pos] == keys

    def draw(self, h, r, t, ratio):
        rng = self.rng
        n = len(h) * ratio
        ph = np.repeat(h, ratio)
        pr = np.repeat(r, ratio)
        pt = np.repeat(t, ratio)
        nh, nt = ph.copy(), pt.copy()
        corrupt_head = rng.integers(0, 2, n).astype(bool)
        replacement = rng.integers(0, self.n_entities, n)
        np.copyto(nh, replacement, where=corrupt_head)
        np.copyto(nt, replacement, where=~corrupt_head)
        keys = (nh * self._n_relations + pr) * self.n_entities + nt
        bad = self._is_positive(keys)
        rounds = 0
        while bad.any() and rounds < 100:
            idx = np.flatnonzero(bad)
            coin = rng.integers(0, 2, len(idx)).astype(bool)
            repl = rng.integers(0, self.n_entities, len(idx))
            nh[idx] = np.where(coin, repl, ph[idx])
            nt[idx] = np.where(coin, pt[idx], repl)
            keys[idx] = (nh[idx] * self._n_relations + pr[idx]) * self.n_entities + nt[idx]
            bad[idx] = self._is_positive(keys[idx])
            rounds += 1
        if bad.any():
            for i in np.flatnonzero(bad):
                ex = sample_negatives(Triple(int(ph[i]), int(pr[i]), int(pt[i])),
                                      1, self.split, rng)[0]
                nh[i], _, nt[i] = ex.triple
        return nh, pr, nt
