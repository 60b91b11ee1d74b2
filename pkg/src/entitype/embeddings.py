"""Skipgram-with-negative-sampling embedding trainer and embedding store.

Classic skipgram objective: for every (center, context) pair drawn from a
dynamically shrunk window, the context vector is pushed up and
``negatives`` noise tokens drawn from the unigram^0.75 distribution are
pushed down. Pair and noise generation are vectorized numpy; the SGD inner
loop is a sequential numba kernel, matching the reference trainer's
update order. Training is bit-deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator

from .corpus import PAD_TOKEN

NOISE_POWER = 0.75
LR_FLOOR_FRACTION = 1e-4
_PAIR_CHUNK = 500_000
_BLOCK_TOKENS = 400_000


@dataclass
class EmbeddingTable:
    """Token -> fixed-dimension vector store.

    ``lookup`` returns the all-zeros vector for PAD and for out-of-vocabulary
    tokens; OOV hits (PAD excluded) are tallied in ``oov_count``.
    """

    dim: int
    vocab: dict
    vectors: np.ndarray
    counts: dict | None = None
    oov_count: int = field(default=0, compare=False)

    def __post_init__(self):
        self._zero = np.zeros(self.dim, dtype=self.vectors.dtype)

    def __len__(self):
        return len(self.vocab)

    def __contains__(self, token):
        return token in self.vocab

    def lookup(self, token):
        idx = self.vocab.get(token)
        if idx is None:
            if token != PAD_TOKEN:
                self.oov_count += 1
            return self._zero
        return self.vectors[idx]

    def token_ids(self, tokens, oov_id=-1):
        """Vectorized vocab lookup; unknown tokens (and PAD) map to oov_id.

        Counts non-PAD misses into ``oov_count``, matching ``lookup``.
        """
        ids = np.empty(len(tokens), dtype=np.int64)
        get = self.vocab.get
        misses = 0
        for i, tok in enumerate(tokens):
            j = get(tok)
            if j is None:
                ids[i] = oov_id
                if tok != PAD_TOKEN:
                    misses += 1
            else:
                ids[i] = j
        self.oov_count += misses
        return ids

    def save(self, path):
        """Text format: header ``vocab_size dim``, then one token per line
        followed by its components. float32 components are written with nine
        significant digits, which round-trips them exactly."""
        if not np.isfinite(self.vectors).all():
            raise ValueError("refusing to serialize non-finite vectors")
        order = sorted(self.vocab, key=self.vocab.get)
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{len(self.vocab)} {self.dim}\n")
            for token in order:
                row = self.vectors[self.vocab[token]]
                f.write(token + " " + " ".join(f"{x:.8e}" for x in row) + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: malformed header")
            size, dim = int(header[0]), int(header[1])
            vocab = {}
            vectors = np.empty((size, dim), dtype=np.float32)
            for i in range(size):
                line = f.readline()
                if not line:
                    raise ValueError(f"{path}: truncated file, expected {size} rows")
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    raise ValueError(f"{path}: row {i} has {len(parts) - 1} components, expected {dim}")
                if parts[0] in vocab:
                    raise ValueError(f"{path}: duplicate token {parts[0]!r}")
                vocab[parts[0]] = i
                vectors[i] = [float(x) for x in parts[1:]]
            if f.readline().strip():
                raise ValueError(f"{path}: trailing data after {size} rows")
        return cls(dim=dim, vocab=vocab, vectors=vectors)


class SkipgramModel(BaseEstimator):
    """Skipgram negative-sampling embedding trainer.

    Parameters
    ----------
    dim : embedding dimensionality.
    window : maximum context offset; the effective window per center token
        is drawn uniformly from 1..window as in the reference trainer.
    negatives : noise samples per (center, context) pair.
    epochs : passes over the corpus.
    min_count : tokens occurring fewer times are dropped from the stream.
    learning_rate : initial SGD rate, decayed linearly to a small floor.
    subsample : frequent-token subsampling threshold; 0 disables (default,
        keeping runs deterministic without further care).
    seed : RNG seed; fixes vocabulary order, window draws and noise draws.
    """

    def __init__(self, dim=100, window=5, negatives=5, epochs=5, min_count=5,
                 learning_rate=0.025, subsample=0.0, seed=0):
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.min_count = min_count
        self.learning_rate = learning_rate
        self.subsample = subsample
        self.seed = seed

    def fit(self, sentences):
        """Train on token lists; ``sentences`` is iterated twice (count then
        encode), so pass a list or a re-openable iterable."""
        if self.dim < 1 or self.window < 1:
            raise ValueError("dim and window must be >= 1")
        counts = {}
        for sent in sentences:
            for tok in sent:
                counts[tok] = counts.get(tok, 0) + 1
        kept = sorted(
            (t for t, c in counts.items() if c >= self.min_count),
            key=lambda t: (-counts[t], t),
        )
        if not kept:
            raise ValueError("empty vocabulary after min_count filtering")
        vocab = {t: i for i, t in enumerate(kept)}
        self.counts_ = {t: counts[t] for t in kept}

        # Tokens below min_count are removed from the stream, so windows
        # close over the gaps they leave.
        flat, lens = [], []
        for sent in sentences:
            ids = [vocab[t] for t in sent if t in vocab]
            if ids:
                flat.extend(ids)
                lens.append(len(ids))
        flat = np.asarray(flat, dtype=np.int64)
        lens = np.asarray(lens, dtype=np.int64)

        freq = np.array([counts[t] for t in kept], dtype=np.float64)
        noise = freq**NOISE_POWER
        self._noise_probs = noise / noise.sum()
        noise_cdf = np.cumsum(self._noise_probs)
        noise_cdf[-1] = 1.0

        rng = np.random.default_rng(self.seed)
        vecs_in = rng.uniform(-0.5 / self.dim, 0.5 / self.dim,
                              size=(len(kept), self.dim)).astype(np.float32)
        vecs_out = np.zeros((len(kept), self.dim), dtype=np.float32)

        keep_prob = None
        if self.subsample > 0:
            rel = freq / freq.sum()
            keep_prob = np.minimum(1.0, np.sqrt(self.subsample / rel) + self.subsample / rel)

        total_tokens = max(float(flat.size) * self.epochs, 1.0)
        done_tokens = 0
        for _ in range(self.epochs):
            ep_flat, ep_lens = flat, lens
            if keep_prob is not None and flat.size:
                mask = rng.random(flat.size) < keep_prob[flat]
                sent_idx = np.repeat(np.arange(lens.size), lens)
                ep_flat = flat[mask]
                ep_lens = np.bincount(sent_idx[mask], minlength=lens.size)
                ep_lens = ep_lens[ep_lens > 0]
            for block_flat, block_lens in _sentence_blocks(ep_flat, ep_lens):
                centers, contexts = _window_pairs(block_flat, block_lens, self.window, rng)
                tokens_per_pair = block_flat.size / max(centers.size, 1)
                for s in range(0, centers.size, _PAIR_CHUNK):
                    c_chunk = centers[s : s + _PAIR_CHUNK]
                    x_chunk = contexts[s : s + _PAIR_CHUNK]
                    if self.negatives:
                        draws = rng.random((c_chunk.size, self.negatives))
                        negs = np.searchsorted(noise_cdf, draws)
                    else:
                        negs = np.empty((c_chunk.size, 0), dtype=np.int64)
                    lr = max(
                        self.learning_rate * (1.0 - done_tokens / (total_tokens + 1.0)),
                        self.learning_rate * LR_FLOOR_FRACTION,
                    )
                    _sgd_pairs(vecs_in, vecs_out, c_chunk, x_chunk, negs, np.float32(lr))
                    done_tokens += c_chunk.size * tokens_per_pair

        self.table_ = EmbeddingTable(dim=self.dim, vocab=vocab, vectors=vecs_in,
                                     counts=self.counts_)
        return self

    def noise_distribution(self):
        """Normalized unigram^0.75 sampling probabilities, vocab order."""
        return self._noise_probs.copy()

    def transform(self, tokens):
        """Map a token sequence to a (len, dim) matrix of vectors."""
        if not len(tokens):
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([self.table_.lookup(t) for t in tokens])


def _sentence_blocks(flat, lens, block_tokens=_BLOCK_TOKENS):
    """Yield (flat ids, sentence lens) covering whole sentences per block."""
    start_sent = 0
    start_tok = 0
    acc = 0
    for i, n in enumerate(lens):
        acc += int(n)
        if acc >= block_tokens:
            yield flat[start_tok : start_tok + acc], lens[start_sent : i + 1]
            start_sent = i + 1
            start_tok += acc
            acc = 0
    if acc:
        yield flat[start_tok:], lens[start_sent:]


def _window_pairs(flat, lens, window, rng):
    """(center, context) id pairs under per-center shrunk windows.

    Windows never cross sentence boundaries.
    """
    n = flat.size
    if n == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(lens)[:-1]))
    pos_in_sent = np.arange(n) - np.repeat(starts, lens)
    sent_len = np.repeat(lens, lens)
    b = rng.integers(1, window + 1, size=n)
    left = np.minimum(b, pos_in_sent)
    right = np.minimum(b, sent_len - 1 - pos_in_sent)
    counts = left + right
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    center_idx = np.repeat(np.arange(n), counts)
    pair_starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    local = np.arange(total) - np.repeat(pair_starts, counts)
    left_rep = np.repeat(left, counts)
    offset = np.where(local < left_rep, local - left_rep, local - left_rep + 1)
    return flat[center_idx], flat[center_idx + offset]


@njit(cache=True)
def _sgd_pairs(vecs_in, vecs_out, centers, contexts, negs, lr):
    """Sequential SGD over (center, context) pairs with presampled negatives.

    Logits outside +-30 are treated as saturated, the float32 equivalent of
    the reference trainer's clipped sigmoid table.
    """
    n_neg = negs.shape[1]
    d = vecs_in.shape[1]
    work = np.empty(d, dtype=np.float32)
    for p in range(centers.shape[0]):
        c = centers[p]
        for j in range(d):
            work[j] = 0.0
        for k in range(n_neg + 1):
            if k == 0:
                t = contexts[p]
                label = np.float32(1.0)
            else:
                t = negs[p, k - 1]
                label = np.float32(0.0)
            f = np.float32(0.0)
            for j in range(d):
                f += vecs_in[c, j] * vecs_out[t, j]
            if f > 30.0:
                sig = np.float32(1.0)
            elif f < -30.0:
                sig = np.float32(0.0)
            else:
                sig = np.float32(1.0 / (1.0 + math.exp(-f)))
            g = (label - sig) * lr
            for j in range(d):
                work[j] += g * vecs_out[t, j]
                vecs_out[t, j] += g * vecs_in[c, j]
        for j in range(d):
            vecs_in[c, j] += work[j]
