"""Token embeddings and fixed-length sample matrices.

Skip-gram with negative sampling trained single-threaded over the gadget
token corpus, deterministic for a fixed seed. Vectorization maps token
sequences to tau x dim float32 matrices, zero-padded or tail-truncated;
out-of-vocabulary tokens map to the zero vector, indistinguishable from
padding by design (the downstream mask keys on all-zero rows).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .slicer import CodeGadget

DEFAULT_WINDOW = 10
DEFAULT_DIMENSION = 50
_NEG_TABLE_SIZE = 1 << 17
_MAX_EXP = 8.0


class EmptyCorpus(ValueError):
    pass


@dataclass
class EmbeddingModel:
    vocabulary: dict[str, int]
    vectors: np.ndarray  # (V, dimension) float64
    window: int
    dimension: int
    seed: int

    def vector(self, token: str) -> np.ndarray:
        idx = self.vocabulary.get(token)
        if idx is None:
            return np.zeros(self.dimension)
        return self.vectors[idx]


@dataclass
class SampleVectors:
    gadget_matrix: np.ndarray  # (tau1, dim) float32
    attention_matrix: np.ndarray  # (tau2, dim) float32
    real_gadget_length: int
    real_attention_length: int


def build_corpus(gadgets: list[CodeGadget]) -> list[list[str]]:
    """One token sequence per gadget: statement tokens in gadget order."""
    return [gadget_tokens(g) for g in gadgets]


def gadget_tokens(gadget: CodeGadget) -> list[str]:
    return [t.text for s in gadget.statements for t in s.tokens]


def attention_tokens(statements) -> list[str]:
    return [t.text for s in statements for t in s.tokens]


def corpus_from_records(records) -> list[list[str]]:
    """Token sequences re-lexed from gadget-record statement lines."""
    from .lexer import lex

    corpus = []
    for rec in records:
        tokens: list[str] = []
        for line in rec.statements:
            tokens.extend(t.text for t in lex(line))
        corpus.append(tokens)
    return corpus


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -_MAX_EXP, _MAX_EXP)))


def train_skipgram(
    corpus: list[list[str]],
    window: int = DEFAULT_WINDOW,
    dimension: int = DEFAULT_DIMENSION,
    epochs: int = 5,
    min_count: int = 1,
    negatives: int = 5,
    learning_rate: float = 0.025,
    seed: int = 1,
) -> EmbeddingModel:
    """Train embeddings over (center, context) pairs within the window.

    Updates run in corpus order with a linearly decayed learning rate, so
    identical inputs and seed reproduce identical vectors.
    """
    if not corpus or not any(corpus):
        raise EmptyCorpus("no token sequences to train on")

    counts: dict[str, int] = {}
    for sentence in corpus:
        for tok in sentence:
            counts[tok] = counts.get(tok, 0) + 1
    vocab = {tok: i for i, tok in enumerate(t for t, c in counts.items() if c >= min_count)}
    if not vocab:
        raise EmptyCorpus(f"no token reaches min_count={min_count}")

    sentences = [[vocab[t] for t in sent if t in vocab] for sent in corpus]
    sentences = [s for s in sentences if s]

    rng = np.random.default_rng(seed)
    vsize = len(vocab)
    w_in = (rng.random((vsize, dimension)) - 0.5) / dimension
    w_out = np.zeros((vsize, dimension))

    freq = np.zeros(vsize)
    for tok, idx in vocab.items():
        freq[idx] = counts[tok] ** 0.75
    cumulative = np.cumsum(freq / freq.sum())
    neg_table = np.searchsorted(cumulative, (np.arange(_NEG_TABLE_SIZE) + 0.5) / _NEG_TABLE_SIZE)

    pair_count = sum(
        sum(min(i, window) + min(len(s) - 1 - i, window) for i in range(len(s)))
        for s in sentences
    )
    total = max(1, pair_count * epochs)
    lr_floor = learning_rate * 1e-4
    done = 0

    for _ in range(epochs):
        for sent in sentences:
            n = len(sent)
            for i, center in enumerate(sent):
                lo = max(0, i - window)
                hi = min(n, i + window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    context = sent[j]
                    lr = max(lr_floor, learning_rate * (1.0 - done / total))
                    done += 1
                    negs = neg_table[rng.integers(0, _NEG_TABLE_SIZE, negatives)]
                    targets = np.concatenate(([context], negs))
                    labels = np.zeros(len(targets))
                    labels[0] = 1.0
                    v = w_in[center]
                    outs = w_out[targets]
                    grad = (labels - _sigmoid(outs @ v)) * lr
                    w_in[center] = v + grad @ outs
                    w_out[targets] = outs + np.outer(grad, v)

    return EmbeddingModel(
        vocabulary=vocab, vectors=w_in, window=window, dimension=dimension, seed=seed
    )


def vectorize(tokens: list[str], model: EmbeddingModel, tau: int) -> np.ndarray:
    """tau x dim float32 matrix: token vectors in order, zero rows after
    min(len, tau), tail truncation beyond tau."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    out = np.zeros((tau, model.dimension), dtype=np.float32)
    for i, tok in enumerate(tokens[:tau]):
        out[i] = model.vector(tok).astype(np.float32)
    return out


def cosine(model: EmbeddingModel, a: str, b: str) -> float:
    va, vb = model.vector(a), model.vector(b)
    denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
    if denom == 0.0:
        return 0.0
    return float(va @ vb) / denom


def save_model(model: EmbeddingModel, path) -> None:
    """Header `dimension window seed`, then one line per token:
    token text followed by its vector components."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{model.dimension} {model.window} {model.seed}\n")
        for tok, idx in model.vocabulary.items():
            values = " ".join(repr(float(x)) for x in model.vectors[idx])
            fh.write(f"{tok} {values}\n")


def load_model(path) -> EmbeddingModel:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        dimension, window, seed = int(header[0]), int(header[1]), int(header[2])
        vocab: dict[str, int] = {}
        rows: list[np.ndarray] = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(" ")
            # token text may itself contain spaces (string literals): the
            # final `dimension` fields are the vector, the rest is the token.
            token = " ".join(fields[:-dimension])
            vec = np.array([float(x) for x in fields[-dimension:]])
            vocab[token] = len(rows)
            rows.append(vec)
    vectors = np.vstack(rows) if rows else np.zeros((0, dimension))
    return EmbeddingModel(
        vocabulary=vocab, vectors=vectors, window=window, dimension=dimension, seed=seed
    )
