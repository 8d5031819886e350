"""Synthetic fixtures: class-separable token-vector sequences."""
from __future__ import annotations

import numpy as np

from detector.vecfile import VectorSample


def class_pattern(label: int, dim: int) -> np.ndarray:
    base = np.zeros(dim)
    start = (label * 9) % max(1, dim - 6)
    base[start : start + 6] = 2.0
    return base


def make_fixture(
    n: int = 200,
    classes: int = 5,
    tau1: int = 24,
    tau2: int = 8,
    dim: int = 50,
    seed: int = 3,
    noise: float = 0.35,
):
    """Sequences whose rows cluster around a class-specific direction."""
    rng = np.random.default_rng(seed)
    labels = np.array([i % classes for i in range(n)], dtype=np.int64)
    rng.shuffle(labels)
    gadgets = np.zeros((n, tau1, dim), dtype=np.float32)
    attentions = np.zeros((n, tau2, dim), dtype=np.float32)
    g_lens = np.zeros(n, dtype=np.int64)
    a_lens = np.zeros(n, dtype=np.int64)
    for i, y in enumerate(labels):
        pattern = class_pattern(int(y), dim)
        g_len = int(rng.integers(tau1 // 2, tau1 + 1))
        a_len = int(rng.integers(max(2, tau2 // 2), tau2 + 1))
        gadgets[i, :g_len] = pattern + rng.normal(0, noise, (g_len, dim))
        attentions[i, :a_len] = pattern + rng.normal(0, noise, (a_len, dim))
        g_lens[i], a_lens[i] = g_len, a_len
    return gadgets, attentions, labels, g_lens, a_lens


def fixture_samples(**kw) -> tuple[list[VectorSample], int, int, int]:
    gadgets, attentions, labels, g_lens, a_lens = make_fixture(**kw)
    samples = [
        VectorSample(
            sample_id=f"g{i:06d}",
            label=int(labels[i]),
            gadget=gadgets[i],
            attention=attentions[i],
            real_gadget_length=int(g_lens[i]),
            real_attention_length=int(a_lens[i]),
        )
        for i in range(len(labels))
    ]
    return samples, gadgets.shape[1], attentions.shape[1], gadgets.shape[2]
