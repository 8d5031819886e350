"""Reader/writer for the binary sample-vector interchange format.

Layout: one ASCII header line `VULNVEC 1 <tau1> <tau2> <dim>`, then per
sample: u32 id length + UTF-8 id, i32 label, u32 real gadget length, u32
real attention length, and two length-prefixed little-endian float32
blocks (gadget matrix tau1 x dim, attention matrix tau2 x dim).

This module is a standalone implementation of the wire format so the
detector depends only on the file contract, not on the producer package.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = "VULNVEC 1"


@dataclass
class VectorSample:
    sample_id: str
    label: int
    gadget: np.ndarray  # (tau1, dim) float32
    attention: np.ndarray  # (tau2, dim) float32
    real_gadget_length: int
    real_attention_length: int


def read_vector_file(path) -> tuple[list[VectorSample], int, int, int]:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if " ".join(header[:2]) != MAGIC:
            raise ValueError(f"not a vector file: {path}")
        tau1, tau2, dim = int(header[2]), int(header[3]), int(header[4])
        samples: list[VectorSample] = []
        while True:
            raw = fh.read(4)
            if not raw:
                break
            (id_len,) = struct.unpack("<I", raw)
            sample_id = fh.read(id_len).decode("utf-8")
            label, g_len, a_len = struct.unpack("<iII", fh.read(12))
            gadget = _read_block(fh, tau1, dim)
            attention = _read_block(fh, tau2, dim)
            samples.append(
                VectorSample(sample_id, label, gadget, attention, g_len, a_len)
            )
    return samples, tau1, tau2, dim


def _read_block(fh, rows: int, dim: int) -> np.ndarray:
    (count,) = struct.unpack("<I", fh.read(4))
    if count != rows * dim:
        raise ValueError(f"block carries {count} floats, expected {rows * dim}")
    return np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(rows, dim).copy()


def write_vector_file(path, samples: list[VectorSample], tau1: int, tau2: int, dim: int) -> None:
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {tau1} {tau2} {dim}\n".encode("ascii"))
        for s in samples:
            sid = s.sample_id.encode("utf-8")
            fh.write(struct.pack("<I", len(sid)))
            fh.write(sid)
            fh.write(struct.pack("<iII", s.label, s.real_gadget_length, s.real_attention_length))
            for matrix in (s.gadget, s.attention):
                flat = np.ascontiguousarray(matrix, dtype="<f4").reshape(-1)
                fh.write(struct.pack("<I", flat.size))
                fh.write(flat.tobytes())


def stack(samples: list[VectorSample]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(gadgets, attentions, labels) arrays for training."""
    gadgets = np.stack([s.gadget for s in samples])
    attentions = np.stack([s.attention for s in samples])
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return gadgets, attentions, labels


def write_predictions(path, sample_ids, true_labels, distributions) -> None:
    """Distribution-form prediction file: sampleId, trueLabel, p_0..p_m
    (tab-separated), one sample per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for sid, true, dist in zip(sample_ids, true_labels, distributions):
            tail = "\t".join(repr(float(p)) for p in dist)
            fh.write(f"{sid}\t{int(true)}\t{tail}\n")
