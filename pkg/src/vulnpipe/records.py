"""On-disk sample formats.

Gadget records are a line-oriented text format: a tab-separated header,
the normalized statement lines, an attention-index line, the label, and a
32-dash separator. Vector files are binary: an ASCII header line, then per
sample the id, label, real lengths, and the two matrices as length-prefixed
little-endian float32 blocks. Both formats round-trip exactly.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .embedding import SampleVectors

SEPARATOR = "-" * 32
_VEC_MAGIC = "VULNVEC 1"


@dataclass
class GadgetRecord:
    index: int
    path: str
    callee: str
    line: int
    statements: list[str]  # rendered normalized statement lines, gadget order
    attention_indices: list[int]  # 0-based indices into statements
    label: int


def emit_record(record: GadgetRecord) -> str:
    lines = [f"{record.index}\t{record.path}\t{record.callee}\t{record.line}"]
    lines.extend(record.statements)
    lines.append("attention: " + ",".join(str(i) for i in record.attention_indices))
    lines.append(str(record.label))
    lines.append(SEPARATOR)
    return "\n".join(lines) + "\n"


def parse_records(text: str) -> list[GadgetRecord]:
    records: list[GadgetRecord] = []
    block: list[str] = []
    for line in text.splitlines():
        if line == SEPARATOR:
            if block:
                records.append(_parse_block(block))
                block = []
            continue
        block.append(line)
    if any(l.strip() for l in block):
        raise ValueError("trailing gadget record without separator")
    return records


def _parse_block(block: list[str]) -> GadgetRecord:
    if len(block) < 3:
        raise ValueError(f"malformed gadget record block: {block!r}")
    header = block[0].split("\t")
    if len(header) != 4:
        raise ValueError(f"malformed gadget record header: {block[0]!r}")
    attention_line = block[-2]
    if not attention_line.startswith("attention:"):
        raise ValueError(f"missing attention line, got {attention_line!r}")
    payload = attention_line[len("attention:") :].strip()
    indices = [int(x) for x in payload.split(",")] if payload else []
    return GadgetRecord(
        index=int(header[0]),
        path=header[1],
        callee=header[2],
        line=int(header[3]),
        statements=block[1:-2],
        attention_indices=indices,
        label=int(block[-1]),
    )


def write_gadget_file(path, records: list[GadgetRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(emit_record(rec))


def read_gadget_file(path) -> list[GadgetRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_records(fh.read())


@dataclass
class VectorRecord:
    sample_id: str
    label: int
    vectors: SampleVectors


def _write_block(fh, matrix: np.ndarray) -> None:
    flat = np.ascontiguousarray(matrix, dtype="<f4").reshape(-1)
    fh.write(struct.pack("<I", flat.size))
    fh.write(flat.tobytes())


def _read_block(fh, rows: int, dim: int) -> np.ndarray:
    (count,) = struct.unpack("<I", fh.read(4))
    if count != rows * dim:
        raise ValueError(f"block carries {count} floats, expected {rows * dim}")
    data = fh.read(4 * count)
    return np.frombuffer(data, dtype="<f4").reshape(rows, dim).copy()


def write_vector_file(path, records: list[VectorRecord], tau1: int, tau2: int, dim: int) -> None:
    with open(path, "wb") as fh:
        fh.write(f"{_VEC_MAGIC} {tau1} {tau2} {dim}\n".encode("ascii"))
        for rec in records:
            sid = rec.sample_id.encode("utf-8")
            fh.write(struct.pack("<I", len(sid)))
            fh.write(sid)
            fh.write(
                struct.pack(
                    "<iII",
                    rec.label,
                    rec.vectors.real_gadget_length,
                    rec.vectors.real_attention_length,
                )
            )
            _write_block(fh, rec.vectors.gadget_matrix)
            _write_block(fh, rec.vectors.attention_matrix)


def read_vector_file(path) -> tuple[list[VectorRecord], int, int, int]:
    """Returns (records, tau1, tau2, dim)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if " ".join(header[:2]) != _VEC_MAGIC:
            raise ValueError(f"not a vector file: {path}")
        tau1, tau2, dim = int(header[2]), int(header[3]), int(header[4])
        records: list[VectorRecord] = []
        while True:
            raw = fh.read(4)
            if not raw:
                break
            (id_len,) = struct.unpack("<I", raw)
            sample_id = fh.read(id_len).decode("utf-8")
            label, g_len, a_len = struct.unpack("<iII", fh.read(12))
            gadget = _read_block(fh, tau1, dim)
            attention = _read_block(fh, tau2, dim)
            records.append(
                VectorRecord(
                    sample_id=sample_id,
                    label=label,
                    vectors=SampleVectors(
                        gadget_matrix=gadget,
                        attention_matrix=attention,
                        real_gadget_length=g_len,
                        real_attention_length=a_len,
                    ),
                )
            )
    return records, tau1, tau2, dim
