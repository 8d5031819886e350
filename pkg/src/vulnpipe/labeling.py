"""Multiclass labels for gadgets: CWE aggregation and vulnerable-line matching.

CWE ids aggregate upward through a hierarchy slice to the third-level types
of the label table. A gadget overlapping an annotated vulnerable line gets
that annotation's aggregated label; otherwise it is label 0. Overlaps with
different aggregated labels resolve to the lowest label and are logged.
"""
from __future__ import annotations

import importlib.resources
import logging
from dataclasses import dataclass, field

from .slicer import CodeGadget

log = logging.getLogger(__name__)


class UnmappedCwe(KeyError):
    pass


def normalize_cwe_id(cwe: str | int) -> str:
    text = str(cwe).strip().upper()
    if text.startswith("CWE-"):
        text = text[4:]
    if not text.isdigit():
        raise ValueError(f"malformed CWE id: {cwe!r}")
    return f"CWE-{int(text):03d}"


@dataclass
class CweTree:
    parent_of: dict[str, tuple[str, ...]] = field(default_factory=dict)
    level: dict[str, int] = field(default_factory=dict)

    def validate_acyclic(self) -> None:
        state: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(node: str) -> None:
            mark = state.get(node)
            if mark == 1:
                raise ValueError(f"cycle in CWE hierarchy at {node}")
            if mark == 2:
                return
            state[node] = 1
            for parent in self.parent_of.get(node, ()):
                visit(parent)
            state[node] = 2

        for node in self.parent_of:
            visit(node)


@dataclass
class LabelTable:
    entries: list[tuple[frozenset[str], int]] = field(default_factory=list)

    @property
    def members(self) -> frozenset[str]:
        out: set[str] = set()
        for cwes, _ in self.entries:
            out |= cwes
        return frozenset(out)

    def validate(self) -> None:
        labels = [label for _, label in self.entries]
        if sorted(labels) != list(range(1, len(labels) + 1)):
            raise ValueError("label table must carry each label 1..N exactly once")


@dataclass
class VulnAnnotation:
    path: str
    lines: set[int]
    cwe: str


def load_cwe_tree(path) -> CweTree:
    tree = CweTree()
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            entry = raw.split("#", 1)[0].strip()
            if not entry:
                continue
            parts = entry.split("\t")
            cwe = normalize_cwe_id(parts[0])
            tree.level[cwe] = int(parts[1])
            parents = tuple(
                normalize_cwe_id(p) for p in (parts[2].split() if len(parts) > 2 else [])
            )
            tree.parent_of[cwe] = parents
    tree.validate_acyclic()
    return tree


def load_label_table(path) -> LabelTable:
    table = LabelTable()
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            entry = raw.split("#", 1)[0].strip()
            if not entry:
                continue
            label_text, cwes_text = entry.split("\t")
            cwes = frozenset(normalize_cwe_id(c) for c in cwes_text.split())
            table.entries.append((cwes, int(label_text)))
    table.validate()
    return table


def _data_path(name: str):
    return importlib.resources.files("vulnpipe") / "data" / name


def default_cwe_tree() -> CweTree:
    return load_cwe_tree(str(_data_path("cwe_hierarchy.tsv")))


def default_label_table() -> LabelTable:
    return load_label_table(str(_data_path("label_table.tsv")))


def aggregate_cwe(cwe: str | int, tree: CweTree, table: LabelTable) -> int:
    """Label of the third-level type(s) reached by walking the hierarchy upward.

    The nearest table member on each upward path is kept; among table entries
    covering all reached types the smallest set wins, lowest label on ties.
    """
    start = normalize_cwe_id(cwe)
    members = table.members
    reached: set[str] = set()
    frontier = [start]
    seen: set[str] = set()
    while frontier:
        node = frontier.pop()
        if node in seen:
            continue
        seen.add(node)
        if node in members:
            reached.add(node)
            continue
        frontier.extend(tree.parent_of.get(node, ()))
    if not reached:
        raise UnmappedCwe(start)
    covering = [(len(cwes), label) for cwes, label in table.entries if reached <= cwes]
    if covering:
        return min(covering)[1]
    touching = [(len(cwes), label) for cwes, label in table.entries if cwes & reached]
    if touching:
        return min(touching)[1]
    raise UnmappedCwe(start)


def label_gadget(
    gadget: CodeGadget,
    annotations,
    tree: CweTree | None = None,
    table: LabelTable | None = None,
) -> int:
    """0 if no gadget statement lies on an annotated vulnerable line, else the
    aggregated label; conflicting overlaps keep the lowest label (logged)."""
    tree = tree if tree is not None else default_cwe_tree()
    table = table if table is not None else default_label_table()
    gadget_lines = gadget.lines
    hits: list[int] = []
    for ann in annotations:
        if ann.path and gadget.source_path and ann.path != gadget.source_path:
            continue
        if gadget_lines & ann.lines:
            hits.append(aggregate_cwe(ann.cwe, tree, table))
    if not hits:
        return 0
    labels = sorted(set(hits))
    if len(labels) > 1:
        log.warning(
            "conflicting labels %s for gadget %d (%s); keeping %d",
            labels,
            gadget.id,
            gadget.source_path,
            labels[0],
        )
    return labels[0]


def load_manifest(path) -> list[VulnAnnotation]:
    """Annotation manifest: one record per line, `path<TAB>cwe<TAB>l1,l2,...`."""
    out: list[VulnAnnotation] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            entry = raw.rstrip("\n")
            if not entry.strip() or entry.lstrip().startswith("#"):
                continue
            parts = entry.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            rec_path, cwe, lines_text = parts
            lines = {int(x) for x in lines_text.split(",") if x.strip()}
            if not lines:
                raise ValueError(f"{path}:{lineno}: empty vulnerable-line set")
            out.append(VulnAnnotation(path=rec_path, lines=lines, cwe=normalize_cwe_id(cwe)))
    return out
