"""End-to-end dataset pipeline: parse, slice, label, normalize, extract
attention, embed, vectorize, split by program, and write all artifacts.

Outputs are deterministic for a fixed configuration and seed: re-running
produces byte-identical dataset files. Per-stage timings go to the log
only, never into output files.
"""
from __future__ import annotations

import json
import logging
import statistics
import time
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool
from pathlib import Path
from random import Random

from . import attention as attention_mod
from . import embedding as embedding_mod
from .depgraph import build_sdg
from .labeling import (
    CweTree,
    LabelTable,
    VulnAnnotation,
    default_cwe_tree,
    default_label_table,
    label_gadget,
    load_cwe_tree,
    load_label_table,
    load_manifest,
)
from .lexer import UnterminatedLiteral, lex, strip_directives
from .normalize import normalize_gadget
from .records import GadgetRecord, VectorRecord, write_gadget_file, write_vector_file
from .slicer import extract_gadget
from .source import (
    Program,
    extract_call_sites,
    load_security_functions,
    parse_program,
)

log = logging.getLogger(__name__)

DATA_AND_CONTROL = "data+control"
DATA_ONLY = "data-only"


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    output_dir: str = "out"
    security_functions: str | None = None  # path; None = packaged default
    manifest: str | None = None
    cwe_tree: str | None = None
    label_table: str | None = None
    tau1: int = 500
    tau2: int = 100
    window: int = 10
    dimension: int = 50
    epochs: int = 5
    min_count: int = 1
    negatives: int = 5
    learning_rate: float = 0.025
    rule_r1: bool = True
    rule_r2: bool = True
    rule_r3: bool = True
    dependence: str = DATA_AND_CONTROL
    split_ratio: float = 0.8
    seed: int = 1
    jobs: int = 1  # worker processes for the per-program stages

    def __post_init__(self) -> None:
        if self.tau1 < 1 or self.tau2 < 1:
            raise ValueError("tau1 and tau2 must be >= 1")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError("split_ratio must lie in (0, 1)")
        if self.dependence not in (DATA_AND_CONTROL, DATA_ONLY):
            raise ValueError(f"unknown dependence mode {self.dependence!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def enabled_rules(self) -> tuple[str, ...]:
        rules = []
        if self.rule_r1:
            rules.append("r1")
        if self.rule_r2:
            rules.append("r2")
        if self.rule_r3:
            rules.append("r3")
        return tuple(rules)

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass
class Sample:
    sample_id: str
    program_path: str
    record: GadgetRecord
    gadget_tokens: list[str]
    attention_tokens: list[str]
    label: int


@dataclass
class RunReport:
    programs: int = 0
    gadgets: int = 0
    vulnerable: int = 0
    non_vulnerable: int = 0
    label_histogram: dict[int, int] = field(default_factory=dict)
    mean_gadget_statements: float = 0.0
    median_gadget_statements: float = 0.0
    train_programs: int = 0
    test_programs: int = 0
    train_gadgets: int = 0
    test_gadgets: int = 0
    parse_issues: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        data = asdict(self)
        data["label_histogram"] = {str(k): v for k, v in sorted(self.label_histogram.items())}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


def ingest_sard(root_dir, manifest_path=None) -> tuple[list[Program], list[VulnAnnotation]]:
    """Parse every .c file under root_dir; attach manifest annotations by path.

    Paths are stored relative to root_dir (posix separators). Programs
    missing from the manifest load anyway and label 0.
    """
    root = Path(root_dir)
    annotations = load_manifest(manifest_path) if manifest_path else []
    annotated_paths = {a.path for a in annotations}
    programs: list[Program] = []
    for file in sorted(root.rglob("*.c")):
        rel = file.relative_to(root).as_posix()
        try:
            source = file.read_text(encoding="utf-8", errors="replace")
            tokens = lex(strip_directives(source))
        except UnterminatedLiteral as err:
            broken = Program(path=rel)
            broken.issues.append(f"{rel}: {err}")
            programs.append(broken)
            continue
        programs.append(parse_program(tokens, path=rel))
        if annotations and rel not in annotated_paths:
            log.warning("missing manifest entry for %s (gadgets will label 0)", rel)
    return programs, annotations


def _program_samples(
    program: Program,
    annotations: list[VulnAnnotation],
    security_functions: list[str],
    config: PipelineConfig,
    tree: CweTree,
    table: LabelTable,
) -> list[Sample]:
    """Steps I-IV for one program; sample indices are assigned by the caller."""
    include_control = config.dependence == DATA_AND_CONTROL
    sdg = build_sdg(program)
    out: list[Sample] = []
    for site in extract_call_sites(program, security_functions):
        gadget = extract_gadget(
            sdg, site, include_control=include_control, source_path=program.path
        )
        label = label_gadget(gadget, annotations, tree, table)
        normalized, _ = normalize_gadget(gadget, security_functions)
        att = attention_mod.extract_attention(normalized, rules=config.enabled_rules)
        record = GadgetRecord(
            index=0,
            path=program.path,
            callee=site.callee,
            line=site.statement.line,
            statements=[s.text() for s in normalized.statements],
            attention_indices=att.indices,
            label=label,
        )
        out.append(
            Sample(
                sample_id="",
                program_path=program.path,
                record=record,
                gadget_tokens=embedding_mod.gadget_tokens(normalized),
                attention_tokens=embedding_mod.attention_tokens(att.statements),
                label=label,
            )
        )
    return out


def extract_samples(
    programs: list[Program],
    annotations: list[VulnAnnotation],
    security_functions: list[str],
    config: PipelineConfig,
    tree: CweTree | None = None,
    table: LabelTable | None = None,
) -> list[Sample]:
    """Steps I-IV for every program: slice, label, normalize, extract attention.

    With config.jobs > 1 the per-program stages run in a worker pool;
    results are collected in program order, so output is identical either way.
    """
    tree = tree if tree is not None else default_cwe_tree()
    table = table if table is not None else default_label_table()
    by_path: dict[str, list[VulnAnnotation]] = {}
    for ann in annotations:
        by_path.setdefault(ann.path, []).append(ann)
    tasks = [
        (program, by_path.get(program.path, []), security_functions, config, tree, table)
        for program in programs
    ]
    if config.jobs > 1 and len(tasks) > 1:
        with Pool(config.jobs) as pool:
            per_program = pool.starmap(_program_samples, tasks)
    else:
        per_program = [_program_samples(*task) for task in tasks]

    samples: list[Sample] = []
    for group in per_program:
        for sample in group:
            sample.record.index = len(samples)
            sample.sample_id = f"g{len(samples):06d}"
            samples.append(sample)
    return samples


def split_by_program(samples: list[Sample], ratio: float, seed: int):
    """Program-level split: no program contributes gadgets to both sides."""
    paths = sorted({s.program_path for s in samples})
    rng = Random(seed)
    rng.shuffle(paths)
    n_train = int(len(paths) * ratio)
    train_paths = set(paths[:n_train])
    train = [s for s in samples if s.program_path in train_paths]
    test = [s for s in samples if s.program_path not in train_paths]
    return train, test, train_paths


def _vectorize_samples(samples, model, config) -> list[VectorRecord]:
    out: list[VectorRecord] = []
    for s in samples:
        vectors = embedding_mod.SampleVectors(
            gadget_matrix=embedding_mod.vectorize(s.gadget_tokens, model, config.tau1),
            attention_matrix=embedding_mod.vectorize(s.attention_tokens, model, config.tau2),
            real_gadget_length=min(len(s.gadget_tokens), config.tau1),
            real_attention_length=min(len(s.attention_tokens), config.tau2),
        )
        out.append(VectorRecord(sample_id=s.sample_id, label=s.label, vectors=vectors))
    return out


def resolve_security_functions(config: PipelineConfig) -> list[str]:
    path = config.security_functions or str(
        Path(__file__).parent / "data" / "security_functions.txt"
    )
    return load_security_functions(path)


def load_inputs(config: PipelineConfig) -> tuple[list[Program], list[VulnAnnotation]]:
    """Parse the configured files/directories; collect their annotations."""
    programs: list[Program] = []
    annotations: list[VulnAnnotation] = []
    manifest_loaded = False
    for entry in config.inputs:
        path = Path(entry)
        if path.is_dir():
            progs, anns = ingest_sard(path, config.manifest)
            programs.extend(progs)
            annotations.extend(anns)
            manifest_loaded = manifest_loaded or bool(config.manifest)
        else:
            source = path.read_text(encoding="utf-8", errors="replace")
            try:
                tokens = lex(strip_directives(source))
            except UnterminatedLiteral as err:
                broken = Program(path=path.name)
                broken.issues.append(f"{path.name}: {err}")
                programs.append(broken)
                continue
            programs.append(parse_program(tokens, path=path.name))
    if config.manifest and not manifest_loaded:
        annotations.extend(load_manifest(config.manifest))
    return programs, annotations


def run_pipeline(config: PipelineConfig) -> RunReport:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    security = resolve_security_functions(config)
    tree = load_cwe_tree(config.cwe_tree) if config.cwe_tree else None
    table = load_label_table(config.label_table) if config.label_table else None

    t0 = time.perf_counter()
    programs, annotations = load_inputs(config)
    log.info("parse: %d programs in %.3fs", len(programs), time.perf_counter() - t0)

    t1 = time.perf_counter()
    samples = extract_samples(programs, annotations, security, config, tree, table)
    log.info("slice+label+normalize+attention: %d gadgets in %.3fs", len(samples), time.perf_counter() - t1)

    train, test, train_paths = split_by_program(samples, config.split_ratio, config.seed)

    t2 = time.perf_counter()
    corpus = [s.gadget_tokens for s in train] or [s.gadget_tokens for s in samples]
    model = None
    if any(corpus):
        model = embedding_mod.train_skipgram(
            corpus,
            window=config.window,
            dimension=config.dimension,
            epochs=config.epochs,
            min_count=config.min_count,
            negatives=config.negatives,
            learning_rate=config.learning_rate,
            seed=config.seed,
        )
        log.info("embedding: |V|=%d in %.3fs", len(model.vocabulary), time.perf_counter() - t2)

    write_gadget_file(out_dir / "gadgets_train.txt", [s.record for s in train])
    write_gadget_file(out_dir / "gadgets_test.txt", [s.record for s in test])
    if model is not None:
        embedding_mod.save_model(model, out_dir / "embedding_model.txt")
        t3 = time.perf_counter()
        write_vector_file(
            out_dir / "vectors_train.bin",
            _vectorize_samples(train, model, config),
            config.tau1,
            config.tau2,
            config.dimension,
        )
        write_vector_file(
            out_dir / "vectors_test.bin",
            _vectorize_samples(test, model, config),
            config.tau1,
            config.tau2,
            config.dimension,
        )
        log.info("vectorize+write: %.3fs", time.perf_counter() - t3)

    histogram: dict[int, int] = {}
    for s in samples:
        histogram[s.label] = histogram.get(s.label, 0) + 1
    sizes = [len(s.record.statements) for s in samples]
    report = RunReport(
        programs=len(programs),
        gadgets=len(samples),
        vulnerable=sum(1 for s in samples if s.label != 0),
        non_vulnerable=sum(1 for s in samples if s.label == 0),
        label_histogram=histogram,
        mean_gadget_statements=float(statistics.fmean(sizes)) if sizes else 0.0,
        median_gadget_statements=float(statistics.median(sizes)) if sizes else 0.0,
        train_programs=len(train_paths),
        test_programs=len({s.program_path for s in test}),
        train_gadgets=len(train),
        test_gadgets=len(test),
        parse_issues=[issue for p in programs for issue in p.issues],
    )
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    log.info("pipeline done: %d gadgets (%d vulnerable)", report.gadgets, report.vulnerable)
    return report
