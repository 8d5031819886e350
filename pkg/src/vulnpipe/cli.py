"""Command-line entry points.

Verbs: `extract` (source -> gadget records), `embed` (records -> embedding
model), `vectorize` (records + model -> binary vectors), `evaluate`
(prediction files -> metrics), `pipeline` (everything). All flags mirror
PipelineConfig; a JSON config file may set any of them.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import embedding as embedding_mod
from .metrics import (
    SampleIdMismatch,
    argmax_label,
    compute_report,
    fuse_predictions,
    read_prediction_file,
    render_report,
)
from .pipeline import (
    DATA_ONLY,
    PipelineConfig,
    extract_samples,
    load_inputs,
    resolve_security_functions,
    run_pipeline,
)
from .records import read_gadget_file, write_gadget_file, write_vector_file

log = logging.getLogger(__name__)

_CONFIG_KEYS = (
    "security_functions",
    "manifest",
    "cwe_tree",
    "label_table",
    "tau1",
    "tau2",
    "window",
    "dimension",
    "epochs",
    "min_count",
    "negatives",
    "learning_rate",
    "split_ratio",
    "seed",
    "jobs",
    "output_dir",
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with PipelineConfig fields")
    p.add_argument("--input", action="append", dest="inputs", default=None,
                   help="C file or directory (repeatable)")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--security-functions", dest="security_functions")
    p.add_argument("--manifest", help="vulnerable-line manifest (path\\tcwe\\tlines)")
    p.add_argument("--cwe-tree", dest="cwe_tree")
    p.add_argument("--label-table", dest="label_table")
    p.add_argument("--tau1", type=int)
    p.add_argument("--tau2", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--dimension", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--split-ratio", dest="split_ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes for per-program stages")
    p.add_argument("--data-only", action="store_true", default=None,
                   help="follow data dependence only when slicing")
    p.add_argument("--disable-r1", action="store_true", default=None)
    p.add_argument("--disable-r2", action="store_true", default=None)
    p.add_argument("--disable-r3", action="store_true", default=None)


def _config_from_args(args) -> PipelineConfig:
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    overrides["inputs"] = args.inputs
    if args.data_only:
        overrides["dependence"] = DATA_ONLY
    for rule in ("r1", "r2", "r3"):
        if getattr(args, f"disable_{rule}", None):
            overrides[f"rule_{rule}"] = False
    if args.config:
        return PipelineConfig.from_file(args.config, **overrides)
    clean = {k: v for k, v in overrides.items() if v is not None}
    clean.setdefault("inputs", [])
    return PipelineConfig(**clean)


def cmd_extract(args) -> int:
    config = _config_from_args(args)
    if not config.inputs:
        log.error("no --input given")
        return 2
    security = resolve_security_functions(config)
    programs, annotations = load_inputs(config)
    samples = extract_samples(programs, annotations, security, config)
    write_gadget_file(args.output, [s.record for s in samples])
    if args.dump_graphs:
        from pathlib import Path

        from .depgraph import build_sdg

        dump_dir = Path(args.dump_graphs)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for program in programs:
            name = program.path.replace("/", "__") + ".edges"
            (dump_dir / name).write_text(build_sdg(program).dump(), encoding="utf-8")
    for issue in (i for p in programs for i in p.issues):
        log.warning("parse issue: %s", issue)
    log.info("wrote %d gadget records to %s", len(samples), args.output)
    return 0


def cmd_embed(args) -> int:
    records = read_gadget_file(args.records)
    config = _config_from_args(args)
    corpus = embedding_mod.corpus_from_records(records)
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
    embedding_mod.save_model(model, args.output)
    log.info("trained %d-token vocabulary, wrote %s", len(model.vocabulary), args.output)
    return 0


def cmd_vectorize(args) -> int:
    from .lexer import lex

    config = _config_from_args(args)
    records = read_gadget_file(args.records)
    model = embedding_mod.load_model(args.model)
    vec_records = []
    for rec in records:
        gadget_tokens = [t.text for line in rec.statements for t in lex(line)]
        att_lines = [rec.statements[i] for i in rec.attention_indices]
        att_tokens = [t.text for line in att_lines for t in lex(line)]
        vec_records.append(
            _sample_to_vec(rec, gadget_tokens, att_tokens, model, config)
        )
    write_vector_file(args.output, vec_records, config.tau1, config.tau2, model.dimension)
    log.info("wrote %d vector records to %s", len(vec_records), args.output)
    return 0


def _sample_to_vec(rec, gadget_tokens, att_tokens, model, config):
    from .embedding import SampleVectors, vectorize
    from .records import VectorRecord

    vectors = SampleVectors(
        gadget_matrix=vectorize(gadget_tokens, model, config.tau1),
        attention_matrix=vectorize(att_tokens, model, config.tau2),
        real_gadget_length=min(len(gadget_tokens), config.tau1),
        real_attention_length=min(len(att_tokens), config.tau2),
    )
    return VectorRecord(sample_id=f"g{rec.index:06d}", label=rec.label, vectors=vectors)


def evaluate_single(path, num_classes: int | None = None):
    records = read_prediction_file(path)
    true = [r.true_label for r in records]
    pred = [
        r.predicted_label if r.predicted_label is not None else argmax_label(r.distribution)
        for r in records
    ]
    m = num_classes or _infer_classes(records)
    return compute_report(true, pred, list(range(1, m + 1)))


def evaluate_fused(path_a, path_b, num_classes: int | None = None):
    recs_a = read_prediction_file(path_a)
    recs_b = read_prediction_file(path_b)
    by_id_a = {r.sample_id: r for r in recs_a}
    by_id_b = {r.sample_id: r for r in recs_b}
    if set(by_id_a) != set(by_id_b):
        missing = set(by_id_a) ^ set(by_id_b)
        raise SampleIdMismatch(f"sample ids differ between files: {sorted(missing)[:5]}")
    for r in recs_a + recs_b:
        if r.distribution is None:
            raise ValueError("fusion needs distribution-form prediction files")
    true: list[int] = []
    fused: list[int] = []
    for sid in sorted(by_id_a):
        a, b = by_id_a[sid], by_id_b[sid]
        if a.true_label != b.true_label:
            raise SampleIdMismatch(f"true label disagreement for sample {sid}")
        true.append(a.true_label)
        fused.append(fuse_predictions(a.distribution, b.distribution))
    m = num_classes or _infer_classes(recs_a + recs_b)
    return compute_report(true, fused, list(range(1, m + 1)))


def _infer_classes(records) -> int:
    m = 1
    for r in records:
        m = max(m, r.true_label)
        if r.predicted_label is not None:
            m = max(m, r.predicted_label)
        if r.distribution is not None:
            m = max(m, len(r.distribution) - 1)
    return m


def cmd_evaluate(args) -> int:
    if args.fuse:
        if not args.predictions2:
            log.error("--fuse needs a second prediction file")
            return 2
        report = evaluate_fused(args.predictions, args.predictions2, args.classes)
    else:
        report = evaluate_single(args.predictions, args.classes)
    sys.stdout.write(render_report(report, per_class=not args.no_per_class))
    return 0


def cmd_pipeline(args) -> int:
    config = _config_from_args(args)
    if not config.inputs:
        log.error("no --input given")
        return 2
    report = run_pipeline(config)
    sys.stdout.write(report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vulnpipe",
        description="Slice C programs into labeled, vectorized vulnerability-detection samples",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="source files -> gadget records")
    _add_config_flags(p_extract)
    p_extract.add_argument("--output", required=True, help="gadget records file")
    p_extract.add_argument("--dump-graphs", dest="dump_graphs",
                           help="also write per-program dependence edge dumps here")
    p_extract.set_defaults(func=cmd_extract)

    p_embed = sub.add_parser("embed", help="gadget records -> embedding model")
    _add_config_flags(p_embed)
    p_embed.add_argument("--records", required=True)
    p_embed.add_argument("--output", required=True)
    p_embed.set_defaults(func=cmd_embed)

    p_vec = sub.add_parser("vectorize", help="records + model -> binary vectors")
    _add_config_flags(p_vec)
    p_vec.add_argument("--records", required=True)
    p_vec.add_argument("--model", required=True)
    p_vec.add_argument("--output", required=True)
    p_vec.set_defaults(func=cmd_vectorize)

    p_eval = sub.add_parser("evaluate", help="prediction file(s) -> metrics")
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--predictions2")
    p_eval.add_argument("--fuse", action="store_true")
    p_eval.add_argument("--classes", type=int, help="number of vulnerability classes m")
    p_eval.add_argument("--no-per-class", action="store_true")
    p_eval.set_defaults(func=cmd_evaluate)

    p_pipe = sub.add_parser("pipeline", help="run the full dataset pipeline")
    _add_config_flags(p_pipe)
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
