"""Train/predict entry points for the fusion detector.

`train` consumes a binary vector file and writes a checkpoint directory;
`predict` loads a checkpoint and writes a distribution-form prediction
file (sampleId, trueLabel, p_0..p_m) consumable by the evaluation tooling.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import model as model_mod
from . import vecfile

log = logging.getLogger(__name__)


def cmd_train(args) -> int:
    samples, tau1, tau2, dim = vecfile.read_vector_file(args.vectors)
    if not samples:
        log.error("no samples in %s", args.vectors)
        return 2
    gadgets, attentions, labels = vecfile.stack(samples)
    num_classes = args.classes or int(labels.max()) + 1
    spec = model_mod.ModelSpec(
        num_classes=num_classes,
        dim=dim,
        batch_size=args.batch_size,
        feature_epochs=args.feature_epochs,
        fusion_epochs=args.fusion_epochs,
        target_accuracy=args.target_accuracy,
    )
    detector = model_mod.train_detector(gadgets, attentions, labels, spec, args.seed)
    model_mod.save_detector(detector, args.checkpoint)
    log.info(
        "trained on %d samples (%d classes, tau1=%d tau2=%d dim=%d); checkpoint: %s",
        len(samples), num_classes, tau1, tau2, dim, args.checkpoint,
    )
    return 0


def cmd_predict(args) -> int:
    detector = model_mod.load_detector(args.checkpoint)
    samples, tau1, tau2, dim = vecfile.read_vector_file(args.vectors)
    if (tau1, tau2) != (detector.tau1, detector.tau2) or dim != detector.spec.dim:
        raise model_mod.ShapeMismatch(
            f"vector file is ({tau1},{tau2},{dim}), checkpoint expects "
            f"({detector.tau1},{detector.tau2},{detector.spec.dim})"
        )
    gadgets, attentions, labels = vecfile.stack(samples)
    dists = model_mod.predict_distributions(
        detector.fusion, gadgets, attentions, detector.tau1, detector.tau2
    )
    vecfile.write_predictions(
        args.output, [s.sample_id for s in samples], labels, dists
    )
    accuracy = float(np.mean(np.argmax(dists, axis=1) == labels)) if len(samples) else 0.0
    log.info("wrote %d predictions to %s (argmax accuracy %.4f)", len(samples), args.output, accuracy)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gadget-detector",
        description="BLSTM feature-fusion multiclass detector over vector files",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="vector file -> checkpoint directory")
    p_train.add_argument("--vectors", required=True)
    p_train.add_argument("--checkpoint", required=True)
    p_train.add_argument("--classes", type=int, help="number of labels 0..m (default: inferred)")
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--feature-epochs", type=int, default=60)
    p_train.add_argument("--fusion-epochs", type=int, default=10)
    p_train.add_argument("--target-accuracy", type=float,
                         help="stop a stage early once training accuracy reaches this")
    p_train.add_argument("--seed", type=int, default=1)
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="checkpoint + vector file -> prediction file")
    p_pred.add_argument("--vectors", required=True)
    p_pred.add_argument("--checkpoint", required=True)
    p_pred.add_argument("--output", required=True)
    p_pred.set_defaults(func=cmd_predict)
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
