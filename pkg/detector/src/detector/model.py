"""Three-network architecture: global-feature BLSTM, local-feature BLSTM,
and a fusion network (merge + BLSTM + softmax) trained in stages.

Both feature models mask all-zero rows (padding and out-of-vocabulary
tokens), so predictions are invariant to extra zero-padding. The fusion
model consumes the feature models' full output sequences, zero-pads the
shorter sequence to a common length, concatenates along the feature axis,
re-masks all-zero rows, and classifies with a final BLSTM + softmax.
Feature trunks are frozen during fusion training so the features learned
in stage one survive stage two.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

# importing the package first sets TF env vars before TensorFlow loads
import keras
import tensorflow as tf
from keras import layers


class ShapeMismatch(ValueError):
    pass


class IncompatibleFeatureDims(ValueError):
    pass


@dataclass
class ModelSpec:
    num_classes: int = 41  # labels 0..m
    dim: int = 50
    global_units: int = 300
    global_layers: int = 2
    local_units: int = 200
    local_layers: int = 2
    fusion_units: int = 500
    fusion_layers: int = 1
    activation: str = "tanh"
    dropout: float = 0.5
    learning_rate: float = 0.001
    batch_size: int = 64
    feature_epochs: int = 60
    fusion_epochs: int = 10
    target_accuracy: float | None = None  # early stop once training accuracy reaches this

    def units_for(self, kind: str) -> tuple[int, int]:
        if kind == "global":
            return self.global_units, self.global_layers
        if kind == "local":
            return self.local_units, self.local_layers
        raise ValueError(f"unknown feature kind {kind!r}")


def set_determinism(seed: int) -> None:
    keras.utils.set_random_seed(seed)
    tf.config.experimental.enable_op_determinism()


@keras.saving.register_keras_serializable(package="detector")
class ZeroMaskedRows(layers.Layer):
    """Zero out feature rows whose raw input row is entirely zero."""

    supports_masking = True

    def call(self, inputs):
        feats, raw = inputs
        keep = tf.reduce_any(tf.not_equal(raw, 0.0), axis=-1)
        return feats * tf.cast(keep, feats.dtype)[:, :, None]

    def compute_mask(self, inputs, mask=None):
        return None

    def compute_output_spec(self, inputs):
        feats, _ = inputs
        return keras.KerasTensor(feats.shape, dtype=feats.dtype)


@keras.saving.register_keras_serializable(package="detector")
class PadConcat(layers.Layer):
    """Zero-pad two sequences to a common length and concatenate features."""

    supports_masking = True

    def call(self, inputs):
        a, b = inputs
        ta, tb = tf.shape(a)[1], tf.shape(b)[1]
        t = tf.maximum(ta, tb)
        a = tf.pad(a, [[0, 0], [0, t - ta], [0, 0]])
        b = tf.pad(b, [[0, 0], [0, t - tb], [0, 0]])
        return tf.concat([a, b], axis=-1)

    def compute_mask(self, inputs, mask=None):
        return None

    def compute_output_spec(self, inputs):
        a, b = inputs
        return keras.KerasTensor(
            (a.shape[0], None, a.shape[-1] + b.shape[-1]), dtype=a.dtype
        )


class _StopAtAccuracy(keras.callbacks.Callback):
    def __init__(self, target: float):
        super().__init__()
        self.target = target

    def on_epoch_end(self, epoch, logs=None):
        if logs and logs.get("accuracy", 0.0) >= self.target:
            self.model.stop_training = True


def _compile(model: keras.Model, spec: ModelSpec) -> keras.Model:
    model.compile(
        optimizer=keras.optimizers.RMSprop(learning_rate=spec.learning_rate),
        loss="categorical_crossentropy",
        metrics=["accuracy"],
    )
    return model


def build_feature_trunk(spec: ModelSpec, kind: str) -> keras.Model:
    """Masking + stacked BLSTM layers, emitting the full feature sequence."""
    units, n_layers = spec.units_for(kind)
    inp = keras.Input(shape=(None, spec.dim), name=f"{kind}_tokens")
    x = layers.Masking(0.0)(inp)
    for _ in range(n_layers):
        x = layers.Bidirectional(
            layers.LSTM(units, activation=spec.activation, return_sequences=True)
        )(x)
        x = layers.Dropout(spec.dropout)(x)
    return keras.Model(inp, x, name=f"{kind}_trunk")


def build_feature_classifier(trunk: keras.Model, spec: ModelSpec) -> keras.Model:
    """Trunk plus a temporary mask-aware pooling + softmax head."""
    pooled = layers.GlobalAveragePooling1D()(trunk.output)
    out = layers.Dense(spec.num_classes, activation="softmax")(pooled)
    return _compile(keras.Model(trunk.input, out, name=f"{trunk.name}_classifier"), spec)


@dataclass
class FeatureModel:
    kind: str
    trunk: keras.Model
    classifier: keras.Model
    history: dict = field(default_factory=dict)


def _check_matrices(matrices: np.ndarray, tau: int | None, dim: int, what: str) -> None:
    if matrices.ndim != 3 or matrices.shape[2] != dim or (tau is not None and matrices.shape[1] != tau):
        expected = (tau if tau is not None else "T", dim)
        raise ShapeMismatch(f"{what}: got {matrices.shape[1:]}, expected {expected}")


def train_feature_model(
    matrices: np.ndarray,
    labels: np.ndarray,
    kind: str,
    spec: ModelSpec,
    seed: int,
    expected_tau: int | None = None,
) -> FeatureModel:
    """Stage one: train one feature model with its temporary softmax head."""
    _check_matrices(matrices, expected_tau, spec.dim, f"{kind} feature input")
    if np.any(labels < 0) or np.any(labels >= spec.num_classes):
        raise ValueError("labels outside 0..m")
    set_determinism(seed)
    trunk = build_feature_trunk(spec, kind)
    classifier = build_feature_classifier(trunk, spec)
    callbacks = [_StopAtAccuracy(spec.target_accuracy)] if spec.target_accuracy else []
    hist = classifier.fit(
        matrices,
        keras.utils.to_categorical(labels, spec.num_classes),
        batch_size=spec.batch_size,
        epochs=spec.feature_epochs,
        verbose=0,
        callbacks=callbacks,
    )
    return FeatureModel(kind=kind, trunk=trunk, classifier=classifier, history=hist.history)


def build_fusion_model(
    global_trunk: keras.Model, local_trunk: keras.Model, spec: ModelSpec
) -> keras.Model:
    if global_trunk.input_shape[-1] != local_trunk.input_shape[-1]:
        raise IncompatibleFeatureDims(
            f"{global_trunk.input_shape[-1]} vs {local_trunk.input_shape[-1]}"
        )
    g_in = keras.Input(shape=(None, spec.dim), name="gadget_tokens")
    a_in = keras.Input(shape=(None, spec.dim), name="attention_tokens")
    h_global = ZeroMaskedRows()([global_trunk(g_in), g_in])
    h_local = ZeroMaskedRows()([local_trunk(a_in), a_in])
    merged = PadConcat()([h_global, h_local])
    x = layers.Masking(0.0)(merged)
    for i in range(spec.fusion_layers):
        last = i == spec.fusion_layers - 1
        x = layers.Bidirectional(
            layers.LSTM(spec.fusion_units, activation=spec.activation, return_sequences=not last)
        )(x)
        x = layers.Dropout(spec.dropout)(x)
    out = layers.Dense(spec.num_classes, activation="softmax")(x)
    return keras.Model([g_in, a_in], out, name="fusion")


def train_fusion(
    global_model: FeatureModel,
    local_model: FeatureModel,
    gadgets: np.ndarray,
    attentions: np.ndarray,
    labels: np.ndarray,
    spec: ModelSpec,
    seed: int,
) -> keras.Model:
    """Stage two: freeze both trunks, then train merge + BLSTM + softmax."""
    _check_matrices(gadgets, None, spec.dim, "gadget input")
    _check_matrices(attentions, None, spec.dim, "attention input")
    set_determinism(seed)
    global_model.trunk.trainable = False
    local_model.trunk.trainable = False
    fusion = _compile(build_fusion_model(global_model.trunk, local_model.trunk, spec), spec)
    callbacks = [_StopAtAccuracy(spec.target_accuracy)] if spec.target_accuracy else []
    fusion.fit(
        [gadgets, attentions],
        keras.utils.to_categorical(labels, spec.num_classes),
        batch_size=spec.batch_size,
        epochs=spec.fusion_epochs,
        verbose=0,
        callbacks=callbacks,
    )
    return fusion


def predict_distributions(
    fusion: keras.Model,
    gadgets: np.ndarray,
    attentions: np.ndarray,
    tau1: int | None = None,
    tau2: int | None = None,
    batch_size: int = 256,
) -> np.ndarray:
    """Class distributions for a batch; shapes checked against (tau, dim)."""
    dim = fusion.input_shape[0][-1]
    _check_matrices(gadgets, tau1, dim, "gadget input")
    _check_matrices(attentions, tau2, dim, "attention input")
    return fusion.predict([gadgets, attentions], batch_size=batch_size, verbose=0)


def predict_one(
    fusion: keras.Model,
    gadget_matrix: np.ndarray,
    attention_matrix: np.ndarray,
    tau1: int | None = None,
    tau2: int | None = None,
) -> np.ndarray:
    dist = predict_distributions(
        fusion, gadget_matrix[None, ...], attention_matrix[None, ...], tau1, tau2
    )[0]
    return dist


@dataclass
class Detector:
    spec: ModelSpec
    tau1: int
    tau2: int
    global_model: FeatureModel
    local_model: FeatureModel
    fusion: keras.Model


def train_detector(
    gadgets: np.ndarray,
    attentions: np.ndarray,
    labels: np.ndarray,
    spec: ModelSpec,
    seed: int,
) -> Detector:
    tau1, tau2 = gadgets.shape[1], attentions.shape[1]
    global_model = train_feature_model(gadgets, labels, "global", spec, seed, tau1)
    local_model = train_feature_model(attentions, labels, "local", spec, seed + 1, tau2)
    fusion = train_fusion(global_model, local_model, gadgets, attentions, labels, spec, seed + 2)
    return Detector(spec, tau1, tau2, global_model, local_model, fusion)


def save_detector(detector: Detector, directory) -> None:
    """Checkpoint layout: spec.json, global_trunk.keras, local_trunk.keras,
    fusion.keras (the fusion file embeds the frozen trunks for inference)."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"spec": asdict(detector.spec), "tau1": detector.tau1, "tau2": detector.tau2}
    (out / "spec.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    detector.global_model.trunk.save(out / "global_trunk.keras")
    detector.local_model.trunk.save(out / "local_trunk.keras")
    detector.fusion.save(out / "fusion.keras")


def load_detector(directory) -> Detector:
    root = Path(directory)
    meta = json.loads((root / "spec.json").read_text(encoding="utf-8"))
    spec = ModelSpec(**meta["spec"])
    global_trunk = keras.models.load_model(root / "global_trunk.keras")
    local_trunk = keras.models.load_model(root / "local_trunk.keras")
    fusion = keras.models.load_model(root / "fusion.keras")
    return Detector(
        spec=spec,
        tau1=meta["tau1"],
        tau2=meta["tau2"],
        global_model=FeatureModel("global", global_trunk, global_trunk),
        local_model=FeatureModel("local", local_trunk, local_trunk),
        fusion=fusion,
    )
