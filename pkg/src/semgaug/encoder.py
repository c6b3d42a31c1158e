"""Task-aware classifier: 1-D conv feature extractor, global average pooling,
linear head. Serves three roles in the pipeline (condition extractor,
confidence filter, downstream/evaluation classifier), each as an
independently trained instance."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import nn, serialize
from .data import WindowedDataset
from .errors import ConfigError

ENCODER_MAGIC = b"SAUGM"


@dataclass
class EncoderArch:
    channels: int
    length: int
    class_count: int
    feature_dim: int = 32
    widths: tuple = (16, 32)
    kernels: tuple = (7, 5)
    strides: tuple = (2, 2)

    def conv_specs(self):
        specs = list(zip(self.widths, self.kernels, self.strides))
        specs.append((self.feature_dim, 3, 1))
        return specs

    def to_meta(self):
        return {
            "channels": self.channels, "length": self.length,
            "class_count": self.class_count, "feature_dim": self.feature_dim,
            "widths": list(self.widths), "kernels": list(self.kernels),
            "strides": list(self.strides),
        }

    @classmethod
    def from_meta(cls, meta):
        return cls(
            channels=meta["channels"], length=meta["length"],
            class_count=meta["class_count"], feature_dim=meta["feature_dim"],
            widths=tuple(meta["widths"]), kernels=tuple(meta["kernels"]),
            strides=tuple(meta["strides"]),
        )


@dataclass
class SemanticFeature:
    vector: np.ndarray
    gesture_label: int
    confidence: Optional[float] = None


@dataclass
class EncoderTrainConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.01
    lr_decay_epoch: int = 20
    momentum: float = 0.9
    seed: int = 0


def init_params(arch: EncoderArch, seed, dtype=np.float64):
    rng = np.random.default_rng(seed)
    params = {}
    in_ch = arch.channels
    for i, (out_ch, k, _) in enumerate(arch.conv_specs()):
        params[f"conv{i}.w"] = nn.glorot_uniform(rng, (out_ch, in_ch, k), in_ch * k, out_ch * k, dtype)
        params[f"conv{i}.b"] = np.zeros(out_ch, dtype=dtype)
        in_ch = out_ch
    params["head.w"] = nn.glorot_uniform(
        rng, (arch.class_count, arch.feature_dim), arch.feature_dim, arch.class_count, dtype
    )
    params["head.b"] = np.zeros(arch.class_count, dtype=dtype)
    return params


def _forward(params, arch, x):
    caches = []
    h = x
    for i, (_, k, s) in enumerate(arch.conv_specs()):
        h, c_conv = nn.conv1d_fwd(params, f"conv{i}", h, stride=s, pad=k // 2)
        h, c_act = nn.silu_fwd(h)
        caches.append((c_conv, c_act))
    feat, c_gap = nn.gap_fwd(h)
    logits, c_head = nn.linear_fwd(params, "head", feat)
    return logits, feat, (caches, c_gap, c_head)


def _backward(params, cache, dlogits):
    caches, c_gap, c_head = cache
    grads = {}
    gfeat = nn.linear_bwd(params, grads, c_head, dlogits)
    gh = nn.gap_bwd(c_gap, gfeat)
    for c_conv, c_act in reversed(caches):
        gh = nn.silu_bwd(c_act, gh)
        gh = nn.conv1d_bwd(params, grads, c_conv, gh)
    return grads


class EncoderModel:
    def __init__(self, params, arch: EncoderArch, trained_on_generated=False):
        self.params = params
        self.arch = arch
        self.trained_on_generated = trained_on_generated
        self.history = []

    @property
    def feature_dim(self):
        return self.arch.feature_dim

    @property
    def class_count(self):
        return self.arch.class_count

    def _check_input(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 2:
            values = values[None]
        if values.shape[1] != self.arch.channels or values.shape[2] != self.arch.length:
            raise ValueError(
                f"window shape {values.shape[1:]} does not match model input "
                f"({self.arch.channels}, {self.arch.length})"
            )
        return values

    def features(self, values, batch=512):
        values = self._check_input(values)
        out = []
        for i in range(0, len(values), batch):
            _, feat, _ = _forward(self.params, self.arch, values[i : i + batch])
            out.append(feat)
        return np.concatenate(out)

    def logits(self, values, batch=512):
        values = self._check_input(values)
        out = []
        for i in range(0, len(values), batch):
            lg, _, _ = _forward(self.params, self.arch, values[i : i + batch])
            out.append(lg)
        return np.concatenate(out)

    def head_logits(self, feature_matrix):
        fm = np.atleast_2d(np.asarray(feature_matrix, dtype=np.float64))
        if fm.shape[1] != self.arch.feature_dim:
            raise ValueError(f"feature dim {fm.shape[1]} != model feature dim {self.arch.feature_dim}")
        return fm @ self.params["head.w"].T + self.params["head.b"]

    def save(self, path):
        meta = {"arch": self.arch.to_meta(), "trained_on_generated": self.trained_on_generated}
        serialize.write_model(path, ENCODER_MAGIC, meta, self.params)

    @classmethod
    def load(cls, path):
        meta, raw = serialize.read_model(path, ENCODER_MAGIC)
        params = {k: v.astype(np.float64) for k, v in raw.items()}
        return cls(params, EncoderArch.from_meta(meta["arch"]), meta["trained_on_generated"])


def _dataset_values(data):
    if isinstance(data, WindowedDataset):
        return data.values, data.labels
    values = np.stack([w.values for w in data])
    labels = np.array([w.gesture_label for w in data])
    return values, labels


def train_encoder(train: WindowedDataset, config: EncoderTrainConfig,
                  arch: EncoderArch = None, track: WindowedDataset = None) -> EncoderModel:
    """SGD + cross-entropy with one-shot step decay; deterministic in the seed.

    `track` optionally supplies a held-out set whose accuracy is recorded per
    epoch alongside train accuracy (the training-curve report uses this).
    """
    if len(train) == 0:
        raise ValueError("cannot train on an empty dataset")
    if train.class_count < 2:
        raise ConfigError("need at least 2 classes")
    if config.epochs < 1 or config.batch_size < 1:
        raise ConfigError("epochs and batch_size must be >= 1")
    C, L = train.shape
    if arch is None:
        arch = EncoderArch(channels=C, length=L, class_count=train.class_count)
    params = init_params(arch, config.seed)
    model = EncoderModel(params, arch, trained_on_generated=(train.split_tag == "generated"))
    rng = np.random.default_rng(config.seed)
    opt = nn.SGD(params, config.learning_rate, momentum=config.momentum)
    x_all = train.values
    y_all = train.labels
    n = len(train)
    for epoch in range(1, config.epochs + 1):
        if epoch == config.lr_decay_epoch:
            opt.lr *= 0.1
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            logits, _, cache = _forward(params, arch, x_all[idx])
            _, dlogits = nn.cross_entropy(logits, y_all[idx])
            grads = _backward(params, cache, dlogits)
            opt.step(params, grads)
        entry = {"epoch": epoch, "train_acc": float(np.mean(model.logits(x_all).argmax(1) == y_all))}
        if track is not None:
            entry["test_acc"] = float(np.mean(predict(model, track) == track.labels))
        model.history.append(entry)
    return model


def extract_features(model: EncoderModel, windows):
    """One pre-head feature per window, order preserved, labels copied."""
    values, labels = _dataset_values(windows)
    feats = model.features(values)
    return [SemanticFeature(feats[i], int(labels[i])) for i in range(len(feats))]


def class_confidence(model: EncoderModel, feature, k: int) -> float:
    vec = feature.vector if isinstance(feature, SemanticFeature) else feature
    if not 0 <= k < model.class_count:
        raise ValueError(f"class {k} outside [0, {model.class_count})")
    probs = nn.softmax(model.head_logits(vec))
    return float(probs[0, k])


def confidence_matrix(model: EncoderModel, feature_matrix):
    return nn.softmax(model.head_logits(feature_matrix), axis=1)


def predict(model: EncoderModel, windows):
    """Argmax class per window; ties resolve to the smaller class id."""
    values, _ = _dataset_values(windows)
    return model.logits(values).argmax(axis=1)


def feature_matrix(features):
    return np.stack([f.vector for f in features])
