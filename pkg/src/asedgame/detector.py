"""Differentiable surrogate steganalyzer.

Fixed high-pass filters, mean absolute response per filter, standardization,
then a logistic scoring head. Gradients with respect to both the head and the
input pixels are derived by hand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels

_KV = np.array([
    [-1, 2, -2, 2, -1],
    [2, -6, 8, -6, 2],
    [-2, 8, -12, 8, -2],
    [2, -6, 8, -6, 2],
    [-1, 2, -2, 2, -1],
], dtype=float) / 12.0

FILTERS = {
    "kv": _KV,
    "dh": np.array([[1.0, -1.0]]),
    "dv": np.array([[1.0], [-1.0]]),
    "d2h": np.array([[1.0, -2.0, 1.0]]),
    "d2v": np.array([[1.0], [-2.0], [1.0]]),
    "kb": np.array([[-1.0, 2.0, -1.0], [2.0, -4.0, 2.0], [-1.0, 2.0, -1.0]]) / 4.0,
    "d3h": np.array([[1.0, -3.0, 3.0, -1.0]]),
    "d3v": np.array([[1.0], [-3.0], [3.0], [-1.0]]),
}
for _k in FILTERS.values():
    _k.setflags(write=False)

DEFAULT_BANK = ("kv", "dh", "dv", "d2h", "d2v", "kb", "d3h", "d3v")
LOG_CLAMP = 1e-12


@dataclass(frozen=True, eq=False)
class DetectorModel:
    """Scoring head over standardized filter features.

    ``feature_shift`` and ``feature_scale`` are fixed at training time from the
    training features; the trainable parameters are ``weights`` and ``bias``.
    """

    weights: np.ndarray
    bias: float = 0.0
    kernel_ids: tuple = DEFAULT_BANK
    feature_shift: np.ndarray = None
    feature_scale: np.ndarray = None

    def __post_init__(self):
        ids = tuple(self.kernel_ids)
        unknown = [k for k in ids if k not in FILTERS]
        if unknown:
            raise ValueError(f"unknown filters {unknown}")
        n = len(ids)
        w = np.array(self.weights, dtype=float).ravel()
        shift = np.zeros(n) if self.feature_shift is None else np.array(self.feature_shift, dtype=float).ravel()
        scale = np.ones(n) if self.feature_scale is None else np.array(self.feature_scale, dtype=float).ravel()
        if w.size != n or shift.size != n or scale.size != n:
            raise ValueError("weights/shift/scale must have one entry per filter")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("weights must be finite")
        if np.any(scale <= 0):
            raise ValueError("feature scale must be positive")
        for arr in (w, shift, scale):
            arr.setflags(write=False)
        object.__setattr__(self, "kernel_ids", ids)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "feature_shift", shift)
        object.__setattr__(self, "feature_scale", scale)

    @classmethod
    def zeros(cls, kernel_ids=DEFAULT_BANK) -> "DetectorModel":
        return cls(np.zeros(len(kernel_ids)), 0.0, kernel_ids)

    @property
    def filter_bank(self) -> tuple:
        return tuple(FILTERS[k] for k in self.kernel_ids)

    def with_params(self, weights, bias) -> "DetectorModel":
        return DetectorModel(weights, bias, self.kernel_ids, self.feature_shift, self.feature_scale)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    iterations: int = 1500
    batch_size: int = 32
    seed: int = 0
    validation_every: int = 50
    momentum: float = 0.9

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size <= 0 or self.batch_size % 2:
            raise ValueError("batch_size must be a positive even number (cover/stego pairs)")
        if self.iterations < 0 or self.validation_every <= 0:
            raise ValueError("iterations must be >= 0 and validation_every > 0")


@dataclass(frozen=True)
class ErrorReport:
    p_fa: float
    p_md: float
    p_e: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "p_e", (self.p_fa + self.p_md) / 2.0)


def _image(image) -> np.ndarray:
    px = getattr(image, "pixels", image)
    return np.ascontiguousarray(px, dtype=float)


def _check_size(model: DetectorModel, x: np.ndarray) -> None:
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {x.shape}")
    kh = max(k.shape[0] for k in model.filter_bank)
    kw = max(k.shape[1] for k in model.filter_bank)
    if x.shape[0] < kh or x.shape[1] < kw:
        raise ValueError(f"image {x.shape} is smaller than the filter support ({kh}, {kw})")


def features(model_or_ids, image) -> np.ndarray:
    """Mean absolute response of each filter (raw, before standardization)."""
    ids = model_or_ids.kernel_ids if isinstance(model_or_ids, DetectorModel) else tuple(model_or_ids)
    x = _image(image)
    return np.array([np.mean(np.abs(kernels.correlate_valid(x, FILTERS[k]))) for k in ids])


def batch_features(model_or_ids, images) -> np.ndarray:
    ids = model_or_ids.kernel_ids if isinstance(model_or_ids, DetectorModel) else tuple(model_or_ids)
    return np.array([features(ids, im) for im in images]).reshape(len(images), len(ids))


def _standardize(model: DetectorModel, feats: np.ndarray) -> np.ndarray:
    return (feats - model.feature_shift) / model.feature_scale


def _sigmoid(s):
    return 0.5 * (1.0 + np.tanh(0.5 * s))


def logits_from_features(model: DetectorModel, feats: np.ndarray) -> np.ndarray:
    return _standardize(model, feats) @ model.weights + model.bias


def scores_from_features(model: DetectorModel, feats: np.ndarray) -> np.ndarray:
    return np.clip(_sigmoid(logits_from_features(model, feats)), 1e-15, 1.0 - 1e-15)


def forward(model: DetectorModel, image) -> float:
    """Probability that ``image`` is stego. Decision is stego iff the score is >= 0.5."""
    x = _image(image)
    _check_size(model, x)
    return float(scores_from_features(model, features(model, x)[None, :])[0])


def _xent(phi, y):
    phi = np.clip(phi, LOG_CLAMP, 1.0 - LOG_CLAMP)
    return -(y * np.log(phi) + (1 - y) * np.log(1.0 - phi))


def loss(model: DetectorModel, image, label: int) -> float:
    """Binary cross-entropy of the detector on one labelled image."""
    if label not in (0, 1):
        raise ValueError("label must be 0 (cover) or 1 (stego)")
    return float(_xent(forward(model, image), label))


def _batch_arrays(model, batch, labels=None):
    if labels is None:
        images, labels = zip(*batch)
    else:
        images = batch
    feats = batch_features(model, list(images))
    return feats, np.asarray(labels, dtype=float)


def param_gradient(model: DetectorModel, batch, labels=None) -> tuple[np.ndarray, float]:
    """Gradient of the mean batch loss with respect to ``(weights, bias)``.

    ``batch`` is a sequence of ``(image, label)`` pairs, or of images when
    ``labels`` is given.
    """
    feats, y = _batch_arrays(model, batch, labels)
    if y.size == 0:
        raise ValueError("empty batch")
    return _head_gradient(model, _standardize(model, feats), y)


def _head_gradient(model, z, y):
    phi = _sigmoid(z @ model.weights + model.bias)
    err = phi - y
    return z.T @ err / y.size, float(err.mean())


def batch_loss(model: DetectorModel, batch, labels=None) -> float:
    feats, y = _batch_arrays(model, batch, labels)
    phi = _sigmoid(logits_from_features(model, feats))
    return float(np.mean(_xent(phi, y)))


def input_gradient(model: DetectorModel, image, label: int) -> np.ndarray:
    """Derivative of the loss with respect to every pixel.

    Chain rule through the logistic head, the standardization, the mean of
    absolute values (subgradient 0 at 0) and the filter correlation, whose
    transpose scatters the signed responses back onto the pixel grid.
    """
    x = _image(image)
    _check_size(model, x)
    feats = features(model, x)
    phi = _sigmoid(float(logits_from_features(model, feats[None, :])[0]))
    dscore = phi - label
    coef = dscore * model.weights / model.feature_scale
    grad = np.zeros(x.shape)
    for c, k in zip(coef, model.filter_bank):
        if c == 0.0:
            continue
        resp = kernels.correlate_valid(x, k)
        grad += (c / resp.size) * kernels.correlate_valid_adjoint(np.sign(resp), k, x.shape)
    return grad


def _error_report(model, cover_feats, stego_feats) -> ErrorReport:
    sc = scores_from_features(model, cover_feats)
    ss = scores_from_features(model, stego_feats)
    return ErrorReport(float(np.mean(sc >= 0.5)), float(np.mean(ss < 0.5)))


def evaluate(model: DetectorModel, covers, stegos) -> ErrorReport:
    """False alarms on ``covers``, missed detections on ``stegos``."""
    if len(covers) == 0 or len(stegos) == 0:
        raise ValueError("evaluate needs non-empty cover and stego sets")
    return _error_report(model, batch_features(model, covers), batch_features(model, stegos))


def evaluate_features(model, cover_feats, stego_feats) -> ErrorReport:
    return _error_report(model, np.asarray(cover_feats), np.asarray(stego_feats))


def train(covers, stegos, config: TrainConfig = TrainConfig(), val_covers=None, val_stegos=None,
          kernel_ids=DEFAULT_BANK) -> DetectorModel:
    """Train on paired cover/stego images and keep the best validation checkpoint."""
    if len(covers) == 0 or len(covers) != len(stegos):
        raise ValueError("need equal-length, non-empty cover and stego sets")
    fc = batch_features(kernel_ids, covers)
    fs = batch_features(kernel_ids, stegos)
    if val_covers is None:
        vfc, vfs = fc, fs
    else:
        vfc, vfs = batch_features(kernel_ids, val_covers), batch_features(kernel_ids, val_stegos)
    return train_features(fc, fs, config, vfc, vfs, kernel_ids)


def train_features(fc, fs, config: TrainConfig, vfc=None, vfs=None, kernel_ids=DEFAULT_BANK) -> DetectorModel:
    """:func:`train` on precomputed raw features (rows are paired)."""
    fc = np.asarray(fc, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if fc.shape[0] == 0 or fc.shape != fs.shape:
        raise ValueError("need equal-length, non-empty cover and stego feature sets")
    if vfc is None:
        vfc, vfs = fc, fs
    allf = np.vstack([fc, fs])
    shift = allf.mean(axis=0)
    scale = allf.std(axis=0)
    scale = np.where(scale > 1e-12, scale, 1.0)
    model = DetectorModel(np.zeros(len(kernel_ids)), 0.0, kernel_ids, shift, scale)
    zc = _standardize(model, fc)
    zs = _standardize(model, fs)

    rng = np.random.default_rng(config.seed)
    half = config.batch_size // 2
    n = fc.shape[0]
    w = np.zeros(len(kernel_ids))
    b = 0.0
    vw = np.zeros_like(w)
    vb = 0.0

    def val_key(m):
        rep = evaluate_features(m, vfc, vfs)
        phi_c = scores_from_features(m, vfc)
        phi_s = scores_from_features(m, vfs)
        vloss = float(np.mean(_xent(phi_c, 0.0)) + np.mean(_xent(phi_s, 1.0)))
        return (rep.p_e, vloss)

    best = model
    best_key = val_key(model)
    order = rng.permutation(n)
    pos = 0
    for it in range(1, config.iterations + 1):
        if pos + half > n:
            order = rng.permutation(n)
            pos = 0
        idx = order[pos:pos + half] if half <= n else rng.integers(0, n, half)
        pos += half
        z = np.vstack([zc[idx], zs[idx]])
        y = np.concatenate([np.zeros(len(idx)), np.ones(len(idx))])
        gw, gb = _head_gradient(model.with_params(w, b), z, y)
        vw = config.momentum * vw - config.learning_rate * gw
        vb = config.momentum * vb - config.learning_rate * gb
        w = w + vw
        b = b + vb
        if it % config.validation_every == 0 or it == config.iterations:
            cand = model.with_params(w, b)
            key = val_key(cand)
            if key < best_key:
                best, best_key = cand, key
    return best


def save_model(model: DetectorModel, path) -> None:
    """Flat text record: one ``name values...`` line per field."""
    def fmt(vals):
        return " ".join(repr(float(v)) for v in vals)

    lines = [
        "kernels " + " ".join(model.kernel_ids),
        "weights " + fmt(model.weights),
        "bias " + repr(model.bias),
        "shift " + fmt(model.feature_shift),
        "scale " + fmt(model.feature_scale),
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> DetectorModel:
    fields = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            key, *vals = line.split()
            fields[key] = vals
    try:
        ids = tuple(fields["kernels"])
        return DetectorModel(
            [float(v) for v in fields["weights"]],
            float(fields["bias"][0]),
            ids,
            [float(v) for v in fields["shift"]],
            [float(v) for v in fields["scale"]],
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing field {exc}") from None
