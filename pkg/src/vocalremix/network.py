"""Patch extraction and a fully connected sigmoid network trained by SGD.

The network maps a flattened block of ``T`` magnitude frames to a mask
estimate for the same block. It is applied convolutionally in time: at
inference every block start (stride one frame) is predicted and the
overlapping outputs are averaged by :func:`masking.aggregate_predictions`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .masking import PredictionField, aggregate_predictions
from .rng import SplitMix64
from .spectral import MagnitudeSpectrogram

FORMAT_VERSION = "vocalremix-mlp/1"
# keeps the shuffle stream apart from the initialisation stream of the same seed
SHUFFLE_STREAM = 1 << 32
ACTIVATION = "logistic"


class NetworkError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class PatchConfig:
    T: int = 8
    train_hop: int = 8
    infer_hop: int = 1

    def __post_init__(self):
        if self.T < 1 or self.train_hop < 1:
            raise NetworkError("T and train_hop must be >= 1")
        if self.infer_hop != 1:
            raise NetworkError("inference windows always advance by one frame")


#: Full-scale patching: 20-frame blocks, training blocks every 60 frames.
FULL_SCALE_PATCHES = PatchConfig(T=20, train_hop=60)


@dataclass(frozen=True, eq=False)
class Patch:
    offset: int
    input: np.ndarray
    target: np.ndarray | None = None


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise NetworkError("epochs must be >= 1")
        if not 0 <= self.learning_rate < math.inf:
            raise NetworkError("learning_rate must be finite and non-negative")


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    heldout_accuracy: float | None = None
    heldout_majority_rate: float | None = None

    def to_dict(self) -> dict:
        return {
            "epoch_losses": self.epoch_losses,
            "heldout_accuracy": self.heldout_accuracy,
            "heldout_majority_rate": self.heldout_majority_rate,
        }


@dataclass(eq=False)
class MlpModel:
    """Layer sizes plus weights ``(out, in)`` per layer and biases per hidden layer.

    The output layer has no trainable bias; its bias is fixed at zero.
    """

    layer_dims: list[int]
    weights: list[np.ndarray]
    hidden_biases: list[np.ndarray]
    activation: str = ACTIVATION

    def __post_init__(self):
        dims = self.layer_dims
        if len(dims) < 2:
            raise NetworkError("a model needs at least an input and an output layer")
        if len(self.weights) != len(dims) - 1 or len(self.hidden_biases) != len(dims) - 2:
            raise NetworkError("parameter count does not match layer_dims")
        for i, w in enumerate(self.weights):
            if w.shape != (dims[i + 1], dims[i]):
                raise NetworkError(f"weight {i} has shape {w.shape}, expected {(dims[i + 1], dims[i])}")
        for i, b in enumerate(self.hidden_biases):
            if b.shape != (dims[i + 1],):
                raise NetworkError(f"bias {i} has shape {b.shape}, expected {(dims[i + 1],)}")
        if self.activation != ACTIVATION:
            raise NetworkError(f"unsupported activation {self.activation!r}")

    @property
    def output_bias(self) -> np.ndarray:
        return np.zeros(self.layer_dims[-1])

    def copy(self) -> "MlpModel":
        return MlpModel(list(self.layer_dims), [w.copy() for w in self.weights],
                        [b.copy() for b in self.hidden_biases], self.activation)

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.hidden_biases]


def init_model(layer_dims: Sequence[int], seed: int) -> MlpModel:
    """Weights uniform in +-1/sqrt(fan_in), hidden biases zero."""
    rng = SplitMix64(seed)
    dims = [int(d) for d in layer_dims]
    weights = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(fan_in * fan_out, -bound, bound).reshape(fan_out, fan_in))
    biases = [np.zeros(d) for d in dims[1:-1]]
    return MlpModel(dims, weights, biases)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _layers(model: MlpModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Activations of every layer (input first) and the output pre-activation."""
    acts = [x]
    a = x
    last = len(model.weights) - 1
    z = a
    for i, w in enumerate(model.weights):
        z = a @ w.T
        if i < last:
            z = z + model.hidden_biases[i]
        a = _sigmoid(z)
        acts.append(a)
    return acts, z


def _check_input(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.layer_dims[0]:
        raise NetworkError(f"input length {x.shape[-1]} != model input size {model.layer_dims[0]}")
    if not np.all(np.isfinite(x)):
        raise NetworkError("input contains non-finite values")
    return x


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Network output for one input vector or a batch of row vectors."""
    x = _check_input(model, x)
    acts, _ = _layers(model, x)
    return acts[-1]


def bce_loss(z_out: np.ndarray, target: np.ndarray) -> float:
    """Mean binary cross-entropy, computed from output pre-activations."""
    # softplus(z) - t*z == -(t log s(z) + (1-t) log(1-s(z)))
    return float(np.mean(np.logaddexp(0.0, z_out) - target * z_out))


def gradients(model: MlpModel, x: np.ndarray, target: np.ndarray) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss and its gradients with respect to every weight matrix and hidden bias."""
    x = _check_input(model, x)
    acts, z_out = _layers(model, x)
    loss = bce_loss(z_out, target)
    delta = (acts[-1] - target) / target.size
    n = len(model.weights)
    grad_w: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    grad_b: list[np.ndarray] = [None] * (n - 1)  # type: ignore[list-item]
    for i in range(n - 1, -1, -1):
        grad_w[i] = np.outer(delta, acts[i])
        if i > 0:
            grad_b[i - 1] = delta @ model.weights[i]
            grad_b[i - 1] = grad_b[i - 1] * acts[i] * (1.0 - acts[i])
            delta = grad_b[i - 1]
    return loss, grad_w, grad_b


def extract_patches(mag: MagnitudeSpectrogram, mask: np.ndarray | None, cfg: PatchConfig,
                    mode: str = "train") -> list[Patch]:
    """Cut ``mag`` (and ``mask``) into ``T``-frame blocks, flattened frame by frame.

    Training blocks start every ``train_hop`` frames; inference blocks start
    at every frame.
    """
    data = mag.data
    frames = data.shape[0]
    if frames < cfg.T:
        raise NetworkError(f"spectrogram has {frames} frames, fewer than T={cfg.T}")
    if mask is not None and np.shape(mask) != data.shape:
        raise NetworkError(f"mask shape {np.shape(mask)} != spectrogram shape {data.shape}")
    if mode == "train":
        hop = cfg.train_hop
    elif mode == "infer":
        hop = cfg.infer_hop
    else:
        raise NetworkError(f"unknown patch mode {mode!r}")
    patches = []
    for off in range(0, frames - cfg.T + 1, hop):
        target = None
        if mask is not None:
            target = np.asarray(mask[off:off + cfg.T], dtype=np.float64).reshape(-1)
        patches.append(Patch(off, data[off:off + cfg.T].reshape(-1), target))
    return patches


def train(model: MlpModel, patches: Sequence[Patch], cfg: TrainConfig,
          heldout: Sequence[Patch] | None = None) -> tuple[MlpModel, TrainReport]:
    """Per-example SGD on mean binary cross-entropy.

    Each epoch visits every patch once in an order drawn from a SplitMix64
    stream seeded with ``cfg.seed + SHUFFLE_STREAM``. Returns a trained copy
    of ``model``.
    """
    if not patches:
        raise NetworkError("no training patches")
    for p in patches:
        if p.target is None:
            raise NetworkError(f"patch at offset {p.offset} has no target")
        if p.input.shape[0] != model.layer_dims[0] or p.target.shape[0] != model.layer_dims[-1]:
            raise NetworkError(f"patch at offset {p.offset} does not fit the model dimensions")
    model = model.copy()
    rng = SplitMix64(cfg.seed + SHUFFLE_STREAM)
    lr = cfg.learning_rate
    report = TrainReport()
    for epoch in range(1, cfg.epochs + 1):
        losses = []
        for idx in rng.permutation(len(patches)):
            p = patches[idx]
            loss, gw, gb = gradients(model, p.input, p.target)
            losses.append(loss)
            for w, g in zip(model.weights, gw):
                w -= lr * g
            for b, g in zip(model.hidden_biases, gb):
                b -= lr * g
        # fsum keeps the epoch mean independent of the visiting order
        mean = math.fsum(losses) / len(patches)
        if not math.isfinite(mean):
            raise TrainingDiverged(f"training diverged in epoch {epoch}: mean loss {mean}")
        report.epoch_losses.append(mean)
    if heldout:
        report.heldout_accuracy, report.heldout_majority_rate = evaluate_patches(model, heldout)
    return model, report


def evaluate_patches(model: MlpModel, patches: Sequence[Patch]) -> tuple[float, float]:
    """Cell accuracy of thresholded outputs (> 0.5) and the majority-class rate."""
    x = np.stack([p.input for p in patches])
    t = np.stack([p.target for p in patches])
    pred = forward(model, x) > 0.5
    accuracy = float(np.mean(pred == (t > 0.5)))
    ones = float(np.mean(t))
    return accuracy, max(ones, 1.0 - ones)


def predict_field(model: MlpModel, mag: MagnitudeSpectrogram, cfg: PatchConfig) -> PredictionField:
    """Slide the model over every frame offset and average the overlapping outputs."""
    patches = extract_patches(mag, None, cfg, "infer")
    outputs = forward(model, np.stack([p.input for p in patches]))
    windows = [(p.offset, out.reshape(cfg.T, mag.bins)) for p, out in zip(patches, outputs)]
    return aggregate_predictions(windows, mag.frames)


def model_to_dict(model: MlpModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "layer_dims": list(model.layer_dims),
        "activation": model.activation,
        "weights": [w.tolist() for w in model.weights],
        "hidden_biases": [b.tolist() for b in model.hidden_biases],
    }


def model_from_dict(doc: dict) -> MlpModel:
    version = doc.get("format_version")
    if not isinstance(version, str) or not version.startswith("vocalremix-mlp/"):
        raise NetworkError(f"not a model file (format_version={version!r})")
    if version != FORMAT_VERSION:
        raise NetworkError(f"unsupported model format {version!r}, expected {FORMAT_VERSION!r}")
    dims = [int(d) for d in doc["layer_dims"]]
    try:
        weights = [np.array(w, dtype=np.float64) for w in doc["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in doc["hidden_biases"]]
    except (TypeError, ValueError) as exc:
        raise NetworkError(f"corrupt parameter payload: {exc}") from exc
    for arr in [*weights, *biases]:
        if not np.all(np.isfinite(arr)):
            raise NetworkError("model parameters must be finite")
    return MlpModel(dims, weights, biases, doc.get("activation", ACTIVATION))


def save_model(model: MlpModel, path) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(model_to_dict(model), separators=(",", ":")) + "\n")


def load_model(path) -> MlpModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise NetworkError(f"corrupt model file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise NetworkError(f"corrupt model file {path}")
    try:
        return model_from_dict(doc)
    except KeyError as exc:
        raise NetworkError(f"model file {path} lacks field {exc}") from exc
