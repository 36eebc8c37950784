"""From-scratch forward pass over the layer stack.

Convolutions use 'same' padding: out = ceil(in / stride), total padding
max((out-1)*stride + k - in, 0) split floor-begin / rest-end. ReLU follows
every convolution; the head is linear into a numerically-stable softmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..imaging import Frame
from .arch import (
    DEPTHWISE_CONV,
    FULLY_CONNECTED,
    GLOBAL_AVG_POOL,
    POINTWISE_CONV,
    SOFTMAX,
    STANDARD_CONV,
    ArchitectureSpec,
    ShapeMismatch,
)
from .weights import WeightBundle, WeightMismatch


class BadInputSize(Exception):
    pass


class BadK(Exception):
    pass


class EmptySet(Exception):
    pass


@dataclass
class Prediction:
    class_ranks: np.ndarray  # class indices, descending probability
    probabilities: np.ndarray  # aligned with class_ranks

    @property
    def num_classes(self) -> int:
        return len(self.class_ranks)


def _same_pad(x: np.ndarray, kh: int, kw: int, stride: int) -> tuple[np.ndarray, int, int]:
    h, w = x.shape[:2]
    oh = -(-h // stride)
    ow = -(-w // stride)
    pad_h = max((oh - 1) * stride + kh - h, 0)
    pad_w = max((ow - 1) * stride + kw - w, 0)
    top, left = pad_h // 2, pad_w // 2
    x = np.pad(x, ((top, pad_h - top), (left, pad_w - left), (0, 0)))
    return x, oh, ow


def standard_conv_forward(
    x: np.ndarray, kernel: np.ndarray, stride: int = 1, bias: np.ndarray | None = None
) -> np.ndarray:
    """x: (h, w, cin); kernel: (kh, kw, cin, cout) -> (oh, ow, cout)."""
    kh, kw, cin, cout = kernel.shape
    if x.shape[2] != cin:
        raise ShapeMismatch(f"input has {x.shape[2]} channels, kernel expects {cin}")
    xp, oh, ow = _same_pad(x, kh, kw, stride)
    out = np.zeros((oh, ow, cout), dtype=np.float64)
    for di in range(kh):
        for dj in range(kw):
            patch = xp[di : di + oh * stride : stride, dj : dj + ow * stride : stride, :]
            out += patch @ kernel[di, dj]
    if bias is not None:
        out += bias
    return out


def depthwise_forward(x: np.ndarray, kernel: np.ndarray, stride: int = 1) -> np.ndarray:
    """Per-channel spatial filter. x: (h, w, c); kernel: (kh, kw, c)."""
    kh, kw, c = kernel.shape
    if x.shape[2] != c:
        raise ShapeMismatch(f"input has {x.shape[2]} channels, kernel expects {c}")
    xp, oh, ow = _same_pad(x, kh, kw, stride)
    out = np.zeros((oh, ow, c), dtype=np.float64)
    for di in range(kh):
        for dj in range(kw):
            patch = xp[di : di + oh * stride : stride, dj : dj + ow * stride : stride, :]
            out += patch * kernel[di, dj]
    return out


def pointwise_forward(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """1x1 cross-channel linear map. x: (h, w, cin); weights: (cin, cout)."""
    if x.shape[2] != weights.shape[0]:
        raise ShapeMismatch(f"input has {x.shape[2]} channels, weights expect {weights.shape[0]}")
    return x @ weights


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    return x.mean(axis=(0, 1))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Shift-invariant softmax (max subtracted before exponentiation)."""
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


def forward(spec: ArchitectureSpec, weights: WeightBundle, image: Frame) -> Prediction:
    """Run the stack on an already-resized frame; pixels normalize to [0, 1]."""
    if image.height != spec.input_resolution or image.width != spec.input_resolution:
        raise BadInputSize(
            f"expected {spec.input_resolution}x{spec.input_resolution}, "
            f"got {image.width}x{image.height}"
        )
    if weights.fingerprint != spec.fingerprint():
        raise WeightMismatch("weight bundle fingerprint does not match this spec")

    x = image.pixels.astype(np.float64) / 255.0
    idx = 0
    for layer in spec.layers:
        arrays = weights.arrays[idx]
        idx += 1
        if layer.kind == STANDARD_CONV:
            x = relu(standard_conv_forward(x, arrays[0], layer.stride, bias=arrays[1]))
        elif layer.kind == DEPTHWISE_CONV:
            x = relu(depthwise_forward(x, arrays[0], layer.stride))
        elif layer.kind == POINTWISE_CONV:
            x = relu(pointwise_forward(x, arrays[0]))
        elif layer.kind == GLOBAL_AVG_POOL:
            x = global_avg_pool(x)
        elif layer.kind == FULLY_CONNECTED:
            x = x.ravel() @ arrays[0] + arrays[1]
        elif layer.kind == SOFTMAX:
            x = softmax(x)
    ranks = np.argsort(-x, kind="stable")  # stable: ties resolve to lower class index
    return Prediction(class_ranks=ranks, probabilities=x[ranks])


def top_k(pred: Prediction, k: int) -> list[int]:
    """The k highest-probability classes; ties already broken to lower index."""
    if not (1 <= k <= pred.num_classes):
        raise BadK(f"k={k} outside [1, {pred.num_classes}]")
    return [int(c) for c in pred.class_ranks[:k]]


def evaluate_topk(
    spec: ArchitectureSpec, weights: WeightBundle, labeled: list[tuple[Frame, int]]
) -> tuple[float, float]:
    """Fractions of samples whose label is the argmax / within the 5 best."""
    if not labeled:
        raise EmptySet("no labeled samples")
    hits1 = hits5 = 0
    for frame, label in labeled:
        pred = forward(spec, weights, frame)
        k5 = top_k(pred, min(5, pred.num_classes))
        if k5[0] == label:
            hits1 += 1
        if label in k5:
            hits5 += 1
    n = len(labeled)
    return hits1 / n, hits5 / n


def render_accuracy_table(rows: list[tuple[str, float, float]]) -> str:
    """Two-column accuracy report: model name, top-1, top-5."""
    table = [("Model", "Top 1 Accuracy", "Top 5 Accuracy")]
    table += [(name, f"{t1 * 100:.1f} %", f"{t5 * 100:.1f} %") for name, t1, t5 in rows]
    widths = [max(len(r[i]) for r in table) for i in range(3)]
    return "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in table
    )
