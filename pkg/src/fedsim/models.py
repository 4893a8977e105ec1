"""Differentiable classification models standing in for a full detector.

Two architectures: multinomial logistic regression ("linear"), and a
one-hidden-layer tanh perceptron. Both expose mean cross-entropy loss with
analytic gradients over a flat parameter vector, which is what the local
trainers and the server optimizer operate on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyInputError, NumericError, ShapeError
from .params import Manifest, ParamVector

LINEAR = "linear"
ONE_HIDDEN_LAYER = "one_hidden_layer"


@dataclass(frozen=True)
class TaskModel:
    """Model layout: architecture plus input/output dimensions.

    The parameter layout is published as a shape manifest so that model
    weights travel as plain :class:`ParamVector` values.
    """

    input_dim: int = 32
    num_classes: int = 4
    architecture: str = LINEAR
    hidden_units: int = 16

    def __post_init__(self):
        if self.architecture not in (LINEAR, ONE_HIDDEN_LAYER):
            raise ConfigError(f"unknown architecture {self.architecture!r}")
        if self.input_dim < 1 or self.num_classes < 2 or self.hidden_units < 1:
            raise ConfigError("input_dim >= 1, num_classes >= 2, hidden_units >= 1 required")

    @property
    def manifest(self) -> Manifest:
        d, c, h = self.input_dim, self.num_classes, self.hidden_units
        if self.architecture == LINEAR:
            return (("weight", (c, d)), ("bias", (c,)))
        return (
            ("hidden_weight", (h, d)),
            ("hidden_bias", (h,)),
            ("output_weight", (c, h)),
            ("output_bias", (c,)),
        )

    @property
    def num_params(self) -> int:
        return int(sum(np.prod(dims) for _, dims in self.manifest))

    def init_weights(self, seed: int) -> ParamVector:
        """Small random weights, zero biases; deterministic in the seed."""
        rng = np.random.default_rng(seed)
        arrays = {}
        for name, dims in self.manifest:
            if name.endswith("bias"):
                arrays[name] = np.zeros(dims)
            else:
                arrays[name] = rng.normal(0.0, 0.1, size=dims)
        from .params import from_segments

        return from_segments(arrays, self.manifest)

    def _unpack(self, w: np.ndarray) -> dict[str, np.ndarray]:
        out = {}
        offset = 0
        for name, dims in self.manifest:
            size = int(np.prod(dims))
            out[name] = w[offset:offset + size].reshape(dims)
            offset += size
        return out

    def _logits(self, w: np.ndarray, x: np.ndarray):
        p = self._unpack(w)
        if self.architecture == LINEAR:
            return x @ p["weight"].T + p["bias"], None
        hidden = np.tanh(x @ p["hidden_weight"].T + p["hidden_bias"])
        return hidden @ p["output_weight"].T + p["output_bias"], hidden

    def predict_proba(self, weights: ParamVector, x: np.ndarray) -> np.ndarray:
        """Per-example class probabilities (rows sum to 1)."""
        self._check_weights(weights)
        logits, _ = self._logits(weights.values, np.asarray(x, dtype=np.float64))
        shifted = logits - logits.max(axis=1, keepdims=True)
        expl = np.exp(shifted)
        return expl / expl.sum(axis=1, keepdims=True)

    def loss_and_gradient_flat(self, w: np.ndarray, x: np.ndarray,
                               y: np.ndarray) -> tuple[float, np.ndarray]:
        """Mean cross-entropy and its gradient, on raw flat arrays.

        Allocation-light path used by the SGD loop; no manifest checks.
        """
        n = x.shape[0]
        logits, hidden = self._logits(w, x)
        shifted = logits - logits.max(axis=1, keepdims=True)
        expl = np.exp(shifted)
        log_z = np.log(expl.sum(axis=1))
        loss = float(np.mean(log_z - shifted[np.arange(n), y]))

        # dL/dlogits for mean CE: (softmax - onehot) / n
        dlogits = expl / expl.sum(axis=1, keepdims=True)
        dlogits[np.arange(n), y] -= 1.0
        dlogits /= n

        p = self._unpack(w)
        if self.architecture == LINEAR:
            grads = {"weight": dlogits.T @ x, "bias": dlogits.sum(axis=0)}
        else:
            d_hidden = (dlogits @ p["output_weight"]) * (1.0 - hidden * hidden)
            grads = {
                "hidden_weight": d_hidden.T @ x,
                "hidden_bias": d_hidden.sum(axis=0),
                "output_weight": dlogits.T @ hidden,
                "output_bias": dlogits.sum(axis=0),
            }
        flat = np.concatenate([grads[name].reshape(-1) for name, _ in self.manifest])
        return loss, flat

    def loss_and_gradient(self, weights: ParamVector, x: np.ndarray,
                          y: np.ndarray) -> tuple[float, ParamVector]:
        """Mean cross-entropy over the batch and a shape-compatible gradient."""
        self._check_weights(weights)
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y)
        if x.shape[0] == 0:
            raise EmptyInputError("batch is empty")
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeError(f"expected features of dim {self.input_dim}, got {x.shape}")
        loss, grad = self.loss_and_gradient_flat(weights.values, x, y)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite loss {loss}")
        return loss, ParamVector(grad, self.manifest)

    def evaluate_accuracy(self, weights: ParamVector, x: np.ndarray,
                          y: np.ndarray) -> float:
        """Fraction of argmax-correct predictions; ties go to the lowest class."""
        self._check_weights(weights)
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] == 0:
            raise EmptyInputError("cannot evaluate on an empty split")
        logits, _ = self._logits(weights.values, x)
        predicted = np.argmax(logits, axis=1)
        return float(np.mean(predicted == np.asarray(y)))

    def _check_weights(self, weights: ParamVector):
        if weights.manifest != self.manifest:
            raise ShapeError("weights do not match the model's parameter layout")
