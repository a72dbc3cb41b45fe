"""Small feed-forward classifier with hand-derived backpropagation.

Layers are affine maps ``z = a @ W.T + b`` with ``W`` of shape (out, in), separated by
rectifiers. The rectifier's subgradient at 0 is taken as 0.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .exceptions import ModelShapeError

Array = npt.NDArray[np.float64]


@dataclass
class ModelGradients:
    """Gradients with the same layout as ``MlpModel`` parameters."""

    weights: list[Array]
    biases: list[Array]

    def __add__(self, other: "ModelGradients") -> "ModelGradients":
        return ModelGradients(
            weights=[a + b for a, b in zip(self.weights, other.weights, strict=True)],
            biases=[a + b for a, b in zip(self.biases, other.biases, strict=True)],
        )

    def flat(self) -> Array:
        return np.concatenate([part.ravel() for pair in zip(self.weights, self.biases, strict=True) for part in pair])

    @classmethod
    def zeros_like(cls, model: "MlpModel") -> "ModelGradients":
        return cls(
            weights=[np.zeros_like(weight) for weight in model.weights],
            biases=[np.zeros_like(bias) for bias in model.biases],
        )


@dataclass
class ForwardCache:
    """Layer inputs and pre-activations kept for the backward pass."""

    inputs: list[Array] = field(default_factory=list)
    pre_activations: list[Array] = field(default_factory=list)


@dataclass
class MlpModel:
    """Feed-forward rectifier network; the output width is the number of ID classes."""

    weights: list[Array]
    biases: list[Array]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ModelShapeError("Model needs one bias vector per weight matrix and at least one layer")
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases, strict=True)):
            if weight.ndim != 2 or bias.shape != (weight.shape[0],):
                raise ModelShapeError(f"Layer {index} has weight {weight.shape} and bias {bias.shape}")
            if index and weight.shape[1] != self.weights[index - 1].shape[0]:
                previous = self.weights[index - 1].shape[0]
                raise ModelShapeError(f"Layer {index} expects {weight.shape[1]} inputs, previous gives {previous}")

    @classmethod
    def initialize(cls, layer_sizes: Sequence[int], rng: np.random.Generator) -> "MlpModel":
        """He-normal weights and zero biases for ``layer_sizes`` = [d, hidden..., K]."""
        sizes = _check_sizes(layer_sizes)
        weights = [
            rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)) for fan_in, fan_out in zip(sizes, sizes[1:])
        ]
        biases = [np.zeros(fan_out) for fan_out in sizes[1:]]
        return cls(weights=weights, biases=biases)

    @classmethod
    def zeros(cls, layer_sizes: Sequence[int]) -> "MlpModel":
        sizes = _check_sizes(layer_sizes)
        return cls(
            weights=[np.zeros((fan_out, fan_in)) for fan_in, fan_out in zip(sizes, sizes[1:])],
            biases=[np.zeros(fan_out) for fan_out in sizes[1:]],
        )

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1], *(weight.shape[0] for weight in self.weights)]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[0]

    def copy(self) -> "MlpModel":
        return MlpModel(weights=[w.copy() for w in self.weights], biases=[b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in (*self.weights, *self.biases))

    def forward_cached(self, x) -> tuple[Array, ForwardCache]:
        """Logits for a batch (n, d) plus the cache needed by ``backward``.

        Raises:
            ModelShapeError: If the input width differs from the model's input dimension
        """
        activations = np.asarray(x, dtype=np.float64)
        if activations.ndim != 2 or activations.shape[1] != self.input_dim:
            raise ModelShapeError(f"Model expects inputs of width {self.input_dim}, got shape {activations.shape}")

        cache = ForwardCache()
        last = len(self.weights) - 1
        for index, (weight, bias) in enumerate(zip(self.weights, self.biases, strict=True)):
            cache.inputs.append(activations)
            z = activations @ weight.T + bias
            cache.pre_activations.append(z)
            activations = z if index == last else np.maximum(z, 0.0)
        return activations, cache

    def forward(self, x) -> Array:
        """Logits for one input (d,) or a batch (n, d)."""
        inputs = np.asarray(x, dtype=np.float64)
        if inputs.ndim == 1:
            return self.forward_cached(inputs[np.newaxis, :])[0][0]
        return self.forward_cached(inputs)[0]

    def backward(self, cache: ForwardCache, grad_logits: Array) -> ModelGradients:
        """Backpropagate dL/dlogits through the cached forward pass."""
        weights: list[Array] = [np.empty(0)] * len(self.weights)
        biases: list[Array] = [np.empty(0)] * len(self.biases)

        delta = np.asarray(grad_logits, dtype=np.float64)
        for index in range(len(self.weights) - 1, -1, -1):
            weights[index] = delta.T @ cache.inputs[index]
            biases[index] = delta.sum(axis=0)
            if index:
                delta = (delta @ self.weights[index]) * (cache.pre_activations[index - 1] > 0.0)
        return ModelGradients(weights=weights, biases=biases)

    def flat_parameters(self) -> Array:
        return np.concatenate([part.ravel() for pair in zip(self.weights, self.biases, strict=True) for part in pair])

    def with_flat_parameters(self, flat: Array) -> "MlpModel":
        """A model with this layout and the given flattened parameters."""
        flat = np.asarray(flat, dtype=np.float64)
        weights, biases = [], []
        offset = 0
        for weight, bias in zip(self.weights, self.biases, strict=True):
            weights.append(flat[offset : offset + weight.size].reshape(weight.shape).copy())
            offset += weight.size
            biases.append(flat[offset : offset + bias.size].copy())
            offset += bias.size
        if offset != flat.size:
            raise ModelShapeError(f"Expected {offset} parameters, got {flat.size}")
        return MlpModel(weights=weights, biases=biases)


def _check_sizes(layer_sizes: Sequence[int]) -> list[int]:
    sizes = [int(size) for size in layer_sizes]
    if len(sizes) < 2 or any(size < 1 for size in sizes):
        raise ModelShapeError(f"Layer sizes must list at least input and output widths, got {sizes}")
    return sizes


def forward(model: MlpModel, x) -> Array:
    """Logits of ``model`` for one input or a batch."""
    return model.forward(x)
