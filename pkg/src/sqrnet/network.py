"""Dense ReLU networks with hand-written forward and backward passes.

Models are plain containers of per-layer weight matrices and bias vectors;
``forward`` caches pre-activations so ``backward`` can produce the exact
gradient of the mean loss. With ``residual=True`` every hidden layer after
the first computes ``relu(W h + b) + h`` (the first layer projects the
input to the common hidden width before any skip), which requires all
hidden widths to be equal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Rng, as_rng

MODEL_FORMAT = "sqrnet.mlp"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    hidden_widths: tuple[int, ...]
    n_outputs: int = 1
    residual: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be positive, got {self.input_dim}")
        if self.n_outputs < 1:
            raise ValueError(f"n_outputs must be positive, got {self.n_outputs}")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError(f"hidden widths must be positive, got {self.hidden_widths}")
        if self.residual:
            if not self.hidden_widths:
                raise ValueError("residual mode needs at least one hidden layer")
            if len(set(self.hidden_widths)) != 1:
                raise ValueError(
                    "residual mode requires a uniform hidden width, "
                    f"got {self.hidden_widths}"
                )

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_widths, self.n_outputs)

    # Presets used throughout the benchmark: a shallow-wide net, a
    # deeper-narrow net of comparable size, and the deep narrow net used
    # for loss-surface plots.
    @staticmethod
    def preset(name: str, input_dim: int, n_outputs: int = 1,
               residual: bool = False) -> "Architecture":
        widths = {"A": (70,) * 5, "B": (50,) * 10, "landscape": (35,) * 20}
        if name not in widths:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(widths)}")
        return Architecture(input_dim, widths[name], n_outputs, residual)


def num_params(arch: Architecture) -> int:
    """Total parameter count: sum over layers of fan_out*(fan_in + 1)."""
    sizes = arch.layer_sizes
    return sum(sizes[l + 1] * sizes[l] + sizes[l + 1] for l in range(len(sizes) - 1))


@dataclass
class GradientSet:
    """Model-shaped container: one (weight, bias) array pair per layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @staticmethod
    def zeros_like(model: "MlpModel") -> "GradientSet":
        return GradientSet(
            [np.zeros_like(w) for w in model.weights],
            [np.zeros_like(b) for b in model.biases],
        )

    def arrays(self):
        """All arrays, weights interleaved with biases, layer by layer."""
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b


class MlpModel:
    """Weights and biases realizing an :class:`Architecture`.

    ``weights[l]`` has shape (fan_out, fan_in); ``biases[l]`` has shape
    (fan_out,). Layers 0..L-1 are hidden (ReLU), layer L is the linear
    output layer.
    """

    def __init__(self, arch: Architecture, weights: list[np.ndarray],
                 biases: list[np.ndarray]):
        sizes = arch.layer_sizes
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise ValueError("layer count does not match architecture")
        for l, (w, b) in enumerate(zip(weights, biases)):
            expected = (sizes[l + 1], sizes[l])
            if w.shape != expected or b.shape != (sizes[l + 1],):
                raise ValueError(
                    f"layer {l} shapes {w.shape}/{b.shape} do not match {expected}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l} contains non-finite entries")
        self.arch = arch
        self.weights = weights
        self.biases = biases

    @staticmethod
    def init(arch: Architecture, rng: "int | Rng") -> "MlpModel":
        """Fan-in uniform init on [-sqrt(6/fan_in), +sqrt(6/fan_in)], zero biases."""
        gen = as_rng(rng)
        sizes = arch.layer_sizes
        weights, biases = [], []
        for l in range(len(sizes) - 1):
            fan_in, fan_out = sizes[l], sizes[l + 1]
            bound = math.sqrt(6.0 / fan_in)
            weights.append(gen.uniform((fan_out, fan_in), -bound, bound))
            biases.append(np.zeros(fan_out))
        return MlpModel(arch, weights, biases)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.arch,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def params(self):
        """All parameter arrays, weights interleaved with biases."""
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def forward(self, X: np.ndarray) -> tuple[np.ndarray, dict]:
        """Batched forward pass; returns (outputs, cache for backward)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.arch.input_dim:
            raise ValueError(
                f"expected input of shape (n, {self.arch.input_dim}), got {X.shape}"
            )
        inputs = [X]  # inputs[l] feeds layer l
        pre = []      # pre-activations of the hidden layers
        h = X
        n_hidden = self.n_layers - 1
        for l in range(n_hidden):
            z = h @ self.weights[l].T + self.biases[l]
            pre.append(z)
            a = np.maximum(z, 0.0)
            if self.arch.residual and l > 0:
                a = a + h
            inputs.append(a)
            h = a
        out = h @ self.weights[-1].T + self.biases[-1]
        cache = {"inputs": inputs, "pre": pre, "n": X.shape[0]}
        return out, cache

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        layers = [
            {"shape": list(w.shape), "weights": w.ravel().tolist(), "bias": b.tolist()}
            for w, b in zip(self.weights, self.biases)
        ]
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "architecture": {
                "input_dim": self.arch.input_dim,
                "hidden_widths": list(self.arch.hidden_widths),
                "n_outputs": self.arch.n_outputs,
                "residual": self.arch.residual,
            },
            "layers": layers,
        }

    @staticmethod
    def from_json(doc: dict) -> "MlpModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a {MODEL_FORMAT} document")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        a = doc["architecture"]
        arch = Architecture(
            a["input_dim"], tuple(a["hidden_widths"]), a["n_outputs"], a["residual"]
        )
        weights, biases = [], []
        for layer in doc["layers"]:
            shape = tuple(layer["shape"])
            weights.append(np.array(layer["weights"], dtype=float).reshape(shape))
            biases.append(np.array(layer["bias"], dtype=float))
        return MlpModel(arch, weights, biases)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)

    @staticmethod
    def load(path) -> "MlpModel":
        with open(path, encoding="utf-8") as fh:
            return MlpModel.from_json(json.load(fh))


def backward(model: MlpModel, cache: dict, dL_dout: np.ndarray) -> GradientSet:
    """Exact gradients given d(loss)/d(outputs).

    ``dL_dout`` must carry any 1/n scaling already (it is the gradient of
    whatever scalar the caller differentiates). The ReLU derivative at
    exactly 0 is taken to be 0.
    """
    inputs, pre = cache["inputs"], cache["pre"]
    dL_dout = np.asarray(dL_dout, dtype=float)
    if len(inputs) != model.n_layers or cache.get("n") != dL_dout.shape[0]:
        raise ValueError("cache does not match this model/batch")
    expected = (cache["n"], model.arch.n_outputs)
    if dL_dout.shape != expected:
        raise ValueError(f"dL_dout shape {dL_dout.shape} != {expected}")

    grads = GradientSet([np.empty_like(w) for w in model.weights],
                        [np.empty_like(b) for b in model.biases])
    # Output layer.
    grads.weights[-1][...] = dL_dout.T @ inputs[-1]
    grads.biases[-1][...] = dL_dout.sum(axis=0)
    da = dL_dout @ model.weights[-1]
    # Hidden layers, last to first.
    for l in range(model.n_layers - 2, -1, -1):
        dz = da * (pre[l] > 0.0)
        grads.weights[l][...] = dz.T @ inputs[l]
        grads.biases[l][...] = dz.sum(axis=0)
        if l > 0:
            da_prev = dz @ model.weights[l]
            if model.arch.residual:
                da_prev = da_prev + da  # skip connection passes the signal through
            da = da_prev
    return grads
