"""Feedforward network with per-neuron sigmoid parameters.

Every non-input neuron computes

    out = output_scale * beta / (gamma + exp(-alpha * x))

where ``x`` is the weighted sum of the previous layer plus an optional bias
weight. With the default parameters this is the logistic function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ArityError, ConfigError

EXP_CLAMP = 700.0
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ActivationParams:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class NeuronConfig:
    activation: ActivationParams = field(default_factory=ActivationParams)
    learning_factor_mult: float = 1.0
    output_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.output_scale <= 1.0:
            raise ConfigError(f"output_scale must lie in [0, 1], got {self.output_scale}")
        if not self.learning_factor_mult >= 0:
            raise ConfigError("learning_factor_mult must be >= 0")


@dataclass(frozen=True)
class Topology:
    n_inputs: int
    hidden_sizes: tuple[int, ...]
    n_outputs: int
    bias: bool = True

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not self.hidden_sizes:
            raise ConfigError("at least one hidden layer is required")
        if min(self.sizes) < 1:
            raise ConfigError(f"all layer sizes must be >= 1, got {self.sizes}")

    @classmethod
    def parse(cls, text: str, bias: bool = True) -> "Topology":
        """Parse an ``I-H-O`` (or ``I-H1-H2-O``) string such as ``"9-8-2"``."""
        try:
            parts = [int(p) for p in text.strip().split("-")]
        except ValueError:
            raise ConfigError(f"bad topology {text!r}; expected e.g. 9-8-2") from None
        if len(parts) < 3:
            raise ConfigError(f"bad topology {text!r}; expected e.g. 9-8-2")
        return cls(parts[0], tuple(parts[1:-1]), parts[-1], bias)

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.n_inputs, *self.hidden_sizes, self.n_outputs)

    @property
    def weight_shapes(self) -> list[tuple[int, int]]:
        extra = 1 if self.bias else 0
        s = self.sizes
        return [(s[k], s[k - 1] + extra) for k in range(1, len(s))]

    @property
    def n_weights(self) -> int:
        return sum(r * c for r, c in self.weight_shapes)

    def __str__(self):
        return "-".join(str(s) for s in self.sizes)


@dataclass
class Network:
    topology: Topology
    weights: list[np.ndarray]
    neuron_configs: list[list[NeuronConfig]]
    input_enabled: np.ndarray

    def __post_init__(self):
        shapes = self.topology.weight_shapes
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        if [w.shape for w in self.weights] != shapes:
            raise ArityError(
                f"weight shapes {[w.shape for w in self.weights]} do not match {shapes}"
            )
        if [len(c) for c in self.neuron_configs] != list(self.topology.sizes[1:]):
            raise ArityError("neuron_configs do not match topology")
        self.input_enabled = np.asarray(self.input_enabled, dtype=np.float64)
        if self.input_enabled.shape != (self.topology.n_inputs,):
            raise ArityError("input_enabled does not match topology")

    def copy(self) -> "Network":
        return Network(
            self.topology,
            [w.copy() for w in self.weights],
            [list(layer) for layer in self.neuron_configs],
            self.input_enabled.copy(),
        )

    def with_neuron(self, layer: int, index: int, **changes) -> "Network":
        """Copy with one neuron's config replaced.

        ``layer`` counts non-input layers from 0 (first hidden layer).
        ``changes`` are NeuronConfig fields, plus ``alpha``/``beta``/``gamma``.
        """
        net = self.copy()
        cfg = net.neuron_configs[layer][index]
        act = {k: changes.pop(k) for k in ("alpha", "beta", "gamma") if k in changes}
        if act:
            changes["activation"] = replace(cfg.activation, **act)
        net.neuron_configs[layer][index] = replace(cfg, **changes)
        return net

    def layer_params(self) -> list[tuple[np.ndarray, ...]]:
        """Per layer arrays ``(alpha, beta, gamma, output_scale, lr_mult)``."""
        out = []
        for layer in self.neuron_configs:
            out.append(
                (
                    np.array([c.activation.alpha for c in layer]),
                    np.array([c.activation.beta for c in layer]),
                    np.array([c.activation.gamma for c in layer]),
                    np.array([c.output_scale for c in layer]),
                    np.array([c.learning_factor_mult for c in layer]),
                )
            )
        return out

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        t = self.topology
        return {
            "format": FORMAT_VERSION,
            "topology": {
                "n_inputs": t.n_inputs,
                "hidden_sizes": list(t.hidden_sizes),
                "n_outputs": t.n_outputs,
                "bias": t.bias,
            },
            "weights": [
                {"shape": list(w.shape), "values": [float(v) for v in w.ravel()]}
                for w in self.weights
            ],
            "neuron_configs": [
                [
                    {
                        "alpha": c.activation.alpha,
                        "beta": c.activation.beta,
                        "gamma": c.activation.gamma,
                        "learning_factor_mult": c.learning_factor_mult,
                        "output_scale": c.output_scale,
                    }
                    for c in layer
                ]
                for layer in self.neuron_configs
            ],
            "input_enabled": [float(v) for v in self.input_enabled],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        t = d["topology"]
        topo = Topology(t["n_inputs"], tuple(t["hidden_sizes"]), t["n_outputs"], t.get("bias", True))
        weights = [
            np.array(w["values"], dtype=np.float64).reshape(w["shape"]) for w in d["weights"]
        ]
        configs = [
            [
                NeuronConfig(
                    ActivationParams(c["alpha"], c["beta"], c["gamma"]),
                    c["learning_factor_mult"],
                    c["output_scale"],
                )
                for c in layer
            ]
            for layer in d["neuron_configs"]
        ]
        return cls(topo, weights, configs, np.array(d["input_enabled"], dtype=np.float64))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "Network":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "Network":
        return cls.loads(Path(path).read_text())


def default_configs(topology: Topology) -> list[list[NeuronConfig]]:
    cfg = NeuronConfig()
    return [[cfg] * n for n in topology.sizes[1:]]


def init_weights(topology: Topology, seed: int, range: float = 0.5) -> Network:
    """Uniform random weights in ``[-range, range]``, default neuron configs."""
    if not range > 0:
        raise ConfigError("init range must be > 0")
    rng = np.random.default_rng(seed)
    weights = [rng.uniform(-range, range, size=shape) for shape in topology.weight_shapes]
    return Network(topology, weights, default_configs(topology), np.ones(topology.n_inputs))


# activation ----------------------------------------------------------------


def _exp_neg(x, alpha):
    return np.exp(np.minimum(np.maximum(-x * alpha, -EXP_CLAMP), EXP_CLAMP))


def sigmoid(x, p: ActivationParams = ActivationParams()):
    """Parameterized logistic ``beta / (gamma + exp(-alpha x))``.

    Accepts a scalar or an array; raises ValueError on non-finite input.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite activation input")
    y = p.beta / (p.gamma + _exp_neg(x, p.alpha))
    return float(y) if y.ndim == 0 else y


def sigmoid_derivative(x, p: ActivationParams = ActivationParams()):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite activation input")
    e = _exp_neg(x, p.alpha)
    y = p.alpha * p.beta * e / (p.gamma + e) ** 2
    return float(y) if y.ndim == 0 else y


def _act(z, alpha, beta, gamma):
    return beta / (gamma + _exp_neg(z, alpha))


def _act_deriv(z, alpha, beta, gamma):
    e = _exp_neg(z, alpha)
    return alpha * beta * e / (gamma + e) ** 2


# forward -------------------------------------------------------------------


def _affine(w, a, bias):
    if bias:
        return a @ w[:, :-1].T + w[:, -1]
    return a @ w.T


def forward(net: Network, x, params=None) -> list[np.ndarray]:
    """Outputs of every layer, input layer first.

    ``x`` may be one case (1-D) or a batch of cases (2-D, rows are cases).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.topology.n_inputs or x.ndim not in (1, 2):
        raise ArityError(
            f"input arity {x.shape[-1] if x.ndim else 0} != {net.topology.n_inputs}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite activation input")
    params = params or net.layer_params()
    a = x * net.input_enabled
    outs = [a]
    bias = net.topology.bias
    for w, (alpha, beta, gamma, scale, _) in zip(net.weights, params):
        a = scale * _act(_affine(w, a, bias), alpha, beta, gamma)
        outs.append(a)
    return outs


def predict(net: Network, x) -> np.ndarray:
    """Output-layer activations for one case or a batch."""
    return forward(net, x)[-1]


def classify(output) -> int:
    """Index of the largest output; ties go to the lowest index."""
    output = np.asarray(output)
    if output.size == 0:
        raise ValueError("cannot classify an empty output vector")
    return int(np.argmax(output))


def classify_batch(outputs) -> np.ndarray:
    return np.argmax(np.asarray(outputs), axis=-1)


def loss_gradient(net: Network, x, t, params=None) -> list[np.ndarray]:
    """Gradient of ``0.5 * sum((out - t)**2)`` for one case w.r.t. each weight matrix."""
    params = params or net.layer_params()
    return _backprop(net.weights, params, net.input_enabled * x, np.asarray(t, float), net.topology.bias)


def _backprop(weights, params, a0, t, bias):
    # single case; with a bias each activation vector carries a trailing 1
    acts = []
    exps = []
    a = a0
    for w, (alpha, beta, gamma, scale, _) in zip(weights, params):
        if bias:
            a = np.append(a, 1.0)
        acts.append(a)
        e = _exp_neg(w @ a, alpha)
        exps.append(e)
        a = scale * beta / (gamma + e)
    grads = [None] * len(weights)
    for k in range(len(weights) - 1, -1, -1):
        alpha, beta, gamma, scale, _ = params[k]
        e = exps[k]
        d = scale * alpha * beta * e / (gamma + e) ** 2
        delta = (a - t) * d if k == len(weights) - 1 else back * d
        grads[k] = np.outer(delta, acts[k])
        if k:
            back = delta @ weights[k][:, :-1] if bias else delta @ weights[k]
    return grads


def sse(net: Network, inputs, targets) -> float:
    """Sum over cases and outputs of the squared output error."""
    out = predict(net, inputs)
    return float(np.sum((out - targets) ** 2))


def error_pct(net: Network, inputs, targets) -> float:
    """Percentage of cases whose argmax output differs from the target class."""
    pred = classify_batch(predict(net, inputs))
    return 100.0 * float(np.mean(pred != np.argmax(targets, axis=1)))


def networks_equal(a: Network, b: Network) -> bool:
    """Bit-exact comparison of weights, configs and input flags."""
    return (
        a.topology == b.topology
        and all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
        and a.neuron_configs == b.neuron_configs
        and np.array_equal(a.input_enabled, b.input_enabled)
    )


__all__ = [
    "ActivationParams",
    "NeuronConfig",
    "Topology",
    "Network",
    "init_weights",
    "default_configs",
    "sigmoid",
    "sigmoid_derivative",
    "forward",
    "predict",
    "classify",
    "classify_batch",
    "loss_gradient",
    "sse",
    "error_pct",
    "networks_equal",
]
