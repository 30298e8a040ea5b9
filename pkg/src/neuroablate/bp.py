"""Online backpropagation with momentum and per-neuron learning factors."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ArityError, ConfigError, DivergenceError
from .netcore import Network, Topology, _backprop, classify_batch, init_weights, predict

WEIGHT_LIMIT = 1e6


@dataclass(frozen=True)
class BPConfig:
    learning_factor: float = 0.1
    momentum: float = 0.9
    epochs: int = 20000
    seed: int = 0
    shuffle_each_epoch: bool = False
    init_range: float = 0.5
    # None -> max(1, epochs // 200)
    curve_every: int | None = None
    # stop at the first curve point whose training error is <= this value
    target_error_pct: float | None = None

    def __post_init__(self):
        if not self.learning_factor > 0:
            raise ConfigError("learning_factor must be > 0")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.curve_every is not None and self.curve_every < 1:
            raise ConfigError("curve_every must be >= 1")


@dataclass
class LearningCurve:
    """Training progress sampled at increasing steps (epochs or generations).

    ``sse`` holds the summed squared error of the sampled network; for the
    evolutionary trainer that is the best-ever fitness.
    """

    kind: str  # "bp" or "ea"
    steps: list[int] = field(default_factory=list)
    error_pct: list[float] = field(default_factory=list)
    sse: list[float] = field(default_factory=list)

    def append(self, step, err, sq):
        if self.steps and step <= self.steps[-1]:
            raise ValueError("curve steps must be strictly increasing")
        self.steps.append(int(step))
        self.error_pct.append(float(err))
        self.sse.append(float(sq))

    def __len__(self):
        return len(self.steps)

    def first_at_or_below(self, threshold: float) -> int | None:
        for step, err in zip(self.steps, self.error_pct):
            if err <= threshold:
                return step
        return None

    def rows(self) -> tuple[list[str], list[tuple]]:
        if self.kind == "bp":
            header = ["epoch", "train_error_pct", "sse"]
            rows = list(zip(self.steps, self.error_pct, self.sse))
        else:
            header = ["generation", "best_fit", "best_error_pct"]
            rows = list(zip(self.steps, self.sse, self.error_pct))
        return header, rows

    def write_csv(self, path) -> None:
        header, rows = self.rows()
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in r])

    @classmethod
    def read_csv(cls, path) -> "LearningCurve":
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            kind = "bp" if "epoch" in reader.fieldnames else "ea"
            curve = cls(kind)
            for row in reader:
                if kind == "bp":
                    curve.append(int(row["epoch"]), float(row["train_error_pct"]), float(row["sse"]))
                else:
                    curve.append(
                        int(row["generation"]), float(row["best_error_pct"]), float(row["best_fit"])
                    )
        return curve


def _check_data(net, data):
    if len(data.inputs) == 0:
        raise ArityError("empty dataset")
    if data.inputs.shape[1] != net.topology.n_inputs or data.targets.shape[1] != net.topology.n_outputs:
        raise ArityError(
            f"dataset {data.inputs.shape[1]}->{data.targets.shape[1]} "
            f"does not fit network {net.topology}"
        )


def _epoch(weights, params, etas, bias, inputs, targets, order, momentum, velocity):
    with np.errstate(over="ignore", invalid="ignore"):
        for i in order:
            grads = _backprop(weights, params, inputs[i], targets[i], bias)
            for k, g in enumerate(grads):
                v = momentum * velocity[k] - etas[k] * g
                velocity[k] = v
                weights[k] += v


def _diverged(weights):
    return any(not np.all(np.isfinite(w)) or np.max(np.abs(w)) > WEIGHT_LIMIT for w in weights)


def bp_epoch(net: Network, data, cfg: BPConfig, velocity=None, rng=None, epoch: int = 0):
    """Present every case once, updating weights after each case.

    ``net`` is updated in place; returns ``(net, velocity)``. ``velocity``
    holds the previous weight change per matrix (zeros when omitted).
    """
    _check_data(net, data)
    if velocity is None:
        velocity = [np.zeros_like(w) for w in net.weights]
    params = net.layer_params()
    etas = [cfg.learning_factor * p[4][:, None] for p in params]
    order = np.arange(len(data))
    if cfg.shuffle_each_epoch:
        if rng is None:
            raise ConfigError("shuffle_each_epoch needs an rng")
        rng.shuffle(order)
    inputs = data.inputs * net.input_enabled
    _epoch(net.weights, params, etas, net.topology.bias, inputs, data.targets, order, cfg.momentum, velocity)
    if _diverged(net.weights):
        raise DivergenceError(epoch)
    return net, velocity


def train_bp(topology: Topology, data, cfg: BPConfig, neuron_configs=None):
    """Initialise from ``cfg.seed`` and train for ``cfg.epochs`` epochs.

    Returns ``(network, curve)``. ``neuron_configs`` overrides the default
    per-neuron configuration during training.
    """
    net = init_weights(topology, cfg.seed, cfg.init_range)
    if neuron_configs is not None:
        net = Network(topology, net.weights, neuron_configs, net.input_enabled)
    return fit_bp(net, data, cfg)


def fit_bp(net: Network, data, cfg: BPConfig):
    """Train a copy of ``net``; raises DivergenceError when the weights blow up."""
    net = net.copy()
    _check_data(net, data)
    rng = np.random.default_rng(cfg.seed)
    every = cfg.curve_every or max(1, cfg.epochs // 200)
    curve = LearningCurve("bp")
    velocity = [np.zeros_like(w) for w in net.weights]
    params = net.layer_params()
    etas = [cfg.learning_factor * p[4][:, None] for p in params]
    inputs = data.inputs * net.input_enabled
    labels = data.labels
    order = np.arange(len(data))
    bias = net.topology.bias
    for epoch in range(1, cfg.epochs + 1):
        if cfg.shuffle_each_epoch:
            rng.shuffle(order)
        _epoch(net.weights, params, etas, bias, inputs, data.targets, order, cfg.momentum, velocity)
        if _diverged(net.weights):
            raise DivergenceError(epoch)
        if epoch % every == 0 or epoch == cfg.epochs:
            out = predict(net, data.inputs)
            err = 100.0 * float(np.mean(classify_batch(out) != labels))
            curve.append(epoch, err, float(np.sum((out - data.targets) ** 2)))
            if cfg.target_error_pct is not None and err <= cfg.target_error_pct:
                break
    return net, curve
