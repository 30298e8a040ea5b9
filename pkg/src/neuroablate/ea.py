"""Real-coded genetic algorithm over flattened network weights.

One generation: evaluate every chromosome, record the best-ever individual,
check the stop conditions, then roulette-select parents, recombine pairs
arithmetically and mutate single genes by a bounded random step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bp import LearningCurve
from .errors import ArityError, ConfigError
from .netcore import Network, Topology, _act, default_configs, error_pct, predict


@dataclass(frozen=True)
class EAConfig:
    population_size: int = 10
    generations: int = 1000
    crossover_prob: float = 0.8
    mutation_prob: float = 0.8
    mutation_cte: float = 0.4
    target_fit: float | None = None
    seed: int = 0
    epsilon: float = 1e-9
    init_range: float = 0.5
    inversion: str = "linear"  # or "reciprocal"
    mutation_mode: str = "one-gene"  # or "per-gene"
    # stop once the best-ever network misclassifies at most this share of cases
    target_error_pct: float | None = None

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ConfigError("population_size must be even and >= 2")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        for name in ("crossover_prob", "mutation_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if not self.mutation_cte > 0:
            raise ConfigError("mutation_cte must be > 0")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if not self.init_range > 0:
            raise ConfigError("init_range must be > 0")
        if self.inversion not in ("linear", "reciprocal"):
            raise ConfigError(f"unknown inversion {self.inversion!r}")
        if self.mutation_mode not in ("one-gene", "per-gene"):
            raise ConfigError(f"unknown mutation_mode {self.mutation_mode!r}")


@dataclass
class Chromosome:
    genes: np.ndarray
    fit: float | None = None


def encode(net: Network) -> Chromosome:
    """Concatenate the weight matrices row-major (bias weight last in each row)."""
    return Chromosome(np.concatenate([w.ravel() for w in net.weights]))


def decode(c, topology: Topology, neuron_configs=None) -> Network:
    genes = np.asarray(c.genes if isinstance(c, Chromosome) else c, dtype=np.float64)
    if genes.shape != (topology.n_weights,):
        raise ArityError(f"expected {topology.n_weights} genes, got {genes.shape}")
    weights = []
    start = 0
    for rows, cols in topology.weight_shapes:
        stop = start + rows * cols
        weights.append(genes[start:stop].reshape(rows, cols).copy())
        start = stop
    return Network(
        topology,
        weights,
        neuron_configs or default_configs(topology),
        np.ones(topology.n_inputs),
    )


def fitness(c, data, topology: Topology, neuron_configs=None) -> float:
    """Sum of squared output errors over all cases and output neurons."""
    net = decode(c, topology, neuron_configs)
    if data.inputs.shape[1] != topology.n_inputs or data.targets.shape[1] != topology.n_outputs:
        raise ArityError(f"dataset does not fit network {topology}")
    return float(np.sum((predict(net, data.inputs) - data.targets) ** 2))


def population_fitness(pop, data, topology: Topology, neuron_configs=None) -> np.ndarray:
    """Fitness of every row of ``pop`` in one batched pass."""
    pop = np.asarray(pop, dtype=np.float64)
    if pop.ndim != 2 or pop.shape[1] != topology.n_weights:
        raise ArityError(f"expected rows of {topology.n_weights} genes")
    params = decode(pop[0], topology, neuron_configs).layer_params()
    a = np.broadcast_to(data.inputs, (len(pop), *data.inputs.shape))
    start = 0
    for (rows, cols), (alpha, beta, gamma, scale, _) in zip(topology.weight_shapes, params):
        w = pop[:, start : start + rows * cols].reshape(len(pop), rows, cols)
        start += rows * cols
        if topology.bias:
            z = np.matmul(a, w[:, :, :-1].transpose(0, 2, 1)) + w[:, None, :, -1]
        else:
            z = np.matmul(a, w.transpose(0, 2, 1))
        a = scale * _act(z, alpha, beta, gamma)
    return np.sum((a - data.targets) ** 2, axis=(1, 2))


def selection_probs(fits, epsilon: float = 1e-9, inversion: str = "linear") -> np.ndarray:
    """Turn fitness values (lower is better) into selection probabilities.

    The linear scheme scores each chromosome by its distance below the worst
    fitness, plus ``epsilon`` so equal fitness gives a uniform draw.
    """
    fits = np.asarray(fits, dtype=np.float64)
    if fits.size == 0:
        raise ValueError("empty population")
    if np.any(fits < 0):
        raise ValueError("fitness values must be >= 0")
    if inversion == "linear":
        g = fits.max() - fits + epsilon
    elif inversion == "reciprocal":
        g = 1.0 / (fits + epsilon)
    else:
        raise ConfigError(f"unknown inversion {inversion!r}")
    return g / g.sum()


def roulette_select(probs, count: int, rng) -> np.ndarray:
    """Spin the wheel ``count`` times; indices may repeat."""
    wheel = np.cumsum(probs)
    wheel /= wheel[-1]
    idx = np.searchsorted(wheel, rng.random(count), side="right")
    return np.minimum(idx, len(wheel) - 1)


def crossover(w1, w2, rng, alpha=None, beta=None):
    """Arithmetic recombination with one mixing weight per child."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if w1.shape != w2.shape:
        raise ValueError("parents differ in length")
    if alpha is None:
        alpha = rng.random()
    if beta is None:
        beta = rng.random()
    return alpha * w1 + (1 - alpha) * w2, beta * w1 + (1 - beta) * w2


def mutate(genes, cte: float, rng, mode: str = "one-gene") -> np.ndarray:
    """Add a step drawn from ``U(-cte, cte)`` to one random gene.

    In ``per-gene`` mode every gene is perturbed independently with
    probability ``1 / len(genes)``.
    """
    if not cte > 0:
        raise ValueError("cte must be > 0")
    out = np.array(genes, dtype=np.float64)
    if mode == "one-gene":
        k = rng.integers(len(out))
        out[k] += rng.uniform(-1.0, 1.0) * cte
    else:
        hit = rng.random(len(out)) < 1.0 / len(out)
        out[hit] += rng.uniform(-1.0, 1.0, size=int(hit.sum())) * cte
    return out


@dataclass
class EvolveResult:
    network: Network
    curve: LearningCurve
    best: Chromosome
    final_population: np.ndarray
    final_fits: np.ndarray

    def __iter__(self):
        # allows ``net, curve = evolve(...)`` like train_bp
        return iter((self.network, self.curve))


def evolve(topology: Topology, data, cfg: EAConfig, neuron_configs=None) -> EvolveResult:
    if data.inputs.shape[1] != topology.n_inputs or data.targets.shape[1] != topology.n_outputs:
        raise ArityError(f"dataset does not fit network {topology}")
    rng = np.random.default_rng(cfg.seed)
    n = cfg.population_size
    pop = rng.uniform(-cfg.init_range, cfg.init_range, size=(n, topology.n_weights))
    curve = LearningCurve("ea")
    best = None
    best_err = None
    target = -np.inf if cfg.target_fit is None else cfg.target_fit
    for gen in range(1, cfg.generations + 1):
        fits = population_fitness(pop, data, topology, neuron_configs)
        i = int(np.argmin(fits))
        if best is None or fits[i] < best.fit:
            best = Chromosome(pop[i].copy(), float(fits[i]))
            net = decode(best, topology, neuron_configs)
            best_err = error_pct(net, data.inputs, data.targets)
        curve.append(gen, best_err, best.fit)
        if best.fit <= target or gen == cfg.generations:
            break
        if cfg.target_error_pct is not None and best_err <= cfg.target_error_pct:
            break
        probs = selection_probs(fits, cfg.epsilon, cfg.inversion)
        parents = pop[roulette_select(probs, n, rng)]
        children = np.empty_like(pop)
        for k in range(0, n, 2):
            w1, w2 = parents[k], parents[k + 1]
            if rng.random() < cfg.crossover_prob:
                c1, c2 = crossover(w1, w2, rng)
            else:
                c1, c2 = w1.copy(), w2.copy()
            for j, c in ((k, c1), (k + 1, c2)):
                if rng.random() < cfg.mutation_prob:
                    c = mutate(c, cfg.mutation_cte, rng, cfg.mutation_mode)
                children[j] = c
        pop = children
    return EvolveResult(decode(best, topology, neuron_configs), curve, best, pop, fits)
