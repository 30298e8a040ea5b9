"""Train feedforward networks with backpropagation or a real-coded genetic
algorithm and measure how classification holds up when neurons are shut
down after training."""

__version__ = "0.1.0"

from .ablation import AblationItem, AblationPlan, apply, enumerate_hidden_pairs, enumerate_singles
from .bp import BPConfig, LearningCurve, bp_epoch, train_bp
from .datasets import Dataset, SchemaSpec, gen_synthetic, load_csv, majority_fraction
from .ea import EAConfig, crossover, decode, encode, evolve, fitness, mutate, roulette_select, selection_probs
from .experiments import (
    ExperimentSpec,
    classification_success,
    convergence_ratio,
    detect_collapse,
    run_experiment,
    summarize,
)
from .netcore import (
    ActivationParams,
    Network,
    NeuronConfig,
    Topology,
    classify,
    forward,
    init_weights,
    sigmoid,
    sigmoid_derivative,
)
