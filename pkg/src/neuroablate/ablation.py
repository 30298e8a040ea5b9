"""Post-training neuron shutdown and degradation plans."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from itertools import combinations

from .errors import ConfigError
from .netcore import Network, Topology

KINDS = ("input", "hidden", "output")


@dataclass(frozen=True)
class AblationItem:
    kind: str  # "input" | "hidden" | "output"
    layer: int  # hidden layer index; 0 for input/output
    neuron: int
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if not 0.0 <= self.scale <= 1.0:
            raise ConfigError(f"scale must lie in [0, 1], got {self.scale}")


@dataclass(frozen=True)
class AblationPlan:
    items: tuple[AblationItem, ...]
    label: str

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        keys = [(i.kind, i.layer, i.neuron) for i in self.items]
        if len(set(keys)) != len(keys):
            raise ConfigError(f"plan {self.label!r} lists a neuron twice")

    @property
    def category(self) -> str:
        """``original``, ``hidden``, ``input``, ``hidden-pair`` or ``mixed``."""
        kinds = {i.kind for i in self.items}
        if not self.items:
            return "original"
        if kinds == {"hidden"}:
            return "hidden" if len(self.items) == 1 else "hidden-pair" if len(self.items) == 2 else "mixed"
        if kinds == {"input"} and len(self.items) == 1:
            return "input"
        return "mixed"


ORIGINAL = AblationPlan((), "original")


def apply(net: Network, plan: AblationPlan, mode: str = "beta") -> Network:
    """Return a modified copy of ``net``; ``net`` itself is untouched.

    Hidden/output items multiply the neuron's ``beta`` (``mode="beta"``) or
    its ``output_scale`` (``mode="output_scale"``) by the item scale. Input
    items multiply the input's enable flag, which starts at 1.
    """
    if mode not in ("beta", "output_scale"):
        raise ConfigError(f"unknown ablation mode {mode!r}")
    out = net.copy()
    t = net.topology
    for item in plan.items:
        if item.kind == "input":
            if item.layer != 0 or not 0 <= item.neuron < t.n_inputs:
                raise IndexError(f"input {item.neuron} out of range for {t}")
            out.input_enabled[item.neuron] *= item.scale
            continue
        if item.kind == "hidden":
            if not 0 <= item.layer < len(t.hidden_sizes):
                raise IndexError(f"hidden layer {item.layer} out of range for {t}")
            layer = item.layer
        else:
            if item.layer != 0:
                raise IndexError("output layer index must be 0")
            layer = len(t.hidden_sizes)
        if not 0 <= item.neuron < t.sizes[layer + 1]:
            raise IndexError(f"neuron {item.neuron} out of range in layer {layer} of {t}")
        cfg = out.neuron_configs[layer][item.neuron]
        if mode == "beta":
            cfg = replace(cfg, activation=replace(cfg.activation, beta=cfg.activation.beta * item.scale))
        else:
            cfg = replace(cfg, output_scale=cfg.output_scale * item.scale)
        out.neuron_configs[layer][item.neuron] = cfg
    return out


def _label(item: AblationItem, topology: Topology) -> str:
    prefix = {"input": "I", "hidden": "H", "output": "O"}[item.kind]
    if item.kind == "hidden" and len(topology.hidden_sizes) > 1:
        return f"H{item.layer}.{item.neuron}"
    return f"{prefix}{item.neuron}"


def enumerate_singles(t: Topology, kind: str) -> list[AblationPlan]:
    """One full-shutdown plan per input or hidden neuron, in index order."""
    if kind == "input":
        items = [AblationItem("input", 0, i) for i in range(t.n_inputs)]
    elif kind == "hidden":
        items = [
            AblationItem("hidden", layer, i)
            for layer, size in enumerate(t.hidden_sizes)
            for i in range(size)
        ]
    else:
        raise ConfigError(f"cannot enumerate {kind!r} neurons")
    return [AblationPlan((it,), _label(it, t)) for it in items]


def enumerate_hidden_pairs(t: Topology) -> list[AblationPlan]:
    """Every unordered pair of hidden neurons, lexicographic order."""
    items = [p.items[0] for p in enumerate_singles(t, "hidden")]
    if len(items) < 2:
        raise ConfigError("need at least two hidden neurons for pairs")
    return [
        AblationPlan((a, b), f"{_label(a, t)}+{_label(b, t)}") for a, b in combinations(items, 2)
    ]


def enumerate_plans(t: Topology, which: str) -> list[AblationPlan]:
    """Plans for an experiment: ``none``, ``singles``, ``pairs`` or ``all``."""
    if which == "none":
        return []
    if which == "singles":
        return enumerate_singles(t, "hidden") + enumerate_singles(t, "input")
    if which == "pairs":
        return enumerate_hidden_pairs(t)
    if which == "all":
        return enumerate_plans(t, "singles") + enumerate_hidden_pairs(t)
    raise ConfigError(f"unknown ablation set {which!r}")


def write_plans_csv(plans, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["label", "layer_kind", "indices", "scale"])
        for p in plans:
            kinds = sorted({i.kind for i in p.items})
            scales = sorted({i.scale for i in p.items})
            w.writerow(
                [
                    p.label,
                    ";".join(kinds),
                    ";".join(f"{i.layer}:{i.neuron}" for i in p.items),
                    ";".join(repr(s) for s in scales),
                ]
            )
