import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_net, remove_hidden
from neuroablate.ablation import (
    ORIGINAL,
    AblationItem,
    AblationPlan,
    apply,
    enumerate_hidden_pairs,
    enumerate_plans,
    enumerate_singles,
    write_plans_csv,
)
from neuroablate.errors import ConfigError
from neuroablate.netcore import Topology, forward, networks_equal, predict


def hidden(i, scale=0.0):
    return AblationPlan((AblationItem("hidden", 0, i, scale),), f"H{i}")


class TestApply:
    def test_identity_plan(self):
        net = random_net(Topology(3, (4,), 2), 0, params=True)
        assert networks_equal(apply(net, ORIGINAL), net)

    @pytest.mark.parametrize("seed", range(5))
    def test_shutdown_equals_removal(self, seed):
        net = random_net(Topology(4, (5,), 3), seed, params=True)
        x = np.random.default_rng(seed).uniform(0, 1, (7, 4))
        for h in range(5):
            np.testing.assert_allclose(
                predict(apply(net, hidden(h)), x), predict(remove_hidden(net, h), x), atol=1e-12
            )

    def test_half_beta(self):
        net = random_net(Topology(2, (3,), 2), 1)
        out = apply(net, hidden(1, 0.5))
        assert out.neuron_configs[0][1].activation.beta == 0.5
        h = forward(net, [0.2, 0.8])[1]
        h_half = forward(out, [0.2, 0.8])[1]
        assert h_half[1] == pytest.approx(0.5 * h[1], rel=1e-15)

    @settings(max_examples=50)
    @given(st.floats(0, 1), st.integers(0, 3), st.integers(0, 1000))
    def test_beta_and_output_scale_agree(self, scale, h, seed):
        net = random_net(Topology(3, (4,), 2), seed)
        x = np.random.default_rng(seed).uniform(0, 1, (5, 3))
        a = predict(apply(net, hidden(h, scale), "beta"), x)
        b = predict(apply(net, hidden(h, scale), "output_scale"), x)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)

    def test_input_shutdown_zeroes_input(self):
        net = random_net(Topology(3, (4,), 2), 2)
        plan = AblationPlan((AblationItem("input", 0, 1),), "I1")
        x = np.array([0.3, 0.9, 0.5])
        y = np.array([0.3, 0.0, 0.5])
        np.testing.assert_array_equal(predict(apply(net, plan), x), predict(net, y))

    def test_output_neuron(self):
        net = random_net(Topology(3, (4,), 2), 2)
        plan = AblationPlan((AblationItem("output", 0, 1),), "O1")
        assert predict(apply(net, plan), [0.1, 0.2, 0.3])[1] == 0.0

    def test_does_not_mutate_input(self):
        net = random_net(Topology(3, (4,), 2), 3)
        before = net.dumps()
        apply(net, AblationPlan((AblationItem("hidden", 0, 0), AblationItem("input", 0, 2)), "x"))
        assert net.dumps() == before

    @settings(max_examples=30)
    @given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 1000))
    def test_composition(self, h1, h2, seed):
        if h1 == h2:
            return
        net = random_net(Topology(3, (6,), 2), seed, params=True)
        x = np.random.default_rng(seed).uniform(0, 1, (4, 3))
        stepwise = apply(apply(net, hidden(h1)), hidden(h2))
        at_once = apply(net, AblationPlan(hidden(h1).items + hidden(h2).items, "pair"))
        np.testing.assert_array_equal(predict(stepwise, x), predict(at_once, x))

    @pytest.mark.parametrize(
        "item",
        [AblationItem("hidden", 0, 4), AblationItem("hidden", 1, 0), AblationItem("input", 0, 3),
         AblationItem("output", 0, 2)],
    )
    def test_out_of_range(self, item):
        with pytest.raises(IndexError):
            apply(random_net(Topology(3, (4,), 2), 0), AblationPlan((item,), "bad"))

    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            apply(random_net(Topology(3, (4,), 2), 0), hidden(0), "noise")


class TestPlans:
    def test_duplicate_rejected(self):
        with pytest.raises(ConfigError):
            AblationPlan((AblationItem("hidden", 0, 1), AblationItem("hidden", 0, 1, 0.5)), "dup")

    @pytest.mark.parametrize("scale", [-0.1, 1.5])
    def test_scale_range(self, scale):
        with pytest.raises(ConfigError):
            AblationItem("hidden", 0, 0, scale)

    def test_categories(self):
        assert ORIGINAL.category == "original"
        assert hidden(0).category == "hidden"
        assert enumerate_singles(Topology(3, (2,), 2), "input")[0].category == "input"
        assert enumerate_hidden_pairs(Topology(3, (2,), 2))[0].category == "hidden-pair"

    @pytest.mark.parametrize("i, h", [(9, 8), (51, 8), (8, 8), (58, 12), (60, 12), (2, 6)])
    def test_counts(self, i, h):
        t = Topology(i, (h,), 2)
        assert len(enumerate_singles(t, "input")) == i
        assert len(enumerate_singles(t, "hidden")) == h
        assert len(enumerate_hidden_pairs(t)) == h * (h - 1) // 2
        assert len(enumerate_plans(t, "all")) == i + h + h * (h - 1) // 2

    def test_pair_labels_and_order(self):
        pairs = enumerate_hidden_pairs(Topology(2, (3,), 2))
        assert [p.label for p in pairs] == ["H0+H1", "H0+H2", "H1+H2"]

    def test_two_hidden_gives_one_pair(self):
        assert [p.label for p in enumerate_hidden_pairs(Topology(2, (2,), 2))] == ["H0+H1"]

    def test_too_few_hidden(self):
        with pytest.raises(ConfigError):
            enumerate_hidden_pairs(Topology(2, (1,), 2))

    def test_singles_order(self):
        labels = [p.label for p in enumerate_plans(Topology(2, (3,), 2), "singles")]
        assert labels == ["H0", "H1", "H2", "I0", "I1"]

    def test_unknown_set(self):
        with pytest.raises(ConfigError):
            enumerate_plans(Topology(2, (3,), 2), "triples")

    def test_plans_csv(self, tmp_path):
        write_plans_csv(enumerate_plans(Topology(2, (2,), 2), "all"), tmp_path / "p.csv")
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == "label,layer_kind,indices,scale"
        assert lines[1] == "H0,hidden,0:0,0.0"
        assert lines[-1] == "H0+H1,hidden,0:0;0:1,0.0"
