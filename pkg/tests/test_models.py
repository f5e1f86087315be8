"""Model specs, parameter tables, and the state derivative.

The vectorized derivative is checked against a scalar-loop oracle over every
valid family/wiring/input combination and every synapse parameterization,
and its gradients are checked against central differences.
"""

import json
import math

import numpy as np
import pytest

from liquidnet import autodiff as ad
from liquidnet.models import (
    FAMILIES,
    INPUT_MODES,
    WIRINGS,
    W_MODES,
    ModelSpec,
    ParameterSet,
    anode_project,
    anode_wrap,
    bind_params,
    clamp_params,
    count_params,
    derivative,
    init_params,
    input_map,
    input_stage,
    load_checkpoint,
    output_map,
    save_checkpoint,
    state_derivative,
)
from oracles import derivative_loop, finite_diff, rel_err, sigmoid_scalar


def make_spec(family, wiring, input_mode, n=3, m=2, **kw):
    return ModelSpec(
        family=family,
        n_neurons=n,
        wiring=wiring,
        input_mode=input_mode,
        n_inputs=m if input_mode != "none" else 0,
        n_augment=2 if family == "anode" else 0,
        **kw,
    )


def all_valid_specs(n=3, m=2, **kw):
    out = []
    for family in FAMILIES:
        for wiring in WIRINGS:
            for input_mode in INPUT_MODES:
                try:
                    out.append(make_spec(family, wiring, input_mode, n=n, m=m, **kw))
                except ValueError:
                    continue
    return out


# ---------------------------------------------------------------------------
# spec validation


def test_exactly_twenty_valid_combinations():
    specs = all_valid_specs()
    assert len(specs) == 20


def test_wiring_long_form_aliases():
    s = make_spec("ltc", "synaptic-activation", "none")
    assert s.wiring == "synaptic"
    s = make_spec("act-rnn", "neural-activation", "none")
    assert s.wiring == "neural"


def test_gate_defaults():
    assert make_spec("ltc", "synaptic", "none").gate == "reversal"
    assert make_spec("ct-rnn", "synaptic", "linear").gate == "none"
    assert make_spec("neural-ode", "neural", "none").gate == "none"


def test_ltc_rejects_tanh():
    with pytest.raises(ValueError, match="tanh"):
        make_spec("ltc", "synaptic", "none", activation="tanh")


def test_reversal_gate_is_ltc_only():
    with pytest.raises(ValueError, match="reversal"):
        make_spec("ct-rnn", "synaptic", "linear", gate="reversal")


def test_one_minus_gate_allowed_on_ct_rnn():
    s = make_spec("ct-rnn", "synaptic", "synaptic", gate="one-minus")
    assert s.gate == "one-minus"


def test_autonomous_families_reject_input():
    for family in ("neural-ode", "act-rnn"):
        with pytest.raises(ValueError, match="autonomous"):
            make_spec(family, "synaptic", "linear")


def test_ct_rnn_requires_input():
    with pytest.raises(ValueError, match="input"):
        make_spec("ct-rnn", "synaptic", "none")


def test_neuron_count_must_be_positive():
    with pytest.raises(ValueError, match="neurons must be >= 1"):
        make_spec("ltc", "synaptic", "none", n=0)


def test_anode_requires_augmentation():
    with pytest.raises(ValueError, match="anode"):
        ModelSpec(family="anode", n_neurons=3, n_augment=0)
    with pytest.raises(ValueError, match="anode-only"):
        ModelSpec(family="ltc", n_neurons=3, n_augment=2)


def test_learnable_rest_needs_decay():
    with pytest.raises(ValueError, match="decay"):
        ModelSpec(family="neural-ode", n_neurons=3, learnable_rest=True)


def test_inconsistent_input_width_rejected():
    with pytest.raises(ValueError, match="n_inputs"):
        ModelSpec(family="ltc", n_neurons=3, input_mode="linear", n_inputs=0)
    with pytest.raises(ValueError, match="n_inputs"):
        ModelSpec(family="ltc", n_neurons=3, input_mode="none", n_inputs=4)


def test_unknown_enum_values_rejected():
    for kw in (
        {"family": "rnn"},
        {"activation": "relu"},
        {"wiring": "dense"},
        {"input_mode": "conv"},
        {"w_mode": "q"},
        {"gate": "sigmoid"},
    ):
        args = {"family": "ltc", "n_neurons": 2}
        args.update(kw)
        with pytest.raises(ValueError):
            ModelSpec(**args)


def test_effective_w_mode_drops_slope_for_neural_ode_families():
    for family in ("neural-ode", "act-rnn"):
        s = make_spec(family, "neural", "none", w_mode="v")
        assert s.effective_w_mode == "r"
    s = ModelSpec(family="anode", n_neurons=2, n_augment=1, wiring="neural", w_mode="v")
    assert s.effective_w_mode == "r"
    assert make_spec("ct-rnn", "neural", "linear", w_mode="v").effective_w_mode == "v"
    assert make_spec("ltc", "synaptic", "none", w_mode="affine").effective_w_mode == "affine"


# ---------------------------------------------------------------------------
# parameter counting


def test_reference_counts_synaptic_wiring():
    # hand arithmetic: 3n^2+n, 4n^2+3n, and input terms at n=m=32
    assert count_params(make_spec("act-rnn", "synaptic", "none", n=32)) == 3104
    assert count_params(make_spec("ltc", "synaptic", "none", n=32)) == 4192
    assert count_params(make_spec("ct-rnn", "synaptic", "synaptic", n=32, m=32)) == 6176
    assert count_params(make_spec("ltc", "synaptic", "synaptic", n=32, m=32)) == 8288
    assert count_params(make_spec("ltc", "synaptic", "linear", n=32, m=32)) == 5216


def test_reference_counts_neural_wiring():
    assert count_params(make_spec("act-rnn", "neural", "none", n=64)) == 4224
    assert count_params(make_spec("ct-rnn", "neural", "synaptic", n=63, m=63)) == 8253
    assert count_params(make_spec("ct-rnn", "neural", "linear", n=51, m=51)) == 5355


def test_count_single_neuron_act_rnn():
    # one neuron, synaptic wiring: w, a, b, w_l -> 4 entries
    assert count_params(make_spec("act-rnn", "synaptic", "none", n=1)) == 4


def test_count_matches_allocated_tables():
    # the closed form must agree with brute-force enumeration of the tables
    for n, m in ((1, 1), (2, 3), (5, 2), (8, 8)):
        for spec in all_valid_specs(n=n, m=m):
            ps = init_params(spec, seed=0)
            assert count_params(spec) == ps.counted_size(), spec


def test_count_matches_allocation_with_learnable_rest():
    for family in ("act-rnn", "ct-rnn"):
        im = "none" if family == "act-rnn" else "linear"
        for wiring in WIRINGS:
            spec = make_spec(family, wiring, im, n=4, m=2, learnable_rest=True)
            base = make_spec(family, wiring, im, n=4, m=2)
            assert count_params(spec) == count_params(base) + 4
            assert count_params(spec) == init_params(spec, 0).counted_size()


def test_count_independent_of_w_mode():
    for mode in W_MODES:
        spec = make_spec("ltc", "synaptic", "synaptic", n=5, m=2, w_mode=mode)
        assert count_params(spec) == init_params(spec, 0).counted_size()
        assert count_params(spec) == count_params(make_spec("ltc", "synaptic", "synaptic", n=5, m=2))


def test_anode_counts_on_augmented_size():
    spec = ModelSpec(family="anode", n_neurons=3, n_augment=2, wiring="synaptic")
    assert count_params(spec) == 3 * 25  # N = 5
    spec = ModelSpec(family="anode", n_neurons=3, n_augment=2, wiring="neural")
    assert count_params(spec) == 25 + 5


def test_readout_and_input_bias_not_counted():
    spec = make_spec("ct-rnn", "synaptic", "linear", n=3, m=2, n_outputs=4)
    ps = init_params(spec, 0)
    assert not ps["A_out"].counted
    assert not ps["b_out"].counted
    assert not ps["b_in"].counted
    assert ps["A_in"].counted
    # changing the readout width must not change the count
    wide = make_spec("ct-rnn", "synaptic", "linear", n=3, m=2, n_outputs=11)
    assert count_params(spec) == count_params(wide)


# ---------------------------------------------------------------------------
# initialization


def test_init_deterministic_in_seed():
    spec = make_spec("ltc", "synaptic", "synaptic", n=4, m=3)
    a = init_params(spec, seed=7)
    b = init_params(spec, seed=7)
    c = init_params(spec, seed=8)
    for name in a.names():
        assert np.array_equal(a.value(name), b.value(name))
    assert any(not np.array_equal(a.value(nm), c.value(nm)) for nm in a.names())


def test_init_bounds():
    spec = make_spec("ltc", "synaptic", "synaptic", n=24, m=8)
    ps = init_params(spec, seed=3)
    for name in ("w", "v"):
        val = ps.value(name)
        assert val.min() >= 0.01 and val.max() <= 1.0
    for name in ("a", "a_u"):
        val = ps.value(name)
        assert val.min() >= 3.0 and val.max() <= 8.0
    for name in ("b", "b_u"):
        val = ps.value(name)
        assert val.min() >= 0.3 and val.max() <= 0.8
    wl = ps.value("w_l")
    assert wl.min() >= 0.01 and wl.max() <= 1.0
    for name in ("e", "e_u"):
        assert set(np.unique(ps.value(name))) == {-1.0, 1.0}
    assert np.all(ps.value("C") == 1.0)
    assert np.all(ps.value("e_l") == 0.0)
    aout = ps.value("A_out")
    assert aout.min() >= -0.1 and aout.max() <= 0.1
    assert np.all(ps.value("b_out") == 0.0)


def test_reversal_signs_equiprobable():
    # aggregate the +-1 draws over a large table; the mean must be near zero
    spec = make_spec("ltc", "synaptic", "none", n=100)
    ps = init_params(spec, seed=11)
    e = ps.value("e")
    assert e.size == 10000
    assert abs(e.mean()) < 0.05


def test_trainability_flags():
    spec = make_spec("ltc", "synaptic", "synaptic", n=3, m=2)
    ps = init_params(spec, 0)
    assert not ps["C"].trainable
    assert not ps["e_l"].trainable  # learnable_rest unset
    assert ps["e"].trainable
    assert ps["w"].trainable
    lis = make_spec("ltc", "synaptic", "synaptic", n=3, m=2, learnable_rest=True)
    assert init_params(lis, 0)["e_l"].trainable


def test_learnable_rest_adds_trainable_entries():
    base = make_spec("ct-rnn", "neural", "linear", n=5, m=2)
    lis = make_spec("ct-rnn", "neural", "linear", n=5, m=2, learnable_rest=True)
    assert init_params(lis, 0).n_trainable() == init_params(base, 0).n_trainable() + 5


def test_lower_bound_flags():
    spec = make_spec("ltc", "synaptic", "synaptic", n=3, m=2)
    ps = init_params(spec, 0)
    bounded = {name for name, p in ps.items() if p.lower_bounded}
    assert bounded == {"w", "a", "v", "a_u", "C"}


# ---------------------------------------------------------------------------
# clamping


def test_clamp_projects_bounded_tables_only():
    spec = make_spec("ltc", "synaptic", "none", n=3)
    ps = init_params(spec, 0)
    ps.value("w")[0, 0] = -0.5
    ps.value("a")[1, 2] = -2.0
    ps.value("w_l")[0, 1] = -0.3  # leak conductance may go negative
    ps.value("b")[2, 2] = -0.9
    ps.value("e")[0, 1] = -1.0
    _, n_clamped = clamp_params(ps)
    assert n_clamped == 2
    assert ps.value("w")[0, 0] == 0.0
    assert ps.value("a")[1, 2] == 0.0
    assert ps.value("w_l")[0, 1] == -0.3
    assert ps.value("b")[2, 2] == -0.9
    assert ps.value("e")[0, 1] == -1.0


def test_clamp_idempotent():
    spec = make_spec("ct-rnn", "synaptic", "synaptic", n=4, m=2)
    ps = init_params(spec, 0)
    ps.value("w")[:] = -1.0
    _, first = clamp_params(ps)
    _, second = clamp_params(ps)
    assert first == 16
    assert second == 0


# ---------------------------------------------------------------------------
# derivative: hand-worked cases


def test_derivative_single_neuron_ct_rnn():
    # dx = -w_l*x + w*sigmoid(a*(x + b)) + A_in*u + b_in, all scalars
    spec = make_spec("ct-rnn", "synaptic", "linear", n=1, m=1)
    ps = init_params(spec, 0)
    ps.value("w")[:] = 0.5
    ps.value("a")[:] = 2.0
    ps.value("b")[:] = 0.1
    ps.value("w_l")[:] = 0.25
    ps.value("A_in")[:] = 0.3
    ps.value("b_in")[:] = 0.05
    got = derivative(spec, ps, [0.2], [1.0])
    want = -0.25 * 0.2 + 0.5 * sigmoid_scalar(2.0 * 0.3) + 0.3 + 0.05
    assert abs(got[0] - want) < 1e-14


def test_derivative_single_neuron_ltc():
    # C*dx = w_l*(e_l - x) + w*sigmoid(a*(x + b))*(e - x)
    spec = make_spec("ltc", "synaptic", "none", n=1)
    ps = init_params(spec, 0)
    ps.value("w")[:] = 0.8
    ps.value("a")[:] = 4.0
    ps.value("b")[:] = 0.5
    ps.value("e")[:] = 1.0
    ps.value("w_l")[:] = 0.6
    ps.value("e_l")[:] = 0.0
    ps.value("C")[:] = 2.0
    x = 0.3
    got = derivative(spec, ps, [x])
    want = (0.6 * (0.0 - x) + 0.8 * sigmoid_scalar(4.0 * 0.8) * (1.0 - x)) / 2.0
    assert abs(got[0] - want) < 1e-14


def test_derivative_leak_only():
    # zero conductances leave pure exponential decay
    spec = make_spec("act-rnn", "synaptic", "none", n=2)
    ps = init_params(spec, 0)
    ps.value("w")[:] = 0.0
    ps.value("w_l")[:] = [0.5, 2.0]
    got = derivative(spec, ps, [1.0, -0.4])
    assert np.allclose(got, [-0.5, 0.8], atol=1e-15)


def test_derivative_decay_pulls_toward_rest():
    spec = make_spec("ct-rnn", "synaptic", "linear", n=1, m=1, learnable_rest=True)
    ps = init_params(spec, 0)
    ps.value("w")[:] = 0.0
    ps.value("A_in")[:] = 0.0
    ps.value("e_l")[:] = 0.3
    ps.value("w_l")[:] = 0.5
    got = derivative(spec, ps, [1.0], [0.0])
    assert abs(got[0] - 0.5 * (0.3 - 1.0)) < 1e-15


def test_reversal_gate_closes_at_reversal_potential():
    # with the state pinned at every synapse's reversal potential the synapse
    # currents vanish and only the leak remains
    spec = make_spec("ltc", "synaptic", "none", n=3)
    ps = init_params(spec, seed=5)
    ps.value("e")[:] = 1.0
    x = np.ones(3)
    got = derivative(spec, ps, x)
    want = ps.value("w_l")[0] * (ps.value("e_l")[0] - x) / ps.value("C")[0]
    assert np.allclose(got, want, atol=1e-15)


def test_reversal_gate_sign():
    # a single excitatory synapse (e=+1) drives the state up below the
    # reversal potential and down above it
    spec = make_spec("ltc", "synaptic", "none", n=1)
    ps = init_params(spec, 0)
    ps.value("w")[:] = 1.0
    ps.value("e")[:] = 1.0
    ps.value("w_l")[:] = 0.0
    below = derivative(spec, ps, [0.5])[0]
    above = derivative(spec, ps, [1.5])[0]
    assert below > 0.0
    assert above < 0.0


def test_neural_ode_two_neurons_by_hand():
    # dx_i = sum_j w[j,i] * sigmoid(x_j + b_j)
    spec = make_spec("neural-ode", "neural", "none", n=2)
    ps = init_params(spec, 0)
    ps.value("w")[:] = [[0.5, -0.2], [0.3, 0.7]]
    ps.value("b")[:] = [0.1, -0.4]
    x = np.array([0.6, -0.3])
    s = [sigmoid_scalar(0.6 + 0.1), sigmoid_scalar(-0.3 - 0.4)]
    want = [0.5 * s[0] + 0.3 * s[1], -0.2 * s[0] + 0.7 * s[1]]
    assert np.allclose(derivative(spec, ps, x), want, atol=1e-15)


# ---------------------------------------------------------------------------
# derivative: loop-oracle sweep over every combination


def _randomized_params(spec, seed):
    ps = init_params(spec, seed)
    rng = np.random.default_rng(seed + 1000)
    # push tables off their init ranges so nothing accidentally relies on
    # positivity or zero biases; keep e at +-1 and C positive
    for name in ("w", "b", "w_l", "e_l", "A_in", "b_in", "v", "b_u"):
        if name in ps:
            ps.value(name)[:] = rng.uniform(-1.2, 1.2, size=ps.value(name).shape)
    if "C" in ps:
        ps.value("C")[:] = rng.uniform(0.5, 2.0, size=ps.value("C").shape)
    return ps


def _oracle_cases():
    cases = []
    for spec in all_valid_specs(n=3, m=2):
        acts = ("sigmoid",) if spec.family == "ltc" else ("sigmoid", "tanh")
        for mode in W_MODES:
            for act in acts:
                cases.append(
                    make_spec(
                        spec.family,
                        spec.wiring,
                        spec.input_mode,
                        n=3,
                        m=2,
                        w_mode=mode,
                        activation=act,
                    )
                )
    return cases


@pytest.mark.parametrize("spec", _oracle_cases(), ids=lambda s: f"{s.family}-{s.wiring}-{s.input_mode}-{s.w_mode}-{s.activation}")
def test_derivative_matches_loop_oracle(spec):
    ps = _randomized_params(spec, seed=42)
    rng = np.random.default_rng(9)
    x = rng.uniform(-1.5, 1.5, size=spec.state_size)
    u = rng.uniform(-1.5, 1.5, size=spec.n_inputs) if spec.n_inputs else None
    got = derivative(spec, ps, x, u)
    tables = {name: p.value for name, p in ps.items()}
    want = derivative_loop(spec, tables, x, u)
    assert rel_err(got, want, floor=1e-9) < 1e-10


def test_derivative_one_minus_gate_matches_oracle():
    for wiring in WIRINGS:
        spec = make_spec("ct-rnn", wiring, "synaptic", n=3, m=2, gate="one-minus")
        ps = _randomized_params(spec, seed=21)
        rng = np.random.default_rng(2)
        x = rng.uniform(-1.0, 1.0, size=3)
        u = rng.uniform(-1.0, 1.0, size=2)
        tables = {name: p.value for name, p in ps.items()}
        got = derivative(spec, ps, x, u)
        want = derivative_loop(spec, tables, x, u)
        assert rel_err(got, want, floor=1e-9) < 1e-10


def test_batched_derivative_matches_per_row():
    spec = make_spec("ltc", "synaptic", "synaptic", n=4, m=3)
    ps = init_params(spec, seed=1)
    rng = np.random.default_rng(3)
    xb = rng.uniform(-1.0, 1.0, size=(6, 4))
    ub = rng.uniform(-1.0, 1.0, size=(6, 3))
    bp = bind_params(spec, ps, for_grad=False)
    token = input_stage(spec, bp, ad.constant(ub))
    batch = state_derivative(spec, bp, ad.constant(xb), token).value
    for r in range(6):
        single = derivative(spec, ps, xb[r], ub[r])
        assert np.allclose(batch[r], single, atol=1e-13)


def test_neural_wiring_equals_tied_synaptic_tables():
    # a synaptic-wiring model whose rows/columns are tied reproduces the
    # neural-wiring model exactly
    na = make_spec("ltc", "neural", "synaptic", n=3, m=2)
    sa = make_spec("ltc", "synaptic", "synaptic", n=3, m=2)
    na_ps = init_params(na, seed=4)
    sa_ps = init_params(sa, seed=4)
    sa_ps.value("w")[:] = na_ps.value("w")
    sa_ps.value("v")[:] = na_ps.value("v")
    sa_ps.value("a")[:] = np.repeat(na_ps.value("a").reshape(3, 1), 3, axis=1)
    sa_ps.value("b")[:] = np.repeat(na_ps.value("b").reshape(3, 1), 3, axis=1)
    sa_ps.value("e")[:] = np.repeat(na_ps.value("e"), 3, axis=0)
    sa_ps.value("a_u")[:] = np.repeat(na_ps.value("a_u").reshape(2, 1), 3, axis=1)
    sa_ps.value("b_u")[:] = np.repeat(na_ps.value("b_u").reshape(2, 1), 3, axis=1)
    sa_ps.value("e_u")[:] = np.repeat(na_ps.value("e"), 2, axis=0)
    for name in ("w_l", "e_l", "C"):
        sa_ps.value(name)[:] = na_ps.value(name)
    rng = np.random.default_rng(8)
    x = rng.uniform(-1.0, 1.0, size=3)
    u = rng.uniform(-1.0, 1.0, size=2)
    assert np.allclose(derivative(na, na_ps, x, u), derivative(sa, sa_ps, x, u), atol=1e-12)


def test_derivative_deterministic():
    spec = make_spec("ltc", "synaptic", "synaptic", n=4, m=2)
    ps = init_params(spec, 0)
    x = np.linspace(-1, 1, 4)
    u = np.array([0.2, -0.7])
    assert np.array_equal(derivative(spec, ps, x, u), derivative(spec, ps, x, u))


# ---------------------------------------------------------------------------
# derivative: input handling and errors


def test_derivative_rejects_wrong_lengths():
    spec = make_spec("ct-rnn", "synaptic", "linear", n=3, m=2)
    ps = init_params(spec, 0)
    with pytest.raises(ValueError, match="x has length"):
        derivative(spec, ps, [0.1, 0.2], [0.0, 0.0])
    with pytest.raises(ValueError, match="u has length"):
        derivative(spec, ps, [0.1, 0.2, 0.3], [0.0])
    with pytest.raises(ValueError, match="requires u"):
        derivative(spec, ps, [0.1, 0.2, 0.3])
    auto = make_spec("act-rnn", "synaptic", "none", n=3)
    with pytest.raises(ValueError, match="input_mode='none'"):
        derivative(auto, init_params(auto, 0), [0.1, 0.2, 0.3], [1.0])


def test_derivative_rejects_nan():
    spec = make_spec("act-rnn", "synaptic", "none", n=2)
    ps = init_params(spec, 0)
    with pytest.raises(ValueError, match="NaN"):
        derivative(spec, ps, [np.nan, 0.0])


def test_anode_derivative_covers_augmented_state():
    spec = ModelSpec(family="anode", n_neurons=2, n_augment=3, wiring="synaptic")
    ps = init_params(spec, 0)
    dx = derivative(spec, ps, np.zeros(5))
    assert dx.shape == (5,)


def test_input_map_linear():
    spec = make_spec("ct-rnn", "synaptic", "linear", n=3, m=2)
    ps = init_params(spec, 0)
    u = np.array([0.4, -1.1])
    want = u @ ps.value("A_in") + ps.value("b_in")[0]
    assert np.allclose(input_map(spec, ps, u), want, atol=1e-15)


def test_input_map_gated_needs_state():
    spec = make_spec("ltc", "synaptic", "synaptic", n=3, m=2)
    ps = init_params(spec, 0)
    with pytest.raises(ValueError, match="state x"):
        input_map(spec, ps, [0.1, 0.2])
    out = input_map(spec, ps, [0.1, 0.2], x=[0.0, 0.0, 0.0])
    assert out.shape == (3,)


def test_input_map_ungated_synaptic_matches_oracle():
    spec = make_spec("ct-rnn", "synaptic", "synaptic", n=3, m=2)
    ps = _randomized_params(spec, seed=13)
    u = np.array([0.6, -0.2])
    got = input_map(spec, ps, u)
    tables = {name: p.value for name, p in ps.items()}
    # oracle: full derivative minus the autonomous part
    x = np.zeros(3)
    full = derivative_loop(spec, tables, x, u)
    tables_no_input = dict(tables)
    auto = make_spec("act-rnn", "synaptic", "none", n=3)
    for name in ("v", "a_u", "b_u"):
        tables_no_input.pop(name)
    base = derivative_loop(auto, tables_no_input, x)
    assert np.allclose(got, full - base, atol=1e-12)


def test_output_map_linear_readout():
    spec = make_spec("ct-rnn", "synaptic", "linear", n=3, m=1, n_outputs=2)
    ps = init_params(spec, 0)
    x = np.array([0.5, -0.2, 1.0])
    want = x @ ps.value("A_out") + ps.value("b_out")[0]
    assert np.allclose(output_map(spec, ps, x), want, atol=1e-15)


def test_output_map_projects_augmented_state():
    spec = ModelSpec(family="anode", n_neurons=2, n_augment=2, wiring="neural", n_outputs=1)
    ps = init_params(spec, 0)
    x = np.array([0.3, -0.4, 9.0, -9.0])
    want = x[:2] @ ps.value("A_out") + ps.value("b_out")[0]
    assert np.allclose(output_map(spec, ps, x), want, atol=1e-14)


# ---------------------------------------------------------------------------
# anode helpers


def test_anode_wrap_examples():
    assert np.array_equal(anode_wrap([1.0, 2.0], 2), [1.0, 2.0, 0.0, 0.0])
    assert np.array_equal(anode_wrap([], 3), [0.0, 0.0, 0.0])


def test_anode_wrap_batch():
    out = anode_wrap(np.ones((4, 2)), 3)
    assert out.shape == (4, 5)
    assert np.all(out[:, 2:] == 0.0)


def test_anode_project():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(anode_project(x, [0, 1]), [1.0, 2.0])
    with pytest.raises(ValueError, match="out of range"):
        anode_project(x, [0, 7])


def test_anode_wrap_requires_augmentation():
    with pytest.raises(ValueError, match="n_augment"):
        anode_wrap([1.0], 0)


# ---------------------------------------------------------------------------
# gradients through the derivative


def _grad_case_specs():
    return [
        make_spec("ltc", "synaptic", "synaptic", n=2, m=1),
        make_spec("ct-rnn", "neural", "linear", n=3, m=2),
        make_spec("ct-rnn", "neural", "synaptic", n=2, m=2),
        make_spec("act-rnn", "neural", "none", n=3),
        ModelSpec(family="anode", n_neurons=2, n_augment=1, wiring="synaptic"),
        make_spec("ltc", "synaptic", "linear", n=2, m=1, learnable_rest=True),
    ]


@pytest.mark.parametrize("spec", _grad_case_specs(), ids=lambda s: f"{s.family}-{s.wiring}-{s.input_mode}")
def test_derivative_gradients_match_finite_differences(spec):
    ps = init_params(spec, seed=17)
    rng = np.random.default_rng(5)
    x = rng.uniform(-0.8, 0.8, size=spec.state_size)
    u = rng.uniform(-0.8, 0.8, size=spec.n_inputs) if spec.n_inputs else None

    bp = bind_params(spec, ps, for_grad=True)
    xt = ad.constant(x.reshape(1, -1))
    token = input_stage(spec, bp, ad.constant(u.reshape(1, -1))) if u is not None else None
    dx = state_derivative(spec, bp, xt, token)
    loss = ad.tsum(ad.mul(dx, dx))
    grads = ad.gradient(loss, bp.trainable_tensors())
    by_name = bp.grads_by_name(grads)

    def loss_np(p):
        d = derivative(spec, p, x, u)
        return float(np.sum(d * d))

    for name, g in by_name.items():
        def f(val, name=name):
            probe = ps.copy()
            probe.value(name)[:] = val
            return loss_np(probe)

        fd = finite_diff(f, ps.value(name).copy(), h=1e-6)
        assert rel_err(g, fd, floor=1e-6) < 1e-4, name


def test_untouched_tables_get_zero_gradient():
    # a loss that ignores the readout must give exact zero for A_out
    spec = make_spec("ltc", "synaptic", "none", n=2)
    ps = init_params(spec, 0)
    bp = bind_params(spec, ps, for_grad=True)
    dx = state_derivative(spec, bp, ad.constant(np.zeros((1, 2))))
    loss = ad.tsum(ad.mul(dx, dx))
    grads = bp.grads_by_name(ad.gradient(loss, bp.trainable_tensors()))
    assert np.all(grads["A_out"] == 0.0)
    assert np.all(grads["b_out"] == 0.0)


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_roundtrip(tmp_path):
    spec = make_spec("ltc", "synaptic", "synaptic", n=3, m=2, learnable_rest=True)
    ps = init_params(spec, seed=23)
    path = tmp_path / "model.json"
    save_checkpoint(ps, path)
    back = load_checkpoint(path)
    assert back.spec == spec
    assert back.seed == 23
    assert back.names() == ps.names()
    for name, p in ps.items():
        q = back[name]
        assert np.array_equal(p.value, q.value)
        assert (p.trainable, p.lower_bounded, p.counted) == (q.trainable, q.lower_bounded, q.counted)


def test_checkpoint_rejects_other_files(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(path)


def test_checkpoint_rejects_unknown_version(tmp_path):
    spec = make_spec("act-rnn", "neural", "none", n=2)
    ps = init_params(spec, 0)
    path = tmp_path / "model.json"
    save_checkpoint(ps, path)
    doc = json.loads(path.read_text())
    doc["version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(path)


def test_parameter_set_shape_validation():
    spec = make_spec("act-rnn", "synaptic", "none", n=3)
    ps = init_params(spec, 0)
    ps._tables["w"].value = np.zeros((2, 2))
    with pytest.raises(ValueError, match="shape"):
        ps.validate_shapes()
