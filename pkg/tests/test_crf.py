import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldner.corpus import BioTag
from ldner.crf import (CrfModel, constrained_transitions, emissions, forward_log_partition,
                       is_bio_valid, nll_and_gradient, sequence_score, tag_order, viterbi)
from ldner.errors import DivergenceError

from oracles import brute_force_crf, central_differences, relative_error


def random_model(rng, T, F, H, masks=None):
    m = CrfModel.zeros(T, F, H, **(masks or {}))
    for name, p in m.params().items():
        p[...] = rng.normal(scale=0.5, size=p.shape)
    m.apply_mask()
    return m


def test_emissions_zero_weights_give_bias():
    m = CrfModel.zeros(3, 4, 0)
    m.b2[:] = [1.0, -2.0, 0.5]
    e = emissions(m, np.ones((2, 4)))
    assert np.array_equal(e, np.tile([1.0, -2.0, 0.5], (2, 1)))


def test_emissions_scalar_formula():
    m = CrfModel.zeros(1, 1, 0)
    m.W2[:] = [[2.0]]
    m.b2[:] = [1.0]
    assert emissions(m, np.array([[3.0]]))[0, 0] == 7.0


def test_emissions_hidden_layer_killed_by_zero_projection():
    rng = np.random.default_rng(0)
    m = CrfModel.zeros(3, 5, 1)
    m.W1[:] = rng.normal(size=m.W1.shape)
    m.b2[:] = [0.1, 0.2, 0.3]
    e = emissions(m, rng.normal(size=(4, 5)))
    assert np.allclose(e, [0.1, 0.2, 0.3])


def test_emissions_dimension_mismatch():
    with pytest.raises(ValueError):
        emissions(CrfModel.zeros(2, 3, 0), np.zeros((1, 4)))


def test_sequence_score_examples():
    m = CrfModel.zeros(2, 1, 0)
    e = np.array([[0.3, 1.7]])
    assert sequence_score(e, m, [1]) == 1.7
    m.transitions[0, 1] = 3.0
    assert sequence_score(np.zeros((2, 2)), m, [0, 1]) == 3.0
    with pytest.raises(ValueError):
        sequence_score(np.zeros((0, 2)), m, [])


def test_log_partition_closed_forms():
    m = CrfModel.zeros(2, 1, 0)
    assert forward_log_partition(np.zeros((1, 2)), m) == pytest.approx(math.log(2), abs=1e-12)
    a, b = 0.4, -1.3
    assert forward_log_partition(np.array([[a, b]]), m) == pytest.approx(
        math.log(math.exp(a) + math.exp(b)), abs=1e-12)


@pytest.mark.parametrize("seed", range(30))
def test_forward_and_viterbi_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    T, n = int(rng.integers(1, 5)), int(rng.integers(1, 6))
    m = random_model(rng, T, 2, 0)
    e = rng.normal(size=(n, T))
    log_z, path, best = brute_force_crf(e, m.start, m.transitions, m.stop)
    assert forward_log_partition(e, m) == pytest.approx(log_z, abs=1e-8)
    vpath, vscore = viterbi(e, m)
    assert vpath == path
    assert vscore == pytest.approx(best, abs=1e-8)


def test_viterbi_independent_argmax_and_ties():
    m = CrfModel.zeros(3, 1, 0)
    e = np.tile([0.0, 0.5, 2.0], (4, 1))
    assert viterbi(e, m)[0] == [2, 2, 2, 2]
    assert viterbi(np.zeros((3, 3)), m)[0] == [0, 0, 0]


def test_four_token_three_tag_log_partition():
    rng = np.random.default_rng(42)
    m = random_model(rng, 3, 2, 0)
    e = rng.normal(size=(4, 3))
    log_z, _, best = brute_force_crf(e, m.start, m.transitions, m.stop)
    got = forward_log_partition(e, m)
    assert got == pytest.approx(log_z, abs=1e-8)
    assert got >= best


def test_single_tag_loss_is_zero():
    rng = np.random.default_rng(1)
    m = random_model(rng, 1, 3, 0)
    loss, grads = nll_and_gradient(m, rng.normal(size=(4, 3)), [0, 0, 0, 0])
    assert loss == pytest.approx(0.0, abs=1e-12)
    for g in grads.values():
        assert np.allclose(g, 0.0, atol=1e-12)


@pytest.mark.parametrize("H", [0, 8])
@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(H, seed):
    rng = np.random.default_rng(100 + seed)
    T, F, n = 4, 5, int(rng.integers(1, 6))
    m = random_model(rng, T, F, H)
    feats = rng.normal(size=(n, F))
    gold = rng.integers(0, T, size=n)
    loss, grads = nll_and_gradient(m, feats, gold)
    assert loss >= 0
    for name, p in m.params().items():
        if p.size == 0:
            continue
        num = central_differences(lambda: nll_and_gradient(m, feats, gold)[0], p)
        assert relative_error(grads[name], num).max() < 1e-4, name


def test_masked_entries_get_no_gradient():
    tags = tag_order(["person"])
    allowed_t, allowed_s = constrained_transitions(tags)
    rng = np.random.default_rng(3)
    m = random_model(rng, 3, 2, 0, dict(allowed_transitions=allowed_t, allowed_start=allowed_s))
    _, grads = nll_and_gradient(m, rng.normal(size=(3, 2)), [0, 1, 2])
    assert np.all(grads["transitions"][~allowed_t] == 0)
    assert np.all(grads["start"][~allowed_s] == 0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_loss_raises():
    m = CrfModel.zeros(2, 1, 0)
    with pytest.raises(DivergenceError):
        nll_and_gradient(m, np.array([[np.inf]]), [0])
    m.W2[:] = 1.0
    with pytest.raises(DivergenceError):
        nll_and_gradient(m, np.array([[np.nan]]), [0])


def test_constrained_transition_examples():
    tags = tag_order(["person", "location"])
    allowed, start = constrained_transitions(tags)
    ix = {str(t): i for i, t in enumerate(tags)}
    assert not allowed[ix["O"], ix["I-person"]]
    assert allowed[ix["B-person"], ix["I-person"]]
    assert allowed[ix["I-person"], ix["I-person"]]
    assert not allowed[ix["B-location"], ix["I-person"]]
    assert not start[ix["I-location"]]
    assert start[ix["B-location"]]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 8), ncat=st.integers(1, 3))
def test_constrained_viterbi_is_bio_valid(seed, n, ncat):
    rng = np.random.default_rng(seed)
    tags = tag_order([f"c{i}" for i in range(ncat)])
    allowed_t, allowed_s = constrained_transitions(tags)
    m = random_model(rng, len(tags), 3, 0, dict(allowed_transitions=allowed_t, allowed_start=allowed_s))
    e = rng.normal(scale=5.0, size=(n, len(tags)))
    path, _ = viterbi(e, m)
    assert is_bio_valid([tags[i] for i in path])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 6))
def test_gold_probability_in_unit_interval(seed, n):
    rng = np.random.default_rng(seed)
    m = random_model(rng, 3, 2, 0)
    e = rng.normal(size=(n, 3))
    gold = rng.integers(0, 3, size=n)
    p = math.exp(sequence_score(e, m, gold) - forward_log_partition(e, m))
    assert 0 < p <= 1 + 1e-12


def test_is_bio_valid():
    B, I, O = BioTag("B", "x"), BioTag("I", "x"), BioTag("O")
    assert is_bio_valid([B, I, O, B])
    assert not is_bio_valid([O, I])
    assert not is_bio_valid([BioTag("B", "y"), I])
