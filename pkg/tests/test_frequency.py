import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mstnlearn import frequency, rnn
from mstnlearn.frequency import compare_matrices, enumerate_patterns, transition_matrix_from_net
from mstnlearn.mstn import MentalState as S
from mstnlearn.rnn import NetWeights, Topology


def random_net(seed, hidden=5, sd=1.0):
    topo = Topology.mstn(hidden)
    return NetWeights(topo, np.random.default_rng(seed).normal(0, sd, len(topo.connections)))


def test_enumeration_against_brute_force():
    pats = enumerate_patterns()
    assert pats.shape == (511, 9)
    brute = set()
    for r in range(1, 10):
        for subset in itertools.combinations(range(9), r):
            v = np.zeros(9)
            v[list(subset)] = 1 / r
            brute.add(tuple(v))
    assert {tuple(p) for p in pats} == brute
    np.testing.assert_allclose(pats.sum(axis=1), 1.0, atol=1e-15)


def test_enumeration_examples():
    pats = enumerate_patterns()
    np.testing.assert_array_equal(pats[0b100 - 1], np.eye(9)[2])
    pair = pats[(1 | 1 << 8) - 1]
    assert pair[0] == pair[8] == 0.5 and pair.sum() == 1.0


@pytest.mark.parametrize("mode", frequency.MODES)
@pytest.mark.parametrize("seed", range(5))
def test_rows_stochastic(mode, seed):
    p = transition_matrix_from_net(random_net(seed, sd=2.0), mode)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)
    if mode == "argmax":
        counts = p * 511
        np.testing.assert_allclose(counts, np.round(counts), atol=1e-9)


def test_constant_network_gives_uniform_rows():
    topo = Topology.mstn(3)
    p = transition_matrix_from_net(NetWeights(topo, np.zeros(len(topo.connections))), "mean")
    np.testing.assert_allclose(p, 1 / 7, atol=1e-15)


def test_argmax_hardwired_sad():
    topo = Topology(16, 0, 7, tuple((16 + j, i, 0) for j in range(7) for i in range(16)))
    w = np.array([10.0 if t == 16 + S.SAD else -10.0 for t, _, _ in topo.connections])
    p = transition_matrix_from_net(NetWeights(topo, w), "argmax")
    np.testing.assert_array_equal(p[:, S.SAD], 1.0)
    np.testing.assert_array_equal(p.sum(axis=1), 1.0)


def test_mean_matches_direct_average():
    net = random_net(11)
    p = transition_matrix_from_net(net, "mean")
    pats = enumerate_patterns()
    for s in S:
        outs = []
        for pat in pats:
            x = np.concatenate([pat, np.eye(7)[s]])
            seq = rnn.TrainingSequence([x], np.zeros((1, 7)))
            outs.append(rnn.forward(net, seq).outputs(net.topology)[0])
        mean = np.mean(outs, axis=0)
        np.testing.assert_allclose(p[s], mean / mean.sum(), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_order_and_duplicate_invariance(seed):
    net = random_net(seed % 1000, hidden=3)
    pats = enumerate_patterns()
    perm = np.random.default_rng(seed).permutation(len(pats))
    for mode in frequency.MODES:
        base = transition_matrix_from_net(net, mode)
        assert transition_matrix_from_net(net, mode, pats[perm]).tobytes() == base.tobytes()
    doubled = transition_matrix_from_net(net, "mean", np.vstack([pats, pats]))
    assert doubled.tobytes() == transition_matrix_from_net(net, "mean").tobytes()


def test_compare_matrices(table1):
    assert compare_matrices(table1.verbatim, table1.verbatim, 0.0) == []
    after = table1.verbatim.copy()
    after[S.FEAR, S.ANGRY] += 0.3
    after[S.HAPPY, S.SAD] += 0.05
    assert compare_matrices(table1.verbatim, after, 0.1) == [(S.FEAR, S.ANGRY, pytest.approx(0.3))]
    assert [c[:2] for c in compare_matrices(table1.verbatim, after, 0.01)] == [(S.FEAR, S.ANGRY), (S.HAPPY, S.SAD)]


def test_compare_against_scenario1_normal_row(table1):
    after = table1.verbatim.copy()
    # the Normal row of the first learned table, in fixture column order
    after[S.QUIET] = [0.0285, 0.0018, 0.9649, 0.0012, 0.0013, 0.0011, 0.0012]
    cells = compare_matrices(table1.verbatim, after, 0.5)
    assert [c[:2] for c in cells] == [(S.QUIET, S.SAD)]
    assert cells[0].delta == pytest.approx(0.9649 - 0.090)
