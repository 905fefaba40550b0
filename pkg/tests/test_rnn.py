import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mstnlearn import _kernels, rnn
from mstnlearn.rnn import NetWeights, Topology, TrainingSequence
from reference import fd_gradient, reference_outputs


def tiny(weight=0.0):
    """One input wired to output 0; the other six outputs have no inputs."""
    topo = Topology(1, 0, 7, ((1, 0, 0),))
    return NetWeights(topo, [weight])


def random_case(rng, T=None):
    n_in = int(rng.integers(1, 5))
    n_hidden = int(rng.integers(0, 5))
    n = n_in + n_hidden + 7
    conns = set()
    for t in range(n_in, n):
        for s in range(n):
            if s < n_in:
                if rng.random() < 0.6:
                    conns.add((t, s, 0))
            else:
                if s < t and rng.random() < 0.4:
                    conns.add((t, s, 0))
                if rng.random() < 0.25:
                    conns.add((t, s, int(rng.integers(1, 3))))
    topo = Topology(n_in, n_hidden, 7, tuple(conns))
    net = NetWeights(topo, rng.normal(0, 1.0, len(topo.connections)))
    T = int(rng.integers(1, 6)) if T is None else T
    seq = TrainingSequence(rng.random((T, n_in)), rng.random((T, 7)))
    return net, seq


def test_zero_weights_give_half():
    topo = Topology.mstn(3)
    net = NetWeights(topo, np.zeros(len(topo.connections)))
    seq = TrainingSequence(np.random.default_rng(0).random((4, 16)), np.zeros((4, 7)))
    trace = rnn.forward(net, seq)
    np.testing.assert_array_equal(trace.y[:, 16:], 0.5)


def test_single_input_weight():
    trace = rnn.forward(tiny(1.0), TrainingSequence([[1.0]], np.zeros((1, 7))))
    assert trace.y[0, 1] == pytest.approx(0.7311, abs=1e-4)
    assert trace.y[0, 1] == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-15)


def test_first_step_has_no_recurrent_input():
    topo = Topology(1, 1, 7, ((1, 1, 1), (2, 1, 0)))
    net = NetWeights(topo, [5.0, 1.0])
    trace = rnn.forward(net, TrainingSequence([[0.0], [0.0]], np.zeros((2, 7))))
    assert trace.x[0, 1] == 0.0
    assert trace.x[1, 1] == pytest.approx(5.0 * 0.5)


def test_zero_delay_cycle_rejected():
    with pytest.raises(rnn.TopologyError, match="cycle"):
        Topology(1, 2, 7, ((1, 2, 0), (2, 1, 0)))
    Topology(1, 2, 7, ((1, 2, 1), (2, 1, 0)))


def test_topology_requires_seven_outputs():
    with pytest.raises(rnn.TopologyError):
        Topology(1, 0, 3, ())


def test_perfect_fit_has_zero_gradient():
    net, seq = random_case(np.random.default_rng(3), T=4)
    out = rnn.forward(net, seq).outputs(net.topology)
    grad, loss = rnn.bptt_gradients(net, TrainingSequence(seq.inputs, out))
    assert loss == 0.0
    np.testing.assert_array_equal(grad, 0.0)


def test_single_unit_delta():
    target = np.zeros((1, 7))
    target[0, 0] = 1.0
    grad, loss = rnn.bptt_gradients(tiny(0.0), TrainingSequence([[1.0]], target))
    assert grad[0] == 0.125
    net = rnn.update_weights(tiny(0.0), grad, 0.5)
    assert net.w[0] == 0.0625


@pytest.mark.parametrize("seed", range(25))
def test_gradient_matches_finite_differences(seed):
    net, seq = random_case(np.random.default_rng(seed))
    topo = net.topology
    grad, _ = rnn.bptt_gradients(net, seq)
    num = fd_gradient(topo.connections, net.w.tolist(), topo.n_in, topo.n_neurons,
                      seq.inputs.tolist(), seq.targets.tolist())
    rel = np.abs(grad - num) / np.maximum(np.maximum(np.abs(grad), np.abs(num)), 1e-6)
    assert rel.max() < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_forward_matches_reference(seed):
    net, seq = random_case(np.random.default_rng(100 + seed))
    topo = net.topology
    ref = reference_outputs(topo.connections, net.w.tolist(), topo.n_in, topo.n_neurons, seq.inputs.tolist())
    np.testing.assert_allclose(rnn.forward(net, seq).y, ref, rtol=0, atol=1e-13)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("seed", range(10))
def test_backends_agree(seed):
    net, seq = random_case(np.random.default_rng(200 + seed))
    topo = net.topology
    tgt, src, delay = topo.arrays
    in_ptr, in_idx, out_ptr, out_idx = topo.csr
    args = (seq.inputs, topo.n_neurons, topo.order, in_ptr, in_idx, src, delay, net.w)
    xa, ya = _kernels.forward_numpy(*args)
    xb, yb = _kernels.forward_numba(*args)
    np.testing.assert_allclose(ya, yb, atol=1e-14)
    err = np.zeros_like(ya)
    err[:, topo.output_slice] = seq.targets - ya[:, topo.output_slice]
    bargs = (ya, err, topo.n_in, topo.order, out_ptr, out_idx, tgt, src, delay, net.w)
    da, ga = _kernels.backward_numpy(*bargs)
    db, gb = _kernels.backward_numba(*bargs)
    np.testing.assert_allclose(da, db, atol=1e-14)
    np.testing.assert_allclose(ga, gb, atol=1e-13)
    np.testing.assert_allclose(_kernels.step_batch_numpy(*args), _kernels.step_batch_numba(*args), atol=1e-14)


def test_weight_sharing_reaches_every_step():
    net, seq = random_case(np.random.default_rng(5), T=5)
    topo = net.topology
    base = rnn.forward(net, seq).y
    # a weight into an output from an input unit is used at every step
    k = next(i for i, (t, s, d) in enumerate(topo.connections) if s < topo.n_in and t >= topo.n_in + topo.n_hidden)
    w = net.w.copy()
    w[k] += 1e-6
    moved = np.abs(rnn.forward(net.with_weights(w), seq).y - base).max(axis=1)
    assert moved[0] > 0 and moved[3] > 0


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_outputs_strictly_inside_unit_interval(seed):
    net, seq = random_case(np.random.default_rng(seed))
    y = rnn.forward(net, seq).y[:, net.topology.n_in:]
    assert np.all((y > 0) & (y < 1))


def test_zero_network_is_training_fixed_point():
    topo = Topology.mstn(4)
    net = NetWeights(topo, np.zeros(len(topo.connections)))
    seq = TrainingSequence(np.zeros((3, 16)), np.full((3, 7), 0.5))
    trained, curve = rnn.train(net, [seq], alpha=0.5, epochs=5)
    np.testing.assert_array_equal(trained.w, 0.0)
    assert curve == [0.0] * 5


def test_update_weights_rules():
    net = tiny(0.3)
    assert rnn.update_weights(net, [0.0], 0.1).w[0] == 0.3
    g = np.array([0.123456789])
    back = rnn.update_weights(rnn.update_weights(net, g, 0.25), -g, 0.25)
    assert back.w[0] == pytest.approx(0.3, abs=1e-16)
    with pytest.raises(rnn.TrainingError, match=r"\(1, 0, 0\)"):
        rnn.update_weights(net, [np.nan], 0.1)
    with pytest.raises(ValueError):
        rnn.update_weights(net, [0.0], 0.0)


def test_train_memorizes_single_step():
    target = np.zeros((1, 7))
    target[0, 2] = 1.0
    topo = Topology.mstn(4)
    net = rnn.init_weights(topo, np.full((7, 7), 1 / 7), 1.0, seed=1)
    seq = rnn.make_sequence([(np.eye(9)[3], 1, 2)])
    trained, curve = rnn.train(net, [seq], alpha=0.2, epochs=500)
    assert 2 * rnn.sequence_loss(trained, seq) < 0.01
    assert curve[-1] < curve[0]


def test_train_preconditions_and_determinism(table1):
    topo = Topology.mstn(3)
    net = rnn.init_weights(topo, table1.p, 1.0, seed=3)
    seq = rnn.make_sequence([(np.eye(9)[1], 1, 0), (np.eye(9)[3], 0, 2)])
    with pytest.raises(ValueError):
        rnn.train(net, [seq], 0.1, 0)
    a, ca = rnn.train(net, [seq], 0.1, 20)
    b, cb = rnn.train(net, [seq], 0.1, 20)
    assert a.w.tobytes() == b.w.tobytes() and ca == cb


def test_train_aborts_on_non_finite():
    net = tiny(0.0)
    seq = TrainingSequence([[1.0]], np.eye(7)[:1])
    with pytest.raises(rnn.TrainingError):
        rnn.train(net, [seq], alpha=float("inf"), epochs=3)


def test_init_weights(table1):
    topo = Topology.mstn()
    net = rnn.init_weights(topo, table1.p, scale=1.0, seed=4)
    quiet_ctx, quiet_out = rnn.context_input(1), rnn.output_unit(topo, 1)
    assert net.get(quiet_out, quiet_ctx) == pytest.approx(0.509, abs=1e-3)
    assert net.get(quiet_out, quiet_ctx) == table1.p[1, 1]
    zero = rnn.init_weights(topo, table1.p, scale=0.0, seed=4)
    ctx = [k for k, (t, s, d) in enumerate(topo.connections)
           if s >= 9 and s < 16 and t >= topo.n_in + topo.n_hidden]
    assert len(ctx) == 49 and np.all(zero.w[ctx] == 0.0)
    others = np.setdiff1d(np.arange(len(topo.connections)), ctx)
    assert np.all(np.abs(zero.w[others]) <= 0.1)
    np.testing.assert_array_equal(zero.w[others], net.w[others])


def test_weights_doc_round_trip(table1):
    net = rnn.init_weights(Topology.mstn(5), table1.p, 0.7, seed=9)
    back = rnn.weights_from_doc(rnn.weights_to_doc(net))
    assert back.topology == net.topology
    assert back.w.tobytes() == net.w.tobytes()
