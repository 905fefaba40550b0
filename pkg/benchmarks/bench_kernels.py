"""Time the numba and numpy kernel paths on the workloads the pipeline runs.

    python benchmarks/bench_kernels.py [--repeat N] [--hidden H]

* bptt: forward + backward over 14 short random sequences (one training epoch
  at the size of the bundled scenario).
* patterns: single-step evaluation of all 511 firing patterns for one state.
"""

import argparse
import time

import numpy as np

from mstnlearn import _kernels, frequency, rnn
from mstnlearn.scenario_io import load_table1


def bench(fn, repeat):
    fn()  # warm-up (includes JIT compilation for the numba path)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--hidden", type=int, default=rnn.DEFAULT_HIDDEN)
    args = ap.parse_args()

    table1 = load_table1()
    topo = rnn.Topology.mstn(args.hidden)
    net = rnn.init_weights(topo, table1.p, 1.0, seed=0)
    tgt, src, delay = topo.arrays
    in_ptr, in_idx, out_ptr, out_idx = topo.csr
    rng = np.random.default_rng(0)
    seqs = [rnn.make_sequence((rng.random(9), rng.integers(7), rng.integers(7)) for _ in range(int(rng.integers(2, 5))))
            for _ in range(14)]
    pats = np.hstack([frequency.enumerate_patterns(), np.tile(np.eye(7)[1], (511, 1))])

    backends = {"numpy": (_kernels.forward_numpy, _kernels.backward_numpy, _kernels.step_batch_numpy)}
    if _kernels.HAVE_NUMBA:
        backends["numba"] = (_kernels.forward_numba, _kernels.backward_numba, _kernels.step_batch_numba)

    print(f"hidden={args.hidden} connections={len(topo.connections)} best of {args.repeat}")
    print(f"{'backend':<8}{'bptt epoch [ms]':>18}{'511 patterns [ms]':>20}")
    for name, (fwd, bwd, step) in backends.items():
        def epoch():
            for seq in seqs:
                _, y = fwd(seq.inputs, topo.n_neurons, topo.order, in_ptr, in_idx, src, delay, net.w)
                err = np.zeros_like(y)
                err[:, topo.output_slice] = seq.targets - y[:, topo.output_slice]
                bwd(y, err, topo.n_in, topo.order, out_ptr, out_idx, tgt, src, delay, net.w)

        def patterns():
            step(pats, topo.n_neurons, topo.order, in_ptr, in_idx, src, delay, net.w)

        print(f"{name:<8}{bench(epoch, args.repeat) * 1e3:>18.3f}{bench(patterns, args.repeat) * 1e3:>20.3f}")


if __name__ == "__main__":
    main()
