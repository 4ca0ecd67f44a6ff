"""Times every hot kernel on both backends at training-sized shapes.

Run: python3 benchmarks/bench_kernels.py [--batch 32] [--hidden 200]
     [--repeats 200]

The compiled extension and the numpy fallback share one interface; this
reports the median per-call time of each and the speedup, plus a whole
LSTM-layer scan so the end-to-end effect is visible.
"""

import argparse
import statistics
import time

import numpy as np

from nndialog.kernels import numpy_backend

try:
    from nndialog.kernels import _ckernels
except ImportError:
    _ckernels = None


def median_time(fn, repeats):
    fn()  # warmup
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def make_cases(batch, hidden, rng):
    gates = 4 * hidden
    pre = rng.standard_normal((batch, gates))
    h = rng.standard_normal((batch, hidden))
    c = rng.standard_normal((batch, hidden))
    mask = (rng.random(batch) < 0.8).astype(np.float64)
    logits = rng.standard_normal((batch, 93))
    labels = rng.integers(0, 93, size=batch)
    glosses = rng.standard_normal(batch)
    table = rng.standard_normal((500, hidden))
    idx = rng.integers(0, 500, size=batch * 12)
    rows = rng.standard_normal((batch * 12, hidden))
    gc = rng.standard_normal((batch, hidden))
    adam_p = rng.standard_normal((hidden, gates))
    adam_g = rng.standard_normal((hidden, gates))

    def case(name, call):
        return name, call

    def build(backend):
        _, probs = backend.softmax_xent_forward(logits, labels)
        _, _, acts, tanh_c = backend.lstm_gates_forward(pre, h, c, mask)
        sig = backend.sigmoid(pre)
        m = np.zeros_like(adam_p)
        v = np.zeros_like(adam_p)
        return [
            case("sigmoid", lambda: backend.sigmoid(pre)),
            case("sigmoid_grad", lambda: backend.sigmoid_grad(sig, pre)),
            case("tanh", lambda: backend.tanh(pre)),
            case("tanh_grad", lambda: backend.tanh_grad(tanh_c, c)),
            case("softmax_rows", lambda: backend.softmax_rows(logits)),
            case("softmax_xent_forward", lambda: backend.softmax_xent_forward(logits, labels)),
            case("softmax_xent_backward", lambda: backend.softmax_xent_backward(probs, labels, glosses)),
            case("lstm_gates_forward", lambda: backend.lstm_gates_forward(pre, h, c, mask)),
            case("lstm_gates_backward", lambda: backend.lstm_gates_backward(acts, tanh_c, c, mask, h, gc)),
            case("scatter_add_rows", lambda: backend.scatter_add_rows(table.copy(), idx, rows)),
            case("adam_step", lambda: backend.adam_step(adam_p.copy(), adam_g, m.copy(), v.copy(), 3, 1e-3, 0.9, 0.999, 1e-8)),
        ]

    return build


def lstm_scan(backend, batch, hidden, steps, rng):
    """One masked forward scan over a token sequence, matmuls included."""
    wx = rng.standard_normal((hidden, 4 * hidden)) * 0.1
    wh = rng.standard_normal((hidden, 4 * hidden)) * 0.1
    x = rng.standard_normal((steps, batch, hidden))
    mask = np.ones(batch)

    def run():
        h = np.zeros((batch, hidden))
        c = np.zeros((batch, hidden))
        for k in range(steps):
            pre = x[k] @ wx + h @ wh
            h, c, _, _ = backend.lstm_gates_forward(pre, h, c, mask)
        return h

    return run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--hidden", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled extension not built; showing the numpy fallback only")
    backends = [("numpy", numpy_backend)]
    if _ckernels is not None:
        backends.append(("compiled", _ckernels))

    rng = np.random.default_rng(0)
    build = make_cases(args.batch, args.hidden, rng)
    results = {}
    for name, backend in backends:
        for case_name, call in build(backend):
            results.setdefault(case_name, {})[name] = median_time(call, args.repeats)

    width = max(len(k) for k in results) + 2
    header = f"{'kernel':<{width}}{'numpy':>12}{'compiled':>12}{'speedup':>9}"
    print(f"batch={args.batch} hidden={args.hidden} repeats={args.repeats}\n")
    print(header)
    print("-" * len(header))
    for case_name, timings in results.items():
        base = timings["numpy"]
        line = f"{case_name:<{width}}{base * 1e6:>10.1f}us"
        if "compiled" in timings:
            fast = timings["compiled"]
            line += f"{fast * 1e6:>10.1f}us{base / fast:>8.2f}x"
        print(line)

    print()
    for name, backend in backends:
        scan = lstm_scan(backend, args.batch, args.hidden, 12, rng)
        t = median_time(scan, max(args.repeats // 10, 5))
        print(f"12-step LSTM scan ({name}): {t * 1e3:.3f} ms")


if __name__ == "__main__":
    main()
