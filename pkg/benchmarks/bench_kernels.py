"""Benchmark the message-passing kernels: compiled extension vs numpy.

Each backend runs in its own subprocess (the backend is fixed at import time
via LEOCACHE_KERNELS), so one invocation times both and cross-checks that
they produce bitwise-identical outputs:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --nodes 1024 --edges 8192 --repeat 100
"""
import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

import numpy as np


def make_inputs(nodes, edges, dim, seed=0):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(nodes, dim))
    e = rng.normal(size=(edges, 2))
    src = rng.integers(0, nodes, size=edges).astype(np.int64)
    dst = rng.integers(0, nodes, size=edges).astype(np.int64)
    grad_rows = rng.normal(size=(edges, 2 * dim + 2))
    return h, e, src, dst, grad_rows


def bench_worker(nodes, edges, dim, repeat):
    from leocache.nn import kernels

    h, e, src, dst, grad_rows = make_inputs(nodes, edges, dim)
    cases = {
        "gather_concat": lambda: kernels.gather_concat(h, e, src, dst),
        "gather_concat_backward": lambda: kernels.gather_concat_backward(
            grad_rows, nodes, dim, src, dst
        ),
        "segment_sum": lambda: kernels.segment_sum(
            grad_rows, np.sort(dst), nodes
        ),
    }
    result = {"backend": kernels.backend(), "times_us": {}, "digests": {}}
    for name, fn in cases.items():
        fn()  # warm up
        best = float("inf")
        for _ in range(5):
            t0 = time.perf_counter()
            for _ in range(repeat):
                out = fn()
            best = min(best, (time.perf_counter() - t0) / repeat)
        arrays = out if isinstance(out, tuple) else (out,)
        digest = hashlib.sha256()
        for a in arrays:
            digest.update(np.ascontiguousarray(a).tobytes())
        result["times_us"][name] = best * 1e6
        result["digests"][name] = digest.hexdigest()
    print(json.dumps(result))


def run_backend(backend, args):
    env = dict(os.environ, LEOCACHE_KERNELS=backend)
    cmd = [
        sys.executable, os.path.abspath(__file__), "--worker",
        "--nodes", str(args.nodes), "--edges", str(args.edges),
        "--dim", str(args.dim), "--repeat", str(args.repeat),
    ]
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        return None, proc.stderr.strip()
    return json.loads(proc.stdout.strip().splitlines()[-1]), None


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=512)
    parser.add_argument("--edges", type=int, default=4096)
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        bench_worker(args.nodes, args.edges, args.dim, args.repeat)
        return

    print(f"nodes={args.nodes} edges={args.edges} dim={args.dim} "
          f"repeat={args.repeat}, best of 5 rounds")
    results = {}
    for backend in ("numpy", "compiled"):
        res, err = run_backend(backend, args)
        if res is None:
            print(f"{backend}: unavailable ({err.splitlines()[-1]})")
        else:
            results[backend] = res
    if not results:
        sys.exit(1)

    names = next(iter(results.values()))["times_us"]
    print(f"{'kernel':<24}" + "".join(f"{b + ' (us)':>16}" for b in results)
          + ("  speedup" if len(results) == 2 else ""))
    for name in names:
        row = f"{name:<24}"
        for backend in results:
            row += f"{results[backend]['times_us'][name]:>16.1f}"
        if len(results) == 2:
            ratio = (results["numpy"]["times_us"][name]
                     / results["compiled"]["times_us"][name])
            row += f"  {ratio:>6.2f}x"
        print(row)

    if len(results) == 2:
        match = all(
            results["numpy"]["digests"][n] == results["compiled"]["digests"][n]
            for n in names
        )
        print(f"outputs bitwise identical: {match}")
        if not match:
            sys.exit(1)


if __name__ == "__main__":
    main()
