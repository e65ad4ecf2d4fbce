#!/usr/bin/env python3
"""Time the compiled decode kernel against the pure-NumPy fallback.

Runs the same frames through both backends (identical evidence, identical
iteration counts — the backends are exact twins) and reports per-frame
latency for a belief-propagation workload and a pairwise-check relay
workload on the production-size code.

Usage::

    python3 benchmarks/bench_backends.py [--frames 20] [--snr-db 2.0]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pcdsim import builtin_code, kernels
from pcdsim.channel import (
    ChannelState,
    Constellation,
    ma_superimpose,
    modulate,
    snr_to_sigma2,
)
from pcdsim.gf import GfField
from pcdsim.kernels import build_bp_graph, build_pcd_graph, decode
from pcdsim.ldpc import encode, encoder_info_length, lift_to_gfq
from pcdsim.mapping import load_catalog
from pcdsim.pcd import init_messages


def bp_workload(code, sigma2, rng, frames):
    k = Constellation(code.field.q)
    pts = modulate(np.arange(code.field.q), k)
    out = []
    for _ in range(frames):
        word = encode(code, rng.integers(0, code.field.q, encoder_info_length(code)))
        noise = (rng.normal(size=code.n) + 1j * rng.normal(size=code.n)) * np.sqrt(
            sigma2 / 2
        )
        y = modulate(word, k) + noise
        out.append(np.exp(-np.abs(y[:, None] - pts[None, :]) ** 2 / sigma2))
    return out


def pcd_workload(code, ms, ch, rng, frames):
    q = code.field.q
    k = Constellation(q)
    out = []
    for _ in range(frames):
        ca = encode(code, rng.integers(0, q, encoder_info_length(code)))
        cb = encode(code, rng.integers(0, q, encoder_info_length(code)))
        y = ma_superimpose(modulate(ca, k), modulate(cb, k), ch, rng)
        out.append(init_messages(y, ch, ms, k).u_raw)
    return out


def time_backend(graph, inputs, max_iter, backend):
    t0 = time.perf_counter()
    iters = 0
    for u0 in inputs:
        iters += decode(graph, u0, max_iter, backend=backend)[2]
    dt = time.perf_counter() - t0
    return dt / len(inputs), iters / len(inputs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=20)
    ap.add_argument("--snr-db", type=float, default=2.0)
    ap.add_argument("--max-iter", type=int, default=30)
    ap.add_argument("--code", default="regular504")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built — benchmarking NumPy only")
    rng = np.random.default_rng(args.seed)
    sigma2 = snr_to_sigma2(args.snr_db, 0.5)

    binary = builtin_code(args.code)
    gf4 = lift_to_gfq(binary, 1, GfField(4))
    cat = load_catalog()
    ms, mh = cat.soft[0], cat.hard[0]
    ch = ChannelState(h_ac=1.0, h_bc=1.0, sigma2=sigma2)

    workloads = [
        ("BP  binary", build_bp_graph(binary), bp_workload(binary, sigma2, rng, args.frames)),
        ("BP  GF(4)", build_bp_graph(gf4), bp_workload(gf4, sigma2, rng, args.frames)),
        ("PCD GF(4)", build_pcd_graph(gf4, gf4, ms, mh), pcd_workload(gf4, ms, ch, rng, args.frames)),
    ]

    print(f"code={args.code}  n={binary.n}  frames={args.frames}  "
          f"snr={args.snr_db} dB  max_iter={args.max_iter}")
    print(f"{'workload':<12}{'backend':<8}{'ms/frame':>10}{'avg iters':>11}{'speedup':>9}")
    for name, graph, inputs in workloads:
        base = None
        for backend in backends:
            per, iters = time_backend(graph, inputs, args.max_iter, backend)
            if backend == "numpy":
                base = per
            speed = f"{base / per:6.2f}x" if backend != "numpy" else "  1.00x"
            print(f"{name:<12}{backend:<8}{per * 1e3:>10.2f}{iters:>11.1f}{speed:>9}")


if __name__ == "__main__":
    main()
