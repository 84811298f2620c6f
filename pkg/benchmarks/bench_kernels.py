"""Compare the compiled and pure-Python kernels on generated traffic.

    python benchmarks/bench_kernels.py [--packets N] [--repeat R] [--end-to-end]

Prints one line per kernel and backend with the best-of-R time and the
speedup over pure Python.  ``--end-to-end`` also times a full analysis run
in a subprocess for each backend.
"""

from __future__ import annotations

import argparse
import os
import random
import subprocess
import sys
import tempfile
import time
import timeit
from pathlib import Path

from netsight._kernels import available_backends
from netsight.trafficgen import generate, registry_rows, throughput_scenario, write_knowledge


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(frames: list[bytes], series: list[list[float]], repeat: int) -> dict[str, dict[str, float]]:
    results: dict[str, dict[str, float]] = {}
    for name, mod in sorted(available_backends().items()):
        decode, period = mod.decode_headers, mod.periodicity_score
        results[name] = {
            "decode_headers": _best(lambda: [decode(f) for f in frames], repeat),
            "periodicity_score": _best(lambda: [period(s) for s in series], repeat),
        }
    return results


def bench_end_to_end(pcap: Path, kdir: Path) -> dict[str, float]:
    out: dict[str, float] = {}
    for name in sorted(available_backends()):
        env = dict(os.environ)
        env.pop("NETSIGHT_PURE_PYTHON", None)
        if name == "python":
            env["NETSIGHT_PURE_PYTHON"] = "1"
        with tempfile.TemporaryDirectory() as tmp:
            started = time.perf_counter()
            cmd = [sys.executable, "-m", "netsight.cli", "analyze", str(pcap), "--knowledge-dir", str(kdir),
                   "--out", tmp]
            subprocess.run(cmd, env=env, check=True)
            out[name] = time.perf_counter() - started
    return out


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--packets", type=int, default=50_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)

    sc = throughput_scenario(args.packets)
    gen = generate(sc, 0)
    frames = [data for _, _, data in gen.packets]
    rnd = random.Random(0)
    series = [[float(rnd.randrange(0, 5000)) for _ in range(rnd.randint(8, 240))] for _ in range(2000)]
    print(f"{len(frames)} frames, {len(series)} byte series")

    results = bench_kernels(frames, series, args.repeat)
    base = results["python"]
    for name, timings in results.items():
        for kernel, secs in timings.items():
            print(f"{kernel:18s} {name:7s} {secs * 1e3:9.1f} ms  x{base[kernel] / secs:5.1f}")
    if "cython" not in results:
        print("compiled kernels not built; only the fallback was measured")

    if args.end_to_end:
        with tempfile.TemporaryDirectory() as tmp:
            pcap = Path(tmp) / "bench.pcap"
            pcap.write_bytes(gen.pcap)
            kdir = write_knowledge(Path(tmp) / "knowledge", registry_rows(sc), sc.policies)
            for name, secs in bench_end_to_end(pcap, kdir).items():
                print(f"{'analyze':18s} {name:7s} {secs:9.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
