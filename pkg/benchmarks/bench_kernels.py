"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--states N] [--pairs K] [--parts M] [--repeat R]

Each workload runs under every available backend on the same seeded inputs;
the verdicts are compared so a speedup never hides a disagreement.
"""
from __future__ import annotations

import argparse
import random
import timeit

from ccsni import kernels
from ccsni.equiv import EquivKind, check, relation
from ccsni.gen import random_lts_pair
from ccsni.lts import build_lts, saturate
from ccsni.parser import parse

def program_text(parts: int) -> str:
    """Independent loops over disjoint channels, four states each: 4**parts states."""
    lines = ["values {u, v}"]
    for i in range(parts):
        lines.append(f"agent P{i}() = a{i}_h(x).'b{i}_l<x>.P{i}() + 'c{i}_h<u>.d{i}_l(y).P{i}()")
    lines.append("main = " + " | ".join(f"P{i}()" for i in range(parts)))
    return "\n".join(lines)



def workloads(states: int, pairs: int, parts: int):
    rngs = [random.Random(seed) for seed in range(pairs)]
    lts_pairs = [random_lts_pair(rng, states) for rng in rngs]
    big = build_lts(parse(program_text(parts)))

    def saturation():
        return [sum(map(len, saturate(p).tau_star)) for p, _ in lts_pairs] + [sum(map(len, saturate(big).tau_star))]

    def partition():
        return [check(kind, p, q, False).equivalent for p, q in lts_pairs for kind in EquivKind]

    def fixpoint():
        return [sum(relation(kind, p, q)) for p, q in lts_pairs for kind in EquivKind]

    def program():
        return [check(kind, big, big, False).equivalent for kind in EquivKind]

    return {"saturation": saturation, "partition": partition, "gfp": fixpoint,
            f"program ({len(big)} states)": program}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--states", type=int, default=60)
    ap.add_argument("--pairs", type=int, default=100)
    ap.add_argument("--parts", type=int, default=5, help="components of the program workload")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = sorted(kernels.available())
    jobs = workloads(args.states, args.pairs, args.parts)
    print(f"{'workload':<28}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in jobs.items():
        times, answers = {}, {}
        for b in backends:
            kernels.use(b)
            answers[b] = fn()
            times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        if len({repr(a) for a in answers.values()}) != 1:
            raise SystemExit(f"{name}: backends disagree")
        row = f"{name:<28}" + "".join(f"{times[b]:>11.3f}s" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
