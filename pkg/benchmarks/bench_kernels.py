"""Compare the compiled and pure-Python reach kernels on the same problems.

    python benchmarks/bench_kernels.py [--repeat 5] [--seed 0]

Both backends must return identical answers; the script exits non-zero
if they disagree.
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from generators import random_automaton_doc  # noqa: E402
from govkernel import kernels  # noqa: E402
from govkernel.reach import Budget, enumerate_reach, risk_weighted_reach  # noqa: E402
from govkernel.state import ApproximationProfile  # noqa: E402
from govkernel.scenario import load_fixture, scenario_from_dict  # noqa: E402

BUDGET = Budget(2_000_000, 50_000_000)


def problems(seed):
    office = load_fixture("office_assistant.yaml")
    yield "office_assistant", office
    rng = random.Random(seed)
    found = 0
    while found < 3:
        doc = random_automaton_doc(rng, max_nodes=6, max_actions=3, H=8, L=1, caps=False)
        sc = scenario_from_dict(doc)
        if sum(len(v) for v in sc.automaton.actions.values()) >= 10:
            found += 1
            yield f"random_{found} (H=8, L=1)", sc


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if kernels.compiled is None:
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'problem':<26}{'query':<8}{'python s':>12}{'compiled s':>12}{'speedup':>10}")
    for name, sc in problems(args.seed):
        s = sc.initial_state
        caps = sc.caps_of(s)
        prof = sc.admissibility
        approx = ApproximationProfile(max(1, sc.approximation.L), 0)
        queries = {
            "reach": lambda c: enumerate_reach(sc, s.loc, prof, caps, BUDGET, use_compiled=c).traces,
            "mu": lambda c: risk_weighted_reach(sc, s.loc, prof, approx=approx, caps=caps,
                                                budget=BUDGET, use_compiled=c),
        }
        for q, fn in queries.items():
            tp, a = best_of(lambda: fn(False), args.repeat)
            tc, b = best_of(lambda: fn(True), args.repeat)
            if a != b:
                print(f"{name}: backends disagree on {q}")
                return 2
            print(f"{name:<26}{q:<8}{tp:>12.5f}{tc:>12.5f}{tp / max(tc, 1e-9):>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
