"""Efficiency index d^(2n)/N(d,n) against n, with the exact large-n limit.

    python scripts/efficiency_index.py [--max-n 24]
"""

import argparse

from mvqsd.cost import asymptotic_limit, efficiency_index, lower_bound, model_gcx_count


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--max-n", type=int, default=24)
    a = p.parse_args()
    dims = range(2, 9)
    print("n   " + " ".join(f"{'d=' + str(d):>9}" for d in dims))
    for n in range(2, a.max_n + 1):
        print(f"{n:<3} " + " ".join(f"{efficiency_index(d, n):9.5f}" for d in dims))
    print("lim " + " ".join(f"{float(asymptotic_limit(d)):9.5f}" for d in dims))
    print("\nexact limits: " + ", ".join(f"d={d}: {asymptotic_limit(d)}" for d in dims))
    print("count / lower bound at n=8: " + ", ".join(
        f"d={d}: {float(model_gcx_count(d, 8) / lower_bound(d, 8)):.3f}" for d in dims))


if __name__ == "__main__":
    main()
