"""Pairwise distances between truncated constructions, with the bound terms.

For each norm and decay rate, builds x_n for every n in --ns on a coordinate
chain and prints ||x_n - x_m|| next to c * tau_m * sum 2^-k and d_{m-1}
(m = min of the pair), then the largest difference per min(n, m).
"""
import argparse

from lethargy.engine import convergence_probe
from lethargy.space import DeviationSequence, NormKind, coordinate_chain


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", type=int, nargs="+", default=[4, 6, 8, 10])
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.5, 1 / 3])
    args = ap.parse_args()
    N = max(args.ns)
    chain = coordinate_chain(range(1, N + 1), N + 2)

    for ratio in args.ratios:
        seq = DeviationSequence.geometric(1.0, ratio, N)
        for kind in NormKind:
            tab = convergence_probe(chain, seq, args.ns, kind)
            print(f"\nd_n = {ratio:.4g}^n, {kind.value}, measured c = {tab.lipschitz_c:.3g}")
            print(f"{'n':>3} {'m':>3} {'||x_n - x_m||':>14} {'tail term':>12} {'d_(m-1)':>10}")
            for e in tab.entries:
                print(f"{e['n']:>3} {e['m']:>3} {e['diff']:>14.6g} {e['tail_term']:>12.4g} {e['head_term']:>10.4g}")
            trend = tab.max_diff_by_min_index()
            print("max by min(n,m): " + ", ".join(f"{k}: {v:.4g}" for k, v in trend.items()))


if __name__ == "__main__":
    main()
