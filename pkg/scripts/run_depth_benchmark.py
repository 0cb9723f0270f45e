#!/usr/bin/env python3
"""Cost benchmark: the per-leaf game decomposition scales with tree depth,
not with the number of players.

Builds one-split-per-level trees over p players, measures the engine's
subset-evaluation count and wall time for growing depths, and prints the
fitted log2(ops)-vs-depth slope (about 1 when cost is ~ 2^depth)."""

import argparse
import sys
import time

import numpy as np

import leafsv as lv
from leafsv.data import Dataset, FeatureMeta, PlayerPartition


def caterpillar(depth, p):
    n = 1 << depth
    X = np.zeros((n, p))
    for j in range(depth):
        X[:, j] = np.where((np.arange(n) >> j) & 1, 1.0, -1.0)
    nodes = []
    nid = 0
    for d in range(depth):
        cnt = n >> d
        leaf_id, next_id = nid + 1, nid + 2
        nodes.append({"id": nid, "feature": d, "threshold": 0.0,
                      "left": leaf_id, "right": next_id, "count": cnt})
        nodes.append({"id": leaf_id, "value": float(d), "count": cnt // 2})
        if d == depth - 1:
            nodes.append({"id": next_id, "value": float(depth), "count": cnt // 2})
        nid = next_id
    ens = lv.parse_model({"n_features": p, "trees": [{"nodes": nodes}]})
    ds = Dataset(X, tuple(FeatureMeta(f"x{j}", "continuous") for j in range(p)))
    return ens, ds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--players", type=int, default=50)
    ap.add_argument("--depths", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    part = PlayerPartition.singletons(args.players)
    ops_list = []
    for depth in args.depths:
        ens, ds = caterpillar(depth, args.players)
        x = np.full((1, args.players), 0.5)
        times = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            _, _, _, ops = lv.multi_games_batch(ens, ds, x, part)
            times.append(time.perf_counter() - t0)
        ops_list.append(ops)
        print(f"depth {depth:2d}: ops {ops:6d}  median {np.median(times)*1e3:.2f} ms",
              file=sys.stderr)

    slope = float(np.polyfit(args.depths, np.log2(ops_list), 1)[0])
    print(f"log2(ops) vs depth slope: {slope:.3f} "
          f"(independent of the {args.players} players)", file=sys.stderr)


if __name__ == "__main__":
    main()
