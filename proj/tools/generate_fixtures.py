#!/usr/bin/env python3
"""Regenerates the synthetic 3-tank network, scenario trees and demand series in data/.

Units: volumes in m^3, flows in m^3/s, one-hour sampling (3600 s).

    x1+ = x1 + 3600 (u1 - u2 - u3)        source pump u1, transfer pump u2, valve u3
    x2+ = x2 + 3600 (u2 - 0.6 d2)
    x3+ = x3 + 3600 (u4 - 0.4 d2)
    0   = u3 - u4 - d1                    junction feeding sector 1 and tank 3
"""

import argparse
import json
import math
import pathlib

import numpy as np

DT = 3600.0
HORIZON = 24
PERIOD = 24


def tariff(hour):
    if hour < 7:
        return 0.02
    if hour < 18:
        return 0.09
    return 0.05


def network():
    B = DT * np.array([[1.0, -1.0, -1.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    Gd = -DT * np.array([[0.0, 0.0], [0.0, 0.6], [0.0, 0.4]])
    alpha2 = []
    for h in range(PERIOD):
        price = tariff(h) * DT  # currency per (m^3/s) held for one hour
        alpha2.append([price, 0.6 * price, 0.0, 0.0])
    return {
        "A": np.eye(3).tolist(),
        "B": B.tolist(),
        "Gd": Gd.tolist(),
        "E": [[0.0, 0.0, 1.0, -1.0]],
        "Ed": [[-1.0, 0.0]],
        "u_min": [0.0, 0.0, 0.0, 0.0],
        "u_max": [0.6, 0.3, 0.4, 0.2],
        "x_min": [0.0, 0.0, 0.0],
        "x_max": [6000.0, 3000.0, 2000.0],
        "x_s": [2000.0, 900.0, 600.0],
        "alpha1": [0.03 * DT, 0.0, 0.0, 0.0],
        "alpha2_schedule": alpha2,
        "W_alpha": 1.0,
        "Wu": (1.0e5 * np.eye(4)).tolist(),
        "Wx": 1.0,
        "gamma_d": 50.0,
    }


def nominal_profile(t):
    h = t % PERIOD
    shape = 1.0 + 0.35 * math.sin(2.0 * math.pi * (h - 9.0) / 24.0) + 0.15 * math.sin(4.0 * math.pi * (h - 7.0) / 24.0)
    return [0.10 * shape, 0.14 * shape]


def demands(length, rng):
    nominal = np.array([nominal_profile(t) for t in range(length)])
    noise = 0.08 * rng.standard_normal(nominal.shape)
    realized = np.maximum(nominal * (1.0 + noise), 0.0)
    return {"realized": realized.tolist(), "nominal": nominal.tolist()}


def tree(branching, rng, sigma=0.012, rho=0.8):
    """Stage-major tree; node eps follows an AR(1) along each path."""
    stages = [{"nodes": [{"anc": None, "prob": 1.0}]}]
    eps_prev = [np.zeros(2)]
    prob_prev = [1.0]
    for j in range(1, HORIZON + 1):
        b = branching[j - 1] if j - 1 < len(branching) else 1
        nodes, eps_cur, prob_cur = [], [], []
        for a, (pa, ea) in enumerate(zip(prob_prev, eps_prev)):
            w = rng.uniform(0.5, 1.5, size=b) if b > 1 else np.ones(1)
            w = w / w.sum()
            for c in range(b):
                e = rho * ea + sigma * rng.standard_normal(2)
                nodes.append({"anc": a, "prob": pa * w[c], "eps": e.tolist()})
                eps_cur.append(e)
                prob_cur.append(pa * w[c])
        stages.append({"nodes": nodes})
        eps_prev, prob_prev = eps_cur, prob_cur
    return {"N": HORIZON, "stages": stages}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    def dump(name, doc):
        (out / name).write_text(json.dumps(doc, indent=1) + "\n")

    dump("network_3tank.json", network())
    dump("demands_3tank.json", demands(8 * PERIOD + HORIZON, rng))
    dump("tree_1.json", tree([], rng))
    dump("tree_6.json", tree([3, 2], rng))
    dump("tree_30.json", tree([6, 5], rng))


if __name__ == "__main__":
    main()
