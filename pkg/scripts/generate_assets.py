#!/usr/bin/env python3
"""Regenerate the bundled example assets under src/dst/assets/.

The usage curves in the two-tree scenario pair are drawn once from a
fixed seed and frozen into the scenario JSON, so the experiment is fully
deterministic for every consumer.
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dst.dynamics import make_rng  # noqa: E402
from dst.graph import (  # noqa: E402
    build_graph,
    complete_graph,
    path_graph,
    star_graph,
    write_graph,
)

ASSETS = Path(__file__).resolve().parents[1] / "src" / "dst" / "assets"

TREE_EDGES = [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6), (5, 7), (6, 8), (8, 9)]
EXTRA_EDGES = [(3, 9), (4, 7), (0, 9)]

CURVE_SEED = 70717
HORIZON = 1000
N_SERVERS = 10
LIMIT_PER_SERVER = 100.0


def make_usage_profiles():
    """Staggered per-server demand bumps around a shared baseline.

    Each server idles near 40 req/cycle and surges a few hundred cycles at
    a server-specific time, so the network total repeatedly crosses the
    global limit and per-server mismatch keeps moving.
    """
    rng = make_rng(CURVE_SEED)
    profiles = []
    for i in range(N_SERVERS):
        base = 30.0 + 20.0 * rng.random()
        peak = 250.0 + 200.0 * rng.random()
        center = 100.0 + 800.0 * rng.random()
        width = 120.0 + 130.0 * rng.random()
        pts = [(0.0, base)]
        for t in np.linspace(50, HORIZON - 50, 14):
            bump = peak * np.exp(-0.5 * ((t - center) / width) ** 2)
            wiggle = 10.0 * rng.standard_normal()
            pts.append((float(t), float(max(5.0, base + bump + wiggle))))
        pts.append((float(HORIZON), base))
        profiles.append([[round(t, 4), round(v, 4)] for t, v in pts])
    return profiles


def scenario_dict(graph_file, profiles):
    return {
        "graph": {"path": graph_file},
        "gamma": 0.02,
        "case": "I",
        "initial_limits": [LIMIT_PER_SERVER] * N_SERVERS,
        "load": {"kind": "usage_curve", "profiles": profiles},
        "horizon": HORIZON,
        "seed": 2024,
        "clients_per_node": [100] * N_SERVERS,
        "node_algorithm": "waterfill",
    }


def main():
    ASSETS.mkdir(parents=True, exist_ok=True)
    (ASSETS / "two_trees").mkdir(exist_ok=True)

    write_graph(complete_graph(5, 0.2), ASSETS / "k5_fifth.txt")
    write_graph(complete_graph(5, 1.0), ASSETS / "k5_unit.txt")
    write_graph(star_graph(5, 1.0), ASSETS / "s5_unit.txt")
    write_graph(path_graph(8, 1.0), ASSETS / "path8.txt")
    write_graph(star_graph(8, 1.0), ASSETS / "star8.txt")
    write_graph(complete_graph(8, 1.0), ASSETS / "complete8.txt")

    tree = build_graph(N_SERVERS, [(i, j, 1.0) for i, j in TREE_EDGES])
    tree_plus = build_graph(N_SERVERS, [(i, j, 1.0) for i, j in TREE_EDGES + EXTRA_EDGES])
    write_graph(tree, ASSETS / "two_trees" / "tree10.txt")
    write_graph(tree_plus, ASSETS / "two_trees" / "tree10_plus.txt")

    profiles = make_usage_profiles()
    for name, gfile in (("scenario_tree.json", "tree10.txt"), ("scenario_tree_plus.json", "tree10_plus.txt")):
        with open(ASSETS / "two_trees" / name, "w", encoding="utf-8") as fh:
            json.dump(scenario_dict(gfile, profiles), fh, indent=1)
            fh.write("\n")
    print(f"assets written under {ASSETS}")


if __name__ == "__main__":
    main()
