#!/usr/bin/env python3
"""Generate the synthetic planar layout for the IEEE 118-bus case.

The case has no published geography. Buses are placed by a seeded
force-directed layout of the branch graph (so electrically adjacent buses
sit near each other), scaled to a 900 km x 900 km region and rounded to
0.1 km. The output is committed as data/case118_layout.csv; rerunning this
script reproduces it byte for byte.
"""
import re
import sys

import networkx as nx


def read_case(path):
    text = open(path).read()
    text = re.sub(r"%[^\n]*", "", text)

    def block(name):
        m = re.search(r"mpc\." + name + r"\s*=\s*\[(.*?)\]", text, re.S)
        rows = [r.split() for r in m.group(1).replace(";", "\n").split("\n")]
        return [r for r in rows if r]

    buses = [int(float(r[0])) for r in block("bus")]
    edges = [(int(float(r[0])), int(float(r[1]))) for r in block("branch")]
    return buses, edges


def main():
    case = sys.argv[1] if len(sys.argv) > 1 else "data/case118.m"
    out = sys.argv[2] if len(sys.argv) > 2 else "data/case118_layout.csv"
    buses, edges = read_case(case)
    g = nx.Graph()
    g.add_nodes_from(buses)
    g.add_edges_from(edges)
    pos = nx.spring_layout(g, seed=118, iterations=200)
    xs = [p[0] for p in pos.values()]
    ys = [p[1] for p in pos.values()]
    span = max(max(xs) - min(xs), max(ys) - min(ys))
    with open(out, "w", newline="\n") as f:
        f.write("bus_id,x_km,y_km\n")
        for b in buses:
            x = (pos[b][0] - min(xs)) / span * 900.0
            y = (pos[b][1] - min(ys)) / span * 900.0
            f.write(f"{b},{x:.1f},{y:.1f}\n")


if __name__ == "__main__":
    main()
