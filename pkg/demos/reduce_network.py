"""Reduce a random delay network to its essential delays and show what survives."""

import numpy as np

from delaynet import essential_delay_count, fundamental_cycles, reduce_to_spanning_tree, roundtrip
from delaynet.generators import random_network

tau = random_network(np.random.default_rng(7), nodes=(5, 5), max_edges=9)
top = tau.topology
result = reduce_to_spanning_tree(tau)

print(f"{top.node_count} nodes, {top.edge_count} edges, C = {essential_delay_count(top)}")
print("edge  source->target  delay    reduced")
for e in top.edge_ids:
    mark = "tree" if e in result.tree.edges else ""
    print(f"{e:>4}  {top.source(e):>6}->{top.target(e):<6} {tau[e]:7.3f}  {result.reduced[e]:7.3f}  {mark}")
print("clock shifts:", np.round(result.timeshifts.shifts, 3))
print("stages:", len(result.stages) - 1)
for c in fundamental_cycles(top, result.tree):
    print(f"cycle {c.edges}: roundtrip {roundtrip(c, tau):.3f} = reduced delay {result.reduced[c.edges[0]]:.3f}")
