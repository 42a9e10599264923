"""Random delays cannot be squeezed below C distinct values; coincident roundtrips can."""

import numpy as np

from delaynet import DelayDistribution, NetworkTopology, essential_delay_count, search_reducibility
from delaynet.generators import random_network

rng = np.random.default_rng(3)
for _ in range(5):
    tau = random_network(rng, nodes=(3, 5), max_edges=8)
    C = essential_delay_count(tau.topology)
    if C < 1:
        continue
    low = search_reducibility(tau, m=C - 1)
    full = search_reducibility(tau, m=C)
    print(f"L={tau.topology.edge_count} C={C}: m=C feasible {full.feasible}, "
          f"m=C-1 feasible {low.feasible} (distance >= {low.min_residual:.3g})")

top = NetworkTopology.from_pairs(2, [(1, 2), (2, 1), (2, 1)])
tau = DelayDistribution(top, [1.0, 1.0, 2.0])
for m in (1, 2):
    out = search_reducibility(tau, m=m)
    print(f"two-roundtrip example, m={m}:", out.feasible,
          sorted(out.certificate.values) if out.feasible else f"distance {out.min_residual:.3g}")
