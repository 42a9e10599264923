"""Delay reduction for delay-coupled networks by componentwise timeshifts.

Shifting each node's clock by ``eta_j`` turns the delay of a link
``s -> t`` into ``tau(l) - eta[t] + eta[s]``.  Roundtrips around cycles are
unchanged, and a connected network can always be brought down to
``C = L - N + 1`` distinct delays.  The modules:

``graph``        topology, delays, semicycles, spanning trees
``reduce``       timeshifts, staged reduction, relatability, reducibility search
``dde``          RK4 method-of-steps integrator for the network equations
``equivalence``  trajectory, spectrum and exponent comparisons
``io``, ``cli``  network files and the ``delaynet`` command
"""

from .dde import *  # noqa: F401,F403
from .equivalence import *  # noqa: F401,F403
from .graph import *  # noqa: F401,F403
from .reduce import *  # noqa: F401,F403
from . import dde, equivalence, graph, reduce  # noqa: F401
from .io import DomainError, SchemaError, dumps, load_network, parse_network  # noqa: F401

__version__ = "0.1.0"
