"""Minimal group size of multipartite correlations.

Builds vertex sets of k-producible correlation polytopes for shared
randomness, non-signaling and unconstrained group resources, decides
membership by exact LP with verifiable certificates, generates quantum
correlations from small states, and lifts Bell-like witnesses to larger
scenarios.
"""

from .corrspace import (Correlation, DeterministicResidueFunction, FullCorrelatorTable,
                        Scenario, condition, full_correlators, is_no_signaling,
                        marginal, mix, new_correlation, product,
                        simulate_full_correlators)
from .membership import (MembershipResult, MgsReport, decompose,
                         fixed_partition_membership, mgs, verify_certificate)
from .polytope import (Partition, Vertex, VertexSet, group_deterministic_vertices,
                       ns_vertices, partitions, producible_vertices)
from .quantum import (DensityMatrix, MeasurementSet, Observable, born_correlation,
                      builtin_state, observable_from_bloch)
from .witness import (BellExpression, CorrelatorMonomial, builtin_expression, chsh,
                      compile_fullcorr, evaluate, expand_correlators, facet_rank,
                      ineq10, lift, max_over_vertices, ns3, svetlichny3,
                      svetlichny_counterexample, zero_bound_form)

__version__ = "0.1.0"
