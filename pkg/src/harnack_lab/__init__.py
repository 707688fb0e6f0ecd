"""harnack-lab: potential theory, Harnack-type constants, and coupled random
walks on finite weighted graphs, with a CLI experiment runner."""

from .errors import (CapExceededError, ClippedDomainError, HarnackLabError,
                     PreconditionError, ResidualError)
from .graph import (VertexField, VertexSet, WeightedGraph, ball, bfs_distances,
                    build_graph, closure, controlled_weights_p0,
                    exterior_boundary, geodesic, laplacian_apply,
                    load_graph_tsv, save_graph_tsv, sphere, transition_prob)
from .generators import (LampState, lamp_distance, lamp_neighbors,
                         lamplighter_ball, lattice_box, perturb_weights,
                         three_rail)
from .potential import (ExitDistribution, GreenColumn, green_column,
                        green_series_oracle, harmonic_extension,
                        harmonic_measure, harmonic_measure_matrix, is_harmonic)
from .harnack import (HarnackReport, annulus_ratio, ehi_constant, hg_constant,
                      oi_rho, theorem1_check)
from .conductance import (ConductanceResult, dirichlet_energy, dumbbell_ratio,
                          effective_conductance)
from .coupling import (CouplingOutcome, WalkPath, exact_osc_probability,
                       hard_pair, osc_failure_experiment, reflection_couple,
                       simulate_ctsrw, simulate_lamplighter_discrete,
                       uc_estimate, wilson_interval)
from .verify import verify_suite
from ._version import __version__, version_string
