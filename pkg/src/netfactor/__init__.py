"""Network coding feasibility through tensor factorization along the network graph."""
from .kernels import BACKEND
from .network import Edge, Network, Node, canonical_instance, disjoint_union, validate
from .rank import (complex_compression_pair, fooling_set_lower_bound, forced_row_combination,
                   nonneg_rank_bounds, numerical_rank)
from .search import SearchConfig, SearchResult, als_search, square_cross_reduced_search, square_necessary_conditions
from .slocc import (PureState, build_network_state, fidelity, lifted_success_probability, project_assignment,
                    run_protocol)
from .tasks import DistributionTask, cross_pairs_task, subset_state_task, task_from_matrix, typewriter_task
from .tensor import ContractionPlan, DenseTensor, Domain, contract, frobenius_distance, match_up_to_scale
from .verify import NodeAssignment, bundled_assignment, lift_classical_assignment, realized_tensor, verify_assignment

__version__ = "0.1.0"
