"""Forward and inverse scattering on finite non-compact metric graphs.

The forward side evaluates the Weyl M-matrix of a graph with delta-type
vertex couplings and the scattering matrices built from it; the inverse
side recovers the coupling constants from external scattering data via an
exact Robin-to-Dirichlet reconstruction, large-tau asymptotics, and a
least-squares closure.  An independent plane-wave solver and a secular
eigenvalue locator serve as oracles.
"""

from .errors import (
    ContractLoopError,
    DisconnectedGraphError,
    GraphError,
    InsufficientDataError,
    NoLeadsError,
    NonConvergenceError,
    QGScatterError,
    SingularFactorError,
    SingularMatrixError,
    SingularSystemError,
    SpectralSingularityError,
    ZeroEnergyError,
)
from .graph import (
    Edge,
    MetricGraph,
    PathEntry,
    PathSet,
    ValidationReport,
    Vertex,
    compact_degrees,
    contract_edge,
    graph_from_json,
    graph_hash,
    graph_to_json,
    rational_independence_check,
    spanning_tree_paths,
    validate_graph,
    with_couplings,
)
from .weyl import (
    SpectralPoint,
    WeylMatrix,
    lead_projection,
    m_compact,
    m_compact_grid,
    m_full,
    m_full_reflected,
    resolvent_norm_probe,
    rtd_map,
    sqrt_upper,
)
from .scattering import (
    ChiPair,
    ScatteringMatrix,
    char_function,
    sigma_chi_form,
    sigma_external,
    sigma_full,
    weight_matrices,
)
from .inverse import (
    RecoveryOptions,
    RecoveryReport,
    RtDSample,
    contraction_limit_probe,
    extract_root_coupling,
    lm_jacobian,
    path_sum_formula,
    recover_couplings,
    recover_rtd,
)
from .oracle import (
    compact_eigenvalues,
    planewave_classical,
    planewave_scattering,
    secular_determinant,
    synth_dataset,
)
from .dataset import (
    ScatteringDataset,
    dataset_from_json,
    dataset_to_csv,
    dataset_to_json,
    geometry_hash,
)

__version__ = "0.1.0"
