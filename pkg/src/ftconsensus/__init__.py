"""Finite-time consensus simulation and certification on weighted digraphs."""

from .graph import (
    Condensation,
    WeightedDigraph,
    condensation,
    has_spanning_tree,
    infinity_norms,
    laplacian,
    left_null_vector,
    mirror_laplacian,
    smallest_eigenvalue_symmetric,
)
from .protocols import (
    A1Report,
    CriteriaReport,
    GridSpec,
    Linear,
    LogPower,
    PowerLinear,
    ProtocolBank,
    antiderivative,
    check_a1,
    check_a2,
    claim1_constants,
    claim2_constants,
    evaluate,
    format_protocol_spec,
    parse_protocol_spec,
)
from .dynamics import (
    SimulationConfig,
    Trajectory,
    disagreement,
    integrate,
    lyapunov_trace,
    lyapunov_value,
    rhs,
    settling_time,
)
from .analysis import (
    CertificationReport,
    ConvergenceCertificate,
    c2_constant,
    certify,
    estimate_c1,
    settling_bound_rooted,
    settling_bound_strongly_connected,
)
from .config import ExperimentConfig, load_config, parse_config, serialize_config

__version__ = "0.1.0"
