"""Correction of inconsistent traffic link counts on road networks.

Observed cumulative counts rarely satisfy flow conservation exactly.  This
package fits the counts inside the conservation kernel with the least
absolute deviation, reconstructs a consistent flow on every link (metered
or not), and certifies, per subset of sensors, whether arbitrary miscounts
there are corrected exactly, with an explicit error bound when small noise
is present elsewhere.
"""

from .correction import (
    AdmmConfig,
    AdmmDiagnostics,
    CorrectionResult,
    ExactL1Result,
    correct_flows,
    shrink,
    solve_l1_admm,
    solve_l1_exact,
)
from .errors import (
    DegenerateDirection,
    DegenerateNetwork,
    DegenerateSubset,
    DimensionMismatch,
    FlowmendError,
    InfeasibleSpec,
    InvalidAlpha,
    MissingGroundTruth,
    NetworkFormatError,
    NoBaseSet,
    NotFullColumnRank,
    OracleTooLarge,
    RankDeficient,
    SingularComplement,
    SingularMatrix,
)
from .fileformat import (
    GroundTruth,
    NetworkDocument,
    load_network,
    load_truth,
    parse_network,
    serialize_network,
    serialize_truth,
)
from .fixtures import FIXTURES, Fixture, get_fixture
from .kernel import (
    BaseSet,
    KernelBasis,
    enumerate_base_sets,
    find_base_set,
    iter_base_sets,
    kernel_basis,
    operator_one_norm,
    solve_square,
)
from .network import (
    FlowObservation,
    IncidenceMatrix,
    Link,
    MonitoredSet,
    Network,
    build_incidence,
    conservation_residual,
)
from .recoverability import (
    InversePowerConfig,
    InversePowerResult,
    RecoverabilityReport,
    StabilityBound,
    certify,
    recoverability_exact,
    recoverability_inverse_power,
    recoverability_quotient,
    stability_constant,
)
from .synth import SyntheticInstance, SyntheticSpec, generate

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "AdmmDiagnostics",
    "BaseSet",
    "CorrectionResult",
    "DegenerateDirection",
    "DegenerateNetwork",
    "DegenerateSubset",
    "DimensionMismatch",
    "ExactL1Result",
    "FIXTURES",
    "Fixture",
    "FlowObservation",
    "FlowmendError",
    "GroundTruth",
    "IncidenceMatrix",
    "InfeasibleSpec",
    "InvalidAlpha",
    "InversePowerConfig",
    "InversePowerResult",
    "KernelBasis",
    "Link",
    "MissingGroundTruth",
    "MonitoredSet",
    "Network",
    "NetworkDocument",
    "NetworkFormatError",
    "NoBaseSet",
    "NotFullColumnRank",
    "OracleTooLarge",
    "RankDeficient",
    "RecoverabilityReport",
    "SingularComplement",
    "SingularMatrix",
    "StabilityBound",
    "SyntheticInstance",
    "SyntheticSpec",
    "build_incidence",
    "certify",
    "conservation_residual",
    "correct_flows",
    "enumerate_base_sets",
    "find_base_set",
    "generate",
    "get_fixture",
    "iter_base_sets",
    "kernel_basis",
    "load_network",
    "load_truth",
    "operator_one_norm",
    "parse_network",
    "recoverability_exact",
    "recoverability_inverse_power",
    "recoverability_quotient",
    "serialize_network",
    "serialize_truth",
    "shrink",
    "solve_l1_admm",
    "solve_l1_exact",
    "solve_square",
    "stability_constant",
]
