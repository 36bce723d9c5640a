"""Semiclassical coherent-state propagators from complex and real trajectories."""
from .dynamics import (
    IntegratorOptions,
    SmoothedHamiltonian,
    TrajectoryRecord,
    action_closed_check,
    complex_action,
    flow,
    i_integrand,
)
from .errors import (
    CausticDivergence,
    ConfigError,
    CSPropError,
    IntegratorFailure,
    NewtonDivergence,
    NoRealTrajectory,
    TruncationInsufficient,
    WindowEmpty,
)
from .models import (
    FockTruncation,
    HarmonicModel,
    KerrModel,
    ho_exact,
    kerr_complex_flow,
    kerr_exact,
    kerr_flow_analytic,
    kerr_k0,
    kerr_kn,
    kerr_kq1p1_closed,
    kerr_pi_roots,
    kerr_short_time,
    kerr_shorttime_qi,
)
from .phase import (
    CoherentLabel,
    ComplexPhasePoint,
    ComplexTangent,
    PhaseScale,
    TangentMatrix,
    complex_tangent,
    label_from_qp,
    overlap,
    qp_from_label,
)
from .propagators import (
    CoefficientSet,
    PropagatorContribution,
    PropagatorResult,
    SqrtBranchState,
    coefficients,
    k_complex,
    k_p1p2,
    k_p1q2,
    k_q1p1,
    k_q1p2,
    k_q1q2,
    k_q2p2,
    sqrt_branch,
)
from .solvers import (
    BoundarySpec,
    BranchTrace,
    ScanWindow,
    complex_trajectory,
    continue_branch,
    solve_complex,
    solve_final,
    solve_mixed,
)

__version__ = "0.1.0"
