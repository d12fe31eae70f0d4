"""Secure dual-function radar-communication waveform design.

Joint transmit-waveform / receive-beamformer optimization that maximizes
radar SINR in clutter while constructive-interference constraints keep
every communication user at its QoS target.
"""

__version__ = "0.1.0"

from .ci_constraints import (
    CiConstraintSet,
    FeasibilityReport,
    PskSymbol,
    build_constraints,
    check_feasible,
    ci_implies_snr,
    decode_psk,
    psk_alphabet,
)
from .errors import (
    ContractViolation,
    DegenerateGeometry,
    InfeasibleProblem,
    NumericError,
    RandomizationFailure,
)
from .harness import (
    ExperimentReport,
    ExperimentSpec,
    draw_channels,
    draw_symbols,
    run_beampattern,
    run_security_metrics,
    run_tradeoff,
    section4_scenario,
)
from .signal_model import (
    Scenario,
    db_to_linear,
    linear_to_db,
    mvdr_beamformer,
    sinr_matrix,
    sinr_quadratic,
    sinr_rad,
    snr_user,
    steering_matrix,
    steering_rx,
    steering_tx,
    transmit_beampattern,
)
from .solvers import SolverConfig, SolverResult, sca_initialize, sca_solve, sdr_solve, solve, sq_solve

__all__ = [name for name in dir() if not name.startswith("_")]
