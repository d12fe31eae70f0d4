"""Waveform optimizers: conditional-gradient descent (SCA), sequential
eigenvalue-shifted QP (SQ), and the lifted relaxation with randomized
extraction (SDR).

Each solver maximizes the clutter-aware radar SINR mu * x^H Phi(x) x over
the CI feasible set, returns the waveform together with the matched MVDR
receive filter, and records a per-iteration trace.  Internally the
minimization form f(x) = -mu x^H Phi(x) x is used, so traces are
non-increasing when things go well.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .ci_constraints import CiConstraintSet
from .convex_kernel import (
    LinearObjective,
    armijo_linesearch_true_objective,
    enforce_feasible,
    exact_linesearch_fixed_phi,
    gaussian_randomization,
    solve_concave_qp_over_ci,
    solve_linear_over_ci,
    solve_sdr,
    strictly_feasible_point,
)
from .errors import ContractViolation, InfeasibleProblem, NumericError
from .numerics import herm_eig
from .signal_model import (
    Scenario,
    mvdr_beamformer,
    objective_gradient,
    sinr_matrix,
    sinr_quadratic,
)

METHODS = ("sca", "sq", "sdr")


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the three methods; unused ones are ignored."""

    method: str = "sca"
    max_outer_iters: int = 200
    conv_tol: float = 1e-5
    linesearch: str = "armijo"  # or "exact_fixed_phi"
    randomization_samples: int = 100
    rng_seed: int = 0
    init: str = "remark1"  # or "custom" with init_point set
    init_point: np.ndarray | None = field(default=None, compare=False)
    subproblem_tol: float = 1e-9
    outer_rel_tol: float = 1e-6
    phi_update: str = "every"  # or "two_loop": refresh Phi only at inner convergence

    def __post_init__(self):
        if self.method not in METHODS:
            raise ContractViolation(f"method must be one of {METHODS}, got {self.method!r}")
        if self.conv_tol <= 0 or self.max_outer_iters < 1:
            raise ContractViolation("conv_tol must be positive and max_outer_iters >= 1")
        if self.linesearch not in ("armijo", "exact_fixed_phi"):
            raise ContractViolation(f"unknown linesearch {self.linesearch!r}")
        if self.phi_update not in ("every", "two_loop"):
            raise ContractViolation(f"unknown phi_update {self.phi_update!r}")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    objective: float  # minimization form, -mu x^H Phi(x) x
    step: float
    margins: np.ndarray = field(compare=False)
    gap: float = np.nan  # linearized descent g at this iterate (SCA only)


@dataclass(frozen=True)
class SolverResult:
    method: str
    x_opt: np.ndarray | None
    w_opt: np.ndarray | None
    sinr_rad: float
    trace: tuple
    status: str  # converged | iter_cap | stalled | infeasible
    wall_time: float
    iterations: int
    upper_bound: float | None = None

    @property
    def sinr_rad_db(self) -> float:
        return 10.0 * np.log10(self.sinr_rad)


def _initial_point(cs: CiConstraintSet, cfg: SolverConfig) -> np.ndarray:
    if cfg.init == "custom":
        if cfg.init_point is None:
            raise ContractViolation("init='custom' requires init_point")
        return enforce_feasible(cs, np.asarray(cfg.init_point, dtype=np.complex128))
    return sca_initialize(cs, tol=cfg.subproblem_tol)


def _infeasible_result(method: str, t0: float) -> SolverResult:
    return SolverResult(
        method=method,
        x_opt=None,
        w_opt=None,
        sinr_rad=0.0,
        trace=(),
        status="infeasible",
        wall_time=time.perf_counter() - t0,
        iterations=0,
    )


def sca_initialize(cs: CiConstraintSet, tol: float = 1e-9) -> np.ndarray:
    """Feasible starting point that maximizes the sum of real parts.

    The all-ones linear functional pushed through the direction subproblem
    gives a deterministic, well-spread point of the CI region.
    """
    c = -np.ones(cs.n_tx, dtype=np.complex128)
    x = solve_linear_over_ci(LinearObjective(c), cs, tol=tol)
    return enforce_feasible(cs, x)


def sca_solve(scenario: Scenario, cs: CiConstraintSet, cfg: SolverConfig) -> SolverResult:
    """Conditional-gradient descent on -x^H Phi(x) x over the CI set.

    Per iteration: linearize at the incumbent with gradient -2 Phi x, solve
    the direction subproblem over the original feasible set, then step with
    an Armijo search on the exact objective (default) or the endpoint rule
    on the frozen-Phi surrogate.  Stops when the linearized descent |g|
    falls below conv_tol.
    """
    if cfg.method != "sca":
        raise ContractViolation(f"sca_solve called with method={cfg.method!r}")
    t0 = time.perf_counter()
    try:
        x = _initial_point(cs, cfg)
    except InfeasibleProblem:
        return _infeasible_result("sca", t0)

    trace = []
    f_cur = -sinr_quadratic(scenario, x)
    trace.append(TraceEntry(0, f_cur, 0.0, cs.margins(x)))
    status = "iter_cap"
    iters = 0
    phi = sinr_matrix(scenario, x)
    refreshed = True

    for m in range(1, cfg.max_outer_iters + 1):
        iters = m
        if cfg.phi_update == "every":
            phi = sinr_matrix(scenario, x)
        c = -2.0 * (phi @ x)
        try:
            x_lin = solve_linear_over_ci(LinearObjective(c), cs, tol=cfg.subproblem_tol)
        except NumericError as exc:
            raise NumericError(f"direction subproblem failed at iteration {m}: {exc}") from exc
        g = float(np.real(c.conj() @ (x_lin - x)))
        if g > 0.0:
            # the incumbent already beats the subproblem candidate
            x_lin, g = x, 0.0
        if abs(g) < cfg.conv_tol:
            if cfg.phi_update == "two_loop" and not refreshed:
                phi = sinr_matrix(scenario, x)
                refreshed = True
                continue
            trace.append(TraceEntry(m, f_cur, 0.0, cs.margins(x), gap=g))
            status = "converged"
            break
        refreshed = False
        d = x_lin - x
        if cfg.linesearch == "armijo":
            t = armijo_linesearch_true_objective(scenario, x, d)
        else:
            t = exact_linesearch_fixed_phi(phi, x, d)
        if t == 0.0 and cfg.linesearch == "armijo":
            # the frozen-Phi direction stalled against the exact objective;
            # retry along the full gradient (with its clutter term) so the
            # descent only stops at a genuine stationary point
            grad_full = objective_gradient(scenario, x)
            x_lin2 = solve_linear_over_ci(LinearObjective(grad_full), cs,
                                          tol=cfg.subproblem_tol)
            d2 = x_lin2 - x
            g_full = float(np.real(grad_full.conj() @ d2))
            if g_full < -cfg.conv_tol:
                t = armijo_linesearch_true_objective(scenario, x, d2,
                                                     gradient=grad_full)
                d = d2
        if t == 0.0:
            trace.append(TraceEntry(m, f_cur, 0.0, cs.margins(x), gap=g))
            status = "stalled"
            break
        x = enforce_feasible(cs, x + t * d)
        f_cur = -sinr_quadratic(scenario, x)
        trace.append(TraceEntry(m, f_cur, t, cs.margins(x), gap=g))

    w = mvdr_beamformer(scenario, x)
    return SolverResult(
        method="sca",
        x_opt=x,
        w_opt=w,
        sinr_rad=sinr_quadratic(scenario, x),
        trace=tuple(trace),
        status=status,
        wall_time=time.perf_counter() - t0,
        iterations=iters,
    )


def sq_solve(scenario: Scenario, cs: CiConstraintSet, cfg: SolverConfig) -> SolverResult:
    """Sequential fixed-Phi concave QPs with the eigenvalue shift Q = Phi - lambda I.

    Each outer round freezes Phi at the incumbent waveform, shifts by the
    top eigenvalue to make the quadratic concave, solves over the CI set,
    and refreshes the MVDR filter; stops on relative change of the exact
    objective.
    """
    if cfg.method != "sq":
        raise ContractViolation(f"sq_solve called with method={cfg.method!r}")
    t0 = time.perf_counter()
    try:
        x = _initial_point(cs, cfg)
    except InfeasibleProblem:
        return _infeasible_result("sq", t0)

    trace = [TraceEntry(0, -sinr_quadratic(scenario, x), 0.0, cs.margins(x))]
    f_prev = trace[0].objective
    status = "iter_cap"
    iters = 0
    eye = np.eye(cs.n_tx)
    for m in range(1, cfg.max_outer_iters + 1):
        iters = m
        phi = sinr_matrix(scenario, x)
        lam = float(herm_eig(phi).eigenvalues[0])
        try:
            x = solve_concave_qp_over_ci(
                phi - lam * eye, cs, tol=max(cfg.subproblem_tol, 1e-8), x0=x
            )
        except NumericError as exc:
            raise NumericError(f"QP subproblem failed at outer iteration {m}: {exc}") from exc
        f_new = -sinr_quadratic(scenario, x)
        trace.append(TraceEntry(m, f_new, 1.0, cs.margins(x)))
        if abs(f_new - f_prev) < cfg.outer_rel_tol * max(1.0, abs(f_prev)):
            status = "converged"
            break
        f_prev = f_new

    w = mvdr_beamformer(scenario, x)
    return SolverResult(
        method="sq",
        x_opt=x,
        w_opt=w,
        sinr_rad=sinr_quadratic(scenario, x),
        trace=tuple(trace),
        status=status,
        wall_time=time.perf_counter() - t0,
        iterations=iters,
    )


def _randomization_seed(base: int, outer_iter: int) -> int:
    return int(np.random.SeedSequence([base & 0xFFFFFFFF, outer_iter]).generate_state(1)[0])


def sdr_solve(scenario: Scenario, cs: CiConstraintSet, cfg: SolverConfig) -> SolverResult:
    """Lifted relaxation in a fixed-Phi outer loop with rank-1 extraction.

    When the leading eigenvalue of the X block carries > 99.9% of its trace
    the x column is taken directly; otherwise Gaussian randomization with a
    per-round derived seed extracts a feasible waveform.

    ``upper_bound`` is the certified relaxation value at the clutter-free
    matrix U0^H U0.  Because whitening attenuates (Phi(x) <= U0^H U0 in the
    Loewner order for every x), this bound dominates the exact objective of
    every feasible waveform, whichever method produced it.
    """
    if cfg.method != "sdr":
        raise ContractViolation(f"sdr_solve called with method={cfg.method!r}")
    t0 = time.perf_counter()
    try:
        x = _initial_point(cs, cfg)
        anchor = strictly_feasible_point(cs)
    except InfeasibleProblem:
        return _infeasible_result("sdr", t0)

    mu = scenario.mu
    from .signal_model import steering_tx

    a_t0 = steering_tx(scenario, scenario.target_angle)
    cap_phi = np.outer(a_t0.conj(), a_t0)
    try:
        cap_sol = solve_sdr(cap_phi, cs, tol=max(cfg.subproblem_tol, 1e-7))
    except NumericError as exc:
        raise NumericError(f"bound subproblem failed: {exc}") from exc
    upper = mu * cap_sol.upper_bound

    trace = [TraceEntry(0, -sinr_quadratic(scenario, x), 0.0, cs.margins(x))]
    f_prev = trace[0].objective
    status = "iter_cap"
    iters = 0
    sdp_tol = max(cfg.subproblem_tol, 1e-7)
    warm = None
    x_tilde_prev = None
    for m in range(1, cfg.max_outer_iters + 1):
        iters = m
        phi = sinr_matrix(scenario, x)
        try:
            sol = solve_sdr(phi, cs, tol=sdp_tol, warm=warm)
        except NumericError as exc:
            raise NumericError(f"SDP subproblem failed at outer iteration {m}: {exc}") from exc
        warm = sol.warm_state
        if x_tilde_prev is not None:
            drift = np.linalg.norm(sol.x_tilde - x_tilde_prev) / max(
                1.0, np.linalg.norm(sol.x_tilde)
            )
            if drift < 1e-9:
                # the relaxation reached its fixed point; keep the extraction
                status = "converged"
                break
        x_tilde_prev = sol.x_tilde
        lam_block = herm_eig(sol.x_block).eigenvalues
        ratio = float(lam_block[0] / max(np.sum(np.abs(lam_block)), 1e-300))
        if ratio > 0.999:
            x_new = sol.x
        else:
            try:
                x_new = gaussian_randomization(
                    sol, cs, cfg.randomization_samples, _randomization_seed(cfg.rng_seed, m)
                )
            except Exception:
                status = "stalled"
                trace.append(TraceEntry(m, f_prev, 0.0, cs.margins(x)))
                break
        x_new = enforce_feasible(cs, x_new, anchor)
        f_new = -sinr_quadratic(scenario, x_new)
        x = x_new
        trace.append(TraceEntry(m, f_new, 1.0, cs.margins(x)))
        if abs(f_new - f_prev) < cfg.outer_rel_tol * max(1.0, abs(f_prev)):
            status = "converged"
            break
        f_prev = f_new

    w = mvdr_beamformer(scenario, x)
    return SolverResult(
        method="sdr",
        x_opt=x,
        w_opt=w,
        sinr_rad=sinr_quadratic(scenario, x),
        trace=tuple(trace),
        status=status,
        wall_time=time.perf_counter() - t0,
        iterations=iters,
        upper_bound=upper,
    )


def solve(scenario: Scenario, cs: CiConstraintSet, cfg: SolverConfig) -> SolverResult:
    if cfg.method == "sca":
        return sca_solve(scenario, cs, cfg)
    if cfg.method == "sq":
        return sq_solve(scenario, cs, cfg)
    return sdr_solve(scenario, cs, cfg)
