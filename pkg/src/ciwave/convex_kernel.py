"""Convex subproblem solvers over the CI feasible set.

The feasible set is always the same geometry: a power ball intersected with
the CI half spaces ``Re(g_j^H x) >= r_j``.  On top of it this module solves

* a linear program (the descent-direction subproblem of the conditional
  gradient method),
* a concave quadratic maximization (the eigenvalue-shifted fixed-point
  subproblem), and
* the lifted semidefinite relaxation with Gaussian randomization.

All solvers are deterministic given their inputs and seeds.  Projections
onto the intersection use Dykstra's alternating scheme; the linear program
is certified through its ball dual, and the SDP reports a weak-duality
upper bound extracted from the ADMM multipliers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .ci_constraints import CiConstraintSet
from .errors import ContractViolation, InfeasibleProblem, NumericError, RandomizationFailure
from .numerics import herm_eig, psd_project

PHASE1_INFEASIBLE = -1e-7


# ---------------------------------------------------------------------------
# elementary projections


def project_ball(x: np.ndarray, radius: float) -> np.ndarray:
    nrm = np.linalg.norm(x)
    if nrm <= radius:
        return x
    return x * (radius / nrm)


def project_halfspace(x: np.ndarray, g: np.ndarray, r: float) -> np.ndarray:
    """Project onto {x : Re(g^H x) >= r}."""
    deficit = r - np.real(g.conj() @ x)
    if deficit <= 0.0:
        return x
    return x + (deficit / np.real(g.conj() @ g)) * g


def min_margin(cs: CiConstraintSet, x) -> float:
    m = cs.margins(x)
    return float(np.min(m)) if m.size else np.inf


def project_ci(cs: CiConstraintSet, v, tol: float = 1e-12, max_passes: int = 500) -> np.ndarray:
    """Dykstra projection of v onto ball(P0) intersected with the CI half spaces."""
    v = np.asarray(v, dtype=np.complex128)
    radius = cs.radius
    g_rows, r_vec = cs.halfspaces()
    n_hs = g_rows.shape[0]
    if n_hs == 0:
        return project_ball(v, radius)
    if np.linalg.norm(v) <= radius and np.all(np.real(g_rows.conj() @ v) >= r_vec):
        return v

    x = v.copy()
    incs = np.zeros((n_hs + 1, v.shape[0]), dtype=np.complex128)
    tol_abs = tol * max(1.0, radius)
    gnorm2 = np.real(np.sum(g_rows.conj() * g_rows, axis=1))
    for _ in range(max_passes):
        x_prev_pass = x.copy()
        y = x + incs[0]
        x = project_ball(y, radius)
        incs[0] = y - x
        for j in range(n_hs):
            y = x + incs[j + 1]
            deficit = r_vec[j] - np.real(g_rows[j].conj() @ y)
            if deficit > 0.0:
                x = y + (deficit / gnorm2[j]) * g_rows[j]
            else:
                x = y
            incs[j + 1] = y - x
        if np.linalg.norm(x - x_prev_pass) <= tol_abs:
            break
    return x


# ---------------------------------------------------------------------------
# feasibility


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


def phase1_margin(cs: CiConstraintSet, max_iters: int = 3000):
    """Best attainable minimum constraint slack inside the power ball.

    Works on the saddle form max_{||x|| <= R} min_j (Re(g_j^H x) - r_j):
    the dual over simplex weights gives an upper bound, the recovered
    primal point a lower one.  Returns (upper, achieved, x_star, lam).
    """
    g_rows, r_vec = cs.halfspaces()
    n_hs = g_rows.shape[0]
    radius = cs.radius
    if n_hs == 0:
        return np.inf, np.inf, np.zeros(cs.n_tx, dtype=np.complex128), np.zeros(0)

    def upper_at(lam):
        w = g_rows.T @ lam
        return radius * np.linalg.norm(w) - lam @ r_vec, w

    lam = np.full(n_hs, 1.0 / n_hs)
    val, w = upper_at(lam)
    step = 1.0
    for _ in range(max_iters):
        wn = np.linalg.norm(w)
        if wn < 1e-14 * max(1.0, np.linalg.norm(g_rows)):
            grad = -r_vec
        else:
            grad = radius * np.real(g_rows.conj() @ w) / wn - r_vec
        improved = False
        while step >= 1e-14:
            lam_new = _project_simplex(lam - step * grad)
            val_new, w_new = upper_at(lam_new)
            if val_new < val - 1e-15 * (1.0 + abs(val)):
                lam, val, w = lam_new, val_new, w_new
                step *= 1.3
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    wn = np.linalg.norm(w)
    if wn > 0:
        x_star = radius * w / wn
    else:
        x_star = np.zeros(cs.n_tx, dtype=np.complex128)
    achieved = float(np.min(np.real(g_rows.conj() @ x_star) - r_vec))
    return float(val), achieved, x_star, lam


def _worst_user(cs: CiConstraintSet, lam: np.ndarray):
    if lam.size == 0:
        return None
    if cs.psk_order == 2:
        return int(np.argmax(lam))
    k = cs.n_users
    return int(np.argmax(lam[:k] + lam[k:]))


def strictly_feasible_point(cs: CiConstraintSet) -> np.ndarray:
    """A point with positive CI margins and strictly interior power.

    A least-norm interpolation with uniform constraint slack usually
    succeeds in one linear solve; the phase-1 saddle problem is the
    fallback and supplies the infeasibility certificate otherwise.
    """
    if cs.n_users == 0:
        return np.zeros(cs.n_tx, dtype=np.complex128)
    g_rows, r_vec = cs.halfspaces()
    radius = cs.radius

    gram = np.real(g_rows.conj() @ g_rows.T)
    pinv = np.linalg.pinv(gram, rcond=1e-12)
    beta0 = pinv @ r_vec
    beta1 = pinv @ np.ones_like(r_vec)
    x0 = g_rows.T @ beta0
    x1 = g_rows.T @ beta1
    # ||x0 + s x1||^2 <= (0.98 R)^2 is quadratic in the uniform slack s
    a = np.real(x1.conj() @ x1)
    b = 2.0 * np.real(x0.conj() @ x1)
    c = np.real(x0.conj() @ x0) - (0.98 * radius) ** 2
    s_best = -1.0
    if a < 1e-30:
        if c < 0:
            s_best = 1e-3 * radius
    else:
        disc = b * b - 4 * a * c
        if disc >= 0:
            s_best = (-b + np.sqrt(disc)) / (2 * a)
    if s_best > 0:
        cand = x0 + s_best * x1
        if min_margin(cs, cand) > 0 and cs.power_margin(cand) > 0:
            return cand

    upper, achieved, x_star, lam = phase1_margin(cs)
    if upper < PHASE1_INFEASIBLE:
        worst = _worst_user(cs, lam)
        raise InfeasibleProblem(
            f"CI constraints cannot all be met within the power budget "
            f"(best minimum margin {upper:.3e}); user {worst} binds hardest",
            worst_user=worst,
            certificate=upper,
        )
    if achieved > 0:
        # pull slightly off the power sphere while keeping CI slack
        for shrink in (1.0 - 1e-6, 1.0 - 1e-4, 1.0 - 1e-2):
            cand = shrink * x_star
            if min_margin(cs, cand) > 0 and cs.power_margin(cand) > 0:
                return cand
        return x_star
    if achieved >= -1e-9:
        return x_star
    raise InfeasibleProblem(
        f"feasible set appears empty or degenerate (phase-1 bracket "
        f"[{achieved:.3e}, {upper:.3e}])",
        worst_user=_worst_user(cs, lam),
        certificate=achieved,
    )


def enforce_feasible(cs: CiConstraintSet, x, anchor=None) -> np.ndarray:
    """Clear tiny constraint violations by moving toward a feasible anchor."""
    x = np.asarray(x, dtype=np.complex128)
    x = project_ball(x, cs.radius)
    worst = min_margin(cs, x)
    if worst >= 0.0:
        return x
    if anchor is None:
        anchor = strictly_feasible_point(cs)
    m_anchor = min_margin(cs, anchor)
    if m_anchor <= 0.0:
        return project_ci(cs, x, tol=1e-14, max_passes=2000)
    # per-user margins are concave along the segment, so this s suffices
    s = (-worst) / (-worst + m_anchor)
    s = min(1.0, s * (1.0 + 1e-9) + 1e-15)
    return x + s * (anchor - x)


# ---------------------------------------------------------------------------
# linear objective over the CI set


@dataclass(frozen=True)
class LinearObjective:
    """Minimize Re(c^H x) over the CI feasible set."""

    c: np.ndarray = field(compare=False)


def _lp_dual(c, g_rows, r_vec, radius, nu0=None, maxiter=800):
    """Maximize the ball dual nu.r - R||c - G^T nu|| over nu >= 0."""

    def fun(nu):
        u = c - g_rows.T @ nu
        un = np.linalg.norm(u)
        f = radius * un - nu @ r_vec
        if un < 1e-300:
            grad = -r_vec
        else:
            grad = -radius * np.real(g_rows.conj() @ u) / un - r_vec
        return f, grad

    nu0 = np.zeros(g_rows.shape[0]) if nu0 is None else nu0
    res = optimize.minimize(
        fun,
        nu0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * g_rows.shape[0],
        options={"maxiter": maxiter, "ftol": 1e-18, "gtol": 1e-14},
    )
    nu = res.x
    u = c - g_rows.T @ nu
    bound = float(nu @ r_vec - radius * np.linalg.norm(u))
    return nu, u, bound


def solve_linear_over_ci(objective: LinearObjective, cs: CiConstraintSet,
                         tol: float = 1e-6) -> np.ndarray:
    """Minimize Re(c^H x) over the CI set, certified by the dual gap.

    The half-space multipliers are optimized in the ball dual (a small
    smooth bound-constrained problem); the primal point is recovered from
    the dual residual direction, repaired onto the set, then refined by
    projected gradient steps until the duality gap closes.
    """
    c = np.asarray(objective.c, dtype=np.complex128)
    if not np.all(np.isfinite(c.view(np.float64))):
        raise ContractViolation("objective vector contains NaN or Inf")
    radius = cs.radius
    g_rows, r_vec = cs.halfspaces()
    anchor = strictly_feasible_point(cs)

    cn = np.linalg.norm(c)
    if cn == 0.0:
        return anchor
    if g_rows.shape[0] == 0:
        return -radius * c / cn

    def primal_from_dual(nu, u):
        un = np.linalg.norm(u)
        if un > 1e-12 * (cn + np.abs(nu) @ np.linalg.norm(g_rows, axis=1)):
            x = -radius * u / un
        else:
            # c lies in the active cone; recover x from the tight constraints
            active = nu > 1e-10 * max(1.0, float(np.max(nu)))
            ga, ra = g_rows[active], r_vec[active]
            gram = np.real(ga.conj() @ ga.T)
            beta = np.linalg.pinv(gram, rcond=1e-12) @ ra
            x = ga.T @ beta
        return enforce_feasible(cs, project_ci(cs, x, tol=1e-14, max_passes=2000), anchor)

    def polish(x, val, bound, scale):
        step = radius / cn
        for _ in range(60):
            if val - bound <= tol * scale:
                break
            cand = enforce_feasible(
                cs, project_ci(cs, x - step * c, tol=1e-14, max_passes=2000), anchor
            )
            cand_val = float(np.real(c.conj() @ cand))
            if cand_val < val:
                x, val = cand, cand_val
                step *= 2.0
            else:
                step *= 0.5
        return x, val

    nu, u, bound = _lp_dual(c, g_rows, r_vec, radius)
    x = primal_from_dual(nu, u)
    val = float(np.real(c.conj() @ x))
    scale = 1.0 + abs(bound)
    x, val = polish(x, val, bound, scale)

    if val - bound > tol * scale:
        nu, u, bound = _lp_dual(c, g_rows, r_vec, radius, nu0=nu, maxiter=5000)
        cand = primal_from_dual(nu, u)
        cand_val = float(np.real(c.conj() @ cand))
        if cand_val < val:
            x, val = cand, cand_val
        x, val = polish(x, val, bound, 1.0 + abs(bound))
        if val - bound > 100.0 * tol * (1.0 + abs(bound)):
            raise NumericError(
                f"linear subproblem not certified: gap {val - bound:.3e} "
                f"with tolerance {tol:.1e}"
            )
    return x


# ---------------------------------------------------------------------------
# concave quadratic over the CI set


def solve_concave_qp_over_ci(q, cs: CiConstraintSet, tol: float = 1e-6,
                             x0=None, max_iters: int = 20000) -> np.ndarray:
    """Maximize x^H q x (q negative semidefinite) over the CI set.

    Accelerated projected gradient on the equivalent convex minimization of
    x^H (-q) x, with the exact Lipschitz constant from the spectrum and a
    monotone restart.  Convergence is declared when the projected-gradient
    norm falls below tol relative to the gradient scale.
    """
    q = np.asarray(q, dtype=np.complex128)
    dec = herm_eig(q)
    lam_max = float(dec.eigenvalues[0])
    lam_min = float(dec.eigenvalues[-1])
    if lam_max > 1e-10 * max(1.0, abs(lam_min)):
        raise ContractViolation(
            f"matrix must be negative semidefinite, largest eigenvalue {lam_max:.3e}"
        )
    a = -0.5 * (q + q.conj().T)
    anchor = strictly_feasible_point(cs)
    x = anchor if x0 is None else enforce_feasible(cs, np.asarray(x0, np.complex128), anchor)
    step = 1.0 / (2.0 * max(abs(lam_min), 1e-12))
    radius = cs.radius
    grad_ref = max(1.0, 2.0 * abs(lam_min) * radius)

    def grad(z):
        return 2.0 * (a @ z)

    def fval(z):
        return float(np.real(z.conj() @ (a @ z)))

    y = x.copy()
    t_acc = 1.0
    f_x = fval(x)
    for it in range(max_iters):
        x_new = project_ci(cs, y - step * grad(y), tol=1e-13, max_passes=400)
        f_new = fval(x_new)
        if f_new > f_x:
            # momentum overshoot: restart with a plain (monotone) step
            x_new = project_ci(cs, x - step * grad(x), tol=1e-13, max_passes=400)
            f_new = fval(x_new)
            t_acc = 1.0
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = x_new + ((t_acc - 1.0) / t_next) * (x_new - x)
        x, f_x, t_acc = x_new, f_new, t_next
        if it % 5 == 0:
            p = project_ci(cs, x - step * grad(x), tol=1e-13, max_passes=400)
            pg_norm = np.linalg.norm(x - p) / step
            if pg_norm <= tol * grad_ref:
                return enforce_feasible(cs, x, anchor)
    raise NumericError(
        f"projected gradient did not reach tolerance {tol:.1e} within {max_iters} iterations"
    )


# ---------------------------------------------------------------------------
# line searches


def exact_linesearch_fixed_phi(phi, x, direction) -> float:
    """Endpoint rule for min over t in [0,1] of -(x+t d)^H Phi (x+t d).

    The objective is concave in t, so the minimum sits at an endpoint;
    pick it from the 1-D quadratic coefficients.
    """
    d = np.asarray(direction, dtype=np.complex128)
    if np.linalg.norm(d) == 0.0:
        return 0.0
    x = np.asarray(x, dtype=np.complex128)
    phi = np.asarray(phi, dtype=np.complex128)
    b = float(np.real(x.conj() @ (phi @ d)))
    c = float(np.real(d.conj() @ (phi @ d)))
    return 1.0 if 2.0 * b + c > 0.0 else 0.0


def armijo_linesearch_true_objective(scenario, x, direction, shrink: float = 0.5,
                                     slope: float = 0.1, floor: float = 1e-6,
                                     gradient=None) -> float:
    """Backtracking step on the exact objective -x^H Phi(x) x.

    The slope test uses the fixed-Phi gradient -2 Phi(x) x unless an
    explicit ``gradient`` is supplied; returns 0 when no step above the
    floor decreases the objective enough (stall).
    """
    from .signal_model import sinr_matrix, sinr_quadratic

    if not (0.0 < shrink < 1.0 and 0.0 < slope < 1.0):
        raise ContractViolation("need 0 < shrink < 1 and 0 < slope < 1")
    d = np.asarray(direction, dtype=np.complex128)
    if np.linalg.norm(d) == 0.0:
        return 0.0
    x = np.asarray(x, dtype=np.complex128)
    if gradient is None:
        phi = sinr_matrix(scenario, x)
        gradient = -2.0 * (phi @ x)
    dirderiv = float(np.real(np.asarray(gradient).conj() @ d))
    if dirderiv >= 0.0:
        return 0.0
    f0 = -sinr_quadratic(scenario, x) / scenario.mu
    t = 1.0
    while t >= floor:
        f_t = -sinr_quadratic(scenario, x + t * d) / scenario.mu
        if f_t <= f0 + slope * t * dirderiv:
            return t
        t *= shrink
    return 0.0


# ---------------------------------------------------------------------------
# semidefinite relaxation


@dataclass(frozen=True)
class SdpSolution:
    """Solution of the lifted relaxation, with its problem data attached."""

    x_tilde: np.ndarray = field(compare=False)
    objective: float
    kkt_residuals: tuple
    upper_bound: float
    phi: np.ndarray = field(compare=False)
    iterations: int
    wall_time: float
    warm_state: tuple = field(default=(), compare=False, repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.x_tilde[:-1, -1].copy()

    @property
    def x_block(self) -> np.ndarray:
        return self.x_tilde[:-1, :-1].copy()


def _project_sdr_affine(v, cs, g_rows, r_vec, gnorm2, tol=1e-12, max_passes=200):
    """Dykstra projection onto the linear constraints of the lifted problem."""
    m = v.shape[0]
    n = m - 1
    p0 = cs.power_budget
    x_mat = v.copy()
    n_sets = 2 + g_rows.shape[0]
    incs = [np.zeros_like(v) for _ in range(n_sets)]
    scale = max(1.0, np.linalg.norm(v))
    for _ in range(max_passes):
        prev = x_mat.copy()
        # corner pin
        y = x_mat + incs[0]
        corr = y.copy()
        corr[n, n] = 1.0
        incs[0] = y - corr
        x_mat = corr
        # trace cap on the leading block
        y = x_mat + incs[1]
        excess = np.real(np.trace(y[:n, :n])) - p0
        if excess > 0.0:
            corr = y.copy()
            corr[:n, :n] -= (excess / n) * np.eye(n)
        else:
            corr = y
        incs[1] = y - corr
        x_mat = corr
        # CI half spaces act on the x column (and mirrored row)
        for j in range(g_rows.shape[0]):
            y = x_mat + incs[j + 2]
            g = g_rows[j]
            deficit = r_vec[j] - np.real(g.conj() @ y[:n, n])
            if deficit > 0.0:
                corr = y.copy()
                upd = (deficit / gnorm2[j]) * g
                corr[:n, n] += upd
                corr[n, :n] += upd.conj()
            else:
                corr = y
            incs[j + 2] = y - corr
            x_mat = corr
        if np.linalg.norm(x_mat - prev) <= tol * scale:
            break
    return x_mat


def _certified_upper_bound(phi_tilde, z_hat, cs, g_rows, r_vec):
    """Weak-duality bound: fit multipliers, then shift to dual feasibility.

    Dual feasibility needs M = y0 A0 + yt I_blk - sum nu_j C_j - Phi >= 0
    with yt, nu >= 0.  Any PSD deficit is repaired by adding delta to both
    y0 and yt (adding delta * I), which costs delta * (1 + P0) in the bound.
    """
    m = phi_tilde.shape[0]
    n = m - 1
    n_hs = g_rows.shape[0]
    target = phi_tilde + z_hat

    def basis_entry(idx):
        mat = np.zeros((m, m), dtype=np.complex128)
        if idx == 0:
            mat[n, n] = 1.0
        elif idx == 1:
            mat[:n, :n] = np.eye(n)
        else:
            g = g_rows[idx - 2]
            mat[:n, n] = -0.5 * g
            mat[n, :n] = -0.5 * g.conj()
        return mat

    iu = np.triu_indices(m)

    def to_real(mat):
        return np.concatenate([np.real(mat[iu]), np.imag(mat[iu])])

    a_mat = np.stack([to_real(basis_entry(i)) for i in range(2 + n_hs)], axis=1)
    b_vec = to_real(target)
    lb = np.concatenate([[-np.inf, 0.0], np.zeros(n_hs)])
    res = optimize.lsq_linear(a_mat, b_vec, bounds=(lb, np.inf), tol=1e-12)
    theta = res.x
    y0, yt, nu = theta[0], theta[1], theta[2:]
    fitted = sum(t * basis_entry(i) for i, t in enumerate(theta))
    d_mat = fitted - phi_tilde
    lam_min = float(herm_eig(0.5 * (d_mat + d_mat.conj().T)).eigenvalues[-1])
    delta = max(0.0, -lam_min)
    return float(y0 + yt * cs.power_budget - nu @ r_vec + delta * (1.0 + cs.power_budget))


def solve_sdr(phi, cs: CiConstraintSet, tol: float = 1e-6,
              max_iters: int = 50000, warm=None) -> SdpSolution:
    """Solve the rank-relaxed lifted problem max tr(X Phi) by ADMM splitting.

    One side carries the linear constraints (corner pinned to 1, trace cap,
    CI half spaces on the x column), the other the PSD cone.  The objective
    matrix is normalized to unit Frobenius norm internally; the reported
    upper bound comes from a dual certificate, so it can only err upward.
    ``warm`` accepts the ``warm_state`` of a previous solution on the same
    constraint set to hot-start a fixed-point outer loop.
    """
    phi = np.asarray(phi, dtype=np.complex128)
    n = phi.shape[0]
    if n > 16:
        raise ContractViolation(f"lifted solver limited to n_tx <= 16, got {n}")
    t0 = time.perf_counter()
    g_rows, r_vec = cs.halfspaces()
    gnorm2 = np.real(np.sum(g_rows.conj() * g_rows, axis=1)) if g_rows.size else np.zeros(0)
    m = n + 1
    phi_scale = max(float(np.linalg.norm(phi)), 1e-300)
    phi_tilde = np.zeros((m, m), dtype=np.complex128)
    phi_tilde[:n, :n] = 0.5 * (phi + phi.conj().T) / phi_scale

    if warm:
        s_mat, u_mat, rho = warm[0].copy(), warm[1].copy(), float(warm[2])
    else:
        anchor = strictly_feasible_point(cs)
        s_mat = np.zeros((m, m), dtype=np.complex128)
        s_mat[:n, :n] = np.outer(anchor, anchor.conj())
        s_mat[:n, n] = anchor
        s_mat[n, :n] = anchor.conj()
        s_mat[n, n] = 1.0
        u_mat = np.zeros_like(s_mat)
        rho = 10.0 / max(cs.power_budget, 1.0)

    scale_obj = max(1.0, abs(float(np.real(np.sum(phi_tilde.conj() * s_mat)))))
    obj_prev = None
    rp = rd = gap = np.inf
    relax = 1.8
    it = 0
    for it in range(1, max_iters + 1):
        v = s_mat - u_mat + phi_tilde / rho
        x_mat = _project_sdr_affine(v, cs, g_rows, r_vec, gnorm2)
        x_rel = relax * x_mat + (1.0 - relax) * s_mat
        s_prev = s_mat
        s_mat = psd_project(x_rel + u_mat)
        u_mat = u_mat + x_rel - s_mat

        if it == 1 or it % 10 == 0:
            norm_ref = max(1.0, np.linalg.norm(x_mat), np.linalg.norm(s_mat))
            rp = np.linalg.norm(x_mat - s_mat) / norm_ref
            rd = rho * np.linalg.norm(s_mat - s_prev) / max(1.0, np.linalg.norm(rho * u_mat))
            obj = float(np.real(np.sum(phi_tilde.conj() * x_mat)))
            gap = abs(obj - obj_prev) / scale_obj if obj_prev is not None else np.inf
            obj_prev = obj
            if rp < tol and rd < tol and gap < tol:
                break
            if it < 0.8 * max_iters:  # freeze rho near the cap so residuals settle
                if rp > 5.0 * rd:
                    rho *= 2.0
                    u_mat /= 2.0
                elif rd > 5.0 * rp:
                    rho /= 2.0
                    u_mat *= 2.0
    else:
        raise NumericError(
            f"SDP splitting hit the {max_iters}-iteration cap "
            f"(primal {rp:.2e}, dual {rd:.2e}, gap {gap:.2e})"
        )

    x_tilde = s_mat / max(float(np.real(s_mat[n, n])), 1e-12)
    x_tilde = 0.5 * (x_tilde + x_tilde.conj().T)
    objective = float(np.real(np.sum(phi.conj() * x_tilde[:n, :n])))
    z_hat = psd_project(-rho * u_mat)
    upper = _certified_upper_bound(phi_tilde, z_hat, cs, g_rows, r_vec) * phi_scale
    return SdpSolution(
        x_tilde=x_tilde,
        objective=objective,
        kkt_residuals=(float(rp), float(rd), float(gap)),
        upper_bound=max(upper, objective),
        phi=phi.copy(),
        iterations=it,
        wall_time=time.perf_counter() - t0,
        warm_state=(s_mat.copy(), u_mat.copy(), rho),
    )


def gaussian_randomization(sol: SdpSolution, cs: CiConstraintSet, n_samples: int,
                           rng_seed: int) -> np.ndarray:
    """Extract a feasible waveform from the relaxed solution by sampling.

    Candidates are complex normal with mean x* and covariance X - x* x*^H;
    each is rescaled onto the power sphere (enlarging a CI-feasible point
    never hurts its margins), CI-infeasible ones are discarded, and the
    best surviving x^H Phi x wins.  Falls back to a repaired x* when every
    sample fails.
    """
    if n_samples < 1:
        raise ContractViolation("need at least one randomization sample")
    x_star = sol.x
    n = x_star.shape[0]
    cov = psd_project(sol.x_block - np.outer(x_star, x_star.conj()))
    dec = herm_eig(cov)
    lam = np.clip(dec.eigenvalues, 0.0, None)
    factor = dec.eigenvectors * np.sqrt(lam)
    rng = np.random.default_rng(rng_seed)
    phi = sol.phi

    best_x = None
    best_val = -np.inf
    for _ in range(n_samples):
        z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        cand = x_star + factor @ z
        nrm = np.linalg.norm(cand)
        if nrm > 0:
            cand = cand * (cs.radius / nrm)
        if min_margin(cs, cand) >= -1e-9:
            val = float(np.real(cand.conj() @ (phi @ cand)))
            if val > best_val:
                best_val, best_x = val, cand
    if best_x is not None:
        return best_x
    try:
        anchor = strictly_feasible_point(cs)
        repaired = enforce_feasible(cs, project_ci(cs, x_star, tol=1e-14, max_passes=2000),
                                    anchor)
    except InfeasibleProblem as exc:
        raise RandomizationFailure("no feasible candidate and restoration failed") from exc
    if min_margin(cs, repaired) >= -1e-9 and cs.power_margin(repaired) >= -1e-9:
        return repaired
    raise RandomizationFailure(
        f"all {n_samples} candidates infeasible and restoration from x* failed"
    )
