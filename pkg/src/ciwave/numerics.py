"""Dense complex Hermitian linear algebra.

Everything downstream (clutter statistics, MVDR filtering, the SDP solver)
runs through the three routines here: a cyclic Jacobi eigensolver, a
Cholesky-based Hermitian solve, and projection onto the PSD cone.  Matrices
are plain ``numpy`` complex128 arrays; sizes stay at desk scale (<= 64), so
the Jacobi method is both simple and unconditionally convergent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericError

MAX_DIM = 64
_ABS_FLOOR = 1e-14


@dataclass(frozen=True)
class EigDecomposition:
    """Hermitian eigendecomposition with eigenvalues sorted descending.

    ``eigenvectors[:, i]`` is the unit eigenvector for ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_complex_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ContractViolation("matrix contains NaN or Inf entries")
    return a


def hermitian_error(a: np.ndarray) -> float:
    """Relative deviation from A = A^H (0 for the zero matrix)."""
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - a.conj().T) / scale)


def require_hermitian(a, tol: float = 1e-12) -> np.ndarray:
    a = as_complex_matrix(a)
    err = hermitian_error(a)
    if err > tol:
        raise ContractViolation(f"matrix is not Hermitian (relative asymmetry {err:.3e})")
    if a.shape[0] > MAX_DIM:
        raise ContractViolation(f"dimension {a.shape[0]} exceeds supported maximum {MAX_DIM}")
    # work on the exactly-Hermitian average so tiny asymmetries cannot drift
    return 0.5 * (a + a.conj().T)


def herm_eig(a, tol: float = 1e-13, max_sweeps: int = 60) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix by the cyclic Jacobi method.

    Each rotation zeroes one off-diagonal pair with a unitary 2x2 transform;
    sweeps repeat until the off-diagonal Frobenius mass falls below
    ``tol`` relative to the matrix norm (with a small absolute floor).
    """
    a = require_hermitian(a)
    n = a.shape[0]
    if n == 1:
        return EigDecomposition(np.array([a[0, 0].real]), np.ones((1, 1), dtype=np.complex128))

    w = a.copy()
    v = np.eye(n, dtype=np.complex128)
    scale = max(np.linalg.norm(w), _ABS_FLOOR)
    target = tol * scale
    skip = target / (8.0 * n * n)

    for _ in range(max_sweeps):
        off = np.linalg.norm(w - np.diag(np.diagonal(w)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p, q]
                mag = abs(apq)
                if mag <= skip:
                    continue
                phase = apq / mag
                app = w[p, p].real
                aqq = w[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0.0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # unitary block J = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                j00, j01 = c, s
                j10, j11 = -s * np.conj(phase), c * np.conj(phase)

                col_p = w[:, p] * j00 + w[:, q] * j10
                col_q = w[:, p] * j01 + w[:, q] * j11
                w[:, p] = col_p
                w[:, q] = col_q
                row_p = np.conj(j00) * w[p, :] + np.conj(j10) * w[q, :]
                row_q = np.conj(j01) * w[p, :] + np.conj(j11) * w[q, :]
                w[p, :] = row_p
                w[q, :] = row_q
                w[p, q] = 0.0
                w[q, p] = 0.0
                w[p, p] = w[p, p].real
                w[q, q] = w[q, q].real

                vec_p = v[:, p] * j00 + v[:, q] * j10
                vec_q = v[:, p] * j01 + v[:, q] * j11
                v[:, p] = vec_p
                v[:, q] = vec_q
    else:
        off = np.linalg.norm(w - np.diag(np.diagonal(w)))
        raise NumericError(
            f"Jacobi sweep cap {max_sweeps} reached; off-diagonal residual {off:.3e} "
            f"(target {target:.3e})"
        )

    lam = np.diagonal(w).real.copy()
    order = np.argsort(lam)[::-1]
    return EigDecomposition(lam[order], v[:, order])


def cholesky(a, rel_floor: float = 1e-12) -> np.ndarray:
    """Lower-triangular L with A = L L^H for Hermitian positive-definite A."""
    a = require_hermitian(a)
    n = a.shape[0]
    low = np.zeros((n, n), dtype=np.complex128)
    diag_scale = max(float(np.max(np.abs(np.diagonal(a).real))) if n else 0.0, _ABS_FLOOR)
    floor = max(rel_floor * diag_scale, _ABS_FLOOR)
    for j in range(n):
        d = a[j, j].real - np.real(low[j, :j] @ low[j, :j].conj())
        if d <= floor:
            lam_min = float(herm_eig(a).eigenvalues[-1])
            raise NumericError(
                f"matrix is not positive definite at pivot {j}: "
                f"pivot {d:.3e}, smallest eigenvalue {lam_min:.6e}"
            )
        ljj = np.sqrt(d)
        low[j, j] = ljj
        if j + 1 < n:
            low[j + 1 :, j] = (a[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j].conj()) / ljj
    return low


def herm_solve(a, b) -> np.ndarray:
    """Solve A x = b for Hermitian positive-definite A via Cholesky."""
    b = np.asarray(b, dtype=np.complex128)
    low = cholesky(a)
    n = low.shape[0]
    if b.shape[0] != n:
        raise ContractViolation(f"dimension mismatch: matrix {n}, rhs {b.shape}")
    y = np.zeros_like(b)
    for i in range(n):
        y[i] = (b[i] - low[i, :i] @ y[:i]) / low[i, i]
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - low[i + 1 :, i].conj() @ x[i + 1 :]) / low[i, i].real
    return x


def psd_project(a) -> np.ndarray:
    """Nearest (Frobenius) positive-semidefinite matrix: clip negative eigenvalues."""
    dec = herm_eig(a)
    lam = np.maximum(dec.eigenvalues, 0.0)
    v = dec.eigenvectors
    out = (v * lam) @ v.conj().T
    return 0.5 * (out + out.conj().T)
