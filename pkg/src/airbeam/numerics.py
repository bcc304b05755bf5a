"""Real-valued convex QP machinery.

Complex minimum-norm beamforming problems are solved here after being
rewritten over stacked real/imaginary parts.  The workhorse is a dense
Mehrotra predictor-corrector interior-point method sized for the tiny
programs produced by the branch-and-bound relaxations (tens of
variables); equality-only programs take a direct KKT solve instead.

Every routine is a pure function of its arguments and deterministic in
single-threaded use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

# QP objective tolerance sits one decade below the default 1e-8
# feasibility tolerances so inner error never dominates outer gaps.
DEFAULT_GAP_TOL = 1e-9
DEFAULT_FEAS_TOL = 1e-8
MAX_IPM_ITER = 60


class QpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class ConvexQP:
    """min z^T Q z  s.t.  A z = b,  G z <= g.

    Q must be symmetric PSD.  A and G may be None when a block of
    constraints is absent.
    """

    Q: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    G: np.ndarray | None = None
    g: np.ndarray | None = None

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        n = self.Q.shape[0]
        if self.Q.shape != (n, n):
            raise ValueError("Q must be square")
        if not np.allclose(self.Q, self.Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if self.A is not None:
            self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
            self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
            if self.A.shape != (self.b.size, n):
                raise ValueError("equality block has inconsistent shape")
            if self.A.shape[0] == 0:
                self.A, self.b = None, None
        if self.G is not None:
            self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
            self.g = np.atleast_1d(np.asarray(self.g, dtype=float))
            if self.G.shape != (self.g.size, n):
                raise ValueError("inequality block has inconsistent shape")
            if self.G.shape[0] == 0:
                self.G, self.g = None, None

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def objective(self, z: np.ndarray) -> float:
        return float(z @ self.Q @ z)


@dataclass
class QpSolution:
    status: QpStatus
    z: np.ndarray | None = None
    objective: float = np.inf
    residual_eq: float = 0.0
    residual_ineq: float = 0.0
    iterations: int = 0
    trace: list = field(default_factory=list, repr=False)


def embed_complex(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Stack (m, x) as [Re m; Im m; Re x; Im x]."""
    m = np.asarray(m, dtype=complex).ravel()
    x = np.asarray(x, dtype=complex).ravel()
    return np.concatenate([m.real, m.imag, x.real, x.imag])


def extract_complex(z: np.ndarray, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`embed_complex` for dimensions (n, k)."""
    z = np.asarray(z, dtype=float).ravel()
    if z.size != 2 * (n + k):
        raise ValueError("embedded vector has wrong length")
    m = z[:n] + 1j * z[n:2 * n]
    x = z[2 * n:2 * n + k] + 1j * z[2 * n + k:]
    return m, x


def embedding_objective_matrix(n: int, k: int) -> np.ndarray:
    """Q selecting ||m||^2 out of the embedded vector."""
    q = np.zeros(2 * (n + k))
    q[:2 * n] = 1.0
    return np.diag(q)


def least_norm_equality(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of A z = b for full-row-rank A.

    Returns A^H (A A^H)^{-1} b.  Accepts real or complex systems.
    Rank deficiency is detected with a pivoted QR factorization and
    raises ValueError carrying the detected rank.
    """
    A = np.atleast_2d(np.asarray(A))
    b = np.atleast_1d(np.asarray(b))
    p, n = A.shape
    if b.size != p:
        raise ValueError("right-hand side length does not match row count")
    if p > n:
        raise ValueError(f"system has more rows ({p}) than columns ({n})")
    _, R, _ = sla.qr(A.conj().T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(A.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.count_nonzero(diag > tol))
    if rank < p:
        raise ValueError(f"equality system is rank deficient: rank {rank} < {p} rows")
    gram = A @ A.conj().T
    return A.conj().T @ np.linalg.solve(gram, b)


def _solve_equality_qp(qp: ConvexQP, feas_tol: float) -> QpSolution:
    """Direct KKT solve for programs without inequality rows."""
    n = qp.dim
    if qp.A is None:
        z = np.zeros(n)
        return QpSolution(QpStatus.OPTIMAL, z, 0.0)
    p = qp.A.shape[0]
    kkt = np.zeros((n + p, n + p))
    kkt[:n, :n] = 2.0 * qp.Q
    kkt[:n, n:] = qp.A.T
    kkt[n:, :n] = qp.A
    rhs = np.concatenate([np.zeros(n), qp.b])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return QpSolution(QpStatus.NUMERICAL_FAILURE)
    z = sol[:n]
    res = float(np.max(np.abs(qp.A @ z - qp.b))) if p else 0.0
    if not np.isfinite(res) or res > feas_tol * (1.0 + float(np.max(np.abs(qp.b)))):
        return QpSolution(QpStatus.NUMERICAL_FAILURE)
    return QpSolution(QpStatus.OPTIMAL, z, qp.objective(z), residual_eq=res)


def _farkas_certificate(qp: ConvexQP, y: np.ndarray | None, lam: np.ndarray) -> bool:
    """Check a scaled (y, lam) pair as an infeasibility certificate.

    The constraint system {Az=b, Gz<=g} is infeasible when some
    lam >= 0 and free y satisfy A^T y + G^T lam = 0 with
    b^T y + g^T lam < 0.  Thresholds are strict so a feasible node is
    never misclassified; ambiguous cases fall through to an LP check.
    """
    scale = float(np.max(lam)) if y is None else max(np.max(np.abs(y)), np.max(lam))
    if not np.isfinite(scale) or scale <= 0.0:
        return False
    lam_hat = lam / scale
    resid = qp.G.T @ lam_hat
    gap = float(qp.g @ lam_hat)
    if y is not None:
        y_hat = y / scale
        resid = resid + qp.A.T @ y_hat
        gap += float(qp.b @ y_hat)
    norm_scale = 1.0 + float(np.max(np.abs(qp.g)))
    return float(np.max(np.abs(resid))) <= 1e-11 and gap <= -1e-8 * norm_scale


def _lp_feasible(qp: ConvexQP) -> bool | None:
    """Phase-one feasibility check via HiGHS; None when inconclusive."""
    from scipy.optimize import linprog

    res = linprog(
        c=np.zeros(qp.dim),
        A_ub=qp.G, b_ub=qp.g,
        A_eq=qp.A, b_eq=qp.b,
        bounds=[(None, None)] * qp.dim,
        method="highs",
    )
    if res.status == 2:
        return False
    if res.status == 0:
        return True
    return None


def solve_convex_qp(
    qp: ConvexQP,
    tol: float = DEFAULT_GAP_TOL,
    feas_tol: float = DEFAULT_FEAS_TOL,
    max_iter: int = MAX_IPM_ITER,
) -> QpSolution:
    """Solve min z^T Q z subject to A z = b, G z <= g.

    On OPTIMAL the complementarity gap is below ``tol`` relative to the
    objective and constraint residuals are below ``feas_tol`` (relative
    to the data scale).  Infeasible programs are reported either from a
    Farkas certificate built out of the diverging dual iterates or from
    a HiGHS phase-one check; anything else after the iteration cap is a
    NUMERICAL_FAILURE, which callers may retry at looser tolerance.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if qp.G is None:
        return _solve_equality_qp(qp, feas_tol)

    n = qp.dim
    G, g = qp.G, qp.g
    q = G.shape[0]
    has_eq = qp.A is not None
    A = qp.A if has_eq else np.zeros((0, n))
    b = qp.b if has_eq else np.zeros(0)
    p = A.shape[0]

    b_scale = 1.0 + (float(np.max(np.abs(b))) if p else 0.0)
    g_scale = 1.0 + float(np.max(np.abs(g)))

    # starting point: least-squares equality solution, unit slacks/duals
    if p:
        z, *_ = np.linalg.lstsq(A, b, rcond=None)
    else:
        z = np.zeros(n)
    y = np.zeros(p)
    s = np.maximum(g - G @ z, 1.0)
    lam = np.ones(q)

    for it in range(1, max_iter + 1):
        r_d = 2.0 * qp.Q @ z + G.T @ lam + (A.T @ y if p else 0.0)
        r_p = A @ z - b if p else np.zeros(0)
        r_g = G @ z + s - g
        mu = float(lam @ s) / q

        obj = qp.objective(z)
        d_scale = 1.0 + float(np.max(np.abs(2.0 * qp.Q @ z))) + float(np.max(np.abs(G.T @ lam)))
        primal_ok = (not p or np.max(np.abs(r_p)) <= feas_tol * b_scale) and \
            np.max(np.abs(r_g)) <= feas_tol * g_scale
        dual_ok = np.max(np.abs(r_d)) <= feas_tol * d_scale
        if primal_ok and dual_ok and q * mu <= tol * (1.0 + abs(obj)):
            return QpSolution(
                QpStatus.OPTIMAL, z, obj,
                residual_eq=float(np.max(np.abs(r_p))) if p else 0.0,
                residual_ineq=float(max(np.max(G @ z - g), 0.0)),
                iterations=it,
            )

        # diverging duals on an infeasible program leave a Farkas certificate
        if np.max(lam) > 1e6 and _farkas_certificate(qp, y if p else None, lam):
            return QpSolution(QpStatus.INFEASIBLE, iterations=it)
        if not np.all(np.isfinite(z)) or mu > 1e16:
            break

        d = lam / s
        M = 2.0 * qp.Q + (G.T * d) @ G
        if p:
            kkt = np.zeros((n + p, n + p))
            kkt[:n, :n] = M
            kkt[:n, n:] = A.T
            kkt[n:, :n] = A
        else:
            kkt = M
        try:
            lu = sla.lu_factor(kkt)
        except (np.linalg.LinAlgError, ValueError):
            break

        def step(r_comp):
            v = -r_d + G.T @ (r_comp / s - d * r_g)
            rhs = np.concatenate([v, -r_p]) if p else v
            try:
                sol = sla.lu_solve(lu, rhs)
            except ValueError:
                return None
            dz = sol[:n]
            dy = sol[n:] if p else np.zeros(0)
            ds = -r_g - G @ dz
            dlam = -r_comp / s + d * (r_g + G @ dz)
            return dz, dy, ds, dlam

        aff = step(lam * s)
        if aff is None or not np.all(np.isfinite(aff[0])):
            break
        dz_a, dy_a, ds_a, dlam_a = aff
        alpha_p = _max_step(s, ds_a)
        alpha_d = _max_step(lam, dlam_a)
        mu_aff = float((lam + alpha_d * dlam_a) @ (s + alpha_p * ds_a)) / q
        sigma = min(max((mu_aff / mu) ** 3, 0.0), 1.0)

        corr = step(lam * s + dlam_a * ds_a - sigma * mu)
        if corr is None or not np.all(np.isfinite(corr[0])):
            break
        dz, dy, ds, dlam = corr
        alpha_p = 0.995 * _max_step(s, ds)
        alpha_d = 0.995 * _max_step(lam, dlam)
        z = z + alpha_p * dz
        s = s + alpha_p * ds
        y = y + alpha_d * dy
        lam = lam + alpha_d * dlam

    feasible = _lp_feasible(qp)
    if feasible is False:
        return QpSolution(QpStatus.INFEASIBLE, iterations=max_iter)
    return QpSolution(QpStatus.NUMERICAL_FAILURE, iterations=max_iter)


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    """Largest alpha in (0, 1] keeping v + alpha*dv strictly positive."""
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))
