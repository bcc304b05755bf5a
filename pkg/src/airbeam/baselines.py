"""Sub-optimal beamformers used as benchmarks.

Three reference designs, ordered weakest to strongest on typical
instances: a matched-filter heuristic, semidefinite relaxation with
Gaussian randomization, and a convex-concave (linearized) successive
approximation.  All of them return verified-feasible beamformers, so
their objectives upper-bound the certified optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .bnb import validate_channels
from .numerics import ConvexQP, QpStatus, solve_convex_qp

_DEGENERATE_GAIN = 1e-9


@dataclass
class SdrResult:
    m: np.ndarray
    objective: float
    relax_value: float      # certified lower bound on the SDP optimum
    rank_one: bool
    eig_ratio: float
    newton_iters: int


@dataclass
class ScaResult:
    m: np.ndarray
    objective: float
    rounds: int
    converged: bool
    objective_trace: list[float]


def matched_filter_beamformer(H) -> np.ndarray:
    """Sum of channel matched filters, scaled to exact feasibility.

    m = sum_k h_k / ||h_k||^2 divided by min_k |m^H h_k|.  If the sum
    degenerates (near-cancelling channels) the principal left singular
    vector of H is used instead.
    """
    H = validate_channels(H)
    norms2 = np.sum(np.abs(H) ** 2, axis=0)
    m = np.sum(H / norms2, axis=1)
    v = float(np.min(np.abs(m.conj() @ H))) if np.any(m) else 0.0
    if v < _DEGENERATE_GAIN:
        m = np.linalg.svd(H, full_matrices=False)[0][:, 0]
        v = float(np.min(np.abs(m.conj() @ H)))
        if v < _DEGENERATE_GAIN:
            raise ValueError("channels cancel in every principal direction")
    return m / v


def _feasibility_polish(m: np.ndarray, H: np.ndarray) -> np.ndarray:
    v = float(np.min(np.abs(m.conj() @ H)))
    return m / v if v < 1.0 else m


class _DualBarrierSDP:
    """Log-barrier Newton solver for the beamforming SDP.

    Works on the dual  max sum(lam)  s.t.  Z = I - sum_k lam_k h_k h_k^H >= 0,
    lam >= 0, whose barrier subproblems are smooth in the K multipliers.
    Primal iterates are recovered from the central path as M = mu * Z^{-1},
    which is Hermitian positive definite by construction.
    """

    def __init__(self, H: np.ndarray, gap_tol: float = 1e-8):
        self.H = H
        self.N, self.K = H.shape
        self.gap_tol = gap_tol
        self.newton_iters = 0

    def _chol_z(self, lam):
        Z = np.eye(self.N, dtype=complex) - (self.H * lam) @ self.H.conj().T
        try:
            return sla.cholesky(Z, lower=True)
        except np.linalg.LinAlgError:
            return None

    def _phi(self, lam, mu, L):
        logdet = 2.0 * float(np.sum(np.log(np.real(np.diag(L)))))
        return float(np.sum(lam)) + mu * (logdet + float(np.sum(np.log(lam))))

    def solve(self):
        H = self.H
        norms2 = np.sum(np.abs(H) ** 2, axis=0)
        lam = np.full(self.K, 0.5 / float(np.sum(norms2)))
        mu = 1.0
        target = self.gap_tol

        while True:
            # Newton-centre at the current mu
            for _ in range(60):
                L = self._chol_z(lam)
                if L is None:
                    raise RuntimeError("dual iterate left the PSD cone")
                W = sla.cho_solve((L, True), H)      # Z^{-1} H
                B = H.conj().T @ W                   # B_kl = h_k^H Z^{-1} h_l
                v = np.real(np.diag(B))
                grad = 1.0 - mu * v + mu / lam
                if np.max(np.abs(grad)) <= 1e-9 * (1.0 + mu):
                    break
                P = mu * (np.abs(B) ** 2 + np.diag(1.0 / lam ** 2))
                try:
                    d = np.linalg.solve(P, grad)
                except np.linalg.LinAlgError:
                    raise RuntimeError("singular Newton system in SDP barrier")
                self.newton_iters += 1
                phi0 = self._phi(lam, mu, L)
                slope = float(grad @ d)
                alpha = 1.0
                while alpha > 1e-12:
                    cand = lam + alpha * d
                    if np.all(cand > 0.0):
                        Lc = self._chol_z(cand)
                        if Lc is not None and \
                                self._phi(cand, mu, Lc) >= phi0 + 1e-4 * alpha * slope:
                            lam = cand
                            break
                    alpha *= 0.5
                else:
                    break  # no progress possible at this centring accuracy

            L = self._chol_z(lam)
            Zinv = sla.cho_solve((L, True), np.eye(self.N, dtype=complex))
            primal = mu * float(np.real(np.trace(Zinv)))
            dual = float(np.sum(lam))
            if primal - dual <= target * (1.0 + abs(primal)):
                M = mu * 0.5 * (Zinv + Zinv.conj().T)
                return M, dual, primal
            mu /= 10.0


def sdr_beamformer(H, randomizations: int = 1000, rng_seed=None,
                   gap_tol: float = 1e-8) -> SdrResult:
    """Semidefinite relaxation with rank-1 extraction or randomization.

    Solves min Tr(M) s.t. Tr(h_k h_k^H M) >= 1, M >= 0 with a dense
    barrier method.  If the optimal M is numerically rank one its
    principal eigenvector is returned (scaled feasible); otherwise
    ``randomizations`` Gaussian samples from CN(0, M) are scaled
    feasible and the best one wins.  The reported ``relax_value`` is
    the certified dual bound of the SDP.
    """
    if randomizations < 1:
        raise ValueError("randomizations must be at least 1")
    H = validate_channels(H)
    gamma = 1.0 / float(np.max(np.linalg.norm(H, axis=0)))
    Hs = H * gamma

    solver = _DualBarrierSDP(Hs, gap_tol)
    M, dual_value, _ = solver.solve()

    eigvals, eigvecs = np.linalg.eigh(M)
    lead = float(eigvals[-1])
    ratio = float(eigvals[-2] / lead) if len(eigvals) > 1 else 0.0
    rank_one = ratio <= 1e-7

    candidates = [np.sqrt(max(lead, 0.0)) * eigvecs[:, -1]]
    if not rank_one or _min_gain(candidates[0], Hs) < _DEGENERATE_GAIN:
        rng = np.random.default_rng(rng_seed)
        Lc = sla.cholesky(M + 1e-14 * lead * np.eye(Hs.shape[0]), lower=True)
        draws = (rng.standard_normal((Hs.shape[0], randomizations))
                 + 1j * rng.standard_normal((Hs.shape[0], randomizations))) / np.sqrt(2.0)
        candidates.extend((Lc @ draws).T)

    best_obj, best_m = math.inf, None
    for cand in candidates:
        v = _min_gain(cand, Hs)
        if v < _DEGENERATE_GAIN:
            continue
        m = cand / v
        obj = float(np.vdot(m, m).real)
        if obj < best_obj:
            best_obj, best_m = obj, m
    if best_m is None:
        raise RuntimeError("no feasible SDR candidate; increase randomizations")
    best_m = _feasibility_polish(best_m, Hs)
    best_obj = float(np.vdot(best_m, best_m).real)

    scale = gamma * gamma
    return SdrResult(
        m=best_m * gamma,
        objective=best_obj * scale,
        relax_value=dual_value * scale,
        rank_one=rank_one,
        eig_ratio=ratio,
        newton_iters=solver.newton_iters,
    )


def _min_gain(m: np.ndarray, H: np.ndarray) -> float:
    return float(np.min(np.abs(np.asarray(m).conj() @ H)))


def sca_beamformer(H, m0=None, max_rounds: int = 100, tol: float = 1e-8) -> ScaResult:
    """Successive convex approximation (convex-concave procedure).

    Each round replaces |m^H h_k|^2 >= 1 by its linearization around
    the current iterate,

        Re{(m_t^H h_k)(h_k^H m)} >= (1 + |m_t^H h_k|^2) / 2,

    which under-approximates the feasible set because the quadratic
    lies above its tangent.  The minimum-norm QP under those K
    half-spaces is solved per round; iterates therefore stay feasible
    and the objective never increases.  A post-check rescales in case
    of numerical slack.
    """
    H = validate_channels(H)
    gamma = 1.0 / float(np.max(np.linalg.norm(H, axis=0)))
    Hs = H * gamma
    N = Hs.shape[0]

    if m0 is None:
        m = matched_filter_beamformer(Hs)
    else:
        m = np.asarray(m0, dtype=complex).ravel() / gamma
        if not np.any(m):
            raise ValueError("initial beamformer must be nonzero")
        m = _feasibility_polish(m, Hs)

    a, b = Hs.real, Hs.imag
    obj = float(np.vdot(m, m).real)
    trace = [obj]
    best_obj, best_m = obj, m
    converged = False
    rounds = 0

    for rounds in range(1, max_rounds + 1):
        beta = m.conj() @ Hs
        # rows of Re{beta_k h_k^H m} over [Re m; Im m]
        rp = (a * beta.real + b * beta.imag).T
        rq = (b * beta.real - a * beta.imag).T
        G = -np.hstack([rp, rq])
        g = -0.5 * (1.0 + np.abs(beta) ** 2)
        sol = solve_convex_qp(ConvexQP(np.eye(2 * N), None, None, G, g))
        if sol.status is not QpStatus.OPTIMAL:
            break
        m_new = sol.z[:N] + 1j * sol.z[N:]
        m_new = _feasibility_polish(m_new, Hs)
        new_obj = float(np.vdot(m_new, m_new).real)
        if new_obj < best_obj:
            best_obj, best_m = new_obj, m_new
        delta = abs(trace[-1] - new_obj)
        trace.append(new_obj)
        m = m_new
        if delta <= tol * max(1.0, trace[-2]):
            converged = True
            break

    scale = gamma * gamma
    return ScaResult(
        m=best_m * gamma,
        objective=best_obj * scale,
        rounds=rounds,
        converged=converged,
        objective_trace=[t * scale for t in trace],
    )
