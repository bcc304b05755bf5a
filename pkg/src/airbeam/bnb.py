"""Globally optimal minimum-norm receive beamforming.

Solves

    min ||m||^2   s.t.  |m^H h_k|^2 >= 1  for every device k

to certified relative accuracy eps by best-first branch and bound on
the arguments of the effective channels x_k = m^H h_k.  Each node keeps
a box of argument sectors; its lower bound is the convex relaxation
that replaces every sector by its hull, and its upper bound comes from
scaling the relaxed point back into the feasible region.  Branching
always bisects the sector of the device whose relaxed |x_k| is
smallest.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import geometry as geo
from . import numerics
from .numerics import ConvexQP, QpStatus, solve_convex_qp

PRUNE_SLACK = 1.0 - 1e-12      # nodes with lower >= U * PRUNE_SLACK are dead
MIN_SCALE = 1e-6               # smallest |x| allowed when scaling an incumbent
FEAS_SLACK = 1e-9              # incumbent feasibility margin
MAX_DEFAULT_ITER = 10 ** 6
_COUNT_CAP = np.iinfo(np.int64).max


class NodeInfeasible(Exception):
    """The node's hull relaxation has empty intersection with the channel range."""


class BnBStatus(Enum):
    CONVERGED = "converged"
    ITERATION_CAPPED = "iteration_capped"


@dataclass
class BnBNode:
    box: geo.SectorBox
    lower: float
    relaxed_m: np.ndarray | None
    relaxed_x: np.ndarray | None
    resolved: bool = True


@dataclass
class SolveReport:
    optimal_m: np.ndarray
    objective: float
    lower: float
    upper: float
    iterations: int
    node_count: int
    status: BnBStatus
    trace: list[tuple[float, float]] = field(repr=False, default_factory=list)

    @property
    def gap(self) -> float:
        if self.lower <= 0.0:
            return math.inf
        return (self.upper - self.lower) / self.lower


def validate_channels(H) -> np.ndarray:
    """Return H as a complex N x K matrix, rejecting zero or non-finite columns."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if H.ndim != 2 or H.size == 0:
        raise ValueError("channel matrix must be a non-empty 2-D array")
    if not np.all(np.isfinite(H)):
        raise ValueError("channel matrix contains non-finite entries")
    norms = np.linalg.norm(H, axis=0)
    if np.any(norms == 0.0):
        k = int(np.argmin(norms))
        raise ValueError(
            f"device {k} has a zero channel; the unit-gain constraint is infeasible"
        )
    return H


def channel_equality_matrix(H: np.ndarray) -> np.ndarray:
    """Real equality rows tying the embedding of (m, x) through m^H h_k = x_k.

    Rows 0..K-1 express the real parts, rows K..2K-1 the imaginary
    parts, over z = [Re m; Im m; Re x; Im x].
    """
    N, K = H.shape
    A = np.zeros((2 * K, 2 * (N + K)))
    a, b = H.real, H.imag
    A[:K, :N] = a.T
    A[:K, N:2 * N] = b.T
    A[K:, :N] = b.T
    A[K:, N:2 * N] = -a.T
    A[np.arange(K), 2 * N + np.arange(K)] = -1.0
    A[K + np.arange(K), 2 * N + K + np.arange(K)] = -1.0
    return A


def _hull_rows_x(box: geo.SectorBox):
    """Hull cuts as (device, normal, offset) triples."""
    rows = []
    for k, s in enumerate(box.sectors):
        for hp in geo.hull_constraints(s):
            rows.append((k, hp.normal, hp.offset))
    return rows


def node_lower_bound(
    box: geo.SectorBox,
    H,
    tol: float = numerics.DEFAULT_GAP_TOL,
    feas_tol: float = numerics.DEFAULT_FEAS_TOL,
):
    """Relaxation bound of one node via the joint real embedding.

    Solves min ||m||^2 s.t. m^H h_k = x_k, x in hull(box) as a convex
    QP over [Re m; Im m; Re x; Im x] and returns (lower, m, x).  Raises
    NodeInfeasible when the hull cannot be reached by any m (possible
    when K > N), RuntimeError on repeated numerical failure.
    """
    H = validate_channels(H)
    N, K = H.shape
    if len(box) != K:
        raise ValueError("box size does not match device count")
    A = channel_equality_matrix(H)
    b = np.zeros(2 * K)
    rows = _hull_rows_x(box)
    G = g = None
    if rows:
        G = np.zeros((len(rows), 2 * (N + K)))
        g = np.zeros(len(rows))
        for i, (k, c, r) in enumerate(rows):
            G[i, 2 * N + k] = -c.real
            G[i, 2 * N + K + k] = -c.imag
            g[i] = -r
    qp = ConvexQP(numerics.embedding_objective_matrix(N, K), A, b, G, g)
    sol = solve_convex_qp(qp, tol, feas_tol)
    if sol.status is QpStatus.NUMERICAL_FAILURE:
        sol = solve_convex_qp(qp, 10.0 * tol, 10.0 * feas_tol)
    if sol.status is QpStatus.INFEASIBLE:
        raise NodeInfeasible
    if sol.status is not QpStatus.OPTIMAL:
        raise RuntimeError("relaxation QP failed numerically")
    m, x = numerics.extract_complex(sol.z, N, K)
    return sol.objective, m, x


def node_upper_bound(m_star: np.ndarray, x_star: np.ndarray, box: geo.SectorBox, H):
    """Feasible point from the relaxed solution by radial scaling.

    Divides (m*, x*) by mu = min(|x*_1|, ..., |x*_K|, 1), which keeps
    every argument and pushes all moduli to at least one, then applies
    a final exact-feasibility polish against H.  Returns (upper, m) or
    None when the relaxed moduli are too small to scale through.
    """
    H = validate_channels(H)
    x_star = np.asarray(x_star, dtype=complex).ravel()
    mu = min(float(np.min(np.abs(x_star))), 1.0)
    if mu <= MIN_SCALE:
        return None
    m = np.asarray(m_star, dtype=complex).ravel() / mu
    v = float(np.min(np.abs(m.conj() @ H)))
    if v <= 0.0:
        return None
    if v < 1.0:
        m = m / v
    gains = np.abs(m.conj() @ H)
    if np.min(gains) < 1.0 - FEAS_SLACK:
        raise AssertionError("scaled point violates feasibility; relaxation bug")
    x = m.conj() @ H
    if not geo.box_hull_contains(box, x, tol=1e-6):
        raise AssertionError("scaled point left the node hull; relaxation bug")
    return float(np.vdot(m, m).real), m


def select_branch_device(x_star) -> int:
    """Device with the smallest relaxed modulus; ties go to the lowest index."""
    x_star = np.asarray(x_star, dtype=complex).ravel()
    return int(np.argmin(np.abs(x_star)))


def iteration_budget(eps: float, num_devices: int) -> int:
    """Worst-case iteration count (2*pi / arccos(1/sqrt(1+eps)))^K + 1.

    Saturates at the largest 64-bit signed count.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    theta = math.acos(1.0 / math.sqrt(1.0 + eps))
    base = 2.0 * math.pi / theta
    if num_devices * math.log10(base) > 18.0:
        return _COUNT_CAP
    value = base ** num_devices
    return int(math.ceil(value - 1e-9)) + 1


class _SectorRelaxation:
    """Per-instance relaxation solver working in beamformer space.

    The equality m^H h_k = x_k determines x linearly from m, so each
    node's relaxed QP is solved over [Re m; Im m] alone with the hull
    cuts mapped through that linear map.  This is algebraically the
    same program as the joint embedding (see node_lower_bound) at a
    fraction of the cost; the test suite cross-checks both paths.
    """

    def __init__(self, H: np.ndarray, tol: float, feas_tol: float):
        self.H = H
        self.N, self.K = H.shape
        self.tol = tol
        self.feas_tol = feas_tol
        # x = T z with z = [Re m; Im m]; first K rows Re x, last K rows Im x
        T = channel_equality_matrix(H)[:, :2 * self.N]
        self.Tre = np.ascontiguousarray(T[:self.K])
        self.Tim = np.ascontiguousarray(T[self.K:])

    def cut_rows(self, box: geo.SectorBox):
        """Stack hull cuts of all narrow sectors as (G, g) with G z <= g."""
        bounds = np.array([(s.l, s.u) for s in box.sectors])
        w = bounds[:, 1] - bounds[:, 0]
        mask = w <= np.pi
        if not np.any(mask):
            return None, None
        l, u = bounds[mask, 0], bounds[mask, 1]
        half_w = 0.5 * w[mask]
        mid = l + half_w
        tre, tim = self.Tre[mask], self.Tim[mask]
        chord = -(np.cos(mid)[:, None] * tre + np.sin(mid)[:, None] * tim)
        lo_ray = -(-np.sin(l)[:, None] * tre + np.cos(l)[:, None] * tim)
        up_ray = -(np.sin(u)[:, None] * tre - np.cos(u)[:, None] * tim)
        G = np.concatenate([chord, lo_ray, up_ray])
        g = np.concatenate([-np.cos(half_w), np.zeros(2 * len(l))])
        return G, g

    def bound(self, box: geo.SectorBox, loosen: float = 1.0):
        """Return (status, value, m, x) for one node."""
        G, g = self.cut_rows(box)
        if G is None:
            m = np.zeros(self.N, dtype=complex)
            return QpStatus.OPTIMAL, 0.0, m, np.zeros(self.K, dtype=complex)
        status, val, z = _solve_box_qp(G, g, self.tol * loosen,
                                       self.feas_tol * loosen)
        if status is not QpStatus.OPTIMAL:
            return status, math.inf, None, None
        m = z[:self.N] + 1j * z[self.N:]
        x = m.conj() @ self.H
        return QpStatus.OPTIMAL, val, m, x


def _box_ipm(G, g, tol, feas_tol, max_iter):
    """Predictor-corrector loop for min ||z||^2 s.t. G z <= g.

    Identity objective, no equality block: the branch-and-bound hot
    path.  Returns (code, value, z) with code 0 optimal / 1 infeasible
    via Farkas certificate / 2 inconclusive.  Compiled with numba when
    available (see the module tail); the body is written to stay in
    nopython territory.
    """
    q, n = G.shape
    GT = G.T.copy()
    g_scale = 1.0 + np.max(np.abs(g))
    z = np.zeros(n)
    s = np.maximum(g, 1.0)
    lam = np.ones(q)

    for _ in range(max_iter):
        r_d = 2.0 * z + GT @ lam
        r_g = G @ z + s - g
        mu = (lam @ s) / q
        obj = z @ z

        if (np.max(np.abs(r_g)) <= feas_tol * g_scale
                and np.max(np.abs(r_d)) <= feas_tol * (1.0 + 2.0 * np.sqrt(obj))
                and q * mu <= tol * (1.0 + obj)):
            return 0, obj, z

        lam_max = np.max(lam)
        if lam_max > 1e6:
            lam_hat = lam / lam_max
            if (np.max(np.abs(GT @ lam_hat)) <= 1e-11
                    and g @ lam_hat <= -1e-8 * g_scale):
                return 1, np.inf, z
        if not np.all(np.isfinite(z)) or mu > 1e16:
            return 2, np.inf, z

        d = lam / s
        M = (GT * d) @ G
        for i in range(n):
            M[i, i] += 2.0

        # affine predictor
        v = -r_d + GT @ (lam - d * r_g)
        dz = np.linalg.solve(M, v)
        Gdz = G @ dz
        ds = -r_g - Gdz
        dlam = -lam + d * (r_g + Gdz)
        alpha_p = _step_len(s, ds)
        alpha_d = _step_len(lam, dlam)
        mu_aff = ((lam + alpha_d * dlam) @ (s + alpha_p * ds)) / q
        sigma = min(max((mu_aff / mu) ** 3, 0.0), 1.0)

        # corrector reusing the same normal matrix
        r_comp = lam * s + dlam * ds - sigma * mu
        v = -r_d + GT @ (r_comp / s - d * r_g)
        dz = np.linalg.solve(M, v)
        Gdz = G @ dz
        ds = -r_g - Gdz
        dlam = -r_comp / s + d * (r_g + Gdz)
        if not np.all(np.isfinite(dz)):
            return 2, np.inf, z
        alpha_p = 0.995 * _step_len(s, ds)
        alpha_d = 0.995 * _step_len(lam, dlam)
        z = z + alpha_p * dz
        s = s + alpha_p * ds
        lam = lam + alpha_d * dlam
    return 2, np.inf, z


def _step_len(v, dv):
    """Largest step in (0, 1] keeping v + a*dv positive."""
    a = 1.0
    for i in range(v.shape[0]):
        if dv[i] < 0.0:
            r = -v[i] / dv[i]
            if r < a:
                a = r
    return a


try:  # jit the hot loop; the pure-numpy body remains the fallback
    import numba

    _step_len = numba.njit(cache=True, nogil=True)(_step_len)
    _box_ipm = numba.njit(cache=True, nogil=True)(_box_ipm)
except ImportError:  # pragma: no cover
    pass


def _solve_box_qp(G: np.ndarray, g: np.ndarray, tol: float, feas_tol: float,
                  max_iter: int = 40):
    """Status-typed wrapper around _box_ipm with an LP feasibility fallback."""
    try:
        code, obj, z = _box_ipm(np.ascontiguousarray(G), g, tol, feas_tol, max_iter)
    except Exception:
        code = 2
    if code == 0:
        return QpStatus.OPTIMAL, float(obj), z
    if code == 1:
        return QpStatus.INFEASIBLE, math.inf, None
    from .numerics import _lp_feasible
    qp = ConvexQP(np.eye(G.shape[1]), None, None, G, g)
    if _lp_feasible(qp) is False:
        return QpStatus.INFEASIBLE, math.inf, None
    return QpStatus.NUMERICAL_FAILURE, math.inf, None


def solve_global(
    H,
    eps: float = 1e-5,
    max_iter: int | None = None,
    qp_tol: float = numerics.DEFAULT_GAP_TOL,
    qp_feas_tol: float = numerics.DEFAULT_FEAS_TOL,
) -> SolveReport:
    """Certified eps-optimal solution of the unit-gain min-norm problem.

    Best-first branch and bound: the node with the smallest lower bound
    is split in two along the argmin-modulus device, both children are
    bounded, and the global bounds L (smallest node bound) and U (best
    feasible incumbent) are updated until (U - L) / L <= eps.

    Returns a SolveReport whose trace holds the per-iteration (L, U)
    pairs; entry 0 is the root state.  Raises ValueError for empty or
    zero channels, and returns status ITERATION_CAPPED with valid
    bounds when the iteration limit is hit first.
    """
    from .baselines import matched_filter_beamformer, sca_beamformer

    if eps <= 0.0:
        raise ValueError("eps must be positive")
    H = validate_channels(H)
    N, K = H.shape
    if max_iter is None:
        max_iter = min(iteration_budget(eps, K), MAX_DEFAULT_ITER)

    # work on channels scaled to max column norm one; undo at the end
    gamma = 1.0 / float(np.max(np.linalg.norm(H, axis=0)))
    Hs = H * gamma
    relax = _SectorRelaxation(Hs, qp_tol, qp_feas_tol)

    status0, val0, m0, x0 = relax.bound(geo.SectorBox.full(K))
    if status0 is not QpStatus.OPTIMAL:
        raise RuntimeError("root relaxation failed")
    root = BnBNode(geo.SectorBox.full(K), val0, m0, x0)

    incumbent = matched_filter_beamformer(Hs)
    upper = float(np.vdot(incumbent, incumbent).real)
    incumbent, upper = _descend_incumbent(sca_beamformer, Hs, incumbent, upper)
    scaled = node_upper_bound(m0, x0, root.box, Hs) if np.min(np.abs(x0)) > MIN_SCALE else None
    if scaled is not None and scaled[0] < upper:
        upper, incumbent = scaled

    seq = 0
    heap: list[tuple[float, int, BnBNode]] = [(root.lower, seq, root)]
    lower = root.lower
    terminal_floor = math.inf
    trace = [(lower, upper)]
    node_count = 1
    iterations = 0
    status = BnBStatus.ITERATION_CAPPED

    def push(node: BnBNode):
        nonlocal seq
        if node.lower < upper * PRUNE_SLACK:
            seq += 1
            heapq.heappush(heap, (node.lower, seq, node))

    def try_incumbent(m_rel, x_rel, box):
        # lean inline version of node_upper_bound (same scaling + polish)
        nonlocal upper, incumbent
        mu = min(float(np.min(np.abs(x_rel))), 1.0)
        if mu <= MIN_SCALE:
            return
        m = m_rel / mu
        v = float(np.min(np.abs(m.conj() @ Hs)))
        if v <= 0.0:
            return
        if v < 1.0:
            m = m / v
        val = float(np.vdot(m, m).real)
        if val < upper:
            upper, incumbent = val, m

    while iterations < max_iter:
        if not heap:
            break
        _, _, node = heapq.heappop(heap)
        if node.lower >= upper * PRUNE_SLACK:
            # every remaining node is at least this bad
            heap.clear()
            break
        iterations += 1

        if not node.resolved:
            st, val, m_rel, x_rel = relax.bound(node.box, loosen=100.0)
            if st is QpStatus.OPTIMAL:
                node.lower = max(node.lower, val)
                node.relaxed_m, node.relaxed_x = m_rel, x_rel
                node.resolved = True
                try_incumbent(m_rel, x_rel, node.box)
                push(node)
                trace.append(_bounds(heap, terminal_floor, upper, trace))
                if _converged(trace[-1], eps):
                    status = BnBStatus.CONVERGED
                    break
                continue
            if st is QpStatus.INFEASIBLE:
                trace.append(_bounds(heap, terminal_floor, upper, trace))
                if _converged(trace[-1], eps):
                    status = BnBStatus.CONVERGED
                    break
                continue
            # still failing: fall through and branch on the inherited point

        k = select_branch_device(node.relaxed_x)
        if node.box[k].width < 1e-9:
            order = np.argsort(np.abs(node.relaxed_x))
            k = next((int(i) for i in order if node.box[int(i)].width >= 1e-9), -1)
            if k < 0:
                # box too small to split further; its bound stands forever
                terminal_floor = min(terminal_floor, node.lower)
                trace.append(_bounds(heap, terminal_floor, upper, trace))
                continue

        for child_box in geo.split_box(node.box, k):
            st, val, m_rel, x_rel = relax.bound(child_box)
            if st is QpStatus.NUMERICAL_FAILURE:
                st, val, m_rel, x_rel = relax.bound(child_box, loosen=10.0)
            node_count += 1
            if st is QpStatus.INFEASIBLE:
                continue
            if st is QpStatus.NUMERICAL_FAILURE:
                child = BnBNode(child_box, node.lower, node.relaxed_m,
                                node.relaxed_x, resolved=False)
                push(child)
                continue
            child = BnBNode(child_box, max(val, node.lower), m_rel, x_rel)
            try_incumbent(m_rel, x_rel, child_box)
            push(child)

        trace.append(_bounds(heap, terminal_floor, upper, trace))
        if _converged(trace[-1], eps):
            status = BnBStatus.CONVERGED
            break

    if not heap and status is not BnBStatus.CONVERGED:
        trace.append(_bounds(heap, terminal_floor, upper, trace))
        if _converged(trace[-1], eps):
            status = BnBStatus.CONVERGED

    # descend from the incumbent to its KKT point so the reported
    # objective is not a full eps above the certified optimum
    lower = trace[-1][0]
    incumbent, polished = _descend_incumbent(sca_beamformer, Hs, incumbent, upper)
    if polished < upper:
        upper = max(polished, lower)
        lower = min(lower, upper)
        trace.append((lower, upper))

    lower, upper = trace[-1]
    scale = gamma * gamma
    m_out = incumbent * gamma
    gains = np.abs(m_out.conj() @ H)
    if np.min(gains) < 1.0 - FEAS_SLACK:
        raise AssertionError("incumbent lost feasibility; scaling bug")
    return SolveReport(
        optimal_m=m_out,
        objective=upper * scale,
        lower=lower * scale,
        upper=upper * scale,
        iterations=iterations,
        node_count=node_count,
        status=status,
        trace=[(l * scale, u * scale) for l, u in trace],
    )


def _descend_incumbent(sca_beamformer, Hs, incumbent, upper):
    """Polish a feasible point with a few convex-concave rounds."""
    try:
        res = sca_beamformer(Hs, m0=incumbent, max_rounds=50)
    except Exception:
        return incumbent, upper
    if res.objective < upper and \
            float(np.min(np.abs(res.m.conj() @ Hs))) >= 1.0 - FEAS_SLACK:
        return res.m, res.objective
    return incumbent, upper


def _bounds(heap, terminal_floor, upper, trace):
    heap_min = heap[0][0] if heap else math.inf
    cand = min(heap_min, terminal_floor, upper * PRUNE_SLACK)
    lower = max(trace[-1][0], min(cand, upper))
    return (lower, upper)


def _converged(entry, eps) -> bool:
    lower, upper = entry
    return lower > 0.0 and (upper - lower) <= eps * lower
