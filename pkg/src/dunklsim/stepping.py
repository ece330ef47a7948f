"""Implicit step solvers for the chamber-repulsion drift.

One scheme step must solve, for a given predictor `xhat` and weight h > 0,

    y = xhat + h * sum_alpha k_alpha / <alpha, y> alpha,     y in W.

This is the gradient equation of the strictly convex barrier

    phi(y) = |y - xhat|^2 / 2 - h * sum_alpha k_alpha log <alpha, y>,

so the chamber solution exists and is unique for every xhat in R^d.  The
exact solver runs damped Newton on phi with a feasibility-capped line
search.  The capped solver replaces 1/<alpha,y> by its eps-cap, which
makes the map y -> xhat + h f_eps(y) a global contraction whenever
h < eps^2 / L (L = sum k_alpha |alpha|^2); it iterates a number of times
fixed a priori by the geometric error certificate

    |y_star - y_m| <= eps * sum(k |alpha|) / (L (1 - rho)) * rho^m,
    rho = L h / eps^2.

Batched variants advance many paths in lockstep; per-path results are
identical to solo execution, so ensemble results never depend on batch
composition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChamberError, DimensionError, ParameterError, SolverError
from .roots import RootSystem

# Armijo slope fraction and the feasibility fraction of the distance to
# the nearest wall kept by the line search.
_ARMIJO = 1e-4
_WALL_FRACTION = 0.95
_FIXED_POINT_CAP = 200_000


@dataclass(frozen=True)
class SolveReport:
    """Certified result of one implicit step."""

    y: np.ndarray
    iterations: int
    residual: float
    wall_distance: float


def closed_form_step_1d(xhat: float, h: float, k: float) -> float:
    """Positive solution of y = xhat + h k / y:  (xhat + sqrt(xhat^2 + 4 h k)) / 2."""
    if h < 0.0:
        raise ParameterError(f"step weight must be nonnegative, got {h}")
    if not k > 0.0:
        raise ParameterError(f"repulsion strength must be positive, got {k}")
    if h == 0.0:
        if xhat <= 0.0:
            raise ChamberError("zero-weight step needs a positive predictor")
        return float(xhat)
    return float((xhat + math.sqrt(xhat * xhat + 4.0 * h * k)) / 2.0)


def _per_root_k(rs: RootSystem, k_orbit) -> np.ndarray:
    k_orbit = np.asarray(k_orbit, dtype=float)
    if k_orbit.shape != (rs.n_orbits,):
        raise DimensionError(
            f"need one strength per orbit ({rs.n_orbits}), got shape {k_orbit.shape}")
    if np.any(k_orbit <= 0.0):
        raise ParameterError("repulsion strengths must be positive")
    return k_orbit[rs.orbit_of]


def solve_exact_step(rs: RootSystem, k_orbit, xhat, h: float, tol: float = 1e-10,
                     max_iterations: int = 200, initial=None) -> SolveReport:
    """Solve the implicit step exactly (damped Newton on the barrier).

    `k_orbit` holds one positive strength per orbit (already evaluated at
    the step's time).  The residual of the report is
    |y - xhat - h f_k(y)| <= tol.  Raises SolverError (carrying the best
    iterate) if the tolerance is not certified within `max_iterations`.
    """
    if not h > 0.0:
        raise ParameterError(f"step weight must be positive, got {h}")
    kv = _per_root_k(rs, k_orbit)
    xhat = np.asarray(xhat, dtype=float)
    if xhat.shape != (rs.dim,):
        raise DimensionError(f"predictor shape {xhat.shape} != ({rs.dim},)")
    y0 = None if initial is None else np.asarray(initial, dtype=float)[None, :]
    y, iters, res, ok = _newton_batch(rs, kv, xhat[None, :], h, tol, max_iterations, y0)
    wall = float(rs.pairings(y[0]).min())
    if not ok[0]:
        raise SolverError(
            f"Newton did not certify residual {tol:g} in {max_iterations} iterations",
            best=y[0], residual=float(res[0]), iterations=int(iters[0]))
    return SolveReport(y=y[0], iterations=int(iters[0]), residual=float(res[0]),
                       wall_distance=wall)


def solve_truncated_step(rs: RootSystem, k_orbit, xhat, h: float, eps: float,
                         tol: float = 1e-10) -> SolveReport:
    """Solve the capped step by fixed-point iteration with an a priori count.

    Requires h < eps^2 / L strictly (L = sum k |alpha|^2), which makes the
    iteration a contraction with factor rho = L h / eps^2.  The iteration
    count is the smallest m with geometric bound <= tol, so the report's
    residual is certified without any step-difference heuristics.
    """
    kv = _per_root_k(rs, k_orbit)
    xhat = np.asarray(xhat, dtype=float)
    if xhat.shape != (rs.dim,):
        raise DimensionError(f"predictor shape {xhat.shape} != ({rs.dim},)")
    y, m_star, bound = _fixed_point_batch(rs, kv, xhat[None, :], h, eps, tol)
    res = float(np.linalg.norm(
        y[0] - xhat - h * ((kv / np.maximum(eps, rs.pairings(y[0]))) @ rs.matrix)))
    return SolveReport(y=y[0], iterations=m_star, residual=res,
                       wall_distance=float(rs.pairings(y[0]).min()))


def step_residual(rs: RootSystem, k_orbit, xhat, h: float, y, eps: float | None = None) -> float:
    """|y - xhat - h f(y)| with the exact drift (eps None) or capped drift."""
    kv = _per_root_k(rs, k_orbit)
    xhat = np.asarray(xhat, dtype=float)
    y = np.asarray(y, dtype=float)
    p = rs.pairings(y)
    if eps is None:
        if np.min(p) <= 0.0:
            raise ChamberError("exact-step residual needs y strictly inside the chamber")
        w = kv / p
    else:
        if not eps > 0.0:
            raise ParameterError(f"cap level must be positive, got {eps}")
        w = kv / np.maximum(eps, p)
    return float(np.linalg.norm(y - xhat - h * (w @ rs.matrix), axis=-1))


def fixed_point_certificate(rs: RootSystem, k_orbit, h: float, eps: float,
                            tol: float) -> tuple[int, float, float]:
    """Iteration count, contraction factor and initial bound of the capped
    solver: smallest m with B0 * rho^m <= tol."""
    return _certificate(rs, _per_root_k(rs, k_orbit), h, eps, tol)


# ---------------------------------------------------------------------------
# batched cores


def _newton_batch(rs: RootSystem, kv: np.ndarray, xhat: np.ndarray, h: float,
                  tol: float, max_iterations: int, initial: np.ndarray | None = None):
    """Damped Newton on the barrier for a batch of predictors (m, d).

    Returns (y, iterations, residuals, converged).  All updates are
    elementwise per path; paths that have converged are frozen.
    """
    a = rs.matrix
    m, d = xhat.shape
    scale = float(np.sum(kv * rs.norms_sq))
    target = math.sqrt(h * scale) / 2.0

    if initial is not None:
        y = np.broadcast_to(np.asarray(initial, dtype=float), xhat.shape).copy()
        if np.any((y @ a.T).min(axis=1) <= 0.0):
            raise ChamberError("initial iterate must be strictly inside the chamber")
    else:
        # start from the predictor, pushed along the interior direction
        # until the smallest pairing reaches the step's natural scale
        y = xhat.copy()
        p = y @ a.T
        need = p.min(axis=1) < target
        if np.any(need):
            eta = rs.interior_direction
            eta_p = a @ eta
            s = np.max((target - p[need]) / eta_p[None, :], axis=1)
            y[need] = y[need] + s[:, None] * eta[None, :]

    outer = np.einsum("ri,rj->rij", a, a)  # (n_roots, d, d)
    iters = np.zeros(m, dtype=int)
    res = np.full(m, np.inf)
    active = np.ones(m, dtype=bool)

    for _ in range(max_iterations):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        ya = y[idx]
        pa = ya @ a.T
        wa = kv / pa
        grad = ya - xhat[idx] - h * (wa @ a)
        r = np.sqrt(np.sum(grad * grad, axis=1))
        res[idx] = r
        done = r <= tol
        if np.any(done):
            active[idx[done]] = False
            keep = ~done
            idx = idx[keep]
            if idx.size == 0:
                break
            ya, pa, wa, grad, r = ya[keep], pa[keep], wa[keep], grad[keep], r[keep]
        curv = kv / (pa * pa)
        hess = np.eye(d)[None] + h * np.einsum("mr,rij->mij", curv, outer)
        step = _solve_spd(hess, -grad)

        # stay strictly inside: cap at a fraction of the distance to the wall
        adotstep = step @ a.T
        with np.errstate(divide="ignore"):
            ratio = np.where(adotstep < 0.0, -pa / adotstep, np.inf)
        t = np.minimum(1.0, _WALL_FRACTION * ratio.min(axis=1))

        phi0 = 0.5 * np.sum((ya - xhat[idx]) ** 2, axis=1) - h * np.sum(kv * np.log(pa), axis=1)
        slope = np.sum(grad * step, axis=1)
        accepted = np.zeros(idx.size, dtype=bool)
        ycand = ya.copy()
        for _ls in range(60):
            trial = ya + t[:, None] * step
            ptrial = trial @ a.T
            feas = ptrial.min(axis=1) > 0.0
            phi1 = np.where(
                feas,
                0.5 * np.sum((trial - xhat[idx]) ** 2, axis=1)
                - h * np.sum(kv * np.log(np.maximum(ptrial, 1e-300)), axis=1),
                np.inf)
            # near the minimizer phi decrements fall below the floating-point
            # resolution of phi itself; a strict residual decrease (computed
            # on ~tol-sized numbers with full precision) then stands in for
            # the Armijo test
            gtrial = trial - xhat[idx] - h * ((kv / np.where(ptrial > 0.0, ptrial, np.inf)) @ a)
            rtrial = np.sqrt(np.sum(gtrial * gtrial, axis=1))
            ok = ~accepted & feas & (
                (phi1 <= phi0 + _ARMIJO * t * slope)
                | (rtrial <= (1.0 - _ARMIJO * t) * r))
            ycand[ok] = trial[ok]
            accepted |= ok
            if accepted.all():
                break
            t = np.where(accepted, t, t * 0.5)
        y[idx] = ycand
        iters[idx] += 1

    # refresh residuals for paths that converged on the last sweep
    idx = np.nonzero(active)[0]
    if idx.size:
        pa = y[idx] @ a.T
        grad = y[idx] - xhat[idx] - h * ((kv / pa) @ a)
        res[idx] = np.sqrt(np.sum(grad * grad, axis=1))
        active[idx] = res[idx] > tol
    return y, iters, res, ~active


def _solve_spd(hess: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve small SPD systems per path; closed forms for d <= 2."""
    d = hess.shape[-1]
    if d == 1:
        return rhs / hess[:, 0, 0:1]
    if d == 2:
        a, b = hess[:, 0, 0], hess[:, 0, 1]
        c = hess[:, 1, 1]
        det = a * c - b * b
        out = np.empty_like(rhs)
        out[:, 0] = (c * rhs[:, 0] - b * rhs[:, 1]) / det
        out[:, 1] = (a * rhs[:, 1] - b * rhs[:, 0]) / det
        return out
    return np.linalg.solve(hess, rhs[..., None])[..., 0]


def _fixed_point_batch(rs: RootSystem, kv: np.ndarray, xhat: np.ndarray, h: float,
                       eps: float, tol: float):
    """Capped fixed-point iteration, certificate-driven count, batch (m, d)."""
    m_star, _rho, b0 = _certificate(rs, kv, h, eps, tol)
    a = rs.matrix
    y = xhat.copy()
    for _ in range(m_star):
        p = y @ a.T
        w = kv / np.maximum(eps, p)
        y = xhat + h * (w @ a)
    return y, m_star, b0


def _certificate(rs: RootSystem, kv: np.ndarray, h: float, eps: float,
                 tol: float) -> tuple[int, float, float]:
    if not eps > 0.0:
        raise ParameterError(f"cap level must be positive, got {eps}")
    if not h > 0.0:
        raise ParameterError(f"step weight must be positive, got {h}")
    scale = float(np.sum(kv * rs.norms_sq))
    rho = scale * h / (eps * eps)
    if not rho < 1.0:
        raise ParameterError(
            f"capped step needs h < eps^2/L strictly (contraction {rho:g} >= 1)")
    b0 = eps * float(np.sum(kv * np.sqrt(rs.norms_sq))) / (scale * (1.0 - rho))
    if b0 <= tol:
        return 0, rho, b0
    m = int(math.ceil(math.log(tol / b0) / math.log(rho)))
    if m > _FIXED_POINT_CAP:
        raise SolverError(
            f"certificate needs {m} iterations (> {_FIXED_POINT_CAP}); "
            "loosen tol or the contraction factor")
    return max(m, 0), rho, b0
