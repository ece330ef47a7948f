"""Chamber-preserving theta schemes driven by Brownian increments.

One step of the drift-implicit theta scheme reads

    xhat_l = X_l + sigma(t_l, X_l) dB_l + b(t_l, X_l) dt
             + theta dt f(t_l, X_l),
    X_{l+1} solves  y = xhat_l + (1-theta) dt f(t_{l+1}, y),

where f is the singular repulsion drift for the exact variant (theta in
[0, 1/2), every state strictly inside the chamber by construction) or its
eps-capped version for the truncated variant (theta in [0, 1), cap level
eps_n = c sqrt(L dt) with c > 1, states may leave the chamber and the
first violation is recorded rather than raised).

The batched engine advances every path of a chunk in lockstep; per-path
arithmetic is elementwise, so results are independent of batch
composition, chunk size and thread budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .brownian import BrownianDriver, TimeGrid, coarsen_driver
from .coefficients import ZeroDrift
from .errors import (ChamberError, DimensionError, GridError, ParameterError,
                     PathSolverError)
from .model import ModelSpec, lipschitz_scale
from .roots import RootSystem
from .stepping import _certificate, _newton_batch

VARIANTS = ("exact", "truncated")


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme parameters; `c` is only read by the truncated variant."""

    variant: str
    theta: float
    n: int
    c: float = 1.1
    solver_tol: float = 1e-10
    max_iterations: int = 200

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.n < 1:
            raise GridError(f"need at least one step, got n={self.n}")
        hi = 0.5 if self.variant == "exact" else 1.0
        if not 0.0 <= self.theta < hi:
            raise ParameterError(
                f"theta must lie in [0, {hi}) for the {self.variant} variant, got {self.theta}")
        if self.variant == "truncated" and not self.c > 1.0:
            raise ParameterError(f"cap multiplier c must exceed 1, got {self.c}")
        if not self.solver_tol > 0.0:
            raise ParameterError("solver tolerance must be positive")
        if self.max_iterations < 1:
            raise ParameterError("need at least one solver iteration")


@dataclass(frozen=True)
class PathResult:
    """A single simulated path on the scheme's grid."""

    states: np.ndarray            # (n+1, d)
    times: np.ndarray             # (n+1,)
    in_chamber: np.ndarray        # (n+1,) bool
    first_violation_index: int | None
    iterations: np.ndarray        # (n,) solver iterations per step


class BatchPaths:
    """States and diagnostics of a batch run (internal to the engine)."""

    __slots__ = ("states", "store_stride", "exited", "first_violation",
                 "in_chamber", "iterations", "final")

    def __init__(self, states, store_stride, exited, first_violation,
                 in_chamber, iterations, final):
        self.states = states
        self.store_stride = store_stride
        self.exited = exited
        self.first_violation = first_violation
        self.in_chamber = in_chamber
        self.iterations = iterations
        self.final = final


def truncation_level(m: ModelSpec, cfg: SchemeConfig) -> float:
    """Cap level eps_n = c sqrt(L T / n); shrinks at the CLT rate so the
    capped drift stays a contraction with factor (1-theta)/c^2."""
    if cfg.variant != "truncated":
        raise ParameterError("cap level is only defined for the truncated variant")
    return cfg.c * math.sqrt(lipschitz_scale(m) * m.T / cfg.n)


def _k_grid(m: ModelSpec, times: np.ndarray) -> np.ndarray:
    per_orbit = np.stack([np.asarray(fn(times), dtype=float) for fn in m.k], axis=1)
    return per_orbit[:, m.rs.orbit_of]


def _closed_form_ok(rs: RootSystem) -> bool:
    return rs.dim == 1 and rs.n_roots == 1 and rs.matrix[0, 0] > 0.0


def run_batch(m: ModelSpec, cfg: SchemeConfig, increments: np.ndarray,
              store_stride: int = 1, record_flags: bool = False,
              record_iterations: bool = False) -> BatchPaths:
    """Advance a batch of paths; increments must be (paths, n, r) on the
    scheme's own grid."""
    inc = np.asarray(increments, dtype=float)
    if inc.ndim != 3 or inc.shape[1] != cfg.n or inc.shape[2] != m.brownian_dim:
        raise DimensionError(
            f"increments shape {inc.shape} incompatible with n={cfg.n}, r={m.brownian_dim}")
    npaths = inc.shape[0]
    grid = TimeGrid(cfg.n, m.T)
    dt = grid.dt
    times = grid.times
    rs = m.rs
    a = rs.matrix
    d = rs.dim
    kvg = _k_grid(m, times)
    truncated = cfg.variant == "truncated"
    eps = truncation_level(m, cfg) if truncated else None
    h = (1.0 - cfg.theta) * dt
    theta_dt = cfg.theta * dt
    zero_drift = isinstance(m.drift, ZeroDrift)
    closed_form = (not truncated) and _closed_form_ok(rs)

    if cfg.n % store_stride != 0:
        raise GridError(f"store stride {store_stride} does not divide n={cfg.n}")
    n_stored = cfg.n // store_stride
    states = np.empty((npaths, n_stored + 1, d))
    x = np.tile(m.xi_array, (npaths, 1))
    states[:, 0] = x
    exited = np.zeros(npaths, dtype=bool)
    first_violation = np.full(npaths, -1, dtype=np.int64)
    flags = np.ones((npaths, cfg.n + 1), dtype=bool) if record_flags else None
    iter_rec = np.zeros((npaths, cfg.n), dtype=np.int32) if record_iterations else None

    for l in range(cfg.n):
        t_l = float(times[l])
        db = inc[:, l]
        xhat = x + m.sigma.apply(t_l, x, db)
        if not zero_drift:
            xhat += m.drift.apply(t_l, x) * dt
        if cfg.theta > 0.0:
            p = x @ a.T
            if truncated:
                w = kvg[l] / np.maximum(eps, p)
            else:
                if p.min() <= 0.0:
                    raise PathSolverError(
                        "exact scheme state left the chamber (corrupted input?)",
                        step=l, path_ids=np.nonzero(p.min(axis=1) <= 0.0)[0].tolist())
                w = kvg[l] / p
            xhat += theta_dt * (w @ a)

        kv = kvg[l + 1]
        if truncated:
            m_star, _rho, _b0 = _certificate(rs, kv, h, eps, cfg.solver_tol)
            y = xhat.copy()
            for _ in range(m_star):
                py = y @ a.T
                y = xhat + h * ((kv / np.maximum(eps, py)) @ a)
            x = y
            if iter_rec is not None:
                iter_rec[:, l] = m_star
            pmin = (x @ a.T).min(axis=1)
            bad = pmin <= 0.0
            newly = bad & ~exited
            if np.any(newly):
                first_violation[newly] = l + 1
                exited |= newly
            if flags is not None:
                flags[:, l + 1] = ~bad
        elif closed_form:
            k1 = kv[0]
            xh = xhat[:, 0]
            x = ((xh + np.sqrt(xh * xh + 4.0 * h * k1)) / 2.0)[:, None]
            if iter_rec is not None:
                iter_rec[:, l] = 0
        else:
            y, iters, res, ok = _newton_batch(rs, kv, xhat, h,
                                              cfg.solver_tol, cfg.max_iterations)
            if not ok.all():
                bad_ids = np.nonzero(~ok)[0]
                raise PathSolverError(
                    f"implicit step failed for {bad_ids.size} path(s) at step {l + 1}",
                    step=l + 1, path_ids=bad_ids.tolist(),
                    best=y[bad_ids[0]], residual=float(res[bad_ids[0]]))
            x = y
            if iter_rec is not None:
                iter_rec[:, l] = iters

        if (l + 1) % store_stride == 0:
            states[:, (l + 1) // store_stride] = x

    return BatchPaths(states=states, store_stride=store_stride, exited=exited,
                      first_violation=first_violation, in_chamber=flags,
                      iterations=iter_rec, final=x)


def _single_path(m: ModelSpec, cfg: SchemeConfig, driver: BrownianDriver) -> PathResult:
    if driver.r != m.brownian_dim:
        raise DimensionError(
            f"driver dimension {driver.r} != model Brownian dimension {m.brownian_dim}")
    if driver.T != m.T:
        raise GridError(f"driver horizon {driver.T} != model horizon {m.T}")
    inc = coarsen_driver(driver, cfg.n)[None, :, :]
    batch = run_batch(m, cfg, inc, record_flags=True, record_iterations=True)
    fv = int(batch.first_violation[0])
    return PathResult(states=batch.states[0],
                      times=TimeGrid(cfg.n, m.T).times,
                      in_chamber=batch.in_chamber[0],
                      first_violation_index=None if fv < 0 else fv,
                      iterations=batch.iterations[0])


def theta_em_path(m: ModelSpec, cfg: SchemeConfig, driver: BrownianDriver) -> PathResult:
    """Exact-variant path; every state is strictly inside the chamber."""
    if cfg.variant != "exact":
        raise ParameterError("theta_em_path runs the exact variant; got " + cfg.variant)
    return _single_path(m, cfg, driver)


def truncated_theta_em_path(m: ModelSpec, cfg: SchemeConfig,
                            driver: BrownianDriver) -> PathResult:
    """Capped-variant path; chamber violations are recorded, never raised."""
    if cfg.variant != "truncated":
        raise ParameterError("truncated_theta_em_path runs the truncated variant; got "
                             + cfg.variant)
    return _single_path(m, cfg, driver)


def audit_batch(m: ModelSpec, cfg: SchemeConfig, increments: np.ndarray,
                states: np.ndarray) -> np.ndarray:
    """Residuals of the defining step equations along stored paths.

    Returns (paths, n) with |X_{l+1} - xhat_l - h f(t_{l+1}, X_{l+1})|;
    reuses the recorded increments, so it is an independent check that the
    engine solved the right equations.
    """
    inc = np.asarray(increments, dtype=float)
    st = np.asarray(states, dtype=float)
    grid = TimeGrid(cfg.n, m.T)
    dt = grid.dt
    times = grid.times
    a = m.rs.matrix
    kvg = _k_grid(m, times)
    truncated = cfg.variant == "truncated"
    eps = truncation_level(m, cfg) if truncated else None
    h = (1.0 - cfg.theta) * dt
    zero_drift = isinstance(m.drift, ZeroDrift)
    out = np.empty((st.shape[0], cfg.n))
    for l in range(cfg.n):
        t_l = float(times[l])
        x = st[:, l]
        xhat = x + m.sigma.apply(t_l, x, inc[:, l])
        if not zero_drift:
            xhat += m.drift.apply(t_l, x) * dt
        if cfg.theta > 0.0:
            p = x @ a.T
            w = kvg[l] / (np.maximum(eps, p) if truncated else p)
            xhat += cfg.theta * dt * (w @ a)
        y = st[:, l + 1]
        py = y @ a.T
        wy = kvg[l + 1] / (np.maximum(eps, py) if truncated else py)
        out[:, l] = np.linalg.norm(y - xhat - h * (wy @ a), axis=1)
    return out


def audit_path(m: ModelSpec, cfg: SchemeConfig, driver: BrownianDriver,
               result: PathResult) -> np.ndarray:
    """Per-step equation residuals of a single PathResult."""
    inc = coarsen_driver(driver, cfg.n)[None, :, :]
    return audit_batch(m, cfg, inc, result.states[None, :, :])[0]
