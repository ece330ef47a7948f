"""Time grids and reproducible Brownian increment drivers.

Every path owns a counter-based stream keyed by (master_seed, path_id)
through the Philox bit generator, so a path's increments depend only on
that pair, never on scheduling, batching or thread budget.  Increments are
generated once on the finest grid; coarser grids are obtained by exact
pairwise block sums, which makes coupled multi-resolution runs telescope
exactly (the sum of all coarse increments is bitwise the pairwise sum of
all fine ones for power-of-two factors).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridError, ParameterError

_U64 = 2 ** 64


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_n = T."""

    n: int
    T: float

    def __post_init__(self):
        if self.n < 1:
            raise GridError(f"grid needs at least one step, got n={self.n}")
        if not self.T > 0.0:
            raise ParameterError(f"horizon must be positive, got {self.T}")

    @property
    def dt(self) -> float:
        return self.T / self.n

    def t(self, i) -> float | np.ndarray:
        return np.asarray(i) * (self.T / self.n)

    @cached_property
    def times(self) -> np.ndarray:
        v = np.arange(self.n + 1) * (self.T / self.n)
        v.flags.writeable = False
        return v


def _check_seed(name: str, value: int) -> int:
    if not isinstance(value, (int, np.integer)):
        raise ParameterError(f"{name} must be an integer, got {type(value).__name__}")
    if not 0 <= int(value) < _U64:
        raise ParameterError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return int(value)


def path_rng(master_seed: int, path_id: int) -> np.random.Generator:
    """The per-path generator: Philox keyed by (master_seed, path_id)."""
    key = np.array([_check_seed("master_seed", master_seed),
                    _check_seed("path_id", path_id)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class BrownianDriver:
    """Increments of an r-dimensional Brownian motion on the finest grid."""

    r: int
    finest_n: int
    T: float
    master_seed: int
    path_id: int
    increments: np.ndarray  # (finest_n, r)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(n=self.finest_n, T=self.T)


def make_brownian(r: int, finest_n: int, T: float, master_seed: int,
                  path_id: int) -> BrownianDriver:
    """Draw the path's increments: N(0, T/finest_n) per component."""
    if r < 1:
        raise ParameterError(f"Brownian dimension must be >= 1, got {r}")
    grid = TimeGrid(n=finest_n, T=T)
    rng = path_rng(master_seed, path_id)
    inc = rng.standard_normal((finest_n, r)) * np.sqrt(grid.dt)
    inc.flags.writeable = False
    return BrownianDriver(r=r, finest_n=finest_n, T=T,
                          master_seed=int(master_seed), path_id=int(path_id),
                          increments=inc)


def batch_increments(r: int, finest_n: int, T: float, master_seed: int,
                     path_ids: np.ndarray) -> np.ndarray:
    """Increments for many paths stacked as (m, finest_n, r)."""
    grid = TimeGrid(n=finest_n, T=T)
    scale = np.sqrt(grid.dt)
    out = np.empty((len(path_ids), finest_n, r))
    for i, pid in enumerate(path_ids):
        out[i] = path_rng(master_seed, int(pid)).standard_normal((finest_n, r))
    out *= scale
    return out


def coarsen(increments: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive groups of `factor` increments (pairwise within groups).

    `factor` must divide the number of increments.  For power-of-two
    factors composition is exact: coarsening by f1 then f2 is bitwise the
    same as coarsening by f1*f2.
    """
    inc = np.asarray(increments)
    n = inc.shape[-2]
    if factor < 1 or n % factor != 0:
        raise GridError(f"factor {factor} does not divide {n} increments")
    if factor == 1:
        return inc.copy()
    shape = inc.shape[:-2] + (n // factor, factor, inc.shape[-1])
    groups = inc.reshape(shape)
    while groups.shape[-2] > 1:
        if groups.shape[-2] % 2:
            head = groups[..., 0::2, :][..., :-1, :] + groups[..., 1::2, :]
            groups = np.concatenate([head, groups[..., -1:, :]], axis=-2)
        else:
            groups = groups[..., 0::2, :] + groups[..., 1::2, :]
    return groups[..., 0, :]


def coarsen_driver(driver: BrownianDriver, n: int) -> np.ndarray:
    """Driver increments on the coarser grid with n steps (n | finest_n)."""
    if driver.finest_n % n != 0:
        raise GridError(f"{n} steps do not nest inside {driver.finest_n}")
    return coarsen(driver.increments, driver.finest_n // n)
