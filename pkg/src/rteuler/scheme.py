"""Explicit time steppers: randomized tamed Euler and its comparison arms.

One step over cell (t_{k-1}, t_k] advances

    x <- x + mu*(xi_k, x) dt + sigma*(t_{k-1}, x) dW_k
           + sum_{jumps in cell} gamma*(t_{k-1}, x, z_j)
           - intensity * dt * E_Z[gamma*(t_{k-1}, x, Z)]

where starred coefficients are tamed (or not) and the drift time xi_k is the
cell's randomized point (or its left endpoint) depending on the variant. The
jump coefficient is always evaluated at the cell's left time and left state:
jumps inside a cell do not update the evaluation state mid-cell, and multiple
jumps are summed in time order. The compensator term is skipped exactly when
the model declares a zero-mean jump law.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import TimeGrid
from .markov import MarkovPath
from .model import CoefficientSet, EnvState
from .rng import PathDraw
from .taming import TamingConfig, tame

log = logging.getLogger(__name__)

VARIANTS = ("randomized_tamed", "tamed", "classical", "randomized_untamed")


def variant_is_randomized(variant: str) -> bool:
    return variant in ("randomized_tamed", "randomized_untamed")


def variant_is_tamed(variant: str) -> bool:
    return variant in ("randomized_tamed", "tamed")


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme variant, step count, and taming exponents.

    ``taming`` is ignored by the untamed variants; when omitted it defaults to
    the standard exponents built from the model's growth exponent.
    """

    variant: str
    n: int
    taming: TamingConfig | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.n < 1:
            raise ValueError("step count must be >= 1")
        if self.taming is not None and self.taming.n != self.n:
            raise ValueError("taming config step count differs from scheme step count")


class DivergedPathError(RuntimeError):
    """A path produced a non-finite state; carries the step index and state."""

    def __init__(self, step_index: int, state):
        self.step_index = step_index
        self.state = np.asarray(state)
        super().__init__(f"non-finite state at step {step_index}: {self.state}")


@dataclass
class Trajectory:
    grid: TimeGrid
    states: np.ndarray  # (n+1, d)
    regimes: np.ndarray | None = None  # (n+1,) regime labels when switching

    def __post_init__(self):
        if self.states.shape[0] != self.grid.n + 1:
            raise ValueError("state count must be grid.n + 1")

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


def effective_coefficients(model: CoefficientSet, cfg: SchemeConfig) -> CoefficientSet:
    """The coefficients the scheme actually evaluates under cfg's variant."""
    if not variant_is_tamed(cfg.variant):
        return model
    tcfg = cfg.taming or TamingConfig(n=cfg.n, zeta=model.zeta)
    return tame(model, tcfg)


def step(
    x: np.ndarray,
    k: int,
    grid: TimeGrid,
    coeffs: CoefficientSet,
    dW: np.ndarray,
    cell_jumps,
    phi: float | None = None,
    intensity: float = 0.0,
    env: EnvState | None = None,
) -> np.ndarray:
    """Advance one path over cell k (1-based).

    ``coeffs`` are the effective (already tamed, if applicable) coefficients;
    ``dW`` is the Brownian increment over the cell, ``cell_jumps`` the list of
    (time, mark) pairs with time in (t_{k-1}, t_k], in time order, and ``phi``
    the drift randomizer (None evaluates the drift at the left endpoint).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dW = np.atleast_1d(np.asarray(dW, dtype=float))
    t_left = grid.point(k - 1)
    t_drift = grid.xi(k, phi) if phi is not None else t_left
    dt = grid.dt

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = x + coeffs.drift(t_drift, x, env) * dt
        out = out + coeffs.diffusion(t_left, x, env) @ dW
        if intensity > 0.0 and not coeffs.zero_mean_jump:
            if coeffs.jump_compensator_mean is None:
                raise ValueError("compensator mean required for non-zero-mean jump models")
            out = out - intensity * dt * coeffs.jump_compensator_mean(t_left, x, env)
        for _tau, z in cell_jumps:
            out = out + coeffs.jump(t_left, x, np.atleast_1d(z), env)
    if not np.all(np.isfinite(out)):
        raise DivergedPathError(k, out)
    return out


def _group_jumps_by_cell(grid: TimeGrid, times: np.ndarray, marks: np.ndarray):
    """Map 1-based cell index -> list of (time, mark) pairs in time order."""
    cells = grid.cell_of(times)
    grouped: dict[int, list] = {}
    for c, tau, z in zip(cells, times, marks):
        grouped.setdefault(int(c), []).append((float(tau), z))
    return grouped


def simulate_path(
    model: CoefficientSet,
    cfg: SchemeConfig,
    draw: PathDraw,
    intensity: float = 0.0,
    env: EnvState | None = None,
) -> Trajectory:
    """Run the scheme over the whole grid for a single path's draw."""
    grid = TimeGrid(cfg.n, model.horizon)
    coeffs = effective_coefficients(model, cfg)
    randomized = variant_is_randomized(cfg.variant)
    dW = draw.increments_for(cfg.n)
    phis = draw.phis.get(cfg.n)
    if randomized and phis is None:
        raise ValueError(f"draw lacks randomizers for level n={cfg.n}")
    jumps = _group_jumps_by_cell(grid, draw.jump_times, draw.jump_marks)

    states = np.empty((cfg.n + 1, model.dim_state))
    states[0] = draw.x0
    x = draw.x0
    for k in range(1, cfg.n + 1):
        x = step(
            x,
            k,
            grid,
            coeffs,
            dW[k - 1],
            jumps.get(k, ()),
            phi=float(phis[k - 1]) if randomized else None,
            intensity=intensity,
            env=env,
        )
        states[k] = x
    return Trajectory(grid=grid, states=states)


@dataclass
class BatchResult:
    states: np.ndarray  # (B, n+1, d)
    diverged_at: np.ndarray  # (B,) first non-finite step index, -1 if none

    @property
    def diverged(self) -> np.ndarray:
        return self.diverged_at >= 0


def _flatten_jump_events(grid: TimeGrid, draws: list[PathDraw], mark_dim: int):
    """Per-cell sorted event arrays for a batch: (cells, path_idx, marks)."""
    cells, paths, marks = [], [], []
    for b, d in enumerate(draws):
        if len(d.jump_times):
            c = grid.cell_of(d.jump_times)
            cells.append(c)
            paths.append(np.full(len(c), b))
            marks.append(d.jump_marks)
    if not cells:
        return (np.empty(0, int), np.empty(0, int), np.empty((0, mark_dim)))
    cells = np.concatenate(cells)
    paths = np.concatenate(paths)
    marks = np.concatenate(marks)
    # stable sort by cell keeps the per-path time order within each cell
    order = np.argsort(cells, kind="stable")
    return cells[order], paths[order], marks[order]


def simulate_paths(
    model: CoefficientSet,
    cfg: SchemeConfig,
    draws: list[PathDraw],
    intensity: float = 0.0,
    env: EnvState | None = None,
) -> BatchResult:
    """Vectorized lockstep simulation of many independent paths.

    Semantically equivalent to ``simulate_path`` per draw, but steps all paths
    together; diverged paths are recorded (first bad step index) instead of
    raising, and their later states are left non-finite.
    """
    grid = TimeGrid(cfg.n, model.horizon)
    coeffs = effective_coefficients(model, cfg)
    randomized = variant_is_randomized(cfg.variant)
    n, d, B = cfg.n, model.dim_state, len(draws)

    dW = np.stack([dr.increments_for(n) for dr in draws])  # (B, n, m)
    if randomized:
        phis = np.stack([dr.phis[n] for dr in draws])  # (B, n)
    x0 = np.stack([dr.x0 for dr in draws])  # (B, d)
    ev_cells, ev_paths, ev_marks = _flatten_jump_events(grid, draws, model.mark_dim)
    compensate = (
        intensity > 0.0
        and not coeffs.zero_mean_jump
        and coeffs.jump_compensator_mean is not None
    )
    if intensity > 0.0 and not coeffs.zero_mean_jump and coeffs.jump_compensator_mean is None:
        raise ValueError("compensator mean required for non-zero-mean jump models")

    states = np.empty((B, n + 1, d))
    states[:, 0] = x0
    x = x0
    dt = grid.dt
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(1, n + 1):
            t_left = grid.point(k - 1)
            if randomized:
                t_drift = (t_left + dt * phis[:, k - 1])[:, None]
            else:
                t_drift = t_left
            out = x + coeffs.drift(t_drift, x, env) * dt
            sig = coeffs.diffusion(t_left, x, env)
            out = out + np.einsum("...dm,...m->...d", sig, dW[:, k - 1])
            if compensate:
                out = out - intensity * dt * coeffs.jump_compensator_mean(t_left, x, env)
            lo = np.searchsorted(ev_cells, k, side="left")
            hi = np.searchsorted(ev_cells, k, side="right")
            if hi > lo:
                idx = ev_paths[lo:hi]
                gam = coeffs.jump(t_left, x[idx], ev_marks[lo:hi], env)
                np.add.at(out, idx, gam)
            states[:, k] = out
            x = out

    finite = np.isfinite(states).all(axis=2)  # (B, n+1)
    bad = ~finite
    diverged_at = np.where(bad.any(axis=1), bad.argmax(axis=1), -1)
    return BatchResult(states=states, diverged_at=diverged_at)


def simulate_sdde_switching(
    models_by_regime: dict[int, CoefficientSet],
    cfg: SchemeConfig,
    draw: PathDraw,
    delay: float,
    initial_segment,
    chain: MarkovPath,
    intensity: float = 0.0,
) -> Trajectory:
    """Scheme for delay equations with Markovian regime switching.

    At each cell the active regime is read at the cell's left grid point, the
    delayed state at the left grid point shifted by the delay, and all three
    coefficients share the single taming denominator built from the current
    state. The delayed time for s <= delay falls before 0 and is served by
    ``initial_segment`` (a constant vector or a callable of time, indexed so
    that segment(t) is the state at time t - delay).
    """
    some = next(iter(models_by_regime.values()))
    grid = TimeGrid(cfg.n, some.horizon)
    if delay < 0.0:
        raise ValueError("delay must be >= 0")
    if chain.horizon < some.horizon:
        raise ValueError("regime chain must cover the full horizon")

    lag = int(round(delay / grid.dt))
    if abs(lag * grid.dt - delay) > 1e-12 * max(grid.dt, 1.0):
        log.warning(
            "delay %g is not a multiple of dt=%g; snapped to %g",
            delay, grid.dt, lag * grid.dt,
        )

    if callable(initial_segment):
        segment = initial_segment
    else:
        const = np.atleast_1d(np.asarray(initial_segment, dtype=float))
        segment = lambda t: const

    effective = {r: effective_coefficients(m, cfg) for r, m in models_by_regime.items()}
    randomized = variant_is_randomized(cfg.variant)
    dW = draw.increments_for(cfg.n)
    phis = draw.phis.get(cfg.n)
    if randomized and phis is None:
        raise ValueError(f"draw lacks randomizers for level n={cfg.n}")
    jumps = _group_jumps_by_cell(grid, draw.jump_times, draw.jump_marks)

    d = some.dim_state
    states = np.empty((cfg.n + 1, d))
    states[0] = draw.x0
    regimes = np.empty(cfg.n + 1, dtype=int)
    x = draw.x0
    for k in range(1, cfg.n + 1):
        t_left = grid.point(k - 1)
        alpha = chain.regime_at(t_left)
        regimes[k - 1] = alpha
        if alpha not in effective:
            raise KeyError(f"no model registered for regime {alpha}")
        back = k - 1 - lag
        delayed = states[back] if back >= 0 else np.atleast_1d(segment(t_left))
        env = EnvState(regime=alpha, delayed_state=delayed)
        x = step(
            x,
            k,
            grid,
            effective[alpha],
            dW[k - 1],
            jumps.get(k, ()),
            phi=float(phis[k - 1]) if randomized else None,
            intensity=intensity,
            env=env,
        )
        states[k] = x
    regimes[cfg.n] = chain.regime_at(grid.point(cfg.n))
    return Trajectory(grid=grid, states=states, regimes=regimes)
