"""Strong-error convergence studies on coupled path ladders.

For every path one draw is built at the reference resolution; the reference
trajectory and all coarse levels consume the same Brownian and jump
realizations (by exact increment coarsening and per-cell jump assignment),
while the drift randomizers are independent per level. Errors are reported as
(E|x_ref - x_n|^p)^(1/p) at the terminal time (or the max over the coarse
grid), with batch-means standard errors.

Paths are processed in fixed-size blocks by path index; blocks are the unit of
parallelism and results are reduced in block order, so output is byte-stable
under any worker count.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import CoefficientSet, build_model
from .rng import JumpModel, make_path_draw, normal_marks
from .scheme import (
    SchemeConfig,
    VARIANTS,
    simulate_paths,
    variant_is_randomized,
    variant_is_tamed,
)
from .taming import TamingConfig, denominator

ERROR_TIMES = ("terminal", "max_over_grid")


@dataclass(frozen=True)
class StudyConfig:
    """Everything a convergence study needs; a pure function of this config
    (seed included) determines the report bytes exactly."""

    model: str = "double-well"
    model_params: dict = field(default_factory=dict)
    x0: float | tuple = 2.0
    variants: tuple[str, ...] = ("randomized_tamed",)
    reference_variant: str = "randomized_untamed"
    levels: tuple[int, ...] = (64, 128, 256, 512, 1024, 2048)
    reference_n: int = 8192
    num_paths: int = 2000
    p_list: tuple[float, ...] = (1, 2, 3, 4)
    error_time: str = "terminal"
    base_seed: int = 0
    intensity: float = 1.0
    taming_n_power: float = 0.5
    taming_x_power: float | None = None
    block_size: int = 250
    n_batches: int = 20

    def __post_init__(self):
        if not self.levels:
            raise ValueError("levels must be nonempty")
        if any(n < 1 for n in self.levels):
            raise ValueError("levels must be positive step counts")
        if self.reference_n <= max(self.levels):
            raise ValueError("reference_n must exceed every level")
        for n in self.levels:
            if self.reference_n % n != 0:
                raise ValueError(f"reference_n {self.reference_n} not divisible by level {n}")
        for v in self.variants + (self.reference_variant,):
            if v not in VARIANTS:
                raise ValueError(f"unknown scheme variant {v!r}")
        if self.error_time not in ERROR_TIMES:
            raise ValueError(f"error_time must be one of {ERROR_TIMES}")
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if not self.p_list or any(p < 1 for p in self.p_list):
            raise ValueError("p_list entries must be >= 1")
        if self.intensity < 0.0:
            raise ValueError("intensity must be >= 0")

    def scheme_config(self, variant: str, n: int) -> SchemeConfig:
        taming = None
        if variant_is_tamed(variant):
            model = build_model(self.model, self.model_params)
            taming = TamingConfig(
                n=n,
                zeta=model.zeta,
                n_power=self.taming_n_power,
                x_power=self.taming_x_power,
            )
        return SchemeConfig(variant=variant, n=n, taming=taming)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float


def fit_rate(points) -> RateFit:
    """Ordinary least squares of log2(error) on log2(dt).

    The slope is the empirical strong convergence rate; residual is the sum of
    squared log2 residuals.
    """
    pts = [(float(dt), float(e)) for dt, e in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points to fit a rate")
    if any(e <= 0.0 or dt <= 0.0 for dt, e in pts):
        raise ValueError("rate fit requires positive step sizes and errors")
    x = np.log2([dt for dt, _ in pts])
    y = np.log2([e for _, e in pts])
    a = np.vstack([x, np.ones_like(x)]).T
    coef, res, _rank, _sv = np.linalg.lstsq(a, y, rcond=None)
    residual = float(res[0]) if res.size else 0.0
    return RateFit(slope=float(coef[0]), intercept=float(coef[1]), residual=residual)


@dataclass
class ErrorRow:
    dt: float
    p: float
    error: float
    stderr: float
    diverged_frac: float

    @property
    def usable(self) -> bool:
        return self.diverged_frac <= 0.5 and math.isfinite(self.error) and self.error >= 0.0


@dataclass
class ErrorReport:
    variant: str
    rows: list[ErrorRow]
    slopes: dict[float, RateFit | None]
    metadata: dict

    def rows_for_p(self, p: float) -> list[ErrorRow]:
        return [r for r in self.rows if r.p == p]

    def lp_ordering_ok(self) -> bool:
        """Power-mean (Jensen) ordering: for each level, error nondecreasing in p."""
        by_dt: dict[float, list[ErrorRow]] = {}
        for r in self.rows:
            by_dt.setdefault(r.dt, []).append(r)
        for rows in by_dt.values():
            rows = sorted(rows, key=lambda r: r.p)
            vals = [r.error for r in rows if math.isfinite(r.error)]
            if any(b < a * (1.0 - 1e-12) for a, b in zip(vals, vals[1:])):
                return False
        return True

    def to_csv(self) -> str:
        lines = ["dt,p,error,stderr,diverged_frac"]
        for r in self.rows:
            lines.append(
                f"{r.dt:.17g},{r.p:.17g},{r.error:.17g},{r.stderr:.17g},{r.diverged_frac:.17g}"
            )
        for p in sorted(self.slopes):
            f = self.slopes[p]
            lines.append(f"# slope p={p:g}: {f.slope:.17g}" if f else f"# slope p={p:g}: nan")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "variant": self.variant,
            "metadata": self.metadata,
            "rows": [
                {
                    "dt": r.dt,
                    "p": r.p,
                    "error": r.error,
                    "stderr": r.stderr,
                    "diverged_frac": r.diverged_frac,
                    "usable": r.usable,
                }
                for r in self.rows
            ],
            "slopes": {
                f"{p:g}": (
                    {"slope": f.slope, "intercept": f.intercept, "residual": f.residual}
                    if f
                    else None
                )
                for p, f in self.slopes.items()
            },
        }


def _build_problem(cfg: StudyConfig) -> tuple[CoefficientSet, JumpModel | None]:
    model = build_model(cfg.model, cfg.model_params)
    jm = normal_marks(cfg.intensity) if cfg.intensity > 0.0 else None
    return model, jm


def _study_block(cfg: StudyConfig, start: int, stop: int) -> dict:
    """Per-path error values for paths [start, stop); pure in (cfg, range)."""
    model, jump_model = _build_problem(cfg)
    level_list = list(cfg.levels)
    draws = [
        make_path_draw(
            cfg.base_seed,
            i,
            fine_n=cfg.reference_n,
            m=model.dim_noise,
            horizon=model.horizon,
            levels=level_list + [cfg.reference_n],
            jump_model=jump_model,
            x0=np.atleast_1d(np.asarray(cfg.x0, dtype=float)),
        )
        for i in range(start, stop)
    ]
    ref = simulate_paths(
        model, cfg.scheme_config(cfg.reference_variant, cfg.reference_n), draws, cfg.intensity
    )
    out: dict = {"ref_diverged": ref.diverged.copy()}
    for variant in cfg.variants:
        errs = np.empty((stop - start, len(level_list)))
        for j, n in enumerate(level_list):
            lvl = simulate_paths(model, cfg.scheme_config(variant, n), draws, cfg.intensity)
            factor = cfg.reference_n // n
            if cfg.error_time == "terminal":
                diff = np.linalg.norm(ref.states[:, -1] - lvl.states[:, -1], axis=-1)
            else:
                ref_on_coarse = ref.states[:, ::factor]
                diff = np.linalg.norm(ref_on_coarse - lvl.states, axis=-1).max(axis=1)
            diff = np.where(ref.diverged | lvl.diverged, np.nan, diff)
            errs[:, j] = diff
        out[variant] = errs
    return out


def _batch_means(values: np.ndarray, p: float, n_batches: int) -> tuple[float, float]:
    """(E|v|^p)^(1/p) and its batch-means standard error, nan-aware."""
    with np.errstate(invalid="ignore"):
        powered = np.abs(values) ** p
    mean = np.nanmean(powered) if np.any(np.isfinite(powered)) else np.nan
    error = mean ** (1.0 / p) if np.isfinite(mean) else np.nan
    batches = np.array_split(powered, n_batches)
    bvals = []
    for b in batches:
        if b.size and np.any(np.isfinite(b)):
            bvals.append(np.nanmean(b) ** (1.0 / p))
    if len(bvals) < 2:
        return float(error), float("nan")
    stderr = float(np.std(bvals, ddof=1) / math.sqrt(len(bvals)))
    return float(error), stderr


def strong_error_study(
    cfg: StudyConfig, workers: int = 1, progress=None
) -> list[ErrorReport]:
    """Run the coupled ladder study; one report per scheme variant.

    ``workers`` only changes how blocks are scheduled, never the results.
    ``progress`` is an optional callable(str) fed coarse status lines.
    """
    say = progress or (lambda _msg: None)
    blocks = [
        (s, min(s + cfg.block_size, cfg.num_paths))
        for s in range(0, cfg.num_paths, cfg.block_size)
    ]
    say(f"simulating {cfg.num_paths} paths in {len(blocks)} blocks")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_study_block, *zip(*[(cfg, s, t) for s, t in blocks])))
    else:
        results = []
        for s, t in blocks:
            results.append(_study_block(cfg, s, t))
            say(f"paths {t}/{cfg.num_paths} done")

    ref_diverged = np.concatenate([r["ref_diverged"] for r in results])
    horizon = build_model(cfg.model, cfg.model_params).horizon
    reports = []
    for variant in cfg.variants:
        errs = np.concatenate([r[variant] for r in results], axis=0)  # (M, L)
        rows: list[ErrorRow] = []
        for j, n in enumerate(cfg.levels):
            dt = horizon / n
            col = errs[:, j]
            diverged_frac = float(np.mean(~np.isfinite(col)))
            for p in cfg.p_list:
                error, stderr = _batch_means(col, p, cfg.n_batches)
                rows.append(ErrorRow(dt=dt, p=p, error=error, stderr=stderr,
                                     diverged_frac=diverged_frac))
        slopes: dict[float, RateFit | None] = {}
        for p in cfg.p_list:
            pts = [(r.dt, r.error) for r in rows
                   if r.p == p and r.usable and r.error > 0.0]
            try:
                slopes[p] = fit_rate(pts)
            except ValueError:
                slopes[p] = None
        reports.append(
            ErrorReport(
                variant=variant,
                rows=rows,
                slopes=slopes,
                metadata={
                    "model": cfg.model,
                    "model_params": dict(cfg.model_params),
                    "x0": cfg.x0 if np.isscalar(cfg.x0) else list(cfg.x0),
                    "base_seed": cfg.base_seed,
                    "num_paths": cfg.num_paths,
                    "levels": list(cfg.levels),
                    "reference_n": cfg.reference_n,
                    "reference_variant": cfg.reference_variant,
                    "error_time": cfg.error_time,
                    "intensity": cfg.intensity,
                    "reference_diverged_frac": float(np.mean(ref_diverged)),
                },
            )
        )
    return reports


@dataclass
class MomentRow:
    n: int
    dt: float
    sup_moment: float
    diverged_frac: float


@dataclass
class MomentTable:
    q: float
    variant: str
    rows: list[MomentRow]

    def max_min_ratio(self) -> float:
        vals = [r.sup_moment for r in self.rows if math.isfinite(r.sup_moment)]
        if len(vals) < len(self.rows) or not vals:
            return math.inf
        return max(vals) / min(vals)


def moment_probe(
    model: CoefficientSet,
    variant: str,
    n_list,
    q: float,
    num_paths: int,
    *,
    x0=2.0,
    jump_model: JumpModel | None = None,
    base_seed: int = 0,
    taming_n_power: float = 0.5,
    taming_x_power: float | None = None,
    block_size: int = 2048,
) -> MomentTable:
    """Empirical sup over the grid of the q-th moment, per step count.

    A bounded, n-stable profile is the expected signature of a tamed scheme;
    blow-up shows as +inf rows (any non-finite path state makes the empirical
    moment infinite, and the diverged fraction is reported alongside).
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    n_list = [int(n) for n in n_list]
    fine = max(n_list)
    for n in n_list:
        if fine % n != 0:
            raise ValueError("every n must divide max(n_list) for coupled draws")
    intensity = jump_model.intensity if jump_model else 0.0
    rows = []
    sums = {n: np.zeros(n + 1) for n in n_list}
    bad_any = {n: np.zeros(n + 1, dtype=bool) for n in n_list}
    diverged = {n: 0 for n in n_list}
    randomized = variant_is_randomized(variant)
    for start in range(0, num_paths, block_size):
        stop = min(start + block_size, num_paths)
        draws = [
            make_path_draw(
                base_seed,
                i,
                fine_n=fine,
                m=model.dim_noise,
                horizon=model.horizon,
                levels=n_list if randomized else [],
                jump_model=jump_model,
                x0=np.atleast_1d(np.asarray(x0, dtype=float)),
            )
            for i in range(start, stop)
        ]
        for n in n_list:
            taming = (
                TamingConfig(n=n, zeta=model.zeta, n_power=taming_n_power,
                             x_power=taming_x_power)
                if variant_is_tamed(variant)
                else None
            )
            cfg = SchemeConfig(variant=variant, n=n, taming=taming)
            res = simulate_paths(model, cfg, draws, intensity)
            norms = np.linalg.norm(res.states, axis=-1)  # (B, n+1)
            finite = np.isfinite(norms)
            with np.errstate(over="ignore", invalid="ignore"):
                powered = np.where(finite, norms, 0.0) ** q
            sums[n] += powered.sum(axis=0)
            bad_any[n] |= ~finite.all(axis=0)
            diverged[n] += int(res.diverged.sum())
    for n in n_list:
        per_point = sums[n] / num_paths
        per_point = np.where(bad_any[n], np.inf, per_point)
        rows.append(
            MomentRow(
                n=n,
                dt=model.horizon / n,
                sup_moment=float(per_point.max()),
                diverged_frac=diverged[n] / num_paths,
            )
        )
    return MomentTable(q=q, variant=variant, rows=rows)


@dataclass
class GapRow:
    n: int
    dt: float
    drift_gap: float
    diffusion_gap: float
    jump_gap: float


@dataclass
class GapTable:
    p0: float
    rows: list[GapRow]
    exponents: dict[str, float | None]


def taming_gap_probe(
    model: CoefficientSet,
    variant: str,
    n_list,
    p0: float,
    num_paths: int,
    *,
    x0=2.0,
    jump_model: JumpModel | None = None,
    base_seed: int = 0,
    taming_n_power: float = 0.5,
    taming_x_power: float | None = None,
    mark_sample: int = 128,
    max_pairs: int = 32768,
) -> GapTable:
    """Monte Carlo estimate of the taming perturbation E|f - f_tamed|^p0.

    The drift gap is evaluated at the randomized drift times, diffusion and
    jump gaps at left endpoints, all along simulated tamed trajectories; each
    row averages over paths and steps. The fitted exponents are the decay
    slopes of log2(gap) against log2(dt). For untamed variants every gap is
    identically zero and no exponent is fitted.
    """
    if p0 < 2:
        raise ValueError("p0 must be >= 2")
    n_list = [int(n) for n in n_list]
    fine = max(n_list)
    intensity = jump_model.intensity if jump_model else 0.0
    draws = [
        make_path_draw(
            base_seed,
            i,
            fine_n=fine,
            m=model.dim_noise,
            horizon=model.horizon,
            levels=n_list,
            jump_model=jump_model,
            x0=np.atleast_1d(np.asarray(x0, dtype=float)),
        )
        for i in range(num_paths)
    ]
    tamed_variant = variant_is_tamed(variant)
    # one fixed mark sample shared by all rows keeps the probe deterministic
    if jump_model is not None and tamed_variant:
        mark_gen = np.random.default_rng(base_seed)
        marks = np.asarray(jump_model.mark_sampler(mark_gen, mark_sample), dtype=float)
    rows = []
    for n in n_list:
        dt = model.horizon / n
        if not tamed_variant:
            rows.append(GapRow(n=n, dt=dt, drift_gap=0.0, diffusion_gap=0.0, jump_gap=0.0))
            continue
        tcfg = TamingConfig(n=n, zeta=model.zeta, n_power=taming_n_power,
                            x_power=taming_x_power)
        cfg = SchemeConfig(variant=variant, n=n, taming=tcfg)
        res = simulate_paths(model, cfg, draws, intensity)
        x_left = res.states[:, :-1, :]  # (B, n, d)
        ok = np.isfinite(x_left).all(axis=-1)
        t_left = np.arange(n) * dt  # (n,)
        if variant_is_randomized(variant):
            phis = np.stack([d.phis[n] for d in draws])
            t_drift = (t_left[None, :] + dt * phis)[..., None]
        else:
            t_drift = np.broadcast_to(t_left[None, :, None], x_left.shape[:2] + (1,))
        # gap factor: tamed f = f / D, so |f - tamed f| = |f| (D-1)/D
        dn = denominator(tcfg, x_left)
        shrink = np.where(ok, (dn - 1.0) / dn, np.nan)
        mu = np.linalg.norm(model.drift(t_drift, x_left, None), axis=-1)
        drift_gap = float(np.nanmean((mu * shrink) ** p0))
        sig = model.diffusion(t_left[None, :, None], x_left, None)
        sig_norm = np.sqrt(np.sum(sig * sig, axis=(-2, -1)))
        diffusion_gap = float(np.nanmean((sig_norm * shrink) ** p0))
        jump_gap = 0.0
        if jump_model is not None:
            flat_x = x_left.reshape(-1, model.dim_state)
            flat_t = np.broadcast_to(t_left[None, :], ok.shape).reshape(-1)
            flat_shrink = shrink.reshape(-1)
            stride = max(1, len(flat_x) // max_pairs)
            sx, st, ss = flat_x[::stride], flat_t[::stride], flat_shrink[::stride]
            gam = model.jump(
                st[:, None, None], sx[:, None, :], marks[None, :, :], None
            )  # (pairs, marks, d)
            gnorm = np.linalg.norm(gam, axis=-1)
            ez = np.mean(gnorm**p0, axis=1)  # per-pair mark expectation
            jump_gap = float(np.nanmean(intensity * ez * ss**p0))
        rows.append(GapRow(n=n, dt=dt, drift_gap=drift_gap,
                           diffusion_gap=diffusion_gap, jump_gap=jump_gap))
    exponents: dict[str, float | None] = {}
    for name in ("drift_gap", "diffusion_gap", "jump_gap"):
        pts = [(r.dt, getattr(r, name)) for r in rows if getattr(r, name) > 0.0]
        try:
            exponents[name] = fit_rate(pts).slope
        except ValueError:
            exponents[name] = None
    return GapTable(p0=p0, rows=rows, exponents=exponents)


def write_report_csv(report: ErrorReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(report.to_csv())


def write_report_json(report: ErrorReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def print_progress(msg: str) -> None:
    print(msg, file=sys.stderr)
