"""Empirical verification of the model's asymptotic claims.

Four checks, each a finite-sample operationalization of an almost-sure or
expectation limit:

- log-slope of extinction: least-squares slope of ln(component) over a late
  time window, per path, averaged over the ensemble; compared against the
  predicted rate (lambda1, lambda2, or -(alpha3 + sigma3^2/2)) with both an
  absolute tolerance and a multiple of the cross-path standard error.
- moment boundedness: the ensemble mean of (1 + x + y + z)^q must flatten
  (late/half-time ratio near 1) and its tail must stay within a factor of
  its own median, rather than grow.
- negative-moment boundedness: the ensemble mean of y^(-theta) on the
  zooplankton-free system stays bounded when the phytoplankton persists,
  and blows up under extinction (the expected-failure control).
- distributional convergence: occupation histograms from two initial
  conditions on a shared log-spaced grid, compared window by window in
  total variation; the laws of one process from different starts must merge.

Every report embeds the thresholds it was judged against; the thresholds
are arguments, not constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import SimConfig, Trajectory, run_paths, simulate_boundary2d, simulate_full3d
from .errors import AssumptionViolated, NotApplicable, WindowTooShort
from .invariant import occupation_histogram, tv_distance
from .model import FunctionalResponse, ModelParams, derived_constants
from .thresholds import (
    PHYTOPLANKTON_ONLY,
    TOTAL_EXTINCTION,
    lambda1,
    lambda2_closed_form_constant,
)

__all__ = [
    "SlopeEstimate",
    "ComponentCheck",
    "ExtinctionReport",
    "MomentReport",
    "NegativeMomentReport",
    "ConvergenceReport",
    "log_slope",
    "extinction_rate_check",
    "moment_bound_check",
    "negative_moment_check",
    "convergence_check",
]

_MIN_WINDOW_STEPS = 1000  # a slope window must span at least this many dt
_COMPONENT_COLUMN = {"y": 1, "z": 2}


@dataclass(frozen=True)
class SlopeEstimate:
    """Ensemble log-slope: mean over paths of per-path least-squares slopes
    of ln(component) vs t; stderr is across paths (NaN for one path)."""

    component: str
    slope: float
    stderr: float
    window: tuple[float, float]
    n_paths: int


def log_slope(
    ensemble: Sequence[Trajectory],
    component: str,
    window: tuple[float, float],
) -> SlopeEstimate:
    """Least-squares slope of ln(component) over the window, per path.

    Requires the component to start strictly positive in every path and to
    stay positive inside the window (an underflowed-to-0 sample means the
    window reaches too deep into extinction).
    """
    comp = component.lower()
    if comp not in _COMPONENT_COLUMN:
        raise ValueError("component must be 'y' or 'z'")
    idx = _COMPONENT_COLUMN[comp]
    trajs = list(ensemble)
    if not trajs:
        raise ValueError("empty ensemble")
    t_lo, t_hi = float(window[0]), float(window[1])
    dt = trajs[0].config.dt
    if not t_lo < t_hi:
        raise ValueError("window must satisfy t_lo < t_hi")
    if t_hi - t_lo < _MIN_WINDOW_STEPS * dt:
        raise WindowTooShort(
            f"window spans {(t_hi - t_lo) / dt:.0f} steps; need >= {_MIN_WINDOW_STEPS}"
        )
    slopes = []
    for tr in trajs:
        if not tr.states[0, idx] > 0:
            raise ValueError(
                f"path {tr.path_id}: component {comp!r} must start strictly positive"
            )
        mask = (tr.times >= t_lo) & (tr.times <= t_hi)
        if int(mask.sum()) < 10:
            raise WindowTooShort(
                f"only {int(mask.sum())} recorded samples inside the window"
            )
        vals = tr.states[mask, idx]
        if not np.all(vals > 0):
            raise ValueError(
                f"path {tr.path_id}: component {comp!r} underflowed to 0 inside "
                f"the window; use an earlier window"
            )
        slopes.append(float(np.polyfit(tr.times[mask], np.log(vals), 1)[0]))
    n = len(slopes)
    arr = np.asarray(slopes)
    stderr = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return SlopeEstimate(
        component=comp,
        slope=float(arr.mean()),
        stderr=stderr,
        window=(t_lo, t_hi),
        n_paths=n,
    )


@dataclass(frozen=True)
class ComponentCheck:
    """One slope-vs-target comparison."""

    estimate: SlopeEstimate
    target: float
    abs_tol: float
    stderr_mult: float

    @property
    def passed(self) -> bool:
        gap = abs(self.estimate.slope - self.target)
        if gap <= self.abs_tol:
            return True
        return math.isfinite(self.estimate.stderr) and gap <= self.stderr_mult * self.estimate.stderr

    def to_dict(self) -> dict:
        return {
            "component": self.estimate.component,
            "slope": self.estimate.slope,
            "stderr": self.estimate.stderr,
            "target": self.target,
            "abs_tol": self.abs_tol,
            "stderr_mult": self.stderr_mult,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ExtinctionReport:
    """Slope checks for the components predicted to die out."""

    regime: str
    checks: tuple[ComponentCheck, ...]
    window: tuple[float, float]
    n_paths: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "check": "extinction",
            "regime": self.regime,
            "window": list(self.window),
            "n_paths": self.n_paths,
            "components": [c.to_dict() for c in self.checks],
            "passed": self.passed,
        }


def extinction_rate_check(
    params: ModelParams,
    responses: tuple[FunctionalResponse, FunctionalResponse],
    regime: str,
    cfg: SimConfig,
    window: tuple[float, float] | None = None,
    targets: dict[str, float] | None = None,
    abs_tol: float = 0.1,
    stderr_mult: float = 3.0,
    init=(1.0, 1.0, 1.0),
    workers: int | None = None,
) -> ExtinctionReport:
    """Ensemble slope test of the predicted extinction rates.

    TotalExtinction checks y against lambda1 and z against -(alpha3 +
    sigma3^2/2); PhytoplanktonOnly checks z against lambda2. The default
    window is the last four fifths of the horizon. Passing explicit targets
    overrides the predictions (deliberately wrong targets make a negative
    control).
    """
    if regime not in (TOTAL_EXTINCTION, PHYTOPLANKTON_ONLY):
        raise NotApplicable(
            f"extinction rates apply to {TOTAL_EXTINCTION} or "
            f"{PHYTOPLANKTON_ONLY}, not {regime!r}"
        )
    f1, f2 = responses
    if window is None:
        window = (cfg.t_end / 5.0, cfg.t_end)
    if targets is None:
        if regime == TOTAL_EXTINCTION:
            targets = {
                "y": lambda1(params, f1),
                "z": -(params.alpha3 + 0.5 * params.sigma3**2),
            }
        else:
            if not (f1.is_constant and f2.is_constant):
                raise NotApplicable(
                    "the PhytoplanktonOnly slope target has a closed form only "
                    "for constant responses; pass targets explicitly otherwise"
                )
            targets = {"z": lambda2_closed_form_constant(params, f1.a, f2.a)}
    targets = {k.lower(): float(v) for k, v in targets.items()}

    ensemble = run_paths(
        lambda pid: simulate_full3d(params, responses, init, cfg, path_id=pid),
        cfg.n_paths,
        workers,
    )
    checks = tuple(
        ComponentCheck(
            estimate=log_slope(ensemble, comp, window),
            target=targets[comp],
            abs_tol=abs_tol,
            stderr_mult=stderr_mult,
        )
        for comp in sorted(targets)
    )
    return ExtinctionReport(
        regime=regime, checks=checks, window=window, n_paths=cfg.n_paths
    )


@dataclass(frozen=True)
class MomentReport:
    """Ensemble moment curve E(1 + x + y + z)^q and its flatness summary.

    plateau_ratio is curve(t_end)/curve(t_end/2); boundedness additionally
    requires the late-half maximum to stay within tail_mult times the
    late-half median. q_limit is the hard existence ceiling 1 + 2*alpha1 /
    sigma1^2 (the stationary nutrient law has no q-moment beyond it); q0 is
    the smaller exponent with a proven uniform bound, echoed for reference.
    """

    q: float
    times: np.ndarray
    curve: np.ndarray
    plateau_ratio: float
    tail_max: float
    tail_median: float
    q0: float | None
    q_limit: float
    plateau_range: tuple[float, float]
    tail_mult: float

    @property
    def passed(self) -> bool:
        lo, hi = self.plateau_range
        return (
            bool(np.isfinite(self.curve).all())
            and lo <= self.plateau_ratio <= hi
            and self.tail_max <= self.tail_mult * self.tail_median
        )

    def to_dict(self) -> dict:
        return {
            "check": "moments",
            "q": self.q,
            "q0": self.q0,
            "q_limit": self.q_limit,
            "plateau_ratio": self.plateau_ratio,
            "plateau_range": list(self.plateau_range),
            "tail_max": self.tail_max,
            "tail_median": self.tail_median,
            "tail_mult": self.tail_mult,
            "passed": self.passed,
            "times": self.times.tolist(),
            "curve": self.curve.tolist(),
        }


def moment_bound_check(
    params: ModelParams,
    ensemble: Sequence[Trajectory],
    q: float,
    plateau_range: tuple[float, float] = (0.8, 1.25),
    tail_mult: float = 2.0,
) -> MomentReport:
    """Boundedness of the q-th total-mass moment along the ensemble.

    q must lie below the existence ceiling 1 + 2*alpha1/sigma1^2, else the
    stationary moment is infinite and the check is meaningless.
    """
    if not (math.isfinite(q) and q > 0):
        raise ValueError("q must be finite and > 0")
    # Ceiling only binds when the stationary nutrient law exists (alpha1,
    # sigma1 > 0); otherwise the curve itself is the judge.
    q_limit = (
        1.0 + 2.0 * params.alpha1 / params.sigma1**2
        if params.alpha1 > 0 and params.sigma1 > 0
        else math.inf
    )
    if not q < q_limit:
        raise NotApplicable(
            f"the q-moment requires q < 1 + 2*alpha1/sigma1^2 = {q_limit:g}; "
            f"got q = {q:g}"
        )
    try:
        q0 = derived_constants(params).q0
    except AssumptionViolated:
        q0 = None
    trajs = list(ensemble)
    if not trajs:
        raise ValueError("empty ensemble")
    times = trajs[0].times
    total = np.zeros(times.size)
    for tr in trajs:
        if tr.times.size != times.size or tr.times[-1] != times[-1]:
            raise ValueError("ensemble paths must share one recording grid")
        total += (1.0 + tr.states.sum(axis=1)) ** q
    curve = total / len(trajs)
    half = int(np.searchsorted(times, 0.5 * trajs[0].config.t_end))
    tail = curve[half:]
    return MomentReport(
        q=float(q),
        times=times,
        curve=curve,
        plateau_ratio=float(curve[-1] / curve[half]),
        tail_max=float(tail.max()),
        tail_median=float(np.median(tail)),
        q0=q0,
        q_limit=q_limit,
        plateau_range=(float(plateau_range[0]), float(plateau_range[1])),
        tail_mult=float(tail_mult),
    )


@dataclass(frozen=True)
class NegativeMomentReport:
    """Ensemble curve E[y(t)^(-theta)] on the zooplankton-free system."""

    theta: float
    lambda1: float
    hypothesis_met: bool  # lambda1 > 0, the boundedness hypothesis
    times: np.ndarray
    curve: np.ndarray
    tail_max: float
    tail_median: float
    tail_mult: float

    @property
    def passed(self) -> bool:
        return (
            bool(np.isfinite(self.curve).all())
            and self.tail_max <= self.tail_mult * self.tail_median
        )

    def to_dict(self) -> dict:
        return {
            "check": "negmoment",
            "theta": self.theta,
            "lambda1": self.lambda1,
            "hypothesis_met": self.hypothesis_met,
            "tail_max": self.tail_max,
            "tail_median": self.tail_median,
            "tail_mult": self.tail_mult,
            "passed": self.passed,
            "times": self.times.tolist(),
            "curve": self.curve.tolist(),
        }


def negative_moment_check(
    params: ModelParams,
    f1: FunctionalResponse,
    cfg: SimConfig,
    theta: float = 0.1,
    init_xy=(1.0, 1.0),
    tail_mult: float = 2.0,
    workers: int | None = None,
) -> NegativeMomentReport:
    """Boundedness of E[y^(-theta)] under persistent phytoplankton.

    The claim assumes lambda1 > 0; the check still runs otherwise (recorded
    in hypothesis_met) and is then expected to fail, since y -> 0 drives
    y^(-theta) to infinity. That expected failure is the negative control.
    """
    if not (math.isfinite(theta) and theta >= 0):
        raise ValueError("theta must be finite and >= 0")
    if not init_xy[1] > 0:
        raise ValueError("initial phytoplankton mass must be strictly positive")
    lam1 = lambda1(params, f1)
    ensemble = run_paths(
        lambda pid: simulate_boundary2d(params, f1, init_xy, cfg, path_id=pid),
        cfg.n_paths,
        workers,
    )
    times = ensemble[0].times
    total = np.zeros(times.size)
    with np.errstate(divide="ignore"):
        for tr in ensemble:
            total += tr.y ** (-theta)
    curve = total / len(ensemble)
    half = int(np.searchsorted(times, 0.5 * cfg.t_end))
    tail = curve[half:]
    return NegativeMomentReport(
        theta=float(theta),
        lambda1=lam1,
        hypothesis_met=lam1 > 0,
        times=times,
        curve=curve,
        tail_max=float(tail.max()),
        tail_median=float(np.median(tail)),
        tail_mult=float(tail_mult),
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Windowed total-variation gap between two ensembles' occupation
    histograms on one shared grid."""

    dims: int
    n_bins: int
    window_bounds: tuple[tuple[float, float], ...]
    tv_series: tuple[float, ...]
    threshold: float
    n_paths: int
    independent_noise: bool

    @property
    def final_tv(self) -> float:
        return self.tv_series[-1]

    @property
    def passed(self) -> bool:
        return self.final_tv <= self.threshold

    def to_dict(self) -> dict:
        return {
            "check": "convergence",
            "dims": self.dims,
            "n_bins": self.n_bins,
            "windows": [list(w) for w in self.window_bounds],
            "tv_series": list(self.tv_series),
            "final_tv": self.final_tv,
            "threshold": self.threshold,
            "n_paths": self.n_paths,
            "independent_noise": self.independent_noise,
            "passed": self.passed,
        }


def _window_slice(tr: Trajectory, lo: float, hi: float, last: bool) -> Trajectory:
    mask = (tr.times >= lo) & ((tr.times <= hi) if last else (tr.times < hi))
    return Trajectory(
        times=tr.times[mask],
        states=tr.states[mask],
        config=tr.config,
        path_id=tr.path_id,
        clamp_events=tr.clamp_events,
    )


def convergence_check(
    params: ModelParams,
    responses: tuple[FunctionalResponse, FunctionalResponse],
    init_a,
    init_b,
    cfg: SimConfig,
    dims: int = 3,
    n_bins: int = 8,
    n_windows: int = 5,
    tv_threshold: float = 0.1,
    independent_noise: bool = True,
    workers: int | None = None,
) -> ConvergenceReport:
    """Do the occupation measures from two starts merge?

    Both ensembles are histogrammed on one grid (log-spaced over their
    pooled post-burn-in samples) in n_windows consecutive time windows; the
    report carries the TV distance per window and passes iff the final
    window's TV is at or below tv_threshold. independent_noise=False reuses
    the same path ids for both ensembles, making identical initials produce
    identical paths (TV exactly 0), a determinism control.
    """
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    n = cfg.n_paths
    offset = n if independent_noise else 0
    ens_a = run_paths(
        lambda pid: simulate_full3d(params, responses, init_a, cfg, path_id=pid),
        n,
        workers,
    )
    ens_b = run_paths(
        lambda pid: simulate_full3d(
            params, responses, init_b, cfg, path_id=pid + offset
        ),
        n,
        workers,
    )
    pooled = occupation_histogram(ens_a + ens_b, dims, n_bins, cfg.burn_in)
    edges = pooled.bin_edges

    bounds = np.linspace(cfg.burn_in, cfg.t_end, n_windows + 1)
    windows = []
    series = []
    for w in range(n_windows):
        lo, hi = float(bounds[w]), float(bounds[w + 1])
        last = w == n_windows - 1
        m_a = occupation_histogram(
            [_window_slice(tr, lo, hi, last) for tr in ens_a],
            dims, n_bins, 0.0, bin_edges=edges,
        )
        m_b = occupation_histogram(
            [_window_slice(tr, lo, hi, last) for tr in ens_b],
            dims, n_bins, 0.0, bin_edges=edges,
        )
        windows.append((lo, hi))
        series.append(tv_distance(m_a, m_b))
    return ConvergenceReport(
        dims=dims,
        n_bins=n_bins,
        window_bounds=tuple(windows),
        tv_series=tuple(series),
        threshold=float(tv_threshold),
        n_paths=n,
        independent_noise=independent_noise,
    )
