"""Invasion thresholds and long-run regime classification.

The phytoplankton invasion rate against the nutrient-only stationary law mu1
(inverse Gamma) is

    lambda1 = E_mu1[F1(u, 0) u] - alpha2 - sigma2^2/2,

computed by quadrature, with the closed form a*Lambda/alpha1 - alpha2 -
sigma2^2/2 available (and cross-checked) when F1 is constant. The
zooplankton invasion rate against the nutrient-phytoplankton stationary law
mu12 is

    lambda2 = E_mu12[F2(y, 0) y] - alpha3 - sigma3^2/2.

mu12 has no closed form in general; lambda2 is estimated by long-run
averaging of the zooplankton-free system. When both responses are constant
the stationarity identities pin the two mu12 moments exactly: E[F1 X] =
alpha2 + sigma2^2/2 gives E[X], and the expectation of the summed drift
gives E[Y] = (Lambda - alpha1 E[X])/(alpha2 - alpha4), yielding a closed
form used as the Monte Carlo oracle.

Signs classify the regime: lambda1 < 0 kills both plankton; lambda1 > 0
with lambda2 < 0 keeps phytoplankton only; both positive means coexistence
with a unique stationary law. A tolerance band around 0 (or a confidence
interval straddling 0) is reported as Inconclusive rather than guessed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .engine import SimConfig, simulate_boundary2d
from .errors import AssumptionViolated, NotApplicable, ToleranceNotMet
from .invariant import ergodic_average, invgamma_from_params, quadrature_against_invgamma
from .model import FunctionalResponse, ModelParams, validate_params

__all__ = [
    "TOTAL_EXTINCTION",
    "PHYTOPLANKTON_ONLY",
    "COEXISTENCE",
    "INCONCLUSIVE",
    "REGIMES",
    "DEFAULT_TOL",
    "ThresholdEstimate",
    "ThresholdReport",
    "RegimeMapResult",
    "lambda1",
    "lambda1_closed_form",
    "lambda1_quadrature",
    "lambda2_closed_form_constant",
    "lambda2_estimate",
    "classify",
    "build_threshold_report",
    "regime_map",
]

TOTAL_EXTINCTION = "TotalExtinction"
PHYTOPLANKTON_ONLY = "PhytoplanktonOnly"
COEXISTENCE = "Coexistence"
INCONCLUSIVE = "Inconclusive"
REGIMES = (TOTAL_EXTINCTION, PHYTOPLANKTON_ONLY, COEXISTENCE, INCONCLUSIVE)

DEFAULT_TOL = 1e-6  # half-width of the indecision band around 0
_METHOD_AGREEMENT = 1e-8  # closed form and quadrature must agree this tightly
_MAX_GRID_CELLS = 10_000


@dataclass(frozen=True)
class ThresholdEstimate:
    """Monte Carlo invasion rate with a 95% confidence interval."""

    value: float
    stderr: float
    ci_low: float
    ci_high: float
    n_paths: int
    t_end: float

    @property
    def straddles_zero(self) -> bool:
        return self.ci_low < 0.0 < self.ci_high


def lambda1_closed_form(params: ModelParams, f1: FunctionalResponse) -> float:
    """a*Lambda/alpha1 - alpha2 - sigma2^2/2; constant response only."""
    if not f1.is_constant:
        raise NotApplicable("closed-form lambda1 requires a constant response")
    return (
        f1.a * params.lambda_input / params.alpha1
        - params.alpha2
        - 0.5 * params.sigma2**2
    )


def lambda1_quadrature(
    params: ModelParams, f1: FunctionalResponse, tol: float = 1e-10
) -> float:
    """E_mu1[F1(u,0) u] - alpha2 - sigma2^2/2 by quadrature against the
    inverse Gamma law."""
    d = invgamma_from_params(params)
    uptake = quadrature_against_invgamma(d, lambda u: f1(u, 0.0) * u, tol)
    return uptake - params.alpha2 - 0.5 * params.sigma2**2


def lambda1(params: ModelParams, f1: FunctionalResponse, tol: float = 1e-10) -> float:
    """Phytoplankton invasion rate. Constant responses use the closed form,
    cross-checked against quadrature; other responses use quadrature."""
    by_quad = lambda1_quadrature(params, f1, tol)
    if f1.is_constant:
        exact = lambda1_closed_form(params, f1)
        if abs(exact - by_quad) > _METHOD_AGREEMENT:
            raise ToleranceNotMet(
                f"lambda1 methods disagree: closed form {exact!r}, "
                f"quadrature {by_quad!r}"
            )
        return exact
    return by_quad


def lambda2_closed_form_constant(params: ModelParams, a: float, b: float) -> float:
    """Zooplankton invasion rate for constant responses F1 = a, F2 = b,
    from the two stationarity identities of the zooplankton-free system:
    E[X] = (alpha2 + sigma2^2/2)/a and E[Y] = (Lambda - alpha1 E[X]) /
    (alpha2 - alpha4). Needs lambda1 > 0, otherwise that system has no
    coexistence law and E[Y] would come out <= 0."""
    if not (a > 0 and b >= 0):
        raise ValueError("need uptake constants a > 0 and b >= 0")
    if not params.alpha2 > params.alpha4:
        raise NotApplicable("identities need alpha4 < alpha2")
    lam1 = a * params.lambda_input / params.alpha1 - params.alpha2 - 0.5 * params.sigma2**2
    if not lam1 > 0:
        raise NotApplicable(
            f"lambda2 is defined only against a persistent phytoplankton "
            f"stationary law (lambda1 = {lam1:.6g} <= 0)"
        )
    mean_x = (params.alpha2 + 0.5 * params.sigma2**2) / a
    mean_y = (params.lambda_input - params.alpha1 * mean_x) / (
        params.alpha2 - params.alpha4
    )
    return b * mean_y - params.alpha3 - 0.5 * params.sigma3**2


def lambda2_estimate(
    params: ModelParams,
    f1: FunctionalResponse,
    f2: FunctionalResponse,
    cfg: SimConfig,
    init_xy=(1.0, 1.0),
    tol: float = DEFAULT_TOL,
) -> ThresholdEstimate:
    """Monte Carlo lambda2: long runs of the zooplankton-free system,
    per-path time averages of F2(y, 0) y, minus alpha3 + sigma3^2/2.

    With several paths the confidence interval is a Student-t interval over
    the per-path averages; a single path falls back to its batch-means
    interval. Paths are simulated one at a time and discarded. A warning is
    issued when the interval straddles 0 (regime call would be Inconclusive).
    """
    lam1 = lambda1(params, f1)
    if not lam1 > tol:
        raise NotApplicable(
            f"lambda2 needs lambda1 > tol for the phytoplankton stationary "
            f"law to exist (lambda1 = {lam1:.6g}, tol = {tol:.3g})"
        )
    shift = params.alpha3 + 0.5 * params.sigma3**2

    def grazing(states: np.ndarray) -> np.ndarray:
        y = states[:, 1]
        return f2(y, 0.0) * y

    per_path = []
    last = None
    for pid in range(cfg.n_paths):
        traj = simulate_boundary2d(params, f1, init_xy, cfg, path_id=pid)
        last = ergodic_average(traj, grazing, cfg.burn_in)
        per_path.append(last.value)

    if cfg.n_paths == 1:
        est = ThresholdEstimate(
            value=last.value - shift,
            stderr=last.stderr,
            ci_low=last.ci_low - shift,
            ci_high=last.ci_high - shift,
            n_paths=1,
            t_end=cfg.t_end,
        )
    else:
        vals = np.asarray(per_path, dtype=float)
        mean = float(vals.mean())
        stderr = float(vals.std(ddof=1) / math.sqrt(vals.size))
        t975 = float(sps.t.ppf(0.975, vals.size - 1))
        est = ThresholdEstimate(
            value=mean - shift,
            stderr=stderr,
            ci_low=mean - shift - t975 * stderr,
            ci_high=mean - shift + t975 * stderr,
            n_paths=cfg.n_paths,
            t_end=cfg.t_end,
        )
    if est.straddles_zero:
        warnings.warn(
            f"lambda2 interval [{est.ci_low:.4g}, {est.ci_high:.4g}] straddles "
            f"0; the regime call will be Inconclusive (longer runs or more "
            f"paths sharpen it)",
            stacklevel=2,
        )
    return est


def _sign_band(value: float, tol: float) -> int:
    """-1, 0, +1 with a dead band of half-width tol."""
    if value < -tol:
        return -1
    if value > tol:
        return 1
    return 0


def classify(
    lambda1_value: float,
    lambda2_value: float | ThresholdEstimate | None = None,
    tol: float = DEFAULT_TOL,
) -> str:
    """Regime from the threshold signs; total (never raises on values).

    lambda2_value may be absent (None), a number, or a Monte Carlo
    ThresholdEstimate; for an estimate the decisive check is its confidence
    interval clearing the tolerance band, per the Inconclusive contract.
    lambda2 is irrelevant when lambda1 < -tol.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    s1 = _sign_band(lambda1_value, tol)
    if s1 < 0:
        return TOTAL_EXTINCTION
    if s1 == 0 or lambda2_value is None:
        return INCONCLUSIVE
    if isinstance(lambda2_value, ThresholdEstimate):
        if lambda2_value.ci_low > tol:
            s2 = 1
        elif lambda2_value.ci_high < -tol:
            s2 = -1
        else:
            s2 = 0
    else:
        s2 = _sign_band(float(lambda2_value), tol)
    if s2 > 0:
        return COEXISTENCE
    if s2 < 0:
        return PHYTOPLANKTON_ONLY
    return INCONCLUSIVE


@dataclass(frozen=True)
class ThresholdReport:
    """Both invasion rates, how they were obtained, and the regime call.

    lambda2 is populated only when lambda1 clears the tolerance band (it is
    undefined otherwise); lambda2_ci is present only for the Monte Carlo
    method.
    """

    lambda1: float
    lambda1_method: str  # "closed_form" or "quadrature"
    lambda2: float | None
    lambda2_method: str | None  # "closed_form", "monte_carlo", or None
    lambda2_ci: tuple[float, float] | None
    regime: str
    tol: float
    params_echo: dict

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda1_method": self.lambda1_method,
            "lambda2": self.lambda2,
            "lambda2_method": self.lambda2_method,
            "lambda2_ci": list(self.lambda2_ci) if self.lambda2_ci else None,
            "regime": self.regime,
            "tol": self.tol,
            "params": self.params_echo,
        }


def _echo(params: ModelParams, f1: FunctionalResponse, f2: FunctionalResponse) -> dict:
    return {
        **asdict(params),
        "f1": asdict(f1),
        "f2": asdict(f2),
    }


def build_threshold_report(
    params: ModelParams,
    f1: FunctionalResponse,
    f2: FunctionalResponse,
    cfg: SimConfig | None = None,
    tol: float = DEFAULT_TOL,
) -> ThresholdReport:
    """Thresholds plus regime in one pass.

    lambda2 uses the closed form when both responses are constant, Monte
    Carlo when a SimConfig is supplied, and stays absent otherwise (the
    regime is then Inconclusive whenever lambda1 > tol).
    """
    lam1 = lambda1(params, f1)
    method1 = "closed_form" if f1.is_constant else "quadrature"
    lam2: float | ThresholdEstimate | None = None
    method2 = None
    ci = None
    if lam1 > tol:
        if f1.is_constant and f2.is_constant:
            lam2 = lambda2_closed_form_constant(params, f1.a, f2.a)
            method2 = "closed_form"
        elif cfg is not None:
            lam2 = lambda2_estimate(params, f1, f2, cfg, tol=tol)
            method2 = "monte_carlo"
            ci = (lam2.ci_low, lam2.ci_high)
    regime = classify(lam1, lam2, tol)
    value2 = lam2.value if isinstance(lam2, ThresholdEstimate) else lam2
    return ThresholdReport(
        lambda1=lam1,
        lambda1_method=method1,
        lambda2=value2,
        lambda2_method=method2,
        lambda2_ci=ci,
        regime=regime,
        tol=tol,
        params_echo=_echo(params, f1, f2),
    )


_AXIS_RESPONSE = {"a": 0, "b": 1}  # uptake constants of the two responses


def _apply_axis(
    name: str,
    value: float,
    params: ModelParams,
    responses: list[FunctionalResponse],
) -> ModelParams:
    if name in _AXIS_RESPONSE:
        idx = _AXIS_RESPONSE[name]
        responses[idx] = replace(responses[idx], a=value)
        return params
    if name in params.__dataclass_fields__:
        return replace(params, **{name: value})
    raise ValueError(
        f"unknown axis parameter {name!r}; use a model field name or the "
        f"response constants 'a' (F1) / 'b' (F2)"
    )


@dataclass(frozen=True)
class RegimeMapResult:
    """Grid sweep of threshold reports, row-major over (axis1, axis2)."""

    axis1_name: str
    axis1_values: tuple[float, ...]
    axis2_name: str
    axis2_values: tuple[float, ...]
    reports: tuple[tuple[ThresholdReport, ...], ...]  # [i][j]

    def rows(self):
        """(axis1_value, axis2_value, report) in deterministic grid order."""
        for i, v1 in enumerate(self.axis1_values):
            for j, v2 in enumerate(self.axis2_values):
                yield v1, v2, self.reports[i][j]


def regime_map(
    base_params: ModelParams,
    f1_family: FunctionalResponse,
    f2_family: FunctionalResponse,
    axis1: tuple[str, Sequence[float]],
    axis2: tuple[str, Sequence[float]],
    cfg: SimConfig | None = None,
    tol: float = DEFAULT_TOL,
) -> RegimeMapResult:
    """Threshold report per grid cell over two swept parameters.

    Axis names are model field names or 'a'/'b' for the response uptake
    constants. Every cell is re-validated against the model assumptions.
    Monte Carlo cells (nonconstant responses with a SimConfig) reuse the
    same seed and path ids in every cell, so neighboring cells share their
    Brownian increments and the regime boundary is not blurred by
    resampling noise.
    """
    name1, values1 = axis1
    name2, values2 = axis2
    if name1 == name2:
        raise ValueError("the two axes must sweep different parameters")
    values1 = tuple(float(v) for v in values1)
    values2 = tuple(float(v) for v in values2)
    if not values1 or not values2:
        raise ValueError("axis value lists must be nonempty")
    if len(values1) * len(values2) > _MAX_GRID_CELLS:
        raise ValueError(
            f"grid has {len(values1) * len(values2)} cells; "
            f"limit is {_MAX_GRID_CELLS}"
        )

    grid = []
    for v1 in values1:
        row = []
        for v2 in values2:
            responses = [f1_family, f2_family]
            params = _apply_axis(name1, v1, base_params, responses)
            params = _apply_axis(name2, v2, params, responses)
            f1, f2 = responses
            report = validate_params(params, f1, f2)
            if not report.all_passed:
                names = ", ".join(c.name for c in report.violations())
                raise AssumptionViolated(
                    names,
                    detail=f"at grid cell {name1}={v1:g}, {name2}={v2:g}",
                )
            row.append(build_threshold_report(params, f1, f2, cfg, tol))
        grid.append(tuple(row))
    return RegimeMapResult(
        axis1_name=name1,
        axis1_values=values1,
        axis2_name=name2,
        axis2_values=values2,
        reports=tuple(grid),
    )
