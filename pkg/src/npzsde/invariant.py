"""Stationary law of the nutrient equation and occupation-measure tools.

With phytoplankton and zooplankton absent the nutrient follows

    dX = (Lambda + theta - alpha1 X) dt + sigma1 X dW1      (theta >= 0 a shift)

whose stationary law is inverse Gamma with

    shape = 1 + 2*alpha1/sigma1^2,    scale = 2*(Lambda + theta)/sigma1^2,

density g(u) = scale^shape / Gamma(shape) * u^(-shape-1) * exp(-scale/u) on
u > 0, and mean scale/(shape-1) = (Lambda + theta)/alpha1. The k-th moment
exists iff k < shape.

Expectations against this law are computed by adaptive Gauss-Kronrod
quadrature after two substitutions: v = scale/u turns the heavy-tailed
integrand into a Gamma(shape, 1)-weighted one, and v = exp(s) then removes
the algebraic endpoint singularity at v = 0, giving

    E[f(X)] = int_R f(scale * e^(-s)) * exp(shape*s - e^s) / Gamma(shape) ds

with a smooth integrand that decays double-exponentially to the right and
exponentially (rate >= shape - growth of f) to the left. Divergent moments
show up as a left tail that fails to decay, reported as ToleranceNotMet.

The two-dimensional and three-dimensional stationary laws have no closed
form; they are handled empirically through time averages with batch-means
confidence intervals and log-spaced occupation histograms compared in
total-variation distance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special
from scipy import stats as sps

from .engine import RngStream, Trajectory
from .errors import AssumptionViolated, ToleranceNotMet
from .model import ModelParams

__all__ = [
    "InverseGamma",
    "EmpiricalMeasure",
    "ErgodicEstimate",
    "invgamma_from_params",
    "invgamma_density",
    "invgamma_cdf",
    "invgamma_sample",
    "quadrature_against_invgamma",
    "ergodic_average",
    "occupation_histogram",
    "tv_distance",
    "sup_cdf_gap",
]


@dataclass(frozen=True)
class InverseGamma:
    """Inverse Gamma law: X = scale / G with G ~ Gamma(shape, 1)."""

    shape: float
    scale: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.shape) and self.shape > 1):
            raise ValueError("shape must be finite and > 1")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be finite and > 0")
        if not (math.isfinite(self.theta) and self.theta >= 0):
            raise ValueError("theta must be finite and >= 0")

    @property
    def mean(self) -> float:
        return self.scale / (self.shape - 1.0)

    def moment(self, k: float) -> float:
        """k-th moment scale^k * Gamma(shape-k)/Gamma(shape); needs k < shape."""
        if not k < self.shape:
            raise ValueError(f"moment of order {k} does not exist (shape {self.shape})")
        return math.exp(
            k * math.log(self.scale)
            + math.lgamma(self.shape - k)
            - math.lgamma(self.shape)
        )


def invgamma_from_params(params: ModelParams, theta: float = 0.0) -> InverseGamma:
    """Stationary law of the theta-shifted nutrient equation."""
    if not params.sigma1 > 0:
        raise AssumptionViolated("sigma1 > 0")
    if theta < 0:
        raise ValueError("theta must be >= 0")
    s2 = params.sigma1**2
    return InverseGamma(
        shape=1.0 + 2.0 * params.alpha1 / s2,
        scale=2.0 * (params.lambda_input + theta) / s2,
        theta=theta,
    )


def invgamma_density(d: InverseGamma, u):
    """Density scale^shape/Gamma(shape) * u^(-shape-1) * exp(-scale/u), u > 0."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("inverse Gamma density is supported on u > 0")
    log_pdf = (
        d.shape * math.log(d.scale)
        - math.lgamma(d.shape)
        - (d.shape + 1.0) * np.log(u)
        - d.scale / u
    )
    out = np.exp(log_pdf)
    return float(out) if out.ndim == 0 else out


def invgamma_cdf(d: InverseGamma, u):
    """P(X <= u) = P(G >= scale/u) = Q(shape, scale/u), the regularized
    upper incomplete Gamma function."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("inverse Gamma law is supported on u > 0")
    out = special.gammaincc(d.shape, d.scale / u)
    return float(out) if out.ndim == 0 else out


def invgamma_sample(d: InverseGamma, stream: RngStream, n: int) -> np.ndarray:
    """n draws scale/G with G ~ Gamma(shape, 1); reproducible per stream."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = stream.generator()
    return d.scale / gen.gamma(d.shape, 1.0, size=n)


# 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
# (standard abscissae on [-1, 1]).
_XGK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 15, 2)  # Gauss nodes sit at the odd Kronrod slots

_WEIGHT_CUT = math.log(1e-16)  # tail cut where the weight is 1e-16 of its peak
_MAX_REFINE = 4000
_MAX_TAIL = 2000
_TAIL_STALL = 25  # tail panels before a non-decaying run aborts


def _gk_panel(h: Callable, a: float, b: float) -> tuple[float, float]:
    """Kronrod value and |Kronrod - Gauss| error estimate on [a, b]."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    vals = np.asarray(h(mid + half * _XGK), dtype=float)
    k = half * float(np.dot(_WGK, vals))
    g = half * float(np.dot(_WG, vals[_GAUSS_IDX]))
    return k, abs(k - g)


def quadrature_against_invgamma(
    d: InverseGamma, f: Callable, tol: float = 1e-10
) -> float:
    """E[f(X)] for X ~ d, to absolute accuracy tol.

    f must accept numpy arrays elementwise. Intended for |f(u)| <= C(1+u);
    faster-growing f is integrated as long as the transformed tail still
    decays, and ToleranceNotMet is raised when it does not (e.g. f = u^k
    with k >= shape, whose moment is infinite).
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    lg = math.lgamma(d.shape)

    def integrand(s):
        s = np.asarray(s, dtype=float)
        u = d.scale * np.exp(-s)
        return np.asarray(f(u), dtype=float) * np.exp(d.shape * s - np.exp(s) - lg)

    def log_weight(s):
        return d.shape * s - math.exp(s) - lg

    # Support of the Gamma weight: peak at s* = ln(shape), cut both sides
    # where it falls to 1e-16 of the peak. Unit precision suffices; the
    # tail extension below picks up whatever the cut leaves out.
    s_peak = math.log(d.shape)
    target = log_weight(s_peak) + _WEIGHT_CUT

    def find_cut(direction: float) -> float:
        s = s_peak
        while log_weight(s) > target:
            s += direction
        return s

    s_lo = find_cut(-1.0)
    s_hi = find_cut(+1.0)

    # Panel heap ordered by error estimate; entries (-err, seq, a, b, val).
    heap: list = []
    seq = 0
    err_total = 0.0
    width = (s_hi - s_lo) / 8.0
    for i in range(8):
        a = s_lo + i * width
        b = s_lo + (i + 1) * width
        v, e = _gk_panel(integrand, a, b)
        heapq.heappush(heap, (-e, seq, a, b, v))
        seq += 1
        err_total += e

    def refine() -> None:
        nonlocal seq, err_total
        while err_total > 0.5 * tol:
            if len(heap) >= _MAX_REFINE:
                raise ToleranceNotMet(
                    f"quadrature stalled at estimated error {err_total:.3g} > tol {tol:.3g}"
                )
            neg_e, _, a, b, _ = heapq.heappop(heap)
            err_total += neg_e  # neg_e = -err of the removed panel
            mid = 0.5 * (a + b)
            for aa, bb in ((a, mid), (mid, b)):
                v, e = _gk_panel(integrand, aa, bb)
                heapq.heappush(heap, (-e, seq, aa, bb, v))
                seq += 1
                err_total += e

    def extend(start: float, direction: float, cap: int) -> None:
        """Unit-width tail panels until their contribution drops below tol/16."""
        nonlocal seq, err_total
        prev = math.inf
        edge = start
        for j in range(cap):
            a, b = (edge - 1.0, edge) if direction < 0 else (edge, edge + 1.0)
            v, e = _gk_panel(integrand, a, b)
            heapq.heappush(heap, (-e, seq, a, b, v))
            seq += 1
            err_total += e
            edge += direction
            if abs(v) <= tol / 16.0:
                return
            if j >= _TAIL_STALL and abs(v) > 0.98 * prev:
                raise ToleranceNotMet(
                    "integrand tail fails to decay; the expectation diverges "
                    "or converges too slowly"
                )
            prev = abs(v)
        raise ToleranceNotMet("integrand tail fails to decay within the panel budget")

    refine()
    extend(s_lo, -1.0, _MAX_TAIL)
    extend(s_hi, +1.0, 200)
    refine()

    # fsum of panel values: exact summation, independent of heap order.
    return math.fsum(item[4] for item in heap)


@dataclass(frozen=True)
class ErgodicEstimate:
    """Time average with a batch-means confidence interval."""

    value: float
    stderr: float
    ci_low: float
    ci_high: float
    n_batches: int
    n_samples: int

    @property
    def ci_half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def ci_covers(self, target: float) -> bool:
        return self.ci_low <= target <= self.ci_high


def ergodic_average(
    traj: Trajectory,
    g: Callable[[np.ndarray], np.ndarray],
    burn_in: float,
    n_batches: int = 20,
) -> ErgodicEstimate:
    """Average of g over the recorded samples with t >= burn_in.

    g maps the (n, 3) array of recorded states to n scalars. The confidence
    interval is a 95% Student-t interval over n_batches equal batch means,
    which absorbs the serial correlation of the trajectory.
    """
    if n_batches < 2:
        raise ValueError("need at least 2 batches")
    t_end = traj.config.t_end
    if not t_end > 2 * burn_in:
        raise ValueError("trajectory horizon must exceed twice the burn-in")
    mask = traj.times >= burn_in
    vals = np.asarray(g(traj.states[mask]), dtype=float)
    if vals.ndim != 1:
        raise ValueError("g must return one value per sample")
    n = vals.size
    if n < n_batches:
        raise ValueError(f"only {n} samples for {n_batches} batches")
    vals = vals[n % n_batches :]  # trim the oldest samples to equal batches
    bm = vals.reshape(n_batches, -1).mean(axis=1)
    value = float(bm.mean())
    stderr = float(bm.std(ddof=1) / math.sqrt(n_batches))
    t975 = float(sps.t.ppf(0.975, n_batches - 1))
    return ErgodicEstimate(
        value=value,
        stderr=stderr,
        ci_low=value - t975 * stderr,
        ci_high=value + t975 * stderr,
        n_batches=n_batches,
        n_samples=vals.size,
    )


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Normalized occupation histogram on log-spaced bins."""

    dims: int
    bin_edges: tuple[np.ndarray, ...]
    masses: np.ndarray
    n_samples: int
    time_window: tuple[float, float]

    def __post_init__(self):
        if np.any(self.masses < 0):
            raise ValueError("masses must be nonnegative")
        if abs(float(self.masses.sum()) - 1.0) > 1e-12:
            raise ValueError("masses must sum to 1")


def _log_edges(column: np.ndarray, n_bins: int) -> np.ndarray:
    """Log-spaced edges over [min, max] padded by one bin on each side."""
    mn = float(column.min())
    mx = float(column.max())
    ratio = (mx / mn) ** (1.0 / n_bins) if mx > mn else 1.0
    ratio = max(ratio, 1.0 + 1e-9)  # degenerate (constant) samples
    return np.geomspace(mn / ratio, mx * ratio, n_bins + 3)


def occupation_histogram(
    traj: Trajectory | Sequence[Trajectory],
    dims: int,
    n_bins: int,
    burn_in: float,
    bin_edges: Sequence[np.ndarray] | None = None,
) -> EmpiricalMeasure:
    """Histogram of the post-burn-in samples of one or several trajectories.

    dims selects the leading components (1: x; 2: x,y; 3: x,y,z). Passing a
    sequence of trajectories pools their samples, which is the ensemble
    occupation measure. bin_edges overrides the automatic log-spaced grid,
    allowing several measures to share one grid for TV comparison.
    """
    if n_bins < 8:
        raise ValueError("n_bins must be >= 8")
    if dims not in (1, 2, 3):
        raise ValueError("dims must be 1, 2, or 3")
    trajs = [traj] if isinstance(traj, Trajectory) else list(traj)
    if not trajs:
        raise ValueError("no trajectories given")
    parts = []
    for tr in trajs:
        mask = tr.times >= burn_in
        parts.append(tr.states[mask][:, :dims])
    data = np.concatenate(parts, axis=0)
    if data.shape[0] == 0:
        raise ValueError("no samples at or after the burn-in time")
    if np.any(data <= 0):
        raise ValueError("log-spaced binning requires strictly positive samples")

    if bin_edges is None:
        edges = [_log_edges(data[:, j], n_bins) for j in range(dims)]
    else:
        edges = [np.asarray(e, dtype=float) for e in bin_edges]
        if len(edges) != dims:
            raise ValueError("need one edge array per dimension")
        for j, e in enumerate(edges):
            if data[:, j].min() < e[0] or data[:, j].max() > e[-1]:
                raise ValueError("shared bin grid does not cover the samples")

    counts, _ = np.histogramdd(data, bins=edges)
    total = counts.sum()
    if int(total) != data.shape[0]:
        raise ValueError("binning lost samples; grid does not cover the data")
    t_end = trajs[0].config.t_end
    return EmpiricalMeasure(
        dims=dims,
        bin_edges=tuple(edges),
        masses=counts / total,
        n_samples=data.shape[0],
        time_window=(burn_in, t_end),
    )


def tv_distance(a: EmpiricalMeasure, b: EmpiricalMeasure) -> float:
    """Total variation (1/2) sum |mass_a - mass_b| on a shared grid."""
    if a.dims != b.dims or len(a.bin_edges) != len(b.bin_edges):
        raise ValueError("measures live on different grids")
    for ea, eb in zip(a.bin_edges, b.bin_edges):
        if not np.array_equal(ea, eb):
            raise ValueError("measures live on different grids")
    return 0.5 * float(np.abs(a.masses - b.masses).sum())


def sup_cdf_gap(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """One-sample Kolmogorov-Smirnov statistic sup_u |F_emp(u) - cdf(u)|."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    if n == 0:
        raise ValueError("no samples")
    F = np.asarray(cdf(s), dtype=float)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - F), np.max(F - (grid - 1.0 / n))))
