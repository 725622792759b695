"""Parameters, functional responses, and vector fields of a stochastic
nutrient-phytoplankton-zooplankton (NPZ) chain.

The model is the three-dimensional Ito system

    dX = [Lambda - F1(X,Y) X Y - alpha1 X + alpha4 Y + alpha5 Z] dt + sigma1 X dW1
    dY = [F1(X,Y) X Y - F2(Y,Z) Y Z - alpha2 Y] dt + sigma2 Y dW2
    dZ = [F2(Y,Z) Y Z - alpha3 Z] dt + sigma3 Z dW3

where X is dissolved nutrient, Y phytoplankton, Z zooplankton, W1..W3 are
independent Wiener processes, Lambda is the nutrient inflow, alpha1 the
nutrient washout rate, alpha2/alpha3 the plankton loss rates, alpha4/alpha5
the instantaneous recycling rates of dead plankton back to the nutrient
pool, and F1, F2 are bounded functional responses.

Structural assumptions checked by `validate_params`:

  * all rates finite and >= 0, Lambda > 0, sigma1 > 0;
  * alpha4 < alpha2 and alpha5 < alpha3 (recycling cannot exceed loss);
  * F1, F2 bounded on the nonnegative quadrant;
  * u -> F1(u,0)*u nondecreasing.

Under these the chain dissipates mass at rate at least

    alpha0 = (1/3) * min(alpha1, alpha2 - alpha4, alpha3 - alpha5)

and E(1 + X + Y + Z)^q stays bounded for exponents q with
(q - 1) * max(sigma_i^2) <= alpha0, which motivates `DerivedConstants`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolated, NonFiniteInput

__all__ = [
    "ModelParams",
    "DerivedConstants",
    "FunctionalResponse",
    "State",
    "ValidationCheck",
    "ValidationReport",
    "constant",
    "holling2",
    "beddington_deangelis",
    "derived_constants",
    "validate_params",
    "drift",
    "diffusion",
]

# Validation grid for response properties: geometric sweep of 10^3 points
# over 12 decades, plus exact zero for the boundedness check.
_GRID_LO = 1e-6
_GRID_HI = 1e6
_MONOTONE_POINTS = 1000
_BOUNDED_POINTS = 100
_MONOTONE_TOL = 1e-12

# Margin subtracted from the admissible moment exponent so that strict
# inequalities survive floating point.
_Q0_MARGIN = 1e-6

KIND_CONSTANT = "Constant"
KIND_HOLLING2 = "HollingII"
KIND_BEDDINGTON_DEANGELIS = "BeddingtonDeAngelis"
RESPONSE_KINDS = (KIND_CONSTANT, KIND_HOLLING2, KIND_BEDDINGTON_DEANGELIS)


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the chain. Units: lambda_input mass/(volume*time);
    alpha1..alpha5 1/time; sigma1..sigma3 1/sqrt(time).

    Construction is permissive so that `validate_params` can report every
    violated assumption at once; nothing here checks the invariants.
    """

    lambda_input: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    sigma1: float
    sigma2: float
    sigma3: float

    def max_sigma_sq(self) -> float:
        return max(self.sigma1**2, self.sigma2**2, self.sigma3**2)


@dataclass(frozen=True)
class DerivedConstants:
    """Dissipation rate alpha0 and the largest usable moment exponent q0.

    q0 = min(2, 1 + alpha0/max sigma_i^2, 1 + 2*alpha1/sigma1^2) - 1e-6:
    the first two terms keep the q0-moment of the chain bounded, the third
    keeps the q0-moment of the nutrient's stationary law finite.
    """

    alpha0: float
    q0: float


@dataclass(frozen=True)
class FunctionalResponse:
    """Bounded uptake kernel F(u, v) = a / (1 + h*u + k*v).

    The three presets are parameter patterns of this one family:

      Constant(a)                h = k = 0      F = a
      HollingII(a, h)            k = 0          F = a / (1 + h*u)
      BeddingtonDeAngelis(a,h,k)                F = a / (1 + h*u + k*v)

    `u` is the resource density the response saturates in (nutrient for F1,
    phytoplankton for F2) and `v` the consumer density. All presets satisfy
    the structural assumptions: F is bounded by `a`, u -> F(u,0)*u is
    nondecreasing, and u -> F(u,v)*u is Lipschitz with constant `a`.
    """

    kind: str
    a: float
    h: float = 0.0
    k: float = 0.0

    def __post_init__(self):
        if self.kind not in RESPONSE_KINDS:
            raise ValueError(f"unknown response kind {self.kind!r}")
        if not (math.isfinite(self.a) and self.a >= 0):
            raise ValueError("response amplitude a must be finite and >= 0")
        if not (math.isfinite(self.h) and self.h >= 0):
            raise ValueError("response parameter h must be finite and >= 0")
        if not (math.isfinite(self.k) and self.k >= 0):
            raise ValueError("response parameter k must be finite and >= 0")
        if self.kind == KIND_CONSTANT and (self.h != 0.0 or self.k != 0.0):
            raise ValueError("Constant response takes no h or k")
        if self.kind == KIND_HOLLING2 and self.k != 0.0:
            raise ValueError("HollingII response takes no k")

    def __call__(self, u, v=0.0):
        # One formula serves all presets; h=k=0 degenerates to the constant.
        return self.a / (1.0 + self.h * u + self.k * v)

    @property
    def bound_L(self) -> float:
        """sup of F over the nonnegative quadrant (attained at u=v=0)."""
        return self.a

    @property
    def lipschitz_L(self) -> float:
        """Lipschitz constant of u -> F(u,v)*u, uniform in v >= 0."""
        return self.a

    @property
    def is_constant(self) -> bool:
        return self.kind == KIND_CONSTANT

    def kernel_coeffs(self) -> tuple[float, float, float]:
        """(a, h, k) for the compiled stepping kernel."""
        return (self.a, self.h, self.k)


def constant(a: float) -> FunctionalResponse:
    return FunctionalResponse(KIND_CONSTANT, a)


def holling2(a: float, h: float) -> FunctionalResponse:
    return FunctionalResponse(KIND_HOLLING2, a, h)


def beddington_deangelis(a: float, h: float, k: float) -> FunctionalResponse:
    return FunctionalResponse(KIND_BEDDINGTON_DEANGELIS, a, h, k)


class State(tuple):
    """Point (x, y, z) in the nonnegative octant."""

    __slots__ = ()

    def __new__(cls, x: float, y: float, z: float):
        return super().__new__(cls, (float(x), float(y), float(z)))

    @property
    def x(self) -> float:
        return self[0]

    @property
    def y(self) -> float:
        return self[1]

    @property
    def z(self) -> float:
        return self[2]

    def __repr__(self) -> str:
        return f"State(x={self[0]!r}, y={self[1]!r}, z={self[2]!r})"


@dataclass(frozen=True)
class ValidationCheck:
    name: str  # the condition that must hold, e.g. "alpha4 < alpha2"
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of every structural check, plus derived constants on success."""

    checks: tuple[ValidationCheck, ...]
    derived: DerivedConstants | None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def violations(self) -> tuple[AssumptionViolated, ...]:
        return tuple(
            AssumptionViolated(c.name, c.detail) for c in self.checks if not c.passed
        )

    def raise_if_failed(self) -> None:
        bad = [c.name for c in self.checks if not c.passed]
        if bad:
            raise AssumptionViolated("; ".join(bad))

    def to_dict(self) -> dict:
        out = {
            "all_passed": self.all_passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }
        if self.derived is not None:
            out["derived"] = {"alpha0": self.derived.alpha0, "q0": self.derived.q0}
        else:
            out["derived"] = None
        return out


def derived_constants(params: ModelParams) -> DerivedConstants:
    """Compute (alpha0, q0). Requires the rate assumptions to hold."""
    alpha0 = min(
        params.alpha1,
        params.alpha2 - params.alpha4,
        params.alpha3 - params.alpha5,
    ) / 3.0
    if not alpha0 > 0:
        raise AssumptionViolated("alpha0 > 0", f"alpha0 = {alpha0}")
    if not params.sigma1 > 0:
        raise AssumptionViolated("sigma1 > 0")
    q0 = (
        min(
            2.0,
            1.0 + alpha0 / params.max_sigma_sq(),
            1.0 + 2.0 * params.alpha1 / params.sigma1**2,
        )
        - _Q0_MARGIN
    )
    if not q0 > 1.0:
        raise AssumptionViolated("q0 > 1", f"q0 = {q0}")
    return DerivedConstants(alpha0=alpha0, q0=q0)


def _response_grid_checks(
    f, label: str, check_monotone: bool
) -> list[ValidationCheck]:
    """Numeric boundedness (and optionally monotonicity) checks on a grid.

    Grids rather than symbolics so that any object with the response
    interface (callable plus `bound_L`) can be screened, not only presets.
    """
    checks = []
    u = np.geomspace(_GRID_LO, _GRID_HI, _BOUNDED_POINTS)
    uv = np.concatenate([[0.0], u])
    vals = np.asarray(f(uv[:, None], uv[None, :]), dtype=float)
    bound = float(f.bound_L)
    ok = bool(np.all(vals >= 0.0) and np.all(vals <= bound * (1 + 1e-12)))
    checks.append(
        ValidationCheck(
            name=f"0 <= {label}(u,v) <= bound_L",
            passed=ok,
            detail=f"grid max {float(np.max(vals)):.6g}, bound_L {bound:.6g}",
        )
    )
    if check_monotone:
        ug = np.geomspace(_GRID_LO, _GRID_HI, _MONOTONE_POINTS)
        g = np.asarray(f(ug, 0.0), dtype=float) * ug
        drops = np.diff(g) < -_MONOTONE_TOL
        checks.append(
            ValidationCheck(
                name=f"{label}(u,0)*u nondecreasing",
                passed=not bool(np.any(drops)),
                detail="" if not np.any(drops) else f"decreases at {int(np.argmax(drops))} grid points",
            )
        )
    return checks


def validate_params(
    params: ModelParams, f1: FunctionalResponse, f2: FunctionalResponse
) -> ValidationReport:
    """Check every structural assumption; never raises mid-way.

    The report lists each sub-assumption with pass/fail, and carries
    `DerivedConstants` when all of them hold.
    """
    p = params
    fields = [
        p.lambda_input, p.alpha1, p.alpha2, p.alpha3, p.alpha4, p.alpha5,
        p.sigma1, p.sigma2, p.sigma3,
    ]
    checks = [
        ValidationCheck(
            name="params finite and >= 0",
            passed=all(math.isfinite(v) and v >= 0 for v in fields),
        ),
        ValidationCheck(
            name="lambda_input > 0",
            passed=math.isfinite(p.lambda_input) and p.lambda_input > 0,
        ),
        ValidationCheck(
            name="sigma1 > 0",
            passed=math.isfinite(p.sigma1) and p.sigma1 > 0,
        ),
        ValidationCheck(
            name="alpha4 < alpha2",
            passed=math.isfinite(p.alpha4) and math.isfinite(p.alpha2) and p.alpha4 < p.alpha2,
            detail=f"alpha4 = {p.alpha4}, alpha2 = {p.alpha2}",
        ),
        ValidationCheck(
            name="alpha5 < alpha3",
            passed=math.isfinite(p.alpha5) and math.isfinite(p.alpha3) and p.alpha5 < p.alpha3,
            detail=f"alpha5 = {p.alpha5}, alpha3 = {p.alpha3}",
        ),
    ]
    checks += _response_grid_checks(f1, "F1", check_monotone=True)
    checks += _response_grid_checks(f2, "F2", check_monotone=False)

    derived = None
    if all(c.passed for c in checks):
        try:
            derived = derived_constants(params)
        except AssumptionViolated as exc:
            checks.append(ValidationCheck(name=exc.name, passed=False, detail=exc.detail))
    return ValidationReport(checks=tuple(checks), derived=derived)


def _check_state(s) -> tuple[float, float, float]:
    x, y, z = float(s[0]), float(s[1]), float(s[2])
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
        raise NonFiniteInput(f"state ({x}, {y}, {z}) has a non-finite coordinate")
    if x < 0 or y < 0 or z < 0:
        raise ValueError(f"state ({x}, {y}, {z}) has a negative coordinate")
    return x, y, z


def drift(
    params: ModelParams,
    f1: FunctionalResponse,
    f2: FunctionalResponse,
    s,
) -> np.ndarray:
    """Deterministic rates (dX, dY, dZ)/dt at state s.

    At y=0 (resp. z=0) the second (third) component is exactly 0, so the
    boundary faces are invariant; at x=0 the first component is
    Lambda + alpha4*y + alpha5*z > 0, pushing inward.
    """
    x, y, z = _check_state(s)
    p = params
    f1xy = f1(x, y) * x * y
    f2yz = f2(y, z) * y * z
    return np.array(
        [
            p.lambda_input - f1xy - p.alpha1 * x + p.alpha4 * y + p.alpha5 * z,
            f1xy - f2yz - p.alpha2 * y,
            f2yz - p.alpha3 * z,
        ]
    )


def diffusion(params: ModelParams, s) -> np.ndarray:
    """Noise amplitudes (sigma1*x, sigma2*y, sigma3*z); the three Wiener
    channels are independent, so the noise matrix is diagonal."""
    x, y, z = _check_state(s)
    return np.array([params.sigma1 * x, params.sigma2 * y, params.sigma3 * z])
