"""Compiled time-stepping kernels.

One kernel serves the 3D chain, the 2D zooplankton-free subsystem, and the
1D nutrient equation: the boundary faces y=0 and z=0 are exactly invariant
(every y- or z-term carries its own factor), so the lower-dimensional runs
are the 3D kernel started on the corresponding face. Under the hybrid
scheme the plankton components are carried as logarithms, with ln(0) = -inf
representing an absorbed component; exp(-inf) = 0.0 keeps the arithmetic
exact along the faces.

The functional responses enter as F(u, v) = a / (1 + h*u + k*v), which
covers the constant (h=k=0), Holling II (k=0), and Beddington-DeAngelis
presets without branching.
"""

import numpy as np
from numba import njit

# Overflow guards: natural coordinates against 1e300, log coordinates
# against ln(1e300). Deliberately far above any dissipative trajectory.
OVERFLOW = 1e300
LOG_OVERFLOW = 690.77552789821368


@njit(cache=True, nogil=True)
def run_block(
    state, k0, n_sub, dt, sqrt_dt,
    lam, a1, a2, a3, a4, a5, s1, s2, s3,
    f1a, f1h, f1k, f2a, f2h, f2k,
    log_scheme, g1, g2, g3, stride, out,
):
    """Advance n_sub steps from global step index k0.

    state = [x, u_y, u_z] where u = ln(value) under the log scheme and the
    natural value otherwise; updated in place. Standard normal increments
    g1..g3 are consumed one per step per channel. Rows out[k // stride] are
    filled for global steps k with k % stride == 0. Returns (clamps,
    overflow_step) with overflow_step == -1 when no coordinate left the
    guarded range.
    """
    x = state[0]
    uy = state[1]
    uz = state[2]
    clamps = 0
    for i in range(n_sub):
        k = k0 + i + 1
        if log_scheme:
            y = np.exp(uy)
            z = np.exp(uz)
        else:
            y = uy
            z = uz
        f1 = f1a / (1.0 + f1h * x + f1k * y)
        f2 = f2a / (1.0 + f2h * y + f2k * z)

        # Nutrient: Euler-Maruyama, clamped at 0 (inward drift lam > 0
        # makes clamps rare); clamps are counted, never silent.
        xn = x + (lam - f1 * x * y - a1 * x + a4 * y + a5 * z) * dt \
            + s1 * x * sqrt_dt * g1[i]
        if xn < 0.0:
            xn = 0.0
            clamps += 1

        if log_scheme:
            # Plankton: exact log-coordinate Euler with the Ito correction;
            # positivity is structural, an absorbed (-inf) component stays put.
            uy = uy + (f1 * x - f2 * z - a2 - 0.5 * s2 * s2) * dt \
                + s2 * sqrt_dt * g2[i]
            uz = uz + (f2 * y - a3 - 0.5 * s3 * s3) * dt + s3 * sqrt_dt * g3[i]
            over = (not (xn <= OVERFLOW)) or (not (uy <= LOG_OVERFLOW)) \
                or (not (uz <= LOG_OVERFLOW))
        else:
            yn = y + (f1 * x * y - f2 * y * z - a2 * y) * dt \
                + s2 * y * sqrt_dt * g2[i]
            zn = z + (f2 * y * z - a3 * z) * dt + s3 * z * sqrt_dt * g3[i]
            if yn < 0.0:
                yn = 0.0
                clamps += 1
            if zn < 0.0:
                zn = 0.0
                clamps += 1
            uy = yn
            uz = zn
            over = (not (xn <= OVERFLOW)) or (not (uy <= OVERFLOW)) \
                or (not (uz <= OVERFLOW))

        x = xn
        if over:
            state[0] = x
            state[1] = uy
            state[2] = uz
            return clamps, k
        if k % stride == 0:
            r = k // stride
            out[r, 0] = x
            if log_scheme:
                out[r, 1] = np.exp(uy)
                out[r, 2] = np.exp(uz)
            else:
                out[r, 1] = uy
                out[r, 2] = uz

    state[0] = x
    state[1] = uy
    state[2] = uz
    return clamps, -1
