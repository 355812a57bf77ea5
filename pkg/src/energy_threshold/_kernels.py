"""Compiled inner loops."""

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def rk4_clamped_linear(drive, decay, x0, dt, unit_bounds, bound_tol):
    """Classical RK4 for ``x' = drive(t) - decay(t) * x``, componentwise.

    ``drive`` and ``decay`` are sampled at the interleaved stage times
    (node, midpoint, node, ...), shape ``(2N + 1, k)``.  With ``unit_bounds``
    each component is kept in [0, 1]; excursions beyond ``bound_tol`` are
    counted.  Returns ``(x, violations, bad_step)`` where ``bad_step`` is the
    first step producing a non-finite value, or -1.
    """
    n_steps = (drive.shape[0] - 1) // 2
    k = drive.shape[1]
    x = np.empty((n_steps + 1, k))
    x[0, :] = x0
    violations = 0
    half = 0.5 * dt
    sixth = dt / 6.0
    for s in range(n_steps):
        i0 = 2 * s
        for j in range(k):
            xs = x[s, j]
            k1 = drive[i0, j] - decay[i0, j] * xs
            k2 = drive[i0 + 1, j] - decay[i0 + 1, j] * (xs + half * k1)
            k3 = drive[i0 + 1, j] - decay[i0 + 1, j] * (xs + half * k2)
            k4 = drive[i0 + 2, j] - decay[i0 + 2, j] * (xs + dt * k3)
            xn = xs + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(xn):
                return x, violations, s
            if unit_bounds:
                if xn < 0.0:
                    if xn < -bound_tol:
                        violations += 1
                    xn = 0.0
                elif xn > 1.0:
                    if xn > 1.0 + bound_tol:
                        violations += 1
                    xn = 1.0
            x[s + 1, j] = xn
    return x, violations, -1
