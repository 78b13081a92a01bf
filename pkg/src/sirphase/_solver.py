"""Compiled Dormand-Prince 5(4) stepper.

One kernel serves plain state integration and state-plus-tangent
integration. The integrated vector is ``y = [x (n), Q (n*m, row-major)]``
where ``Q`` holds ``m`` tangent vectors as columns and obeys
``dQ/dt = J(t, x) Q``. ``m = 0`` disables the tangent block.

``field(t, x, args, out)`` and ``jac(t, x, args, out)`` must be numba
compiled; they are passed as first-class functions.
"""

import math

import numba as nb
import numpy as np

OK = 0
UNDERFLOW = 1
NONFINITE = 2

# Dormand-Prince coefficients
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# difference between 5th and embedded 4th order weights
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

SAFETY = 0.9
PI_BETA = 0.04
EXPO = 0.2 - 0.75 * PI_BETA
FAC_MIN = 0.2
FAC_MAX = 10.0


@nb.njit(cache=True)
def _rhs(field, jac, t, y, args, n, m, out, jbuf):
    field(t, y[:n], args, out[:n])
    if m > 0:
        jac(t, y[:n], args, jbuf)
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(n):
                    acc += jbuf[i, k] * y[n + k * m + j]
                out[n + i * m + j] = acc


@nb.njit(cache=True)
def advance(field, jac, args, t, y, t1, h, n, m, rtol, atol, hmax, hmin, stats):
    """Integrate ``y`` in place from ``t`` to exactly ``t1``.

    Returns ``(t, h_next, status)``. ``stats`` accumulates
    ``[accepted, rejected, sum of local error estimates]``; the last entry
    sums the max-norm of the state part of each accepted local error.
    """
    size = y.shape[0]
    k1 = np.empty(size)
    k2 = np.empty(size)
    k3 = np.empty(size)
    k4 = np.empty(size)
    k5 = np.empty(size)
    k6 = np.empty(size)
    k7 = np.empty(size)
    yt = np.empty(size)
    yn = np.empty(size)
    jbuf = np.empty((n, n))

    for i in range(size):
        if not math.isfinite(y[i]):
            return t, h, NONFINITE
    _rhs(field, jac, t, y, args, n, m, k1, jbuf)
    for i in range(size):
        if not math.isfinite(k1[i]):
            return t, h, NONFINITE

    err_old = 1e-4
    rejected_last = False
    while t < t1:
        if h > hmax:
            h = hmax
        last = False
        step = h
        if t + step >= t1:
            step = t1 - t
            last = True

        for i in range(size):
            yt[i] = y[i] + step * A21 * k1[i]
        _rhs(field, jac, t + C2 * step, yt, args, n, m, k2, jbuf)
        for i in range(size):
            yt[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i])
        _rhs(field, jac, t + C3 * step, yt, args, n, m, k3, jbuf)
        for i in range(size):
            yt[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _rhs(field, jac, t + C4 * step, yt, args, n, m, k4, jbuf)
        for i in range(size):
            yt[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _rhs(field, jac, t + C5 * step, yt, args, n, m, k5, jbuf)
        for i in range(size):
            yt[i] = y[i] + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                   + A64 * k4[i] + A65 * k5[i])
        t_new = t1 if last else t + step
        _rhs(field, jac, t_new, yt, args, n, m, k6, jbuf)
        for i in range(size):
            yn[i] = y[i] + step * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                   + B5 * k5[i] + B6 * k6[i])
        _rhs(field, jac, t_new, yn, args, n, m, k7, jbuf)

        err = 0.0
        err_state = 0.0
        for i in range(size):
            e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                        + E6 * k6[i] + E7 * k7[i])
            if i < n and abs(e) > err_state:
                err_state = abs(e)
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / size)

        if not math.isfinite(err):
            # finite state and slope but non-finite trial: blow-up, shrink
            err = 1e300
        if err <= 1.0:
            if err == 0.0:
                factor = FAC_MAX
            else:
                factor = SAFETY * err ** (-EXPO) * err_old ** PI_BETA
                factor = min(FAC_MAX, max(FAC_MIN, factor))
            if rejected_last:
                factor = min(factor, 1.0)
            err_old = max(err, 1e-4)
            rejected_last = False
            t = t_new
            for i in range(size):
                y[i] = yn[i]
                k1[i] = k7[i]
            stats[0] += 1.0
            stats[2] += err_state
            if not last:
                h = step * factor
            for i in range(size):
                if not math.isfinite(y[i]):
                    return t, h, NONFINITE
        else:
            factor = max(FAC_MIN, SAFETY * err ** (-0.2))
            h = step * factor
            rejected_last = True
            stats[1] += 1.0
            if h < hmin:
                return t, h, UNDERFLOW
    return t, h, OK


@nb.njit(cache=True)
def _no_jacobian(t, x, args, out):
    pass
