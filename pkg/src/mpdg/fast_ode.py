"""Scalar fast path for long reference integrations of small ODE systems.

The third-order MP RK stepper below is algebraically identical to
:func:`mpdg.integrators.mprk3_step` (same coefficient table, same stage
structure) but works on plain Python floats, which is two orders of
magnitude faster for the 2-3 species systems that the convergence
studies integrate hundreds of thousands of times for their reference
trajectories. The equivalence is pinned by a dedicated test against the
array implementation.
"""

from __future__ import annotations

from .integrators import MPRK3_PARAMS


def _stage(b, w, sigma, dt, m):
    """Solve c_i = b_i + dt*(sum_j w_ij c_j/sigma_j - sum_j w_ji c_i/sigma_i)."""
    inv = [0.0] * m
    for j in range(m):
        if any(w[i][j] != 0.0 for i in range(m)):
            inv[j] = dt / sigma[j]
    o = [[w[i][j] * inv[j] for j in range(m)] for i in range(m)]
    if m == 2:
        a00 = 1.0 + o[0][0] + o[1][0] - o[0][0]
        a11 = 1.0 + o[0][1] + o[1][1] - o[1][1]
        det = a00 * a11 - o[0][1] * o[1][0]
        c = [(a11 * b[0] + o[0][1] * b[1]) / det, (o[1][0] * b[0] + a00 * b[1]) / det]
    elif m == 3:
        a = [[-o[i][j] for j in range(3)] for i in range(3)]
        for j in range(3):
            a[j][j] += 1.0 + o[0][j] + o[1][j] + o[2][j]
        c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1]
        c01 = a[0][2] * a[2][1] - a[0][1] * a[2][2]
        c02 = a[0][1] * a[1][2] - a[0][2] * a[1][1]
        c10 = a[1][2] * a[2][0] - a[1][0] * a[2][2]
        c11 = a[0][0] * a[2][2] - a[0][2] * a[2][0]
        c12 = a[0][2] * a[1][0] - a[0][0] * a[1][2]
        c20 = a[1][0] * a[2][1] - a[1][1] * a[2][0]
        c21 = a[0][1] * a[2][0] - a[0][0] * a[2][1]
        c22 = a[0][0] * a[1][1] - a[0][1] * a[1][0]
        det = a[0][0] * c00 + a[1][0] * c01 + a[2][0] * c02
        c = [
            (c00 * b[0] + c01 * b[1] + c02 * b[2]) / det,
            (c10 * b[0] + c11 * b[1] + c12 * b[2]) / det,
            (c20 * b[0] + c21 * b[1] + c22 * b[2]) / det,
        ]
    else:
        raise ValueError("scalar fast path supports 2 or 3 species")
    total_b = sum(b)
    total_c = sum(c)
    if total_c > 0.0:
        f = total_b / total_c
        c = [ci * f for ci in c]
    return c


def mprk3_step_scalar(rates, c, dt, convection=None):
    """One third-order MP RK step on lists; `rates(c)` returns the
    production matrix as nested lists, `convection(c)` a list."""
    q = MPRK3_PARAMS
    m = len(c)
    zero = [0.0] * m

    def conv(state):
        return convection(state) if convection is not None else zero

    p0 = rates(c)
    f0 = conv(c)
    b1 = [c[i] + q["b10"] * dt * f0[i] for i in range(m)]
    w1 = [[q["b10"] * p0[i][j] for j in range(m)] for i in range(m)]
    c1 = _stage(b1, w1, c, dt, m)
    p1 = rates(c1)
    f1 = conv(c1)

    n2 = 1.0 - q["n1"]
    rho = [q["n1"] * c1[i] + n2 * c[i] * (c1[i] / c[i]) ** 2 for i in range(m)]
    a21 = 1.0 - q["a20"]
    b2 = [q["a20"] * c[i] + a21 * c1[i] + dt * (q["b20"] * f0[i] + q["b21"] * f1[i]) for i in range(m)]
    w2 = [[q["b20"] * p0[i][j] + q["b21"] * p1[i][j] for j in range(m)] for i in range(m)]
    c2 = _stage(b2, w2, rho, dt, m)
    p2 = rates(c2)
    f2 = conv(c2)

    mu = [c[i] * (c1[i] / c[i]) ** q["s"] for i in range(m)]
    eta2 = 1.0 - q["z"] - q["eta1"]
    ba = [q["eta1"] * c[i] + eta2 * c1[i] + dt * (q["g3"] * f0[i] + q["g4"] * f1[i]) for i in range(m)]
    wa = [[q["eta3"] * p0[i][j] + q["eta4"] * p1[i][j] for j in range(m)] for i in range(m)]
    av = _stage(ba, wa, mu, dt, m)

    sigma = [av[i] + q["z"] * c[i] * (c2[i] / rho[i]) for i in range(m)]
    a32 = 1.0 - q["a30"] - q["a31"]
    b3 = [
        q["a30"] * c[i] + q["a31"] * c1[i] + a32 * c2[i]
        + dt * (q["b30"] * f0[i] + q["b31"] * f1[i] + q["b32"] * f2[i])
        for i in range(m)
    ]
    w3 = [[q["b30"] * p0[i][j] + q["b31"] * p1[i][j] + q["b32"] * p2[i][j] for j in range(m)] for i in range(m)]
    return _stage(b3, w3, sigma, dt, m)


def reference_endpoint(rates, c0, dt, t_final, convection=None):
    """March mprk3_step_scalar to t_final (dt assumed to divide it)."""
    c = list(map(float, c0))
    n = round(t_final / dt)
    for _ in range(n):
        c = mprk3_step_scalar(rates, c, dt, convection)
    return c
