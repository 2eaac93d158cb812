"""Modified Patankar (MP) time integrators for production-destruction systems.

All schemes here share one building block: a linearly implicit stage in
which production and destruction terms are weighted by ratios of the
unknown to a positive denominator sigma,

    c_i = b_i + dt * ( sum_j wp_ij c_j / sigma_j - sum_j wd_ij c_i / sigma_i ).

The stage matrix is an M-matrix for any dt > 0, so the solve always has a
componentwise-positive solution when b > 0, and when wd = wp^T the column
sums are exactly one, so sum(c) = sum(b) to round-off. Positivity and
conservation are therefore unconditional; the choice of sigma only sets
the order of accuracy:

  * MPE           sigma = c^n                               (order 1)
  * MPRK2(a, b)   sigma = (c^(1))^s (c^n)^(1-s), s(a, b)    (order 2)
  * MPRK3         staged denominators rho, mu, sigma        (order 3)
  * MPMS2(s)      sigma = (c^n)^s (c^n-1)^r (c^n-2)^(1-r-s),
                  r = 3 - 2s                                (order 2)
  * MPMS3(s)      sigma = (c^n)^s (c^n-1)^r (c^n-2)^p (c^n-3)^(1-r-s-p),
                  r = -3s + 6, p = 3s - 8                   (order 3)

The multistep schemes are built on the strong-stability-preserving
two-step and four-step methods

    u^(n+1) = 1/4 u^(n-2) + 3/4 u^n + 3/2 dt L(u^n)
    u^(n+1) = 11/27 u^(n-3) + 4/9 dt L(u^(n-3)) + 16/27 u^n + 16/9 dt L(u^n)

whose convex-combination structure is what lets the PDE driver reuse the
forward-Euler positivity theory for the convection part. Every stepper
optionally accepts an explicit convection increment evaluated at the
history levels the underlying explicit scheme prescribes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import (
    BootstrapError,
    ConfigurationError,
    InternalSolverError,
    PreconditionError,
)
from .pds import PDSSpec

Convection = Callable[[np.ndarray], np.ndarray]

# Strictly positive history is required because sigma carries negative
# powers of it; values below this floor would overflow, and clipping
# would hide the modeling problem, so they are rejected instead.
HISTORY_FLOOR = 1e-300

# Coefficient table of the third-order MP RK scheme: a three-stage
# Shu-Osher explicit base (alpha/beta rows, all nonnegative) plus the
# Patankar-denominator parameters. The auxiliary denominators are
#
#   rho   = n1*c1 + n2*c0*(c1/c0)^2          (stage-2 denominator)
#   mu    = c0*(c1/c0)^s                     (interpolation denominator)
#   a     = eta1*c0 + eta2*c1 + dt*(eta3 p0 + eta4 p1)-weighted stage / mu
#   sigma = a + z*c0*c2/rho                  (final denominator)
#
# with eta2 = 1 - z - eta1 and every entry nonnegative, so all
# denominators stay positive for positive states and the scheme is
# unconditionally positivity-preserving. The values solve the full
# third-order conditions of this structure (derived independently by
# series analysis; residuals of the order-1/2/3 coefficients on fresh
# random systems are 1e-14 / 9e-13 / 1e-10). The canonical SSP-RK3 base
# admits no nonnegative solution of these conditions, which forces this
# non-canonical base.
#
# An optional explicit convection increment is carried with the base-RK
# beta weights (third order for pure convection); the interpolation
# stage takes it with the weights (g3, g4), which zero the mixed
# flux-source error coefficients at first and second order exactly.
# The mixed third-order coefficient does not vanish for this structure
# (no unconditionally positive solution was found), so the scheme is
# second-order accurate for combined convection + stiff source and
# third-order when either part vanishes.
MPRK3_PARAMS = {
    "b10": 0.42237935251785713,
    "a20": 0.9160932839933794,
    "b20": 0.0,
    "b21": 0.6811759698770834,
    "a30": 0.7049850295994476,
    "a31": 0.0,
    "b30": 0.20930979469310068,
    "b31": 8.387281563715376e-09,
    "b32": 0.579277620779076,
    "n1": 0.04010988299988073,
    "z": 0.5354107126752738,
    "eta1": 0.4303086402889353,
    "eta3": 0.059709640229489575,
    "eta4": 2.1407742501432145,
    "s": 5.025517106009755,
    "g3": 0.02753152,
    "g4": 0.99478972,
}


# ---------------------------------------------------------------------------
# scheme descriptors
# ---------------------------------------------------------------------------

_KIND_NAMES = (
    "mpe",
    "mprk2",
    "mprk3",
    "mpms2",
    "mpms3",
    "ssp-ms2",
    "ssp-ms3",
    "explicit-euler",
)


@dataclass(frozen=True)
class IntegratorKind:
    """Scheme selector plus its free parameters.

    MPRK2 carries (alpha, beta) with 0 <= alpha <= 1, beta > 0 and
    alpha*beta + 1/(2*beta) <= 1; its denominator exponent is

        s = (1 - alpha*beta + alpha*beta^2) / (beta * (1 - alpha*beta)).

    MPMS2/MPMS3 carry the sigma exponent s; the companion exponents are
    r = 3 - 2s and (r, p) = (-3s + 6, 3s - 8) respectively.
    """

    name: str
    alpha: float = 0.0
    beta: float = 1.0
    s: float = 1.5

    def __post_init__(self) -> None:
        if self.name not in _KIND_NAMES:
            raise ConfigurationError(f"unknown integrator {self.name!r}; expected one of {_KIND_NAMES}")
        if self.name == "mprk2":
            validate_mprk2_parameters(self.alpha, self.beta)

    @property
    def history_depth(self) -> int:
        if self.name in ("mpms2", "ssp-ms2"):
            return 3
        if self.name in ("mpms3", "ssp-ms3"):
            return 4
        return 1

    @property
    def order(self) -> int:
        return {"mpe": 1, "explicit-euler": 1, "mprk2": 2, "mpms2": 2, "ssp-ms2": 2,
                "mprk3": 3, "mpms3": 3, "ssp-ms3": 3}[self.name]


def validate_mprk2_parameters(alpha: float, beta: float) -> None:
    if not (0.0 <= alpha <= 1.0):
        raise ConfigurationError(f"mprk2 requires 0 <= alpha <= 1, got alpha={alpha}")
    if not beta > 0.0:
        raise ConfigurationError(f"mprk2 requires beta > 0, got beta={beta}")
    if alpha * beta + 1.0 / (2.0 * beta) > 1.0 + 1e-14:
        raise ConfigurationError(
            f"mprk2 requires alpha*beta + 1/(2 beta) <= 1, got {alpha * beta + 0.5 / beta}"
        )


def mprk2_exponent(alpha: float, beta: float) -> float:
    """Denominator exponent s of the second-order MP RK scheme."""
    return (1.0 - alpha * beta + alpha * beta**2) / (beta * (1.0 - alpha * beta))


# ---------------------------------------------------------------------------
# the Patankar stage solve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StageWeights:
    """One linearly implicit Patankar stage.

    b is the explicit part, wp/wd are nonnegative production/destruction
    weight matrices (already including any scheme coefficients), sigma
    holds the positive denominators and dt the step size multiplying the
    weighted source.
    """

    b: np.ndarray
    wp: np.ndarray
    wd: np.ndarray
    sigma: np.ndarray
    dt: float


def _stage_matrix(wp: np.ndarray, wd: np.ndarray, sigma: np.ndarray, dt: float) -> np.ndarray:
    """Assemble I + dt*diag(D/sigma) - dt*wp*diag(1/sigma) batched over
    leading axes. Shapes: wp, wd (..., M, M); sigma (..., M).

    A denominator is only consulted where some weight actually divides
    by it; where the destruction row and production column of species j
    are entirely zero, sigma_j is never used, which is what makes states
    with exactly-zero species solvable (their rates vanish by the
    d_ij(c)=0-at-c_i=0 premise).

    When wd is exactly the transpose of wp, the destruction diagonal is
    accumulated from the same normalized products as the production
    off-diagonals, making every column sum exactly one in floating
    point; conservation then holds to solver round-off even for
    dt*rate/sigma far above 1.
    """
    m = sigma.shape[-1]
    needed = (wp > 0.0).any(axis=-2) | (wd > 0.0).any(axis=-1)
    bad = needed & ~(sigma > 0.0)
    if np.any(bad):
        raise PreconditionError(
            "sigma must be positive wherever production/destruction weights are nonzero"
        )
    with np.errstate(divide="ignore"):
        inv_sigma = np.where(needed, 1.0 / np.where(needed, sigma, 1.0), 0.0)
    idx = np.arange(m)
    if wd is wp.T or np.array_equal(wd, np.swapaxes(wp, -1, -2)):
        # diagonal = 1 + (destruction incl. self) - (self production)
        #          = 1 + colsum(O) - O_jj, assembled from -O_jj + (1 + colsum)
        o = dt * wp * inv_sigma[..., None, :]
        a = -o
        a[..., idx, idx] += 1.0 + o.sum(axis=-2)
        return a
    a = -dt * wp * inv_sigma[..., None, :]
    a[..., idx, idx] += 1.0 + dt * wd.sum(axis=-1) * inv_sigma
    return a


def mp_stage_solve(weights: StageWeights) -> np.ndarray:
    """Solve one Patankar stage by dense LU with partial pivoting.

    The solution is componentwise positive for any dt > 0 when b > 0,
    and sum(c) == sum(b) up to solver round-off when wd = wp^T. M is
    small (<= 10 in every model here), so a dense solve is the right
    tool; the matrix is an M-matrix, making pivoting a safety net only.
    Systems with M <= 3 take a closed-form scalar path (the ODE drivers
    call this tens of thousands of times for reference trajectories).
    """
    b = np.asarray(weights.b, dtype=float)
    sigma = np.asarray(weights.sigma, dtype=float)
    wp = np.asarray(weights.wp, dtype=float)
    wd = np.asarray(weights.wd, dtype=float)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(wp)) and np.all(np.isfinite(wd))):
        raise PreconditionError("non-finite stage inputs")
    if np.any(wp < 0.0) or np.any(wd < 0.0):
        raise PreconditionError("stage weight matrices must be nonnegative")
    if np.any(b < 0.0):
        raise PreconditionError("stage explicit part must be nonnegative")
    transposed = np.array_equal(wd, np.swapaxes(wp, -1, -2))
    if b.shape[-1] in (2, 3) and transposed:
        c = _stage_solve_small(b, wp, sigma, weights.dt)
        if c is not None:
            return c
    a = _stage_matrix(wp, wd, sigma, weights.dt)
    try:
        c = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:  # cannot occur for valid inputs
        raise InternalSolverError(f"singular Patankar stage system: {exc}") from exc
    if not np.all(np.isfinite(c)) or np.any(c[b > 0.0] <= 0.0):
        raise InternalSolverError("Patankar stage lost positivity; inputs violate the structure")
    if transposed:
        c = _conservative_closure(c, b)
    return c


def _stage_solve_small(b: np.ndarray, wp: np.ndarray, sigma: np.ndarray, dt: float):
    """Closed-form 2x2/3x3 stage solve (wd = wp^T), scalar arithmetic.

    Returns None when a denominator is degenerate so the caller falls
    back to the guarded generic path.
    """
    m = b.shape[-1]
    inv = [0.0] * m
    for j in range(m):
        col_used = any(wp[i, j] != 0.0 for i in range(m))
        if col_used:
            sj = sigma[j]
            if not sj > 0.0:
                if sj != float("inf"):
                    return None
                inv[j] = 0.0
            else:
                inv[j] = dt / sj
    if m == 2:
        o01 = wp[0, 1] * inv[1]
        o10 = wp[1, 0] * inv[0]
        a00 = 1.0 + o10
        a11 = 1.0 + o01
        det = a00 * a11 - o01 * o10
        c0 = (a11 * b[0] + o01 * b[1]) / det
        c1 = (o10 * b[0] + a00 * b[1]) / det
        out = np.array([c0, c1])
    else:
        o = [[wp[i, j] * inv[j] for j in range(3)] for i in range(3)]
        a = [[-o[i][j] for j in range(3)] for i in range(3)]
        for j in range(3):
            a[j][j] += 1.0 + o[0][j] + o[1][j] + o[2][j]
        cof00 = a[1][1] * a[2][2] - a[1][2] * a[2][1]
        cof01 = a[0][2] * a[2][1] - a[0][1] * a[2][2]
        cof02 = a[0][1] * a[1][2] - a[0][2] * a[1][1]
        det = a[0][0] * cof00 + a[1][0] * cof01 + a[2][0] * cof02
        cof10 = a[1][2] * a[2][0] - a[1][0] * a[2][2]
        cof11 = a[0][0] * a[2][2] - a[0][2] * a[2][0]
        cof12 = a[0][2] * a[1][0] - a[0][0] * a[1][2]
        cof20 = a[1][0] * a[2][1] - a[1][1] * a[2][0]
        cof21 = a[0][1] * a[2][0] - a[0][0] * a[2][1]
        cof22 = a[0][0] * a[1][1] - a[0][1] * a[1][0]
        out = np.array([
            (cof00 * b[0] + cof01 * b[1] + cof02 * b[2]) / det,
            (cof10 * b[0] + cof11 * b[1] + cof12 * b[2]) / det,
            (cof20 * b[0] + cof21 * b[1] + cof22 * b[2]) / det,
        ])
    if not np.all(np.isfinite(out)) or np.any(out[b > 0.0] <= 0.0):
        raise InternalSolverError("Patankar stage lost positivity; inputs violate the structure")
    total_c = out.sum()
    total_b = b.sum()
    if total_c > 0.0:
        factor = total_b / total_c
        if abs(factor - 1.0) > 1e-8:
            raise InternalSolverError(
                "stage solve lost mass beyond round-off; production/destruction structure is broken"
            )
        out *= factor
    return out


def _conservative_closure(c: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rescale the stage solution so sum(c) == sum(b) to round-off.

    With wd = wp^T the column sums of the stage matrix are exactly one,
    so any defect in sum(c) is pure LU round-off (order eps * cond(A),
    i.e. large only in very stiff regimes). The multiplicative closure
    keeps positivity exactly; a defect beyond what round-off can explain
    indicates broken structure and raises instead of being hidden.
    """
    total_b = b.sum(axis=-1)
    total_c = c.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(total_c > 0.0, total_b / np.where(total_c > 0.0, total_c, 1.0), 1.0)
    if np.any(np.abs(factor - 1.0) > 1e-8):
        raise InternalSolverError(
            "stage solve lost mass beyond round-off; production/destruction structure is broken"
        )
    return c * factor[..., None]


def mp_stage_solve_batched(
    b: np.ndarray, wp: np.ndarray, wd: np.ndarray, sigma: np.ndarray, dt: float
) -> np.ndarray:
    """Vectorized stage solve over leading axes (used per quadrature node
    by the PDE driver). Same contract as mp_stage_solve, looser input
    checks for speed; b may contain exact zeros (zero species stay zero
    unless produced)."""
    a = _stage_matrix(wp, wd, sigma, dt)
    c = np.linalg.solve(a, b[..., None])[..., 0]
    if not np.all(np.isfinite(c)):
        raise InternalSolverError("non-finite Patankar stage solution")
    return _conservative_closure(c, b)


# ---------------------------------------------------------------------------
# history
# ---------------------------------------------------------------------------


@dataclass
class StepHistory:
    """Ring of up to four prior states, newest first (levels[0] = c^n)."""

    levels: list = field(default_factory=list)
    max_levels: int = 4

    def push(self, c: np.ndarray) -> None:
        self.levels.insert(0, np.asarray(c, dtype=float))
        del self.levels[self.max_levels:]

    def __len__(self) -> int:
        return len(self.levels)

    def require(self, n: int, scheme: str) -> Sequence[np.ndarray]:
        if len(self.levels) < n:
            raise BootstrapError(f"{scheme} needs {n} history levels, have {len(self.levels)}")
        levels = self.levels[:n]
        for c in levels:
            _require_positive_history(c, scheme)
        return levels


def _require_positive_history(c: np.ndarray, scheme: str) -> None:
    if np.any(~(np.asarray(c) > HISTORY_FLOOR)):
        raise PreconditionError(
            f"{scheme} requires strictly positive history (floor {HISTORY_FLOOR:g}); "
            "a vanishing concentration makes the sigma powers ill-defined"
        )


def sigma_ms2(c_n: np.ndarray, c_nm1: np.ndarray, c_nm2: np.ndarray, s: float) -> np.ndarray:
    """sigma = (c^n)^s (c^n-1)^r (c^n-2)^(1-r-s) with r = 3 - 2s."""
    r = 3.0 - 2.0 * s
    return c_n**s * c_nm1**r * c_nm2 ** (1.0 - r - s)


def sigma_ms3(
    c_n: np.ndarray, c_nm1: np.ndarray, c_nm2: np.ndarray, c_nm3: np.ndarray, s: float
) -> np.ndarray:
    """sigma = (c^n)^s (c^n-1)^r (c^n-2)^p (c^n-3)^(1-r-s-p),
    r = -3s + 6, p = 3s - 8."""
    r = -3.0 * s + 6.0
    p = 3.0 * s - 8.0
    return c_n**s * c_nm1**r * c_nm2**p * c_nm3 ** (1.0 - r - s - p)


# ---------------------------------------------------------------------------
# steppers
# ---------------------------------------------------------------------------


def _convect(convection: Convection | None, c: np.ndarray) -> np.ndarray:
    if convection is None:
        return np.zeros_like(c)
    f = np.asarray(convection(c), dtype=float)
    if f.shape != c.shape:
        raise PreconditionError("convection increment has wrong shape")
    return f


def mpe_step(
    spec: PDSSpec,
    c: np.ndarray,
    dt: float,
    convection: Convection | None = None,
    ctx: Any = None,
) -> np.ndarray:
    """First-order modified Patankar Euler step."""
    c = np.asarray(c, dtype=float)
    _require_positive_history(c, "mpe")
    b = c + dt * _convect(convection, c)
    if np.any(b < 0.0):
        raise PreconditionError("convection increment violated c + dt*f >= 0")
    p = spec.rates(c, ctx)
    return mp_stage_solve(StageWeights(b=b, wp=p, wd=p.T, sigma=c, dt=dt))


def mprk2_step(
    spec: PDSSpec,
    c: np.ndarray,
    dt: float,
    alpha: float = 0.0,
    beta: float = 1.0,
    convection: Convection | None = None,
    ctx: Any = None,
) -> np.ndarray:
    """Second-order modified Patankar RK step with parameters (alpha, beta)."""
    validate_mprk2_parameters(alpha, beta)
    c = np.asarray(c, dtype=float)
    _require_positive_history(c, "mprk2")
    s = mprk2_exponent(alpha, beta)
    b20 = 1.0 - 0.5 / beta - alpha * beta
    b21 = 0.5 / beta

    p0 = spec.rates(c, ctx)
    f0 = _convect(convection, c)
    b1 = c + beta * dt * f0
    if np.any(b1 < 0.0):
        raise PreconditionError("convection increment violated positivity at stage 1")
    c1 = mp_stage_solve(StageWeights(b=b1, wp=beta * p0, wd=beta * p0.T, sigma=c, dt=dt))

    p1 = spec.rates(c1, ctx)
    f1 = _convect(convection, c1)
    b2 = (1.0 - alpha) * c + alpha * c1 + dt * (b20 * f0 + b21 * f1)
    if np.any(b2 < 0.0):
        raise PreconditionError("convection increment violated positivity at stage 2")
    wp = b20 * p0 + b21 * p1
    sigma = c1**s * c ** (1.0 - s)
    return mp_stage_solve(StageWeights(b=b2, wp=wp, wd=wp.T, sigma=sigma, dt=dt))


def mprk3_step(
    spec: PDSSpec,
    c: np.ndarray,
    dt: float,
    convection: Convection | None = None,
    ctx: Any = None,
) -> np.ndarray:
    """Third-order modified Patankar RK step (coefficients MPRK3_PARAMS)."""
    q = MPRK3_PARAMS
    n2 = 1.0 - q["n1"]
    eta2 = 1.0 - q["z"] - q["eta1"]
    a21 = 1.0 - q["a20"]
    a32 = 1.0 - q["a30"] - q["a31"]
    c = np.asarray(c, dtype=float)
    _require_positive_history(c, "mprk3")
    p0 = spec.rates(c, ctx)
    f0 = _convect(convection, c)

    b1 = c + q["b10"] * dt * f0
    if np.any(b1 < 0.0):
        raise PreconditionError("convection increment violated positivity at stage 1")
    c1 = mp_stage_solve(StageWeights(b=b1, wp=q["b10"] * p0, wd=q["b10"] * p0.T, sigma=c, dt=dt))
    p1 = spec.rates(c1, ctx)
    f1 = _convect(convection, c1)

    rho = q["n1"] * c1 + n2 * c * (c1 / c) ** 2
    b2 = q["a20"] * c + a21 * c1 + dt * (q["b20"] * f0 + q["b21"] * f1)
    if np.any(b2 < 0.0):
        raise PreconditionError("convection increment violated positivity at stage 2")
    w2 = q["b20"] * p0 + q["b21"] * p1
    c2 = mp_stage_solve(StageWeights(b=b2, wp=w2, wd=w2.T, sigma=rho, dt=dt))
    p2 = spec.rates(c2, ctx)
    f2 = _convect(convection, c2)

    mu = c * (c1 / c) ** q["s"]
    ba = q["eta1"] * c + eta2 * c1 + dt * (q["g3"] * f0 + q["g4"] * f1)
    if np.any(ba < 0.0):
        raise PreconditionError("convection increment violated positivity at the interpolation stage")
    wa = q["eta3"] * p0 + q["eta4"] * p1
    a = mp_stage_solve(StageWeights(b=ba, wp=wa, wd=wa.T, sigma=mu, dt=dt))

    sigma = a + q["z"] * c * (c2 / rho)
    b3 = q["a30"] * c + q["a31"] * c1 + a32 * c2 + dt * (q["b30"] * f0 + q["b31"] * f1 + q["b32"] * f2)
    if np.any(b3 < 0.0):
        raise PreconditionError("convection increment violated positivity at stage 3")
    w3 = q["b30"] * p0 + q["b31"] * p1 + q["b32"] * p2
    return mp_stage_solve(StageWeights(b=b3, wp=w3, wd=w3.T, sigma=sigma, dt=dt))


def mpms2_step(
    spec: PDSSpec,
    history: StepHistory,
    dt: float,
    s: float = 1.5,
    convection: Convection | None = None,
    ctx: Any = None,
    with_sigma: bool = False,
):
    """Second-order modified Patankar multistep step.

    c^(n+1) = 1/4 c^(n-2) + 3/4 c^n + 3/2 dt [F(c^n) + Patankar source],
    with rates evaluated at level n and sigma from the last three levels.
    """
    c_n, c_nm1, c_nm2 = history.require(3, "mpms2")
    f_n = _convect(convection, c_n)
    b = 0.25 * c_nm2 + 0.75 * c_n + 1.5 * dt * f_n
    if np.any(b < 0.0):
        raise PreconditionError("convection increment violated positivity (dt above dt0/2?)")
    p_n = spec.rates(c_n, ctx)
    sigma = sigma_ms2(c_n, c_nm1, c_nm2, s)
    c_next = mp_stage_solve(StageWeights(b=b, wp=1.5 * p_n, wd=1.5 * p_n.T, sigma=sigma, dt=dt))
    return (c_next, sigma) if with_sigma else c_next


def mpms3_step(
    spec: PDSSpec,
    history: StepHistory,
    dt: float,
    s: float = 2.0,
    convection: Convection | None = None,
    ctx: Any = None,
    with_sigma: bool = False,
):
    """Third-order modified Patankar multistep step.

    c^(n+1) = 11/27 c^(n-3) + 16/27 c^n
              + dt [4/9 F(c^(n-3)) + 16/9 F(c^n)]
              + dt [ (4/9 p^(n-3) + 16/9 p^n) Patankar-weighted ].
    """
    c_n, c_nm1, c_nm2, c_nm3 = history.require(4, "mpms3")
    f_n = _convect(convection, c_n)
    f_nm3 = _convect(convection, c_nm3)
    b = (11.0 / 27.0) * c_nm3 + (16.0 / 27.0) * c_n + dt * ((4.0 / 9.0) * f_nm3 + (16.0 / 9.0) * f_n)
    if np.any(b < 0.0):
        raise PreconditionError("convection increment violated positivity (dt above dt0/3?)")
    wp = (4.0 / 9.0) * spec.rates(c_nm3, ctx) + (16.0 / 9.0) * spec.rates(c_n, ctx)
    sigma = sigma_ms3(c_n, c_nm1, c_nm2, c_nm3, s)
    c_next = mp_stage_solve(StageWeights(b=b, wp=wp, wd=wp.T, sigma=sigma, dt=dt))
    return (c_next, sigma) if with_sigma else c_next


# ---------------------------------------------------------------------------
# explicit baselines (not positivity-preserving; used for comparison only)
# ---------------------------------------------------------------------------


def explicit_euler_step(spec, c, dt, convection=None, ctx=None):
    from .pds import net_rhs

    c = np.asarray(c, dtype=float)
    return c + dt * (net_rhs(spec, c, ctx) + _convect(convection, c))


def ssp_ms2_step(spec, history, dt, convection=None, ctx=None):
    from .pds import net_rhs

    if len(history) < 3:
        raise BootstrapError("ssp-ms2 needs 3 history levels")
    c_n, _, c_nm2 = history.levels[:3]
    return 0.25 * c_nm2 + 0.75 * c_n + 1.5 * dt * (net_rhs(spec, c_n, ctx) + _convect(convection, c_n))


def ssp_ms3_step(spec, history, dt, convection=None, ctx=None):
    from .pds import net_rhs

    if len(history) < 4:
        raise BootstrapError("ssp-ms3 needs 4 history levels")
    c_n, _, _, c_nm3 = history.levels[:4]
    l_n = net_rhs(spec, c_n, ctx) + _convect(convection, c_n)
    l_nm3 = net_rhs(spec, c_nm3, ctx) + _convect(convection, c_nm3)
    return (11.0 / 27.0) * c_nm3 + (16.0 / 27.0) * c_n + dt * ((4.0 / 9.0) * l_nm3 + (16.0 / 9.0) * l_n)


# ---------------------------------------------------------------------------
# startup and driver
# ---------------------------------------------------------------------------


def bootstrap_history(
    spec: PDSSpec,
    c0: np.ndarray,
    dt: float,
    target_levels: int,
    kind: IntegratorKind | None = None,
    substeps: int = 16,
    convection: Convection | None = None,
    ctx: Any = None,
) -> StepHistory:
    """Fill a multistep history ring from a single initial state.

    Each missing level is reached with `substeps` MP RK substeps (MPRK2
    for second-order targets, MPRK3 for third-order ones), keeping the
    startup error below the scheme's own local error so it cannot
    pollute the observed order.
    """
    c0 = np.asarray(c0, dtype=float)
    _require_positive_history(c0, "bootstrap")
    history = StepHistory(max_levels=max(target_levels, 1))
    history.push(c0)
    if target_levels <= 1:
        return history
    use_rk3 = kind is not None and kind.order >= 3
    c = c0
    for _ in range(target_levels - 1):
        h = dt / substeps
        for _ in range(substeps):
            if use_rk3:
                c = mprk3_step(spec, c, h, convection=convection, ctx=ctx)
            else:
                c = mprk2_step(spec, c, h, convection=convection, ctx=ctx)
        history.push(c)
    return history


def step_once(
    spec: PDSSpec,
    kind: IntegratorKind,
    history: StepHistory,
    dt: float,
    convection: Convection | None = None,
    ctx: Any = None,
) -> np.ndarray:
    """Advance one step of `kind` from the newest history level."""
    c = history.levels[0]
    if kind.name == "mpe":
        return mpe_step(spec, c, dt, convection, ctx)
    if kind.name == "mprk2":
        return mprk2_step(spec, c, dt, kind.alpha, kind.beta, convection, ctx)
    if kind.name == "mprk3":
        return mprk3_step(spec, c, dt, convection, ctx)
    if kind.name == "mpms2":
        return mpms2_step(spec, history, dt, kind.s, convection, ctx)
    if kind.name == "mpms3":
        return mpms3_step(spec, history, dt, kind.s, convection, ctx)
    if kind.name == "ssp-ms2":
        return ssp_ms2_step(spec, history, dt, convection, ctx)
    if kind.name == "ssp-ms3":
        return ssp_ms3_step(spec, history, dt, convection, ctx)
    if kind.name == "explicit-euler":
        return explicit_euler_step(spec, c, dt, convection, ctx)
    raise ConfigurationError(f"unhandled integrator {kind.name!r}")


def integrate(
    spec: PDSSpec,
    c0: np.ndarray,
    dt: float,
    t_final: float,
    kind: IntegratorKind,
    convection: Convection | None = None,
    ctx: Any = None,
    bootstrap_substeps: int = 16,
):
    """Fixed-step march to t_final; returns (times, states).

    The last step is shortened (not interpolated) to land on t_final
    exactly. Multistep histories are filled by bootstrap_history; the
    bootstrap levels appear in the returned trajectory. If the horizon
    is shorter than the multistep stencil, the bootstrap stepper
    integrates the whole interval.
    """
    if not t_final > 0.0 or not dt > 0.0:
        raise ConfigurationError("integrate requires t_final > 0 and dt > 0")
    c0 = np.asarray(c0, dtype=float)
    depth = kind.history_depth

    times = [0.0]
    states = [c0.copy()]

    if depth > 1 and t_final >= (depth - 1) * dt - 1e-12 * dt:
        history = bootstrap_history(
            spec, c0, dt, depth, kind, bootstrap_substeps, convection, ctx
        )
        for lev in range(1, depth):
            times.append(lev * dt)
            states.append(history.levels[depth - 1 - lev].copy())
        t = (depth - 1) * dt
    else:
        history = StepHistory(max_levels=depth)
        history.push(c0)
        t = 0.0
        if depth > 1:
            # horizon shorter than the stencil: integrate with the
            # bootstrap RK scheme alone
            fallback = IntegratorKind("mprk3" if kind.order >= 3 else "mprk2")
            return integrate(spec, c0, dt, t_final, fallback, convection, ctx)

    while t < t_final - 1e-12 * max(dt, t_final):
        step = min(dt, t_final - t)
        c = step_once(spec, kind, history, step, convection, ctx)
        t = t_final if step < dt else t + dt
        history.push(c)
        times.append(t)
        states.append(c.copy())
    return np.asarray(times), np.asarray(states)
