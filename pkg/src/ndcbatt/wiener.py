"""One-shot MAP identification of the NDC model as a Wiener system (pipeline 2.0).

Sampling the circuit with period dt and discretizing by zero-order hold turns
the linear part into two rational filters of the shift operator q:

    v_s(t) = G1(q) i(t) + v_s(0),      v_1(t) = G3(q) i(t)       (rested start)

    G1(q) = [(b1+b2) q^-1 - (b1*b3+b2) q^-2] / [1 - (1+b3) q^-1 + b3 q^-2]
    G3(q) = b4 q^-1 / (1 + b5 q^-1)

and the terminal voltage becomes the Wiener-type composition

    v(t) = h(v_s(t)) - v_1(t) + r0 * i(t)

so that all ten parameters theta = [a1..a4, b1..b5, r0] (the polynomial's
endpoint coefficients stay pinned to the voltage window) can be estimated in
one shot by minimizing the MAP cost

    J(theta) = 0.5 (z - v)' R^-1 (z - v) + 0.5 (theta - m)' P^-1 (theta - m)

with R = noise_var * I and a diagonal Gaussian prior (infinite standard
deviations encode "no prior").  The minimizer is a BFGS quasi-Newton with a
Wolfe-conditions line search; to keep every iterate a stable filter, b3 and
-b5 are optimized through a logistic map onto (0, 1) and b1, r0 through a
log map onto (0, inf), with gradients chain-ruled accordingly.  Reported
estimates and gradients live in the original parameter space.

Thin adapters identify the Rint, Thevenin and basic-NDC baselines with the
same machinery by freezing the filter coefficients their structure lacks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .data import Dataset
from .model import (
    BasicNdcModel,
    ComparisonModel,
    ConstantR0,
    NdcModel,
    NdcParams,
    OcvPolynomial,
    RintModel,
    TheveninModel,
    continuous_matrices,
)

__all__ = [
    "WienerTheta",
    "GaussianPrior",
    "MapConfig",
    "IterationRecord",
    "WienerSolveResult",
    "NearDegenerateWarning",
    "MODEL_KINDS",
    "filter_vs",
    "filter_v1",
    "predict_voltage_wiener",
    "map_cost",
    "map_gradient",
    "sensitivity_matrix",
    "quasi_newton_solve",
    "identify_wiener",
    "beta_from_physical",
    "theta_from_physical",
    "reconstruct_physical_wiener",
    "free_mask",
    "comparison_model_from_theta",
]

# The order-2 filter needs two past samples; the first residuals are start-up
# transients and are excluded from the cost.
WARMUP = 2

MODEL_KINDS = ("ndc", "basic-ndc", "thevenin", "rint")


class NearDegenerateWarning(UserWarning):
    """Reconstruction close to a parameter-space boundary (e.g. a dead pole)."""


@dataclass(frozen=True)
class WienerTheta:
    """Discrete-time identification vector [a1..a4, b1..b5, r0].

    Stability invariants: b1 > 0, b3 in (0, 1) (diffusion pole), b5 in
    (-1, 0) (RC pole, -b5 is its location), r0 > 0.
    """

    alpha: np.ndarray  # (4,) polynomial coefficients a1..a4
    beta: np.ndarray   # (5,) discrete filter coefficients b1..b5
    r0: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if self.alpha.shape != (4,) or self.beta.shape != (5,):
            raise ValueError("alpha must be a 4-vector and beta a 5-vector")
        b1, _, b3, _, b5 = self.beta
        if b1 <= 0:
            raise ValueError("b1 must be positive")
        if not 0.0 < b3 < 1.0:
            raise ValueError(f"b3 must lie in (0, 1), got {b3}")
        if not -1.0 < b5 < 0.0:
            raise ValueError(f"b5 must lie in (-1, 0), got {b5}")
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta, [self.r0]])

    @classmethod
    def from_array(cls, vec) -> "WienerTheta":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (10,):
            raise ValueError("expected a 10-vector")
        return cls(vec[:4].copy(), vec[4:9].copy(), float(vec[9]))

    def ocv(self, v_bounds: tuple[float, float]) -> OcvPolynomial:
        return OcvPolynomial(v_bounds[0], v_bounds[1], *self.alpha)


@dataclass(frozen=True)
class GaussianPrior:
    """Diagonal Gaussian prior; sqrt_diag_p entries of +inf mean no prior."""

    mean: np.ndarray
    sqrt_diag_p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "sqrt_diag_p", np.asarray(self.sqrt_diag_p, dtype=float))
        if self.mean.shape != (10,) or self.sqrt_diag_p.shape != (10,):
            raise ValueError("prior mean and sqrt_diag_p must be 10-vectors")
        if np.any(self.sqrt_diag_p <= 0):
            raise ValueError("prior standard deviations must be positive (inf allowed)")
        finite = np.isfinite(self.sqrt_diag_p)
        if np.any(~np.isfinite(self.mean[finite])):
            raise ValueError("prior mean must be finite where the deviation is finite")

    @classmethod
    def flat(cls) -> "GaussianPrior":
        """No prior information; MAP reduces to maximum likelihood."""
        return cls(np.zeros(10), np.full(10, np.inf))

    @property
    def inv_variances(self) -> np.ndarray:
        ivar = np.zeros(10)
        finite = np.isfinite(self.sqrt_diag_p)
        ivar[finite] = 1.0 / self.sqrt_diag_p[finite] ** 2
        return ivar

    def penalty(self, theta_arr: np.ndarray) -> float:
        d = np.where(np.isfinite(self.sqrt_diag_p), theta_arr - self.mean, 0.0)
        return 0.5 * float(self.inv_variances @ d**2)

    def penalty_grad(self, theta_arr: np.ndarray) -> np.ndarray:
        d = np.where(np.isfinite(self.sqrt_diag_p), theta_arr - self.mean, 0.0)
        return self.inv_variances * d


@dataclass(frozen=True)
class MapConfig:
    """Solver settings: Wolfe constants, convergence tolerances, noise level.

    tol bounds |J_k - J_{k-1}| relative to the cost magnitude; gtol is the
    secondary gradient certificate, relative to the starting gradient norm
    (the absolute internal gradient floor scales with the noise weighting).
    """

    c1: float = 1e-6
    c2: float = 0.9
    tol: float = 1e-10
    gtol: float = 1e-6
    max_iter: int = 500
    noise_var: float = 1.0   # sigma^2 of the measurement noise, V^2

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.noise_var <= 0:
            raise ValueError("noise_var must be positive")
        if self.tol <= 0 or self.gtol <= 0 or self.max_iter < 1:
            raise ValueError("tolerances must be positive and max_iter >= 1")


# --- filters and prediction -------------------------------------------------


def _filters_vs(beta: np.ndarray, u: np.ndarray) -> np.ndarray:
    b1, b2, b3 = beta[0], beta[1], beta[2]
    return lfilter([0.0, b1 + b2, -(b1 * b3 + b2)], [1.0, -(1.0 + b3), b3], u)


def filter_vs(theta: WienerTheta, u, v_s0: float) -> np.ndarray:
    """Surface-voltage series from a rested start: v_s = G1(q) u + v_s0."""
    u = np.asarray(u, dtype=float)
    return v_s0 + _filters_vs(theta.beta, u)


def filter_v1(theta: WienerTheta, u) -> np.ndarray:
    """RC-branch voltage from a relaxed start: v_1[t] = -b5 v_1[t-1] + b4 u[t-1]."""
    u = np.asarray(u, dtype=float)
    b4, b5 = theta.beta[3], theta.beta[4]
    return lfilter([0.0, b4], [1.0, b5], u)


def _predict_arr(theta_arr: np.ndarray, u: np.ndarray, v_s0: float,
                 v_bounds: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    b = theta_arr[4:9]
    vs = v_s0 + _filters_vs(b, u)
    v1 = lfilter([0.0, b[3]], [1.0, b[4]], u)
    h = OcvPolynomial(v_bounds[0], v_bounds[1], *theta_arr[:4])
    return h(vs) - v1 + theta_arr[9] * u, vs


def predict_voltage_wiener(theta: WienerTheta, u, v_s0: float,
                           v_bounds: tuple[float, float]) -> np.ndarray:
    """Terminal voltage of the Wiener composition: h(v_s) - v_1 + r0*u."""
    u = np.asarray(u, dtype=float)
    v, _ = _predict_arr(theta.as_array(), u, v_s0, v_bounds)
    return v


def sensitivity_matrix(theta: WienerTheta, u, v_s0: float,
                       v_bounds: tuple[float, float]) -> np.ndarray:
    """The N x 10 matrix of partials dV/dtheta along the whole record.

    Full numerical column rank of this matrix under the applied profile is a
    sufficient condition for local identifiability.
    """
    u = np.asarray(u, dtype=float)
    arr = theta.as_array()
    _, vs = _predict_arr(arr, u, v_s0, v_bounds)
    return _sensitivity(arr, u, vs, v_bounds)


def _sensitivity(theta_arr: np.ndarray, u: np.ndarray, vs: np.ndarray,
                 v_bounds: tuple[float, float]) -> np.ndarray:
    b2, b3, b4, b5 = theta_arr[5], theta_arr[6], theta_arr[7], theta_arr[8]
    x = vs
    x2 = x * x
    x3 = x2 * x
    x4 = x3 * x
    x5 = x4 * x
    h = OcvPolynomial(v_bounds[0], v_bounds[1], *theta_arr[:4])
    # the derived quintic coefficient makes d h / d a_i = x^i - x^5
    sig = h.slope(x)
    den = np.array([1.0, -(1.0 + b3), b3])
    den2 = np.convolve(den, den)
    cols = np.empty((u.size, 10))
    cols[:, 0] = x - x5
    cols[:, 1] = x2 - x5
    cols[:, 2] = x3 - x5
    cols[:, 3] = x4 - x5
    cols[:, 4] = sig * lfilter([0.0, 1.0, -b3], den, u)
    cols[:, 5] = sig * lfilter([0.0, 1.0, -1.0], den, u)
    cols[:, 6] = sig * lfilter(b2 * np.array([0.0, 0.0, 1.0, -2.0, 1.0]), den2, u)
    cols[:, 7] = -lfilter([0.0, 1.0], [1.0, b5], u)
    cols[:, 8] = lfilter([0.0, 0.0, b4], [1.0, 2.0 * b5, b5 * b5], u)
    cols[:, 9] = u
    return cols


# --- MAP cost and gradient ---------------------------------------------------


def map_cost(theta: WienerTheta, u, z, prior: GaussianPrior, cfg: MapConfig,
             v_s0: float, v_bounds: tuple[float, float]) -> float:
    """MAP objective; the first WARMUP residual samples are excluded."""
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    if u.shape != z.shape:
        raise ValueError("current and voltage records must have equal length")
    arr = theta.as_array()
    v, _ = _predict_arr(arr, u, v_s0, v_bounds)
    r = (z - v)[WARMUP:]
    return 0.5 * float(r @ r) / cfg.noise_var + prior.penalty(arr)


def map_gradient(theta: WienerTheta, u, z, prior: GaussianPrior, cfg: MapConfig,
                 v_s0: float, v_bounds: tuple[float, float]) -> np.ndarray:
    """Analytic gradient of map_cost in the original parameter space."""
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    arr = theta.as_array()
    _, g = _cost_grad_arr(arr, u, z, prior, cfg, v_s0, v_bounds)
    return g


def _cost_grad_arr(theta_arr, u, z, prior, cfg, v_s0, v_bounds):
    v, vs = _predict_arr(theta_arr, u, v_s0, v_bounds)
    r = (z - v)[WARMUP:]
    cost = 0.5 * float(r @ r) / cfg.noise_var + prior.penalty(theta_arr)
    S = _sensitivity(theta_arr, u, vs, v_bounds)
    grad = -(S[WARMUP:].T @ r) / cfg.noise_var + prior.penalty_grad(theta_arr)
    return cost, grad


# --- stability-preserving reparameterization ---------------------------------

_LOG_IDX = (4, 9)     # b1, r0 -> log map onto (0, inf)
_LOGIT_B3 = 6         # b3 -> logistic map onto (0, 1)
_LOGIT_B5 = 8         # -b5 -> logistic map onto (0, 1)


def _to_internal(theta_arr: np.ndarray) -> np.ndarray:
    zv = theta_arr.copy()
    for i in _LOG_IDX:
        zv[i] = math.log(theta_arr[i])
    zv[_LOGIT_B3] = _logit(theta_arr[_LOGIT_B3])
    zv[_LOGIT_B5] = _logit(-theta_arr[_LOGIT_B5])
    return zv


def _from_internal(zv: np.ndarray) -> np.ndarray:
    th = zv.copy()
    for i in _LOG_IDX:
        th[i] = math.exp(min(zv[i], 700.0))
    th[_LOGIT_B3] = _sigmoid(zv[_LOGIT_B3])
    th[_LOGIT_B5] = -_sigmoid(zv[_LOGIT_B5])
    return th


def _dtheta_dz(theta_arr: np.ndarray) -> np.ndarray:
    d = np.ones(10)
    for i in _LOG_IDX:
        d[i] = theta_arr[i]
    b3 = theta_arr[_LOGIT_B3]
    b5 = theta_arr[_LOGIT_B5]
    d[_LOGIT_B3] = b3 * (1.0 - b3)
    d[_LOGIT_B5] = b5 * (1.0 + b5)
    return d


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _scales(theta_arr: np.ndarray) -> np.ndarray:
    """Per-component scale so internal steps are O(1); log/logit axes already are."""
    s = np.ones(10)
    for i in range(10):
        if i not in _LOG_IDX and i not in (_LOGIT_B3, _LOGIT_B5):
            s[i] = max(abs(theta_arr[i]), 1e-6)
    return s


# --- quasi-Newton solver ------------------------------------------------------


@dataclass
class IterationRecord:
    cost: float
    step_len: float
    grad_norm: float
    wolfe_decrease: bool
    wolfe_curvature: bool
    curvature_ok: bool       # delta'gamma > 0 held, so BFGS update was admissible
    bfgs_updated: bool
    cholesky_ok: bool


@dataclass
class WienerSolveResult:
    theta: WienerTheta
    cost_trace: np.ndarray
    iterations: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    n_iter: int = 0
    grad_norm: float = np.inf
    message: str = ""


def quasi_newton_solve(theta0: WienerTheta, u, z, prior: GaussianPrior,
                       cfg: MapConfig, v_s0: float,
                       v_bounds: tuple[float, float],
                       free: np.ndarray | None = None) -> WienerSolveResult:
    """Minimize the MAP cost by BFGS with a Wolfe line search.

    Iterates theta_{k+1} = theta_k + lambda_k s_k with s_k = -B_k g_k, where
    B_k is the inverse-Hessian approximation initialized as
    B_0 = 0.001 (1/||g_0||) I and updated by the BFGS recursion whenever the
    curvature condition delta'gamma > 0 holds (otherwise the update is
    skipped); every accepted lambda_k satisfies both Wolfe conditions, so the
    cost trace is strictly non-increasing.  `free` masks components to
    optimize (adapters freeze the rest at their theta0 values).
    """
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    if u.shape != z.shape:
        raise ValueError("current and voltage records must have equal length")
    if u.size <= WARMUP + 1:
        raise ValueError("record too short to identify anything")
    free = np.ones(10, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    if free.shape != (10,) or not free.any():
        raise ValueError("free must be a 10-mask with at least one free component")

    theta_arr0 = theta0.as_array()
    scale = _scales(theta_arr0)
    y_full = _to_internal(theta_arr0) / scale
    nf = int(free.sum())

    def theta_of(y_red: np.ndarray) -> np.ndarray:
        yf = y_full.copy()
        yf[free] = y_red
        return _from_internal(yf * scale)

    def cost_grad(y_red: np.ndarray) -> tuple[float, np.ndarray]:
        th = theta_of(y_red)
        with np.errstate(over="ignore", invalid="ignore"):
            cost, g_theta = _cost_grad_arr(th, u, z, prior, cfg, v_s0, v_bounds)
        g_y = g_theta * _dtheta_dz(th) * scale
        return cost, g_y[free]

    y = y_full[free].copy()
    J, g = cost_grad(y)
    costs = [J]
    records: list[IterationRecord] = []
    gnorm = gnorm0 = float(np.linalg.norm(g))
    g_threshold = cfg.gtol * max(1.0, gnorm0)
    if gnorm <= g_threshold:
        return WienerSolveResult(WienerTheta.from_array(theta_of(y)), np.asarray(costs),
                                 records, True, 0, gnorm,
                                 "gradient below tolerance at the initial guess")

    B = (0.001 / gnorm) * np.eye(nf)
    converged = False
    message = "maximum iterations reached"
    for k in range(1, cfg.max_iter + 1):
        s_dir = -B @ g
        dphi0 = float(g @ s_dir)
        if not np.isfinite(dphi0) or dphi0 >= 0.0:
            message = "search direction lost descent; stopping at best iterate"
            break

        cache: dict[float, tuple[float, np.ndarray, float]] = {}

        def phi(lam: float) -> tuple[float, float]:
            cost, grad = cost_grad(y + lam * s_dir)
            d = float(grad @ s_dir) if np.all(np.isfinite(grad)) else np.nan
            cache[lam] = (cost, grad, d)
            return cost, d

        hit = _wolfe_search(phi, J, dphi0, cfg.c1, cfg.c2)
        if hit is None:
            message = "Wolfe line search failed to bracket a step"
            break
        lam, Jn, dphin = hit
        _, gn, _ = cache[lam]

        delta = lam * s_dir
        gamma = gn - g
        dg = float(delta @ gamma)
        curvature_ok = dg > 0.0
        updated = False
        chol_ok = False
        if curvature_ok:
            rho = 1.0 / dg
            V = np.eye(nf) - rho * np.outer(delta, gamma)
            Bn = V @ B @ V.T + rho * np.outer(delta, delta)
            Bn = 0.5 * (Bn + Bn.T)
            try:
                np.linalg.cholesky(Bn)
                chol_ok = True
                B = Bn
                updated = True
            except np.linalg.LinAlgError:
                chol_ok = False  # keep the previous SPD approximation

        y = y + delta
        dJ = J - Jn
        J, g = Jn, gn
        gnorm = float(np.linalg.norm(g))
        costs.append(J)
        records.append(IterationRecord(
            cost=J,
            step_len=lam,
            grad_norm=gnorm,
            wolfe_decrease=Jn <= costs[-2] + cfg.c1 * lam * dphi0,
            wolfe_curvature=dphin >= cfg.c2 * dphi0,
            curvature_ok=curvature_ok,
            bfgs_updated=updated,
            cholesky_ok=chol_ok,
        ))
        if abs(dJ) <= cfg.tol * max(1.0, abs(J)):
            converged = True
            message = "cost converged"
            break
        if gnorm <= g_threshold:
            converged = True
            message = "gradient certificate met"
            break

    return WienerSolveResult(WienerTheta.from_array(theta_of(y)), np.asarray(costs),
                             records, converged, len(records), gnorm, message)


def _wolfe_search(phi, phi0: float, dphi0: float, c1: float, c2: float,
                  lam_init: float = 1.0, max_expand: int = 30,
                  max_zoom: int = 40):
    """Bracketing line search for the (weak) Wolfe conditions.

    `phi(lam)` returns (J, dJ/dlam) along the search ray.  The trial step
    starts at 1 and doubles until the sufficient-decrease condition brackets
    a solution, then zoom narrows the bracket by cubic interpolation.
    """
    lam_prev, phi_prev, dphi_prev = 0.0, phi0, dphi0
    lam = lam_init
    for it in range(max_expand):
        val, dval = phi(lam)
        if not np.isfinite(val) or val > phi0 + c1 * lam * dphi0 or (it > 0 and val >= phi_prev):
            return _zoom(phi, lam_prev, phi_prev, dphi_prev, lam, val, dval,
                         phi0, dphi0, c1, c2, max_zoom)
        if dval >= c2 * dphi0:
            return lam, val, dval
        lam_prev, phi_prev, dphi_prev = lam, val, dval
        lam *= 2.0
    return None


def _zoom(phi, lo, phi_lo, dphi_lo, hi, phi_hi, dphi_hi,
          phi0, dphi0, c1, c2, max_zoom):
    # invariant: lo satisfies sufficient decrease and the interval brackets
    # a Wolfe point (phi_hi is worse or violates sufficient decrease)
    for _ in range(max_zoom):
        lam = _cubic_min(lo, phi_lo, dphi_lo, hi, phi_hi, dphi_hi)
        val, dval = phi(lam)
        if not np.isfinite(val) or val > phi0 + c1 * lam * dphi0 or val >= phi_lo:
            hi, phi_hi, dphi_hi = lam, val, dval
        else:
            if dval >= c2 * dphi0:
                return lam, val, dval
            if dval * (hi - lo) >= 0.0:
                hi, phi_hi, dphi_hi = lo, phi_lo, dphi_lo
            lo, phi_lo, dphi_lo = lam, val, dval
        if abs(hi - lo) < 1e-16 * max(1.0, abs(lo)):
            break
    return None


def _cubic_min(lo, phi_lo, dphi_lo, hi, phi_hi, dphi_hi):
    """Minimizer of the cubic Hermite fit, safeguarded into the bracket middle."""
    a, b = (lo, hi) if lo < hi else (hi, lo)
    span = b - a
    guard_lo, guard_hi = a + 0.1 * span, b - 0.1 * span
    if np.isfinite(phi_hi) and np.isfinite(dphi_hi):
        d1 = dphi_lo + dphi_hi - 3.0 * (phi_lo - phi_hi) / (lo - hi)
        disc = d1 * d1 - dphi_lo * dphi_hi
        if disc >= 0.0:
            d2 = math.copysign(math.sqrt(disc), hi - lo)
            denom = dphi_hi - dphi_lo + 2.0 * d2
            if denom != 0.0:
                lam = hi - (hi - lo) * (dphi_hi + d2 - d1) / denom
                if np.isfinite(lam) and guard_lo <= lam <= guard_hi:
                    return lam
    return 0.5 * (lo + hi)


# --- physical-parameter maps ---------------------------------------------------


def beta_from_physical(p: NdcParams, dt: float) -> np.ndarray:
    """Discrete-time [b1..b5] of a physical parameter set under ZOH with step dt:

        b3 = exp(-(A12+A21) dt)              b1 = (A21 B11 + A12 B21)/(A12+A21) dt
        b2 = A21 (B21-B11)/(A12+A21)^2 (1-b3)
        b5 = -exp(A33 dt)                    b4 = -(b5+1) B31/A33
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    A, B = continuous_matrices(p)
    a12, a21 = A[0, 1], A[1, 0]
    b11, b21 = B[0], B[1]
    a33, b31 = A[2, 2], B[2]
    mu = a12 + a21
    b3 = math.exp(-mu * dt)
    b1 = (a21 * b11 + a12 * b21) / mu * dt
    b2 = a21 * (b21 - b11) / mu**2 * (1.0 - b3)
    b5 = -math.exp(a33 * dt)
    b4 = -(b5 + 1.0) * b31 / a33
    return np.array([b1, b2, b3, b4, b5])


def theta_from_physical(p: NdcParams, dt: float) -> WienerTheta:
    """Full Wiener vector of a physical model (requires a constant r0 law)."""
    if not isinstance(p.r0, ConstantR0):
        raise ValueError("the Wiener parameterization assumes a constant r0")
    ocv = p.ocv
    return WienerTheta(np.array([ocv.a1, ocv.a2, ocv.a3, ocv.a4]),
                       beta_from_physical(p, dt), p.r0.r0)


def reconstruct_physical_wiener(theta: WienerTheta, dt: float,
                                v_bounds: tuple[float, float]) -> NdcParams:
    """Invert the discrete parameterization back to circuit values:

        c_b = dt/b1 - c_s        c_s = (1-b3) dt / (b1 - b1*b3 - b2*log(b3))
        r_b = -dt^2 / (c_b c_s b1 log b3)
        r_1 = -b4/(b5+1)         c_1 = -dt / (log(-b5) r_1)

    with r_s = 0.  Raises on sign/degeneracy violations; warns when the RC
    pole is nearly dead (-b5 -> 0 drives c_1 -> 0).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    b1, b2, b3, b4, b5 = theta.beta
    log_b3 = math.log(b3)
    denom = b1 - b1 * b3 - b2 * log_b3
    if denom <= 0:
        raise ValueError(f"c_s denominator b1(1-b3) - b2*log(b3) = {denom} is not positive")
    c_s = (1.0 - b3) * dt / denom
    c_b = dt / b1 - c_s
    if c_b <= c_s:
        raise ValueError(f"reconstructed c_b = {c_b} does not exceed c_s = {c_s}")
    r_b = -dt**2 / (c_b * c_s * b1 * log_b3)
    r_1 = -b4 / (b5 + 1.0)
    if r_1 <= 0:
        raise ValueError(f"reconstructed r_1 = {r_1} is not positive (b4 must be negative)")
    if -b5 < 1e-3:
        warnings.warn("RC pole nearly dead (-b5 close to 0): c_1 is near-degenerate",
                      NearDegenerateWarning, stacklevel=2)
    c_1 = -dt / (math.log(-b5) * r_1)
    return NdcParams(c_b=c_b, c_s=c_s, r_b=r_b, r_s=0.0, r_1=r_1, c_1=c_1,
                     r0=ConstantR0(theta.r0),
                     ocv=theta.ocv(v_bounds))


# --- baseline-model adapters ----------------------------------------------------

# Inert filter coefficients for frozen branches: a zero numerator disables the
# branch while keeping the (irrelevant) pole stable.
_INERT = {"beta2": 0.0, "beta3": 0.5, "beta4": 0.0, "beta5": -0.5}


def free_mask(kind: str) -> np.ndarray:
    """Mask of identified components for a model kind (others stay frozen)."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    mask = np.ones(10, dtype=bool)
    if kind in ("thevenin", "rint"):
        mask[5:7] = False  # no diffusion transient: freeze b2 (b3 inert)
    if kind in ("basic-ndc", "rint"):
        mask[7:9] = False  # no RC branch: freeze b4 (b5 inert)
    return mask


def _neutralize(theta: WienerTheta, kind: str) -> WienerTheta:
    arr = theta.as_array()
    if kind in ("thevenin", "rint"):
        arr[5], arr[6] = _INERT["beta2"], _INERT["beta3"]
    if kind in ("basic-ndc", "rint"):
        arr[7], arr[8] = _INERT["beta4"], _INERT["beta5"]
    return WienerTheta.from_array(arr)


def identify_wiener(dataset: Dataset, theta0: WienerTheta, prior: GaussianPrior,
                    cfg: MapConfig, v_bounds: tuple[float, float],
                    kind: str = "ndc") -> WienerSolveResult:
    """Identify a model of the given kind from a dataset (2.0 front door).

    For baseline kinds the structurally absent filter coefficients are set
    inert and excluded from the search; their prior entries are ignored.
    """
    mask = free_mask(kind)
    start = _neutralize(theta0, kind)
    return quasi_newton_solve(start, dataset.current, dataset.voltage, prior, cfg,
                              v_s0=dataset.t0_soc, v_bounds=v_bounds, free=mask)


def comparison_model_from_theta(kind: str, theta: WienerTheta, dt: float,
                                v_bounds: tuple[float, float]) -> ComparisonModel:
    """Build the simulable model matching an identified vector of a given kind."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    b1, b2, b3, b4, b5 = theta.beta
    ocv = theta.ocv(v_bounds)
    q_t = dt / b1
    if kind == "ndc":
        return NdcModel(reconstruct_physical_wiener(theta, dt, v_bounds))
    if kind == "rint":
        return RintModel(r0=theta.r0, ocv=ocv, q_t=q_t)
    if kind == "thevenin":
        r_1 = -b4 / (b5 + 1.0)
        if r_1 <= 0:
            raise ValueError("reconstructed r_1 is not positive")
        c_1 = -dt / (math.log(-b5) * r_1)
        return TheveninModel(r0=theta.r0, r_1=r_1, c_1=c_1, ocv=ocv, q_t=q_t)
    # basic-ndc: diffusion reconstruction only, RC branch absent
    log_b3 = math.log(b3)
    denom = b1 - b1 * b3 - b2 * log_b3
    if denom <= 0:
        raise ValueError("c_s denominator is not positive")
    c_s = (1.0 - b3) * dt / denom
    c_b = dt / b1 - c_s
    r_b = -dt**2 / (c_b * c_s * b1 * log_b3)
    params = NdcParams(c_b=c_b, c_s=c_s, r_b=r_b, r_s=0.0, r_1=0.0, c_1=1.0,
                       r0=ConstantR0(theta.r0), ocv=ocv)
    return BasicNdcModel(params)
