"""Constant-current parameter identification (pipeline 1.0).

Two-step procedure on constant-current discharge data:

1. ``fit_soc_ocv`` extracts the SoC-OCV polynomial and total capacity from a
   trickle-current full discharge (terminal voltage taken as OCV), as a
   linear least-squares problem with both curve endpoints pinned.

2. ``fit_cc`` estimates the impedance/capacitance vector
   theta = [beta2, beta3, beta4, beta5, gamma1..gamma5] from a normal-rate
   constant-current discharge by weighted nonlinear least squares inside a
   box, using the closed-form terminal-voltage response

       v(theta; t) = h(v_s(theta; t)) + i*beta4*(1 - exp(-beta5*t))
                     + i*(gamma1 + gamma2*exp(-gamma3*soc(t))
                          + gamma4*exp(-gamma5*(1 - soc(t))))

   with v_s(theta; t) = v_s(0) + beta1*i*t + beta2*i*(1 - exp(-beta3*t)),
   soc(t) = soc(0) + beta1*i*t, and beta1 = 1/(c_b + c_s) known from the
   trickle test.  The surface resistance r_s is fixed at zero (it is not
   separately identifiable from this response).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .model import NdcParams, OcvPolynomial, SocDependentR0, soc_trajectory

__all__ = [
    "CcTheta",
    "BoxBounds",
    "CcFitResult",
    "fit_soc_ocv",
    "vs_closed_form",
    "predict_voltage_cc",
    "cc_jacobian",
    "fit_cc",
    "beta_from_physical_cc",
    "reconstruct_physical_cc",
]


@dataclass(frozen=True)
class CcTheta:
    """Reparameterized identification vector for constant-current fitting.

    beta4 = r_1 and beta5 = 1/(r_1*c_1); gamma1..gamma5 parameterize the
    SoC-dependent series resistance.  The known beta1 = 1/(c_b + c_s) is
    carried separately.
    """

    beta2: float  # V/A
    beta3: float  # 1/s
    beta4: float  # ohm
    beta5: float  # 1/s
    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float
    gamma5: float

    NAMES = ("beta2", "beta3", "beta4", "beta5",
             "gamma1", "gamma2", "gamma3", "gamma4", "gamma5")

    def __post_init__(self):
        for name in self.NAMES:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.NAMES])

    @classmethod
    def from_array(cls, vec) -> "CcTheta":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (9,):
            raise ValueError("expected a 9-vector")
        return cls(*vec)

    @property
    def r0_law(self) -> SocDependentR0:
        return SocDependentR0(self.gamma1, self.gamma2, self.gamma3,
                              self.gamma4, self.gamma5)


@dataclass(frozen=True)
class BoxBounds:
    """Componentwise search box for the nine-dimensional fit."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != (9,) or self.upper.shape != (9,):
            raise ValueError("bounds must be 9-vectors")
        if not np.all(self.lower < self.upper):
            raise ValueError("need lower < upper componentwise")

    def contains_strictly(self, vec: np.ndarray) -> bool:
        return bool(np.all(vec > self.lower) and np.all(vec < self.upper))


def fit_soc_ocv(trickle: Dataset) -> tuple[OcvPolynomial, float]:
    """Fit the SoC-OCV polynomial and capacity from a trickle full discharge.

    The voltage extremes pin h(0) and h(1), leaving a1..a4 as a linear
    least-squares problem in the basis {soc^k - soc^5}; capacity comes from
    coulomb counting over the whole record.
    """
    charge = -float(np.sum(trickle.current)) * trickle.dt
    if charge <= 0:
        raise ValueError("trickle record must be a net discharge")
    q_t = charge
    soc = soc_trajectory(q_t, trickle.current, trickle.dt, trickle.t0_soc)[:len(trickle)]
    v = trickle.voltage
    v_lo = float(np.min(v))
    v_hi = float(np.max(v))
    if not v_lo < v_hi:
        raise ValueError("voltage record is constant; cannot fit an OCV curve")
    s5 = soc**5
    basis = np.stack([soc - s5, soc**2 - s5, soc**3 - s5, soc**4 - s5], axis=1)
    y = v - v_lo - (v_hi - v_lo) * s5
    coef, _, rank, _ = np.linalg.lstsq(basis, y, rcond=None)
    if rank < 4:
        raise ValueError("rank-deficient SoC-OCV regression (degenerate data)")
    return OcvPolynomial(v_lo, v_hi, *coef), q_t


def vs_closed_form(theta: CcTheta, beta1: float, v_s0: float, i: float, t):
    """Surface voltage under constant current from a relaxed start:

        v_s(t) = v_s(0) + beta1*i*t + beta2*i*(1 - exp(-beta3*t))
    """
    t = np.asarray(t, dtype=float)
    return v_s0 + beta1 * i * t + theta.beta2 * i * (1.0 - np.exp(-theta.beta3 * t))


def _soc_linear(beta1: float, soc0: float, i: float, t) -> np.ndarray:
    soc = soc0 + beta1 * i * np.asarray(t, dtype=float)
    if np.any(soc < -1e-9) or np.any(soc > 1.0 + 1e-9):
        raise ValueError("coulomb-counted SoC leaves [0, 1] over the requested times")
    return soc


def predict_voltage_cc(theta: CcTheta, beta1: float, v_s0: float, soc0: float,
                       ocv: OcvPolynomial, i: float, t) -> np.ndarray:
    """Closed-form terminal voltage under constant current (module docstring)."""
    t = np.asarray(t, dtype=float)
    soc = _soc_linear(beta1, soc0, i, t)
    vs = vs_closed_form(theta, beta1, v_s0, i, t)
    rc = i * theta.beta4 * (1.0 - np.exp(-theta.beta5 * t))
    ohmic = i * (theta.gamma1
                 + theta.gamma2 * np.exp(-theta.gamma3 * soc)
                 + theta.gamma4 * np.exp(-theta.gamma5 * (1.0 - soc)))
    return ocv(vs) + rc + ohmic


def cc_jacobian(theta: CcTheta, beta1: float, v_s0: float, soc0: float,
                ocv: OcvPolynomial, i: float, t) -> np.ndarray:
    """Analytic Jacobian of predict_voltage_cc, columns in CcTheta.NAMES order."""
    t = np.asarray(t, dtype=float)
    soc = _soc_linear(beta1, soc0, i, t)
    vs = vs_closed_form(theta, beta1, v_s0, i, t)
    hprime = ocv.slope(vs)
    e3 = np.exp(-theta.beta3 * t)
    e5 = np.exp(-theta.beta5 * t)
    eg3 = np.exp(-theta.gamma3 * soc)
    eg5 = np.exp(-theta.gamma5 * (1.0 - soc))
    cols = [
        hprime * i * (1.0 - e3),                    # beta2
        hprime * i * theta.beta2 * t * e3,          # beta3
        i * (1.0 - e5),                             # beta4
        i * theta.beta4 * t * e5,                   # beta5
        i * np.ones_like(t),                        # gamma1
        i * eg3,                                    # gamma2
        -i * theta.gamma2 * soc * eg3,              # gamma3
        i * eg5,                                    # gamma4
        -i * theta.gamma4 * (1.0 - soc) * eg5,      # gamma5
    ]
    return np.stack(cols, axis=1)


@dataclass
class CcFitResult:
    theta: CcTheta
    cost_trace: np.ndarray          # cost at every accepted iterate, non-increasing
    converged: bool
    n_iter: int
    projected_grad_norm: float
    active_lower: np.ndarray = field(default_factory=lambda: np.zeros(9, bool))
    active_upper: np.ndarray = field(default_factory=lambda: np.zeros(9, bool))
    message: str = ""

    @property
    def at_bound(self) -> bool:
        return bool(np.any(self.active_lower) or np.any(self.active_upper))


def fit_cc(data: Dataset, ocv: OcvPolynomial, q_t: float, bounds: BoxBounds,
           theta0: CcTheta, noise_cov_scale: float = 1.0,
           gtol: float = 1e-6, max_iter: int = 300) -> CcFitResult:
    """Box-constrained weighted least squares on a constant-current segment.

    The cost is 0.5 * ||y - v(theta)||^2 / noise_cov_scale (scalar-identity
    noise covariance), minimized by a projected damped Gauss-Newton
    iteration: trial steps are projected onto the box and accepted only
    under a sufficient-decrease condition, so the cost trace is
    non-increasing.  Internally the solver works on theta/theta0 so all
    variables are O(1); convergence is declared when the projected gradient
    norm in those scaled units drops below gtol.  Assumes t = 0 at the first
    sample of a rested, fully charged cell (v_s(0) = soc(0) = t0_soc).
    """
    x0 = theta0.as_array()
    if not bounds.contains_strictly(x0):
        raise ValueError("initial guess must lie strictly inside the bounds")
    beta1 = 1.0 / q_t
    i0 = float(np.mean(data.current))
    t = data.t
    y = data.voltage
    v_s0 = soc0 = data.t0_soc
    scale = x0.copy()

    def residual_jac(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        th = CcTheta.from_array(z * scale)
        r = y - predict_voltage_cc(th, beta1, v_s0, soc0, ocv, i0, t)
        jac = -cc_jacobian(th, beta1, v_s0, soc0, ocv, i0, t) * scale
        return r, jac

    res = _projected_gauss_newton(residual_jac, x0 / scale,
                                  bounds.lower / scale, bounds.upper / scale,
                                  weight=noise_cov_scale, gtol=gtol, max_iter=max_iter)
    z, trace, converged, n_iter, pg_norm, message = res
    xs = z * scale
    span = bounds.upper - bounds.lower
    return CcFitResult(
        theta=CcTheta.from_array(xs),
        cost_trace=np.asarray(trace),
        converged=converged,
        n_iter=n_iter,
        projected_grad_norm=pg_norm,
        active_lower=xs - bounds.lower <= 1e-8 * span,
        active_upper=bounds.upper - xs <= 1e-8 * span,
        message=message,
    )


def _projected_gauss_newton(residual_jac, x0, lower, upper, weight, gtol,
                            max_iter, armijo_c1=1e-4, lam0=1e-3,
                            lam_max=1e10):
    """Projected Levenberg-damped Gauss-Newton for 0.5*||r(x)||^2 / weight.

    Each iteration solves (J'J + lam*diag(J'J)) d = -J'r, projects x + d
    onto the box, and accepts under the sufficient-decrease condition
    f(xn) <= f(x) + c1 * g.(xn - x); rejection raises the damping (shorter,
    more gradient-like steps), acceptance lowers it.  The accepted-cost
    trace is therefore non-increasing by construction.
    """
    x = np.clip(x0, lower, upper)
    r, J = residual_jac(x)
    f = 0.5 * float(r @ r) / weight
    lam = lam0
    trace = [f]
    converged = False
    message = "max iterations reached"
    pg_norm = np.inf
    k = 0
    for k in range(1, max_iter + 1):
        g = (J.T @ r) / weight
        H = (J.T @ J) / weight
        pg_norm = float(np.max(np.abs(x - np.clip(x - g, lower, upper))))
        if pg_norm < gtol:
            converged = True
            message = "projected gradient below tolerance"
            break
        diag = np.diag(H).copy()
        diag[diag <= 0] = max(diag.max(), 1.0)
        accepted = False
        while lam <= lam_max:
            try:
                d = np.linalg.solve(H + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 4.0
                continue
            xn = np.clip(x + d, lower, upper)
            step = xn - x
            if np.any(step != 0.0):
                rn, Jn = residual_jac(xn)
                fn = 0.5 * float(rn @ rn) / weight
                if fn <= f + armijo_c1 * float(g @ step):
                    accepted = True
                    break
            lam *= 4.0
        if not accepted:
            message = "damping exhausted without sufficient decrease"
            break
        x, f, r, J = xn, fn, rn, Jn
        lam = max(lam / 3.0, 1e-12)
        trace.append(f)
    return x, trace, converged, k, pg_norm, message


def beta_from_physical_cc(p: NdcParams) -> np.ndarray:
    """Continuous-time [beta1..beta5] of a physical parameter set (r_s = 0)."""
    if p.r_s != 0.0:
        raise ValueError("the constant-current reparameterization assumes r_s = 0")
    if p.r_1 <= 0:
        raise ValueError("r_1 must be positive to form beta5")
    qt = p.c_b + p.c_s
    return np.array([
        1.0 / qt,
        p.r_b * p.c_b**2 / qt**2,
        qt / (p.c_b * p.c_s * p.r_b),
        p.r_1,
        1.0 / (p.r_1 * p.c_1),
    ])


def reconstruct_physical_cc(theta: CcTheta, beta1: float,
                            ocv: OcvPolynomial) -> NdcParams:
    """Invert the continuous-time reparameterization back to circuit values:

        c_b = beta2*beta3 / (beta1*(beta1 + beta2*beta3))
        c_s = 1 / (beta1 + beta2*beta3)
        r_b = 1 / (beta1*beta3*c_b*c_s)

    with r_s = 0, r_1 = beta4 and c_1 = 1/(beta4*beta5).
    """
    if beta1 <= 0:
        raise ValueError("beta1 must be positive")
    if theta.beta3 <= 0:
        raise ValueError("beta3 must be positive")
    b23 = theta.beta2 * theta.beta3
    c_b = b23 / (beta1 * (beta1 + b23))
    c_s = 1.0 / (beta1 + b23)
    r_b = 1.0 / (beta1 * theta.beta3 * c_b * c_s)
    return NdcParams(
        c_b=c_b,
        c_s=c_s,
        r_b=r_b,
        r_s=0.0,
        r_1=theta.beta4,
        c_1=1.0 / (theta.beta4 * theta.beta5),
        r0=theta.r0_law,
        ocv=ocv,
    )
