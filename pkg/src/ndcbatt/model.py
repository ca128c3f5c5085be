"""Nonlinear double-capacitor (NDC) battery model and comparison baselines.

The NDC circuit stores charge on two coupled capacitors (bulk c_b, surface
c_s, joined through r_b and r_s), feeds a polynomial voltage source h(v_s),
and adds a series r_1-c_1 branch plus a series resistance r0 that may depend
on SoC.  State voltages v_b and v_s are normalized to [0, 1] V, so the
capacitances carry the coulomb scale and total capacity is q_t = c_b + c_s.

Continuous dynamics, with i > 0 for charging and i < 0 for discharging:

    d/dt [v_b, v_s, v_1] = A [v_b, v_s, v_1] + B i
    v = h(v_s) - v_1 + r0(soc) * i

This module also provides the Rint, Thevenin and basic-NDC baselines behind
the same simulation interface, an exact closed-form zero-order-hold
discretization, and a step simulator that truncates (never clamps) when the
terminal voltage or SoC leaves its admissible range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

__all__ = [
    "OcvPolynomial",
    "ConstantR0",
    "SocDependentR0",
    "R0Law",
    "NdcParams",
    "CircuitState",
    "RintModel",
    "TheveninModel",
    "BasicNdcModel",
    "NdcModel",
    "ComparisonModel",
    "SimResult",
    "continuous_matrices",
    "zoh_matrices",
    "simulate",
    "soc_trajectory",
]

SOC_TOL = 1e-9
_V_TOL = 1e-12


@dataclass(frozen=True)
class OcvPolynomial:
    """Fifth-order SoC-OCV curve with pinned endpoints.

    Only a1..a4 are free: the constant term equals v_min and the quintic
    coefficient is always derived as v_max - v_min - (a1+a2+a3+a4), so
    h(0) = v_min and h(1) = v_max hold by construction.
    """

    v_min: float
    v_max: float
    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError(f"v_min must be below v_max, got [{self.v_min}, {self.v_max}]")

    @classmethod
    def from_coefficients(cls, alpha) -> "OcvPolynomial":
        """Build from six raw coefficients a0..a5 (v_min = a0, v_max = sum)."""
        alpha = [float(a) for a in alpha]
        if len(alpha) != 6:
            raise ValueError("expected six polynomial coefficients")
        return cls(alpha[0], math.fsum(alpha), alpha[1], alpha[2], alpha[3], alpha[4])

    @property
    def a0(self) -> float:
        return self.v_min

    @property
    def a5(self) -> float:
        return self.v_max - self.v_min - (self.a1 + self.a2 + self.a3 + self.a4)

    @property
    def alpha(self) -> np.ndarray:
        """Coefficients a0..a5, ascending powers."""
        return np.array([self.a0, self.a1, self.a2, self.a3, self.a4, self.a5])

    @cached_property
    def _desc(self) -> tuple:
        return (self.a5, self.a4, self.a3, self.a2, self.a1, self.a0)

    @cached_property
    def _desc_slope(self) -> tuple:
        return (5 * self.a5, 4 * self.a4, 3 * self.a3, 2 * self.a2, self.a1)

    def __call__(self, v_s):
        """Evaluate h(v_s); defined for all real v_s, scalar or array."""
        return _horner(self._desc, v_s)

    def slope(self, v_s):
        """Evaluate dh/dv_s."""
        return _horner(self._desc_slope, v_s)


def _horner(desc, x):
    if isinstance(x, np.ndarray):
        acc = np.full_like(x, desc[0], dtype=float)
        for c in desc[1:]:
            acc = acc * x + c
        return acc
    acc = desc[0]
    for c in desc[1:]:
        acc = acc * x + c
    return acc


def _check_soc(soc) -> None:
    s = np.asarray(soc, dtype=float)
    if np.any(s < -SOC_TOL) or np.any(s > 1.0 + SOC_TOL):
        raise ValueError(f"SoC outside [0, 1]: {s[(s < -SOC_TOL) | (s > 1 + SOC_TOL)]}")


@dataclass(frozen=True)
class ConstantR0:
    """SoC-independent series resistance."""

    r0: float

    def __post_init__(self):
        if self.r0 < 0:
            raise ValueError("r0 must be non-negative")

    def __call__(self, soc):
        _check_soc(soc)
        if isinstance(soc, np.ndarray):
            return np.full_like(soc, self.r0, dtype=float)
        return self.r0


@dataclass(frozen=True)
class SocDependentR0:
    """Series resistance rising toward both SoC extremes:

        r0(soc) = g1 + g2*exp(-g3*soc) + g4*exp(-g5*(1 - soc))
    """

    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float
    gamma5: float

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "gamma3", "gamma4", "gamma5"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def gammas(self) -> np.ndarray:
        return np.array([self.gamma1, self.gamma2, self.gamma3, self.gamma4, self.gamma5])

    def __call__(self, soc):
        _check_soc(soc)
        if isinstance(soc, np.ndarray):
            return (self.gamma1
                    + self.gamma2 * np.exp(-self.gamma3 * soc)
                    + self.gamma4 * np.exp(-self.gamma5 * (1.0 - soc)))
        return (self.gamma1
                + self.gamma2 * math.exp(-self.gamma3 * soc)
                + self.gamma4 * math.exp(-self.gamma5 * (1.0 - soc)))


R0Law = Union[ConstantR0, SocDependentR0]


@dataclass(frozen=True)
class CircuitState:
    """The three circuit state voltages."""

    v_b: float
    v_s: float
    v_1: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v_b, self.v_s, self.v_1])


@dataclass(frozen=True)
class NdcParams:
    """Full physical parameter set of the NDC circuit."""

    c_b: float  # bulk capacitance, F
    c_s: float  # surface capacitance, F
    r_b: float  # bulk branch resistance, ohm
    r_s: float  # surface branch resistance, ohm
    r_1: float  # series RC resistance, ohm
    c_1: float  # series RC capacitance, F
    r0: R0Law
    ocv: OcvPolynomial

    def __post_init__(self):
        if not (self.c_b > 0 and self.c_s > 0):
            raise ValueError("capacitances must be positive")
        if not self.c_b > self.c_s:
            raise ValueError("bulk capacitance must exceed surface capacitance")
        if not (self.r_b >= self.r_s >= 0):
            raise ValueError("need r_b >= r_s >= 0")
        if self.r_1 < 0:
            raise ValueError("r_1 must be non-negative")
        if not self.c_1 > 0:
            raise ValueError("c_1 must be positive")

    @property
    def q_t(self) -> float:
        """Total capacity in coulombs (state voltages span exactly 1 V)."""
        return self.c_b + self.c_s

    def soc_of(self, state: CircuitState) -> float:
        """Charge-weighted SoC: (c_b*v_b + c_s*v_s) / (c_b + c_s)."""
        return (self.c_b * state.v_b + self.c_s * state.v_s) / (self.c_b + self.c_s)


def continuous_matrices(p: NdcParams) -> tuple[np.ndarray, np.ndarray]:
    """State matrices (A, B) of the continuous-time NDC dynamics.

    Degenerate circuits (r_b + r_s = 0 or r_1 = 0) have no finite A and are
    rejected; a missing RC branch is modeled by BasicNdcModel instead.
    """
    if p.r_b + p.r_s <= 0:
        raise ValueError("r_b + r_s must be positive for the diffusion block")
    if p.r_1 <= 0:
        raise ValueError("r_1 must be positive to form the RC branch pole")
    rsum = p.r_b + p.r_s
    a12 = 1.0 / (p.c_b * rsum)
    a21 = 1.0 / (p.c_s * rsum)
    A = np.array([
        [-a12, a12, 0.0],
        [a21, -a21, 0.0],
        [0.0, 0.0, -1.0 / (p.r_1 * p.c_1)],
    ])
    B = np.array([p.r_s / (p.c_b * rsum), p.r_b / (p.c_s * rsum), -1.0 / p.c_1])
    return A, B


def _zoh_diffusion(c_b, c_s, r_b, r_s, dt) -> tuple[np.ndarray, np.ndarray]:
    """Exact ZOH discretization of the 2x2 diffusion block.

    The block satisfies A2^2 = -mu*A2 with mu = a12 + a21, so
    exp(A2*t) = I + A2*(1 - exp(-mu*t))/mu in closed form.
    """
    rsum = r_b + r_s
    a12 = 1.0 / (c_b * rsum)
    a21 = 1.0 / (c_s * rsum)
    mu = a12 + a21
    decay = math.exp(-mu * dt)
    A2 = np.array([[-a12, a12], [a21, -a21]])
    B2 = np.array([r_s / (c_b * rsum), r_b / (c_s * rsum)])
    Ad2 = np.eye(2) + A2 * ((1.0 - decay) / mu)
    Bd2 = dt * B2 + (A2 @ B2) * ((mu * dt - (1.0 - decay)) / mu**2)
    return Ad2, Bd2


def _zoh_rc(r_1, c_1, dt) -> tuple[float, float]:
    a33 = -1.0 / (r_1 * c_1)
    ad = math.exp(a33 * dt)
    bd = (ad - 1.0) / a33 * (-1.0 / c_1)
    return ad, bd


def zoh_matrices(p: NdcParams, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization (A_d, B_d) over a step dt.

    Computed per block in closed form: the diffusion block has eigenvalues
    {0, -mu} and the RC row is scalar, so no general matrix exponential is
    needed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    continuous_matrices(p)  # reuses the degeneracy checks
    Ad = np.zeros((3, 3))
    Bd = np.zeros(3)
    Ad[:2, :2], Bd[:2] = _zoh_diffusion(p.c_b, p.c_s, p.r_b, p.r_s, dt)
    Ad[2, 2], Bd[2] = _zoh_rc(p.r_1, p.c_1, dt)
    return Ad, Bd


def soc_trajectory(q_t: float, current, dt: float, soc0: float) -> np.ndarray:
    """Coulomb-counted SoC sequence, rectangular rule (ZOH-consistent).

    Returns n+1 values for n current samples; element k is the SoC after k
    steps, so soc[0] = soc0 and sample k of a simulation sees soc[k].
    """
    if q_t <= 0:
        raise ValueError("q_t must be positive")
    u = np.asarray(current, dtype=float)
    return np.concatenate(([soc0], soc0 + (dt / q_t) * np.cumsum(u)))


# --- comparison models ----------------------------------------------------
#
# Each model exposes the same stepping interface consumed by simulate():
#   state_labels, initial_state, discrete_update, soc_of, terminal_voltage
# and an `ocv` attribute supplying the admissible voltage window.


@dataclass(frozen=True)
class RintModel:
    """Ideal voltage source h(soc) behind a series resistance.

    SoC is coulomb counted, which requires the capacity q_t.
    """

    r0: float
    ocv: OcvPolynomial
    q_t: float

    state_labels = ("soc",)

    def initial_state(self, soc0: float) -> np.ndarray:
        return np.array([soc0])

    def discrete_update(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        return np.array([[1.0]]), np.array([dt / self.q_t])

    def soc_of(self, x: np.ndarray) -> float:
        return x[0]

    def terminal_voltage(self, x: np.ndarray, i: float, soc: float) -> float:
        return self.ocv(x[0]) + self.r0 * i


@dataclass(frozen=True)
class TheveninModel:
    """Rint plus one series RC branch, same sign convention as the NDC model:

        v = h(soc) - v_1 + r0*i,   dv_1/dt = -v_1/(r_1 c_1) - i/c_1
    """

    r0: float
    r_1: float
    c_1: float
    ocv: OcvPolynomial
    q_t: float

    state_labels = ("soc", "v_1")

    def initial_state(self, soc0: float) -> np.ndarray:
        return np.array([soc0, 0.0])

    def discrete_update(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        ad, bd = _zoh_rc(self.r_1, self.c_1, dt)
        return np.array([[1.0, 0.0], [0.0, ad]]), np.array([dt / self.q_t, bd])

    def soc_of(self, x: np.ndarray) -> float:
        return x[0]

    def terminal_voltage(self, x: np.ndarray, i: float, soc: float) -> float:
        return self.ocv(x[0]) - x[1] + self.r0 * i


@dataclass(frozen=True)
class BasicNdcModel:
    """NDC without the RC branch and with constant r0 (r_1, c_1 unused)."""

    params: NdcParams

    state_labels = ("v_b", "v_s")

    def __post_init__(self):
        if not isinstance(self.params.r0, ConstantR0):
            raise ValueError("basic NDC requires a constant r0 law")

    @property
    def ocv(self) -> OcvPolynomial:
        return self.params.ocv

    def initial_state(self, soc0: float) -> np.ndarray:
        return np.array([soc0, soc0])

    def discrete_update(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        if p.r_b + p.r_s <= 0:
            raise ValueError("r_b + r_s must be positive for the diffusion block")
        return _zoh_diffusion(p.c_b, p.c_s, p.r_b, p.r_s, dt)

    def soc_of(self, x: np.ndarray) -> float:
        p = self.params
        return (p.c_b * x[0] + p.c_s * x[1]) / (p.c_b + p.c_s)

    def terminal_voltage(self, x: np.ndarray, i: float, soc: float) -> float:
        return self.params.ocv(x[1]) + self.params.r0.r0 * i


@dataclass(frozen=True)
class NdcModel:
    """The full nonlinear double-capacitor model."""

    params: NdcParams

    state_labels = ("v_b", "v_s", "v_1")

    @property
    def ocv(self) -> OcvPolynomial:
        return self.params.ocv

    def initial_state(self, soc0: float) -> np.ndarray:
        # equilibrium: v_b = v_s = soc0, relaxed RC branch
        return np.array([soc0, soc0, 0.0])

    def discrete_update(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        return zoh_matrices(self.params, dt)

    def soc_of(self, x: np.ndarray) -> float:
        p = self.params
        return (p.c_b * x[0] + p.c_s * x[1]) / (p.c_b + p.c_s)

    def terminal_voltage(self, x: np.ndarray, i: float, soc: float) -> float:
        return self.params.ocv(x[1]) - x[2] + self.params.r0(soc) * i


ComparisonModel = Union[RintModel, TheveninModel, BasicNdcModel, NdcModel]


@dataclass
class SimResult:
    """Simulator output; arrays share one length and align with the input.

    When `truncated` is set, the series stop at the first violating sample:
    a voltage-bound crossing is included as the final sample (like a tester
    logging the cutoff hit), while a state that would push SoC out of [0, 1]
    is not recorded.
    """

    voltage: np.ndarray
    states: np.ndarray  # row k = state before applying current sample k
    soc: np.ndarray
    state_labels: tuple
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.voltage)


def simulate(model: ComparisonModel, current, dt: float, soc0: float,
             check_bounds: bool = True) -> SimResult:
    """Propagate a model through a sampled current profile (ZOH).

    Sample k reports the pre-step state, its SoC, and the terminal voltage
    under current[k]; SoC-dependent r0 uses that same pre-step SoC.  With
    check_bounds the run truncates (never clamps) once the terminal voltage
    leaves [v_min, v_max] or SoC leaves [0, 1]; pass check_bounds=False to
    follow the raw dynamics past the physical window.
    """
    if not 0.0 <= soc0 <= 1.0:
        raise ValueError(f"soc0 must lie in [0, 1], got {soc0}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    u = np.asarray(current, dtype=float)
    n = u.size
    ad, bd = model.discrete_update(dt)
    x = model.initial_state(soc0)
    v_lo = model.ocv.v_min - _V_TOL
    v_hi = model.ocv.v_max + _V_TOL

    states = np.empty((n, x.size))
    volts = np.empty(n)
    socs = np.empty(n)
    truncated = False
    m = 0
    soc_of = model.soc_of
    terminal = model.terminal_voltage
    for k in range(n):
        soc = soc_of(x)
        v = terminal(x, u[k], soc)
        states[k] = x
        socs[k] = soc
        volts[k] = v
        m = k + 1
        if check_bounds and not (v_lo <= v <= v_hi):
            truncated = True
            break
        x = ad @ x + bd * u[k]
        if check_bounds and not (-SOC_TOL <= soc_of(x) <= 1.0 + SOC_TOL):
            truncated = True
            break
    return SimResult(volts[:m], states[:m], socs[:m], model.state_labels, truncated)
