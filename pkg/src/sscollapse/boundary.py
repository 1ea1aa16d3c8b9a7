"""The s = 0 boundary history: kappa0, theta0, zeta0 and the integrals gamma, I.

On the reference incoming curve the exterior system restricts to

    dkappa0/dt = kappa0 (kappa0 - 1 - zeta0^2)
    dtheta0/dt = (kappa0 - 1) theta0 + zeta0
    gamma(t)   = integral_0^t (kappa0 - 1)
    I(t)       = -integral_0^t e^{-gamma} zeta0

with zeta0(t) supplied either by extraction from a Bondi run or as a
user-given function ("manufactured trace" mode).  The closed identity
theta0 = e^gamma (theta0(0) - I) is tracked as an internal residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bondi import CharacteristicTrace
from .errors import MalformedDataError

__all__ = [
    "BoundaryTrace",
    "boundary_evolve",
    "boundary_trace_from_curve",
    "manufactured_case_trace",
    "write_trace_csv",
    "read_trace_csv",
]

_CSV_HEADER = "t,kappa0,theta0,zeta0,gamma,I"


@dataclass
class BoundaryTrace:
    """Sampled boundary history driving the instability classification."""

    t: np.ndarray
    kappa0: np.ndarray
    theta0: np.ndarray
    zeta0: np.ndarray
    gamma: np.ndarray
    I: np.ndarray
    truncated: bool = False          # kappa0 blow-up cut the trace short
    residual_theta0: float = 0.0     # max |theta0 - e^gamma (theta0(0) - I)|
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t)
        for name in ("kappa0", "theta0", "zeta0", "gamma", "I"):
            if len(getattr(self, name)) != n:
                raise MalformedDataError(f"trace column {name} has wrong length")
        if n >= 2 and not np.all(np.diff(self.t) > 0):
            raise MalformedDataError("trace times must be strictly increasing")
        if np.any(self.kappa0 < 1.0 - 1e-10):
            raise MalformedDataError("kappa0 must be >= 1")
        if np.any(np.diff(self.gamma) < -1e-12):
            raise MalformedDataError("gamma must be nondecreasing")

    @property
    def mu0(self) -> np.ndarray:
        return 1.0 - 1.0 / self.kappa0

    def interpolators(self):
        """PCHIP interpolants for (kappa0, theta0, zeta0, gamma) in t."""
        from scipy.interpolate import PchipInterpolator
        return {name: PchipInterpolator(self.t, getattr(self, name))
                for name in ("kappa0", "theta0", "zeta0", "gamma", "I")}

    def resampled(self, t_new: np.ndarray) -> "BoundaryTrace":
        interp = self.interpolators()
        return BoundaryTrace(
            t=np.asarray(t_new, dtype=float),
            kappa0=interp["kappa0"](t_new), theta0=interp["theta0"](t_new),
            zeta0=interp["zeta0"](t_new), gamma=interp["gamma"](t_new),
            I=interp["I"](t_new), truncated=self.truncated, meta=dict(self.meta))


def boundary_evolve(kappa0_init: float, theta0_init: float,
                    zeta0: Callable[[float], float], t_end: float,
                    n_out: int = 2001, rtol: float = 1e-10, atol: float = 1e-12,
                    kappa_cap: float = 1e12) -> BoundaryTrace:
    """Integrate the boundary ODE pair plus the gamma and I quadratures.

    Uses an adaptive 4th/5th-order Runge-Kutta integrator; a kappa0
    blow-up terminates the trace (flagged `truncated`).  The identity
    theta0 = e^gamma (theta0(0) - I) is evaluated on the output grid and
    its worst residual stored on the trace.
    """
    from scipy.integrate import solve_ivp

    if kappa0_init < 1.0:
        raise MalformedDataError("kappa0(0) must be >= 1")

    def rhs(t, y):
        k0, th0, ga, ii = y
        z0 = zeta0(t)
        return [k0 * (k0 - 1.0 - z0 * z0),
                (k0 - 1.0) * th0 + z0,
                k0 - 1.0,
                -math.exp(-ga) * z0]

    def blow_up(t, y):
        return y[0] - kappa_cap
    blow_up.terminal = True
    blow_up.direction = 1.0

    t_eval = np.linspace(0.0, t_end, n_out)
    sol = solve_ivp(rhs, (0.0, t_end), [kappa0_init, theta0_init, 0.0, 0.0],
                    method="RK45", rtol=rtol, atol=atol, dense_output=False,
                    t_eval=t_eval, events=blow_up, max_step=t_end / 50.0)
    truncated = bool(sol.status == 1)
    t = sol.t
    k0, th0, ga, ii = sol.y
    z0 = np.array([zeta0(tv) for tv in t])
    resid = float(np.max(np.abs(th0 - np.exp(ga) * (theta0_init - ii)))) if len(t) else 0.0
    return BoundaryTrace(t=t, kappa0=np.maximum(k0, 1.0), theta0=th0, zeta0=z0,
                         gamma=ga, I=ii, truncated=truncated, residual_theta0=resid,
                         meta={"kappa0_init": kappa0_init, "theta0_init": theta0_init})


def boundary_trace_from_curve(curve: CharacteristicTrace, a: Optional[float] = None) -> BoundaryTrace:
    """Convert an extracted incoming curve into a boundary trace.

    The dimensionless time is t = -log(r/a) along the curve (the gauged
    retarded time is u = -2r there); gamma and I come from trapezoidal
    quadrature on that grid.
    """
    if a is None:
        a = curve.seed_r
    r = curve.r
    t = -np.log(r / a)
    mu = curve.mu
    if np.any(mu >= 1.0):
        raise MalformedDataError("curve crosses the horizon; trace undefined beyond")
    kappa0 = 1.0 / (1.0 - mu)
    theta0 = curve.theta
    zeta0 = curve.zeta
    dgam = 0.5 * np.diff(t) * ((kappa0 - 1.0)[:-1] + (kappa0 - 1.0)[1:])
    gamma = np.concatenate([[0.0], np.cumsum(dgam)])
    integrand = np.exp(-gamma) * zeta0
    dI = -0.5 * np.diff(t) * (integrand[:-1] + integrand[1:])
    I = np.concatenate([[0.0], np.cumsum(dI)])
    resid = float(np.max(np.abs(theta0 - np.exp(gamma) * (theta0[0] - I))))
    return BoundaryTrace(t=t, kappa0=kappa0, theta0=theta0, zeta0=zeta0,
                         gamma=gamma, I=I, truncated=curve.truncated,
                         residual_theta0=resid,
                         meta={"seed_u": curve.seed_u, "seed_r": curve.seed_r, "a": a})


# -- manufactured traces ---------------------------------------------------------


def manufactured_case_trace(case: int, theta0_init: float = 0.0, t_end: float = 30.0,
                            n: int = 6001, osc: float = 2.0) -> BoundaryTrace:
    """Analytic trace with gamma(t) = t whose I(t) realizes one tail case.

        1: I -> 1            2: I -> +inf          3: I -> -inf
        4: I oscillates in [-1, 1]
        5: liminf finite, limsup = +inf
        6: liminf = -inf, limsup finite
        7: I oscillates to +-inf

    kappa0 = 2 (so gamma = t), zeta0 = -e^gamma dI/dt, and theta0 follows
    the closed identity.  These are classifier inputs, not solutions of
    the boundary ODE pair (zeta0 is treated as externally supplied).
    """
    t = np.linspace(0.0, t_end, n)
    w = osc
    if case == 1:
        I = 1.0 - np.exp(-t)
        dI = np.exp(-t)
    elif case == 2:
        I = 0.3 * t
        dI = np.full_like(t, 0.3)
    elif case == 3:
        I = -0.3 * t
        dI = np.full_like(t, -0.3)
    elif case == 4:
        I = np.sin(w * t)
        dI = w * np.cos(w * t)
    elif case == 5:
        I = 0.5 * t * (1.0 + np.sin(w * t))
        dI = 0.5 * (1.0 + np.sin(w * t)) + 0.5 * w * t * np.cos(w * t)
    elif case == 6:
        I = -0.5 * t * (1.0 + np.sin(w * t))
        dI = -(0.5 * (1.0 + np.sin(w * t)) + 0.5 * w * t * np.cos(w * t))
    elif case == 7:
        I = t * np.sin(w * t)
        dI = np.sin(w * t) + w * t * np.cos(w * t)
    else:
        raise ValueError("case must be 1..7")
    gamma = t.copy()
    kappa0 = np.full_like(t, 2.0)
    zeta0 = -np.exp(np.minimum(gamma, 700.0)) * dI
    theta0 = np.exp(gamma) * (theta0_init - I)
    # keep theta0 finite for plotting-scale sanity on extreme cases
    theta0 = np.clip(theta0, -1e300, 1e300)
    return BoundaryTrace(t=t, kappa0=kappa0, theta0=theta0, zeta0=zeta0,
                         gamma=gamma, I=I,
                         meta={"kind": f"manufactured-case-{case}",
                               "theta0_init": theta0_init})


# -- CSV interface ----------------------------------------------------------------


def write_trace_csv(trace: BoundaryTrace, path):
    with open(path, "w") as fh:
        fh.write(_CSV_HEADER + "\n")
        for row in zip(trace.t, trace.kappa0, trace.theta0, trace.zeta0,
                       trace.gamma, trace.I):
            fh.write(",".join(repr(v) for v in row) + "\n")


def read_trace_csv(path) -> BoundaryTrace:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise MalformedDataError(
                f"bad trace header {header!r}; expected {_CSV_HEADER!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != 6:
        raise MalformedDataError("trace CSV must have 6 columns")
    return BoundaryTrace(t=data[:, 0], kappa0=data[:, 1], theta0=data[:, 2],
                         zeta0=data[:, 3], gamma=data[:, 4], I=data[:, 5])
