"""Characteristic evolution in Bondi coordinates (u, r).

Metric form: ds^2 = -e^{2nu} du^2 - 2 e^{nu+lambda} du dr, with field
variables theta = r dphi/dr and zeta = r (nphi)/(nr) along the incoming
null direction.  On each outgoing cone u = const the constraint chain

    dm/dr      = (1 - 2m/r) theta^2 / 2,           m(0) = 0
    e^{-2lam}  = 1 - 2m/r
    d(nu+lam)/dr = theta^2 / r,                    nu(u, 0) = 0
    r dzeta/dr = -(e^{2lam} - 1) zeta - theta,     zeta(u, 0) = 0

is integrated outward by an implicit trapezoidal rule (linear in the
unknown, so each cell update is closed-form and the constant-theta
solution mu = c^2/(1+c^2) is reproduced exactly).  Grid points then ride
the incoming null curves dr/du = -e^{nu-lam}/2, carrying

    Dtheta = e^{nu-lam} [ (e^{2lam}-1) theta + zeta ] / (2r)
    Dphi   = -e^{nu-lam} zeta / (2r)

with a two-pass predictor-corrector (second order).  Points reaching the
retirement radius are dropped; the outer edge is replenished from the
free data profile.  The run stops at the first grid point with
mu >= 1 - eps_h (the horizon proxy; the coordinates degenerate at mu = 1),
on the dispersal criterion, or at max u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bv import BVFunction
from .errors import CoverageError, StepFailure

__all__ = [
    "RunConfig",
    "SliceState",
    "HorizonReport",
    "CharacteristicTrace",
    "RunResult",
    "integrate_hypersurface",
    "advance_slice",
    "run",
    "extract_incoming_curve",
]


@dataclass(frozen=True)
class RunConfig:
    """Grid, step-control and stopping parameters for a Bondi run."""

    n_points: int = 512
    r_max: float = 3.0
    u_start: float = -2.0
    u_end: float = 0.0
    step_mode: str = "adaptive"      # "adaptive" | "cfl"
    cfl: float = 0.5                 # du = cfl * initial spacing in "cfl" mode
    tol_step: float = 1e-6           # LTE target in "adaptive" mode
    du_init: float = 0.0             # 0 -> cfl * spacing
    du_min: float = 1e-10
    du_max: float = 0.05
    horizon_eps: float = 1e-2        # horizon proxy threshold mu >= 1 - eps
    retire_radius: float = 0.0       # 0 -> half the initial spacing
    output_du: float = 0.02          # archive cadence in u
    dispersal_floor: float = 1e-3    # fraction of the historical peak mu
    dispersal_window: int = 25       # consecutive decreasing outputs required
    vacuum_mu: float = 1e-14         # peak mu below this counts as vacuum
    center_mode: str = "auto"        # "auto" | "regular" | "vertex"
    center_gate: float = 0.05       # |theta(0+)| above this -> vertex center
    a_scale: float = 1.0             # radius of the reference sphere (s = 0)
    replenish: bool = True           # False: pure domain of dependence (shrinking grid)

    def __post_init__(self):
        if not (0.0 < self.horizon_eps < 1.0):
            raise ValueError("horizon_eps must lie in (0, 1)")
        if self.n_points < 16:
            raise ValueError("resolution must be at least 16 points")
        if self.step_mode not in ("adaptive", "cfl"):
            raise ValueError(f"unknown step_mode {self.step_mode!r}")
        if self.center_mode not in ("auto", "regular", "vertex"):
            raise ValueError(f"unknown center_mode {self.center_mode!r}")

    @property
    def spacing(self) -> float:
        return self.r_max / self.n_points

    @property
    def retire_at(self) -> float:
        return self.retire_radius if self.retire_radius > 0 else 0.5 * self.spacing


@dataclass
class SliceState:
    """All fields on one outgoing cone u = const (grid radii are strictly positive)."""

    u: float
    r: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    zeta: np.ndarray
    m: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    vertex: bool = False          # center is a scale-invariance vertex (theta(0+) != 0)
    lte: float = 0.0              # step controller's local truncation estimate

    @property
    def mu(self) -> np.ndarray:
        return 2.0 * self.m / self.r

    @property
    def kappa(self) -> np.ndarray:
        return np.exp(2.0 * self.lam)

    @property
    def enl(self) -> np.ndarray:
        """e^{nu - lambda}: incoming characteristic speed is -enl/2."""
        return np.exp(self.nu - self.lam)

    def validate(self, rtol: float = 1e-9):
        mu = self.mu
        if np.any(mu < -1e-12) or np.any(mu >= 1.0):
            raise AssertionError("mu outside [0, 1) on a stored slice")
        if np.any(np.diff(self.m) < -rtol * (1.0 + np.max(np.abs(self.m)))):
            raise AssertionError("mass not nondecreasing in r")
        if not np.allclose(np.exp(-2.0 * self.lam), 1.0 - mu, rtol=1e-12, atol=1e-14):
            raise AssertionError("e^{-2 lambda} = 1 - mu violated")


@dataclass(frozen=True)
class HorizonReport:
    """Outcome of a run: 'dispersal', 'horizon' or 'max-time-reached'."""

    outcome: str
    u: Optional[float] = None
    r: Optional[float] = None
    m: Optional[float] = None
    peak_mu: float = 0.0
    detail: str = ""

    def __post_init__(self):
        if self.outcome not in ("dispersal", "horizon", "max-time-reached"):
            raise ValueError(f"unknown outcome {self.outcome!r}")
        if self.outcome == "horizon" and (self.u is None or self.r is None or self.m is None):
            raise ValueError("horizon outcome requires (u, r, m)")


@dataclass
class RunResult:
    report: HorizonReport
    slices: list
    config: RunConfig
    lte_total: float = 0.0
    n_steps: int = 0
    n_rejected: int = 0


@dataclass
class CharacteristicTrace:
    """Samples along one incoming null curve through the archived fields.

    u_gauged = -2*r realizes the normalization e^{nu-lam} = 1 along the
    curve (dr/du_gauged = -1/2 exactly), anchored so u_gauged = -2r holds
    at the seed.
    """

    seed_u: float
    seed_r: float
    u: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    zeta: np.ndarray
    m: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    truncated: bool = False

    @property
    def u_gauged(self) -> np.ndarray:
        return -2.0 * self.r

    @property
    def mu(self) -> np.ndarray:
        return 2.0 * self.m / self.r

    def validate(self, rtol: float = 1e-8):
        if not np.all(np.diff(self.r) < 0):
            raise AssertionError("curve radius must strictly decrease in u")


# -- hypersurface constraint chain --------------------------------------------


class HorizonHit(Exception):
    """Internal signal: mu crossed the horizon threshold during integration."""

    def __init__(self, index, r, m):
        self.index = index
        self.r = r
        self.m = m


def _center_theta(r, theta):
    """Linear extrapolation of theta to r -> 0+ from the two innermost points."""
    if len(r) == 1:
        return float(theta[0])
    t0 = theta[0] - r[0] * (theta[1] - theta[0]) / (r[1] - r[0])
    return float(t0)


def _scan_mass(r, theta, theta_c, horizon_mu):
    """Trapezoidal scan of dm/dr = (1 - 2m/r) theta^2 / 2 from m(0) = 0.

    The center cell uses the regular-limit integrand value
    f(0) = theta_c^2 / (2 (1 + theta_c^2)), which makes constant-theta data
    exact.  Cells where the implicit factor gets large are subdivided with
    linearly interpolated theta.  Returns (m, horizon_index_or_None).
    """
    n = len(r)
    m = np.empty(n)
    mu_c = theta_c * theta_c / (1.0 + theta_c * theta_c)
    f_prev = 0.5 * (1.0 - mu_c) * theta_c * theta_c
    r_list = r.tolist()
    th_list = theta.tolist()
    m_prev = 0.0
    r_prev = 0.0
    th_prev = theta_c
    horizon_idx = None
    for i in range(n):
        ri = r_list[i]
        ti = th_list[i]
        h = ri - r_prev
        # subdivide so the implicit trapezoid factor stays well-conditioned
        nsub = 1
        while 0.5 * (h / nsub) * (ti * ti) / ri > 0.4 and nsub < 1024:
            nsub *= 2
        if nsub == 1:
            denom = 1.0 + 0.5 * h * ti * ti / ri
            m_new = (m_prev + 0.5 * h * (f_prev + 0.5 * ti * ti)) / denom
        else:
            mm = m_prev
            fp = f_prev
            for k in range(1, nsub + 1):
                rp = r_prev + h * (k - 1) / nsub
                rq = r_prev + h * k / nsub
                tq = th_prev + (ti - th_prev) * k / nsub
                hh = rq - rp
                denom = 1.0 + 0.5 * hh * tq * tq / rq
                mm = (mm + 0.5 * hh * (fp + 0.5 * tq * tq)) / denom
                fp = 0.5 * (1.0 - 2.0 * mm / rq) * tq * tq
            m_new = mm
        m[i] = m_new
        mu_i = 2.0 * m_new / ri
        if horizon_idx is None and mu_i >= horizon_mu:
            horizon_idx = i
        f_prev = 0.5 * (1.0 - mu_i) * ti * ti
        m_prev, r_prev, th_prev = m_new, ri, ti
    return m, horizon_idx


def _scan_zeta(r, theta, kappa, theta_c, kappa_c, vertex):
    """Exponential-integrator scan of dzeta/dr = -((kappa-1) zeta + theta)/r outward.

    Per cell, with abar, bbar the means of (kappa-1)/r and -theta/r, the
    update zeta e^{-abar h} + (bbar/abar)(1 - e^{-abar h}) is exact for
    frozen coefficients; the fixed point -theta/(kappa-1) is preserved on
    constant stretches, so constant-theta vertex data gives
    zeta = -1/theta_c exactly.

    Regular center: zeta(0) = 0 with the limit source -theta'(0).
    Vertex center: the coefficients diverge at r -> 0 while their ratio
    stays finite, so the first cell takes the bounded-solution value
    -theta(r1)/(kappa(r1) - 1).
    """
    n = len(r)
    zeta = np.empty(n)
    a_arr = (kappa - 1.0) / r
    b_arr = -theta / r
    if vertex:
        zeta[0] = -theta[0] / max(kappa[0] - 1.0, 1e-300)
    else:
        # first cell from the regular limits a(0) = 0, b(0) = -theta'(0)
        abar = 0.5 * a_arr[0]
        bbar = 0.5 * (-theta[0] / r[0] + b_arr[0])
        h = r[0]
        x = abar * h
        if abs(x) < 1e-8:
            decay, wgt = 1.0 - x * (1.0 - 0.5 * x), h * (1.0 - 0.5 * x)
        else:
            decay, wgt = math.exp(-x), (1.0 - math.exp(-x)) / abar
        zeta[0] = bbar * wgt
    a_l = a_arr.tolist()
    b_l = b_arr.tolist()
    r_l = r.tolist()
    z_prev = float(zeta[0])
    for i in range(n - 1):
        h = r_l[i + 1] - r_l[i]
        abar = 0.5 * (a_l[i] + a_l[i + 1])
        bbar = 0.5 * (b_l[i] + b_l[i + 1])
        x = abar * h
        if abs(x) < 1e-8:
            decay = 1.0 - x * (1.0 - 0.5 * x)
            wgt = h * (1.0 - 0.5 * x)
        else:
            decay = math.exp(-x)
            wgt = (1.0 - decay) / abar
        z_prev = z_prev * decay + bbar * wgt
        zeta[i + 1] = z_prev
    return zeta


def integrate_hypersurface(u, r, theta, phi=None, *, horizon_eps=1e-2,
                           center_mode="auto", center_gate=0.05,
                           raise_on_horizon=True):
    """Fill m, lam, nu, zeta on a cone from theta; returns a SliceState.

    The constraint chain is integrated outward from the center, whose
    boundary condition is decided per slice: a center with theta(0+)
    extrapolating to ~0 is regular (zeta(0) = 0); one with theta(0+)
    decidedly nonzero is a scale-invariance vertex, where the bounded
    solution of the zeta equation applies instead.  If mu reaches
    1 - horizon_eps the signal carries the first offending location.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    theta_c = _center_theta(r, theta)
    if center_mode == "auto":
        vertex = abs(theta_c) > center_gate
    else:
        vertex = (center_mode == "vertex")
    m, hidx = _scan_mass(r, theta, theta_c, 1.0 - horizon_eps)
    if hidx is not None and raise_on_horizon:
        raise HorizonHit(hidx, float(r[hidx]), float(m[hidx]))
    mu = 2.0 * m / r
    mu = np.minimum(mu, 1.0 - 1e-15)
    lam = -0.5 * np.log1p(-mu)
    kappa = 1.0 / (1.0 - mu)

    # nu + lam by trapezoid of theta^2/r; zero center integrand makes the
    # first cell contribute theta(r1)^2/2 (exact for linear theta)
    q = theta * theta / r
    contrib = np.empty(len(r))
    contrib[0] = 0.5 * r[0] * q[0]
    if len(r) > 1:
        contrib[1:] = 0.5 * np.diff(r) * (q[:-1] + q[1:])
    mu_c = theta_c * theta_c / (1.0 + theta_c * theta_c) if vertex else 0.0
    lam_c = -0.5 * math.log1p(-mu_c) if vertex else 0.0
    nupl = lam_c + np.cumsum(contrib)
    nu = nupl - lam

    kappa_c = 1.0 + theta_c * theta_c if vertex else 1.0
    zeta = _scan_zeta(r, theta, kappa, theta_c, kappa_c, vertex)

    if phi is None:
        phi = _phi_by_quadrature(r, theta, vertex)
    return SliceState(u=float(u), r=r, phi=np.asarray(phi, dtype=float), theta=theta,
                      zeta=zeta, m=m, lam=lam, nu=nu, vertex=vertex)


def _phi_by_quadrature(r, theta, vertex):
    """phi(r) from dphi/dr = theta/r, anchored at the innermost grid point.

    For regular centers the anchor value is theta(r1) (exact when theta is
    linear through the origin); a vertex center's phi is log-divergent so
    the anchor is set to 0 there (additive constant is unphysical).
    """
    q = theta / r
    out = np.empty(len(r))
    out[0] = 0.0 if vertex else theta[0]
    if len(r) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(r) * (q[:-1] + q[1:]))
        out[1:] += out[0]
    return out


# -- time stepping --------------------------------------------------------------


def _sources(state_r, theta, zeta, kappa, enl):
    """Characteristic speed and transport sources at the grid points."""
    v = -0.5 * enl
    F = enl * ((kappa - 1.0) * theta + zeta) / (2.0 * state_r)
    G = -enl * zeta / (2.0 * state_r)
    return v, F, G


def advance_slice(state: SliceState, du: float, data_r: BVFunction, cfg: RunConfig,
                  u0: float):
    """One predictor-corrector step du along the incoming characteristics.

    Returns (new_state, lte_estimate).  Raises HorizonHit if the horizon
    proxy trips while rebuilding the constraint chain.
    """
    kappa = state.kappa
    enl = state.enl
    v, F, G = _sources(state.r, state.theta, state.zeta, kappa, enl)

    # predictor (Euler)
    r_p = state.r + du * v
    th_p = state.theta + du * F
    ph_p = state.phi + du * G
    keep = r_p > cfg.retire_at
    r_p, th_p, ph_p = r_p[keep], th_p[keep], ph_p[keep]
    if len(r_p) < 4:
        raise StepFailure("grid exhausted at the center")
    if np.any(np.diff(r_p) <= 0):
        raise StepFailure("characteristics crossed during predictor")
    pred = integrate_hypersurface(state.u + du, r_p, th_p, ph_p,
                                  horizon_eps=cfg.horizon_eps, center_mode=cfg.center_mode,
                                  center_gate=cfg.center_gate)

    # corrector (trapezoidal average of the endpoint slopes)
    v2, F2, G2 = _sources(pred.r, pred.theta, pred.zeta, pred.kappa, pred.enl)
    vk, Fk, Gk = v[keep], F[keep], G[keep]
    r_n = state.r[keep] + 0.5 * du * (vk + v2)
    th_n = state.theta[keep] + 0.5 * du * (Fk + F2)
    ph_n = state.phi[keep] + 0.5 * du * (Gk + G2)
    keep2 = r_n > cfg.retire_at
    r_n, th_n, ph_n = r_n[keep2], th_n[keep2], ph_n[keep2]
    if np.any(np.diff(r_n) <= 0):
        raise StepFailure("characteristics crossed during corrector")

    lte = max(float(np.max(np.abs(r_n - r_p[keep2]))),
              float(np.max(np.abs(th_n - th_p[keep2]))))

    # outer replenishment from the free data profile (flat traceback)
    u_new = state.u + du
    spacing = cfg.spacing
    while cfg.replenish and cfg.r_max - r_n[-1] >= spacing:
        r_add = r_n[-1] + spacing
        th_add = float(data_r.eval(r_add + 0.5 * (u_new - u0)))
        ph_add = float(ph_n[-1] + 0.5 * (th_n[-1] / r_n[-1] + th_add / r_add) * (r_add - r_n[-1]))
        r_n = np.append(r_n, r_add)
        th_n = np.append(th_n, th_add)
        ph_n = np.append(ph_n, ph_add)

    new_state = integrate_hypersurface(u_new, r_n, th_n, ph_n,
                                       horizon_eps=cfg.horizon_eps, center_mode=cfg.center_mode,
                                       center_gate=cfg.center_gate)
    new_state.lte = lte
    return new_state, lte


def _initial_slice(data_r: BVFunction, cfg: RunConfig) -> SliceState:
    h = cfg.spacing
    r = h * np.arange(1, cfg.n_points + 1)
    interior = data_r.breakpoints[(data_r.breakpoints > cfg.retire_at)
                                  & (data_r.breakpoints < cfg.r_max)]
    r = np.unique(np.concatenate([r, interior]))
    theta = np.atleast_1d(data_r.eval(r))
    return integrate_hypersurface(cfg.u_start, r, theta, None,
                                  horizon_eps=cfg.horizon_eps, center_mode=cfg.center_mode,
                                  center_gate=cfg.center_gate)


def run(data_r: BVFunction, cfg: RunConfig) -> RunResult:
    """Evolve initial data theta(u_start, r) until horizon, dispersal or max u.

    Slices are archived at the output cadence (the controller lands on the
    output times exactly, so archives at different resolutions share their
    u values).
    """
    if data_r.domain != "r":
        raise CoverageError("run expects radial initial data")
    try:
        state = _initial_slice(data_r, cfg)
    except HorizonHit as hit:
        report = HorizonReport("horizon", cfg.u_start, hit.r, hit.m, peak_mu=1.0 - cfg.horizon_eps,
                               detail="horizon threshold on the initial cone")
        return RunResult(report, [], cfg)

    slices = [state]
    peak_mu = float(np.max(state.mu))
    decreasing_run = 0
    prev_max_mu = peak_mu
    lte_total = 0.0
    n_steps = 0
    n_rejected = 0

    du = cfg.du_init if cfg.du_init > 0 else cfg.cfl * cfg.spacing
    next_output = cfg.u_start + cfg.output_du
    u = cfg.u_start
    report = None

    while u < cfg.u_end - 1e-14:
        du = min(du, cfg.du_max, cfg.u_end - u, next_output - u)
        du = max(du, cfg.du_min)
        try:
            new_state, lte = advance_slice(state, du, data_r, cfg, cfg.u_start)
        except HorizonHit as hit:
            if cfg.step_mode == "adaptive" and du > 4.0 * cfg.du_min:
                du *= 0.5  # localize the horizon time
                n_rejected += 1
                continue
            report = HorizonReport("horizon", u + du, hit.r, hit.m,
                                   peak_mu=max(peak_mu, 1.0 - cfg.horizon_eps))
            break
        except StepFailure:
            if cfg.step_mode == "adaptive" and du > 4.0 * cfg.du_min:
                du *= 0.5
                n_rejected += 1
                continue
            raise

        if cfg.step_mode == "adaptive" and lte > cfg.tol_step and du > 4.0 * cfg.du_min:
            du *= max(0.3, 0.9 * math.sqrt(cfg.tol_step / lte))
            n_rejected += 1
            continue

        state = new_state
        u = state.u
        lte_total += lte
        n_steps += 1

        if cfg.step_mode == "adaptive":
            grow = 2.0 if lte == 0 else min(2.0, 0.9 * math.sqrt(cfg.tol_step / max(lte, 1e-300)))
            du = min(cfg.du_max, du * max(0.3, grow))
        else:
            du = cfg.cfl * cfg.spacing

        if u >= next_output - 1e-14:
            slices.append(state)
            next_output += cfg.output_du
            cur_max_mu = float(np.max(state.mu))
            peak_mu = max(peak_mu, cur_max_mu)
            if cur_max_mu < prev_max_mu:
                decreasing_run += 1
            else:
                decreasing_run = 0
            prev_max_mu = cur_max_mu
            if peak_mu <= cfg.vacuum_mu:
                if len(slices) >= cfg.dispersal_window:
                    report = HorizonReport("dispersal", peak_mu=peak_mu, detail="vacuum")
                    break
            elif (cur_max_mu < cfg.dispersal_floor * peak_mu
                  and decreasing_run >= cfg.dispersal_window):
                report = HorizonReport("dispersal", peak_mu=peak_mu)
                break

    if report is None:
        if peak_mu <= cfg.vacuum_mu:
            report = HorizonReport("dispersal", peak_mu=peak_mu, detail="vacuum")
        else:
            report = HorizonReport("max-time-reached", peak_mu=peak_mu)
    return RunResult(report, slices, cfg, lte_total, n_steps, n_rejected)


# -- incoming null curves ---------------------------------------------------------


class _FieldInterp:
    """Per-slice monotone interpolants, built lazily."""

    FIELDS = ("theta", "zeta", "m", "lam", "nu")

    def __init__(self, slices):
        self.slices = slices
        self._cache = {}

    def at(self, j, name):
        from scipy.interpolate import PchipInterpolator
        key = (j, name)
        if key not in self._cache:
            sl = self.slices[j]
            if name == "enl":
                vals = np.exp(sl.nu - sl.lam)
            else:
                vals = getattr(sl, name)
            self._cache[key] = PchipInterpolator(sl.r, vals, extrapolate=False)
        return self._cache[key]


def extract_incoming_curve(slices, seed_r: float, seed_u: Optional[float] = None) -> CharacteristicTrace:
    """Integrate dr/du = -e^{nu-lam}/2 through the archived slices from a seed.

    One midpoint (RK2) step per archived interval, with monotone-cubic
    interpolation of the fields in r and linear interpolation in u.  The
    trace is flagged truncated when the curve leaves the archived coverage.
    """
    if not slices:
        raise CoverageError("empty archive")
    if seed_u is None:
        seed_u = slices[0].u
    j0 = next((j for j, sl in enumerate(slices) if abs(sl.u - seed_u) < 1e-12), None)
    if j0 is None:
        raise CoverageError(f"no archived slice at u={seed_u!r}")
    sl0 = slices[j0]
    if not (sl0.r[0] <= seed_r <= sl0.r[-1]):
        raise CoverageError(f"seed radius {seed_r} outside the archived grid")

    interp = _FieldInterp(slices)
    us, rs = [slices[j0].u], [float(seed_r)]
    fields = {k: [] for k in _FieldInterp.FIELDS}
    truncated = False

    def sample(j, rr):
        vals = {}
        for k in _FieldInterp.FIELDS:
            v = interp.at(j, k)(rr)
            if not np.isfinite(v):
                return None
            vals[k] = float(v)
        return vals

    v0 = sample(j0, seed_r)
    if v0 is None:
        raise CoverageError("seed outside the interpolable grid")
    for k in _FieldInterp.FIELDS:
        fields[k].append(v0[k])

    r_cur = float(seed_r)
    for j in range(j0, len(slices) - 1):
        u_a, u_b = slices[j].u, slices[j + 1].u
        h = u_b - u_a
        f_a = interp.at(j, "enl")(r_cur)
        if not np.isfinite(f_a):
            truncated = True
            break
        r_mid = r_cur - 0.25 * h * float(f_a)
        f_m1 = interp.at(j, "enl")(r_mid)
        f_m2 = interp.at(j + 1, "enl")(r_mid)
        if not (np.isfinite(f_m1) and np.isfinite(f_m2)):
            truncated = True
            break
        r_new = r_cur - 0.25 * h * (float(f_m1) + float(f_m2))
        vals = sample(j + 1, r_new)
        if vals is None or r_new <= slices[j + 1].r[0]:
            truncated = True
            break
        us.append(u_b)
        rs.append(r_new)
        for k in _FieldInterp.FIELDS:
            fields[k].append(vals[k])
        r_cur = r_new

    trace = CharacteristicTrace(
        seed_u=float(seed_u), seed_r=float(seed_r),
        u=np.array(us), r=np.array(rs),
        theta=np.array(fields["theta"]), zeta=np.array(fields["zeta"]),
        m=np.array(fields["m"]), lam=np.array(fields["lam"]), nu=np.array(fields["nu"]),
        truncated=truncated)
    trace.validate()
    return trace
