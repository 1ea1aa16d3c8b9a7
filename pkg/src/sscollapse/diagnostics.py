"""Instability diagnostics: boundary-trace classification and proved-inequality checks.

The central objects are the boundary integrals gamma(t) and I(t).  With
gamma unbounded, the solution is generic (an apparent horizon issues from
the singular end point) whenever I fails to settle to theta0(0); the
remaining, potentially exceptional data are probed through the small-scale
initial-data profile

    h(s) = sqrt( (1/s) integral_0^s (e^{s'} theta(0,s') - theta(0,0))^2 ds' )

against the trace-defined comparison scale

    g(s) = e^{-gamma(t)/4},   s = e^{-t - 5 gamma(t)} :

an unbounded h/g ratio as s -> 0+ restores genericity.  The verdict
labels are the package's stable interface: "generic-thm21",
"generic-thm31", "exceptional-candidate", "gamma-bounded", "undecided".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .boundary import BoundaryTrace
from .bondi import CharacteristicTrace, SliceState
from .bv import BVFunction
from .errors import CoverageError
from .exterior import ExteriorState, TrackedCharacteristic, xi_profile, _cumtrapz, _pchip

__all__ = [
    "EstimateConstants",
    "CensorshipVerdict",
    "EstimateEntry",
    "EstimateReport",
    "classify",
    "psi_fields",
    "transport_residual",
    "eta_bound_check",
    "calibrate_c1",
    "lemma_checks",
    "decomposition",
    "jacobian_check",
    "h_and_g",
    "HGSamples",
    "theorem31_test",
    "gauss_curvature",
    "metric_curvature_fd",
]

VERDICTS = ("generic-thm21", "generic-thm31", "exceptional-candidate",
            "gamma-bounded", "undecided")


@dataclass(frozen=True)
class EstimateConstants:
    """Threshold constants; the derived ones are recomputed, never stored."""

    c0: float = 1.0 / math.e
    c1: float = 1.0
    eps_h: float = 1e-2

    def __post_init__(self):
        if not (0.0 < self.c0 <= 1.0 / math.e):
            raise ValueError("c0 must lie in (0, 1/e]")
        if self.c1 < 1.0:
            raise ValueError("c1 must be >= 1")

    @property
    def c2(self) -> float:
        return 16.0 * self.c1 * math.exp(1.0 / self.c1)

    @property
    def c3(self) -> float:
        return 9.5 * (math.e - 2.0)

    @property
    def c4(self) -> float:
        return 2.0 ** 3.5 * self.c2 / math.e

    @property
    def c5(self) -> float:
        return (1.0 - math.exp(-self.c0)) / (64.0 * self.c0)

    @property
    def c7(self) -> float:
        return (self.c0 / 16.0) * (1.0 - math.exp(-1.0 / self.c0))

    @property
    def c9(self) -> float:
        return 2.0 ** 9 * math.exp(2.0 * self.c0) * self.c1


@dataclass
class CensorshipVerdict:
    """Which tail case holds and whether a genericity theorem applies."""

    verdict: str
    case: Optional[int] = None
    l_minus: float = math.nan
    l_plus: float = math.nan
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.case == 1 and not (np.isfinite(self.l_minus) and np.isfinite(self.l_plus)):
            raise ValueError("case 1 requires finite, equal tail limits")
        if self.verdict == "generic-thm21" and self.case == 1:
            if abs(self.details.get("limit_gap", math.inf)) <= 0:
                raise ValueError("case-1 genericity needs theta0(0) != lim I")


@dataclass
class EstimateEntry:
    name: str
    max_violation: float
    location: Optional[float]
    tolerance: float

    @property
    def passing(self) -> bool:
        return self.max_violation <= self.tolerance


@dataclass
class EstimateReport:
    entries: list = field(default_factory=list)

    def add(self, name, max_violation, location, tolerance):
        self.entries.append(EstimateEntry(name, float(max_violation), location,
                                          float(tolerance)))

    @property
    def failing(self) -> list:
        return [e for e in self.entries if not e.passing]

    @property
    def passing(self) -> bool:
        return not self.failing

    def to_dict(self) -> dict:
        return {"passing": self.passing,
                "entries": [{"name": e.name, "max_violation": e.max_violation,
                             "location": e.location, "tolerance": e.tolerance,
                             "passing": e.passing} for e in self.entries]}


# -- tail-limit estimation and the seven-case split ----------------------------------


def _segment_extrema(t, y, n_seg=3):
    """Extrema over equal-length disjoint segments of the trailing half."""
    T1 = float(t[-1])
    H = 0.5 * (T1 - float(t[0]))
    L = H / n_seg
    out = []
    for k in range(n_seg):
        lo = T1 - H + k * L
        hi = lo + L
        sel = (t >= lo) & (t <= hi + 1e-14)
        out.append((float(np.min(y[sel])), float(np.max(y[sel]))))
    return out


def _one_sided_limit(e_seq, tol, rho_div=0.4):
    """Limit of a time-ordered extremum sequence from its segment drift.

    Settled increments give the tail value; a persistent drift (increment
    ratio >= rho_div between successive equal segments) gives +-inf in the
    drift direction; a faster-decaying drift is extrapolated geometrically;
    anything else is undecided (None).  rho_div sits below the 1/2 that
    envelope/segment aliasing can produce for linearly growing
    oscillations, and well above the decay of a trace that has settled.
    """
    e_a, e_b, e_c = e_seq
    d1 = e_b - e_a
    d2 = e_c - e_b
    if abs(d1) <= tol and abs(d2) <= tol:
        return e_c
    if d1 * d2 > 0:
        rho = abs(d2) / abs(d1)
        if rho >= rho_div:
            return math.copysign(math.inf, d2)
        return e_c + d2 * rho / max(1.0 - rho, 1e-6)
    if abs(d1) <= 3 * tol and abs(d2) <= 3 * tol:
        return e_c
    return None


def _limit_estimate(t, y, converge_rtol):
    """Estimate (liminf, limsup) of y from its trailing-segment extrema.

    The trailing half of the trace is split into three equal disjoint
    segments; converged extrema give finite limits, persistent drift
    (increment ratio >= 0.75 between successive segments) gives +-inf.
    Limits are undecidable in principle from a finite trace; this fixes
    the protocol, which is echoed in the verdict details.
    """
    segs = _segment_extrema(t, y)
    scale = max(1.0, float(np.max(np.abs(y))))
    tol = converge_rtol * scale
    mins = [s[0] for s in segs]
    maxs = [s[1] for s in segs]
    l_plus = _one_sided_limit(maxs, tol)
    l_minus = _one_sided_limit(mins, tol)
    info = {"segments": segs, "scale": scale}
    return l_minus, l_plus, info


def _assign_case(l_minus, l_plus, equal_atol):
    if l_minus is None or l_plus is None:
        return None
    fm, fp = np.isfinite(l_minus), np.isfinite(l_plus)
    if fm and fp:
        return 1 if abs(l_plus - l_minus) <= equal_atol else 4
    if not fm and not fp:
        if l_minus == -math.inf and l_plus == math.inf:
            return 7
        return 2 if l_plus == math.inf else 3
    if fm and l_plus == math.inf:
        return 5
    if fp and l_minus == -math.inf:
        return 6
    return None


def classify(trace: BoundaryTrace, theta0_initial: float, *,
             initial_profile: Optional[BVFunction] = None,
             constants: Optional[EstimateConstants] = None,
             converge_rtol: float = 1e-3,
             equality_atol: float = 1e-6,
             gamma_growth_min: float = 0.5,
             min_points: int = 64,
             ratio_kwargs: Optional[dict] = None) -> CensorshipVerdict:
    """Classify a boundary trace against the genericity tests.

    Protocol: gamma is called unbounded when gamma(T)/log(T) exceeds
    `gamma_growth_min` on the trace tail; the tail limits of I come from
    running extrema over doubling trailing windows (converged when two
    successive doublings move them by < converge_rtol relative).  In the
    equal-limits case the decision defers to the h/g ratio test, which
    needs the initial profile; without one the verdict is undecided.
    """
    if len(trace.t) < min_points:
        return CensorshipVerdict("undecided", details={"reason": "trace too short"})
    t, gam, I = trace.t, trace.gamma, trace.I
    T = float(t[-1])
    if T <= math.e:
        return CensorshipVerdict("undecided", details={"reason": "trace span too small"})
    gamma_growth = float(gam[-1]) / math.log(T)
    details = {"gamma_growth": gamma_growth, "gamma_end": float(gam[-1]), "T": T}
    if gamma_growth < gamma_growth_min:
        details["reason"] = "gamma appears bounded; mu0 -> 0 (dispersal regime)"
        return CensorshipVerdict("gamma-bounded", details=details)

    l_minus, l_plus, info = _limit_estimate(t, I, converge_rtol)
    details.update(info)
    scale = info["scale"]
    case = _assign_case(l_minus, l_plus, 10.0 * converge_rtol * scale)
    if case is None:
        details["reason"] = "tail limits of I undetermined (trace too short)"
        return CensorshipVerdict("undecided", details=details)
    lm = l_minus if l_minus is not None else math.nan
    lp = l_plus if l_plus is not None else math.nan

    if case != 1:
        details["reason"] = "I does not tend to a finite limit"
        return CensorshipVerdict("generic-thm21", case=case, l_minus=lm, l_plus=lp,
                                 details=details)
    limit = 0.5 * (lm + lp)
    gap = theta0_initial - limit
    details["limit_gap"] = gap
    if abs(gap) > equality_atol:
        details["reason"] = "theta0(0) != lim I"
        return CensorshipVerdict("generic-thm21", case=1, l_minus=lm, l_plus=lp,
                                 details=details)
    if initial_profile is None:
        details["reason"] = "equal limits; initial profile needed for the ratio test"
        return CensorshipVerdict("undecided", case=1, l_minus=lm, l_plus=lp,
                                 details=details)
    hg = h_and_g(initial_profile, trace)
    sub = theorem31_test(hg, **(ratio_kwargs or {}))
    details["ratio"] = sub.details
    return CensorshipVerdict(sub.verdict, case=1, l_minus=lm, l_plus=lp, details=details)


# -- transport-theory fields ----------------------------------------------------------


@dataclass
class PsiFields:
    psi: np.ndarray
    omega: np.ndarray
    rho: np.ndarray
    xi: np.ndarray


def psi_fields(state: ExteriorState, trace: BoundaryTrace) -> PsiFields:
    """psi, omega, rho profiles on one exterior line.

        psi   = e^{-gamma} (theta e^s - theta0)
        omega = (1 - beta)(kappa - 2) - (kappa0 - 2)
        rho   = e^{-gamma} (omega theta0 + xi)
    """
    interp = trace.interpolators()
    t = state.t
    gam = float(interp["gamma"](t))
    k0 = float(interp["kappa0"](t))
    th0 = float(interp["theta0"](t))
    xi = xi_profile(state)
    omega = (1.0 - state.beta) * (state.kappa - 2.0) - (k0 - 2.0)
    rho = math.exp(-gam) * (omega * th0 + xi)
    psi = math.exp(-gam) * (state.theta * np.exp(state.s) - th0)
    return PsiFields(psi=psi, omega=omega, rho=rho, xi=xi)


def transport_residual(curve: TrackedCharacteristic) -> float:
    """Max residual of dpsi/dt = omega psi + rho along a tracked characteristic.

    Midpoint discretization; the residual converges at the scheme's order
    on smooth runs.
    """
    a = curve.arrays()
    t, psi, om, rho = a["t"], a["psi"], a["omega"], a["rho"]
    if len(t) < 3:
        raise CoverageError("characteristic too short for a residual")
    dt = np.diff(t)
    lhs = np.diff(psi) / dt
    rhs = 0.5 * ((om * psi + rho)[:-1] + (om * psi + rho)[1:])
    return float(np.max(np.abs(lhs - rhs)))


# -- proved-inequality oracles ---------------------------------------------------------


def eta_bound_check(state: ExteriorState, trace: BoundaryTrace,
                    constants: EstimateConstants) -> EstimateEntry:
    """Check the mass-excess bound eta <= c1 s log(1/s) on s <= c0.

    eta = mu - mu0 e^{-s}; applicable to runs that formed no horizon.
    Records the worst eta - c1 s log(1/s) (negative when the bound holds).
    """
    interp = trace.interpolators()
    k0 = float(interp["kappa0"](state.t))
    mu0 = 1.0 - 1.0 / k0
    sel = (state.s > 0) & (state.s <= constants.c0)
    s = state.s[sel]
    eta = state.mu[sel] - mu0 * np.exp(-s)
    bound = constants.c1 * s * np.log(1.0 / s)
    viol = eta - bound
    i = int(np.argmax(viol)) if len(viol) else 0
    return EstimateEntry("eta-bound", float(np.max(viol)) if len(viol) else -math.inf,
                         float(s[i]) if len(viol) else None, 0.0)


def calibrate_c1(states_and_traces, constants: EstimateConstants) -> float:
    """Smallest c1 making the mass-excess bound hold across a no-horizon corpus."""
    worst = 0.0
    for state, trace in states_and_traces:
        interp = trace.interpolators()
        k0 = float(interp["kappa0"](state.t))
        mu0 = 1.0 - 1.0 / k0
        sel = (state.s > 1e-12) & (state.s <= constants.c0)
        s = state.s[sel]
        if not len(s):
            continue
        eta = state.mu[sel] - mu0 * np.exp(-s)
        ratio = eta / (s * np.log(1.0 / s))
        worst = max(worst, float(np.max(ratio)))
    return worst


def lemma_checks(trace: BoundaryTrace) -> list:
    """Pointwise checks of the proved boundary inequalities.

    (a) kappa0(t) <= 2 kappa0(0) e^{gamma(t)}
    (b) mu0(t) <= (e^{gamma(t)-gamma(t0)} - 1)/(1 - e^{t0-t}) with t0 = t-1
    """
    entries = []
    k0 = trace.kappa0
    bound_a = 2.0 * k0[0] * np.exp(trace.gamma)
    viol_a = k0 - bound_a
    ia = int(np.argmax(viol_a))
    entries.append(EstimateEntry("kappa0-exponential-bound", float(np.max(viol_a)),
                                 float(trace.t[ia]), 0.0))
    sel = trace.t >= trace.t[0] + 1.0
    if np.any(sel):
        from scipy.interpolate import PchipInterpolator
        gam_i = PchipInterpolator(trace.t, trace.gamma)
        t = trace.t[sel]
        mu0 = trace.mu0[sel]
        dg = trace.gamma[sel] - gam_i(t - 1.0)
        bound_b = np.expm1(dg) / (1.0 - math.exp(-1.0))
        viol_b = mu0 - bound_b
        ib = int(np.argmax(viol_b))
        entries.append(EstimateEntry("mu0-window-bound", float(np.max(viol_b)),
                                     float(t[ib]), 0.0))
    return entries


# -- characteristic decomposition -------------------------------------------------------


@dataclass
class DecompositionResult:
    t: np.ndarray
    tau: np.ndarray
    sigma: np.ndarray
    psi_tilde: np.ndarray
    psi_hat: np.ndarray
    drift: float        # max |psi_hat(t) - psi(0, s0)| along the curve


def decomposition(curve: TrackedCharacteristic, trace: BoundaryTrace) -> DecompositionResult:
    """tau, sigma and the split psi_tilde = psi_hat + sigma along one characteristic.

    tau and sigma accumulate omega and e^{-tau} rho by trapezoidal
    quadrature along the curve; psi_tilde = e^{-tau} psi.  In the
    continuum psi_hat is exactly constant along the curve, so its drift
    from psi(0, s0) measures the scheme error.
    """
    a = curve.arrays()
    t, om, rho, psi = a["t"], a["omega"], a["rho"], a["psi"]
    if len(t) < 2:
        raise CoverageError("characteristic too short for the decomposition")
    tau = _cumtrapz(om, t)
    rho_tilde = np.exp(-tau) * rho
    sigma = _cumtrapz(rho_tilde, t)
    psi_tilde = np.exp(-tau) * psi
    psi_hat = psi_tilde - sigma
    drift = float(np.max(np.abs(psi_hat - psi[0])))
    return DecompositionResult(t=t, tau=tau, sigma=sigma, psi_tilde=psi_tilde,
                               psi_hat=psi_hat, drift=drift)


def jacobian_check(curve_a: TrackedCharacteristic, curve_b: TrackedCharacteristic,
                   trace: BoundaryTrace) -> EstimateEntry:
    """Compare the finite-difference flow Jacobian with e^{t - gamma - tau}.

    Uses two characteristics with nearby seeds: dchi/ds0 ~ (chi_b - chi_a)/
    (s0_b - s0_a) against the closed form evaluated with the seed-averaged
    tau.  Flags crossing characteristics.
    """
    aa, bb = curve_a.arrays(), curve_b.arrays()
    n = min(len(aa["t"]), len(bb["t"]))
    if n < 2:
        raise CoverageError("characteristics too short for a Jacobian check")
    t = aa["t"][:n]
    if not np.allclose(t, bb["t"][:n], rtol=0, atol=1e-12):
        raise CoverageError("characteristics sampled at different times")
    ds0 = curve_b.s0 - curve_a.s0
    gap = bb["s"][:n] - aa["s"][:n]
    if np.any(gap * np.sign(ds0) <= 0):
        return EstimateEntry("jacobian-vs-closed-form", math.inf, None, math.inf)
    fd = gap / ds0
    interp = trace.interpolators()
    gam = np.asarray(interp["gamma"](t), dtype=float)
    tau_a = _cumtrapz(aa["omega"][:n], t)
    tau_b = _cumtrapz(bb["omega"][:n], t)
    closed = np.exp(t - gam - 0.5 * (tau_a + tau_b))
    rel = np.abs(fd - closed) / np.abs(closed)
    i = int(np.argmax(rel))
    return EstimateEntry("jacobian-vs-closed-form", float(np.max(rel)), float(t[i]), math.inf)


# -- small-scale profile ratio ----------------------------------------------------------


@dataclass
class HGSamples:
    s: np.ndarray
    h: np.ndarray
    g: np.ndarray
    s_resolution: float

    @property
    def ratio(self) -> np.ndarray:
        return self.h / self.g


def _psi0_sq_integral(profile: BVFunction, s_values: np.ndarray, gl_order: int = 12):
    """integral_0^s (e^x theta(x) - theta(0))^2 dx by per-piece Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(gl_order)
    th0 = float(profile.eval(0.0))
    s_values = np.asarray(s_values, dtype=float)
    order = np.argsort(s_values)
    edges_all = profile.breakpoints
    out = np.empty(len(s_values))
    acc = 0.0
    done_to = 0.0
    for j in order:
        s = s_values[j]
        pieces = np.unique(np.concatenate([[done_to, s],
                                           edges_all[(edges_all > done_to) & (edges_all < s)]]))
        for a, b in zip(pieces[:-1], pieces[1:]):
            x = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            # e^x theta(x) - theta(0) written cancellation-free for x -> 0
            dth = np.atleast_1d(profile.eval(x)) - th0
            f = np.exp(x) * dth + th0 * np.expm1(x)
            acc += 0.5 * (b - a) * float(np.dot(weights, f * f))
        done_to = s
        out[j] = acc
    return out


def h_and_g(profile: BVFunction, trace: BoundaryTrace, *,
            n_per_decade: int = 6, s_hi: float = 0.1,
            gamma_span_min: float = 2.0) -> HGSamples:
    """Sample h(s) and the parametric g(s) = e^{-gamma/4} at s = e^{-t-5 gamma}.

    h comes from exact-per-piece quadrature of the profile; g from
    monotone log-log interpolation of the trace parametrization.  The
    s-range runs from s_hi down to the larger of the parametrization's
    reach and the profile's resolution limit (10x its first positive
    breakpoint).
    """
    gam_span = float(trace.gamma[-1] - trace.gamma[0])
    if gam_span < gamma_span_min:
        raise CoverageError("gamma does not increase enough to invert the g parametrization")
    s_par = np.exp(-trace.t - 5.0 * trace.gamma)
    g_par = np.exp(-0.25 * trace.gamma)
    order = np.argsort(s_par)
    s_par, g_par = s_par[order], g_par[order]
    keep = np.concatenate([[True], np.diff(np.log(s_par)) > 1e-12])
    s_par, g_par = s_par[keep], g_par[keep]

    pos_bp = profile.breakpoints[profile.breakpoints > 0]
    s_res = 10.0 * float(pos_bp[0]) if len(pos_bp) else float(s_par[0])
    s_lo = max(float(s_par[0]), s_res, 1e-290)
    s_hi = min(s_hi, float(s_par[-1]))
    if s_lo >= s_hi:
        raise CoverageError("no resolvable s-range for the h/g samples")
    n = max(8, int(math.ceil(n_per_decade * math.log10(s_hi / s_lo))))
    s = np.geomspace(s_lo, s_hi, n)

    from scipy.interpolate import PchipInterpolator
    log_g = PchipInterpolator(np.log(s_par), np.log(g_par))
    g = np.exp(log_g(np.log(s)))
    integ = _psi0_sq_integral(profile, s)
    h = np.sqrt(np.maximum(integ, 0.0) / s)
    return HGSamples(s=s, h=h, g=g, s_resolution=s_res)


@dataclass
class RatioVerdict:
    verdict: str
    details: dict


def theorem31_test(hg: HGSamples, *, per_decade_factor: float = 1.02,
                   min_decades: int = 5, ratio_floor: float = 1e-5,
                   floor_decades: int = 2) -> RatioVerdict:
    """Divergence test on the sampled h/g ratio.

    Declares "generic-thm31" when the per-decade maxima of h/g grow by at
    least `per_decade_factor` per decade over `min_decades` consecutive
    decades reaching down to the resolution floor (the bottom
    `floor_decades` decades may flatten there: that is where the
    piecewise-linear representation runs out), and the small-scale ratio
    clears `ratio_floor` (screening out pure representation noise).  A
    flat-or-decaying or insignificant ratio gives "exceptional-candidate";
    too few decades gives "undecided".
    """
    s, ratio = hg.s, hg.ratio
    dec = np.floor(np.log10(s)).astype(int)
    uniq = np.unique(dec)
    if len(uniq) < min_decades + 1 + floor_decades:
        return RatioVerdict("undecided",
                            {"reason": "insufficient small-s resolution",
                             "decades": len(uniq)})
    dmax = np.array([float(np.max(ratio[dec == d])) for d in uniq])  # ascending s
    growth = dmax[:-1] / np.maximum(dmax[1:], 1e-300)  # toward smaller s
    diverging = False
    run_start = None
    for j in range(0, floor_decades + 1):
        if j + min_decades <= len(growth) and np.all(growth[j:j + min_decades]
                                                     >= per_decade_factor):
            diverging = True
            run_start = j
            break
    significant = float(np.max(dmax[:floor_decades + 1])) >= ratio_floor
    diverging = bool(diverging and significant)
    details = {"decade_max": dmax.tolist(), "decades": uniq.tolist(),
               "growth_small_s": growth[:min_decades + floor_decades].tolist(),
               "ratio_at_smallest": float(dmax[0]),
               "run_start_decade_offset": run_start,
               "per_decade_factor": per_decade_factor,
               "ratio_floor": ratio_floor}
    return RatioVerdict("generic-thm31" if diverging else "exceptional-candidate", details)


# -- curvature ---------------------------------------------------------------------------


def gauss_curvature(sl: SliceState):
    """Gauss curvature of the quotient metric on a slice: K = (mu + theta zeta e^{-2lam})/r^2.

    Reduction: the defining expression K = r^{-2}(1 - (dr)^2) + (dphi)^2
    contracts with the inverse metric -1/2 (n x l + l x n); since
    l r = e^{-lam}, n r = -e^{-lam} one gets 1 - (dr)^2 = 1 - e^{-2lam}
    = mu, and with l phi = theta e^{-lam}/r, n phi = -zeta e^{-lam}/r the
    gradient-squared term is theta zeta e^{-2lam}/r^2.

    Returns (K on the grid, extrapolated center limit).  The r = 0 point
    itself is excluded (grids are strictly positive); the center value is
    a quadratic Richardson-style extrapolation from the innermost points.
    """
    r = sl.r
    K = (sl.mu + sl.theta * sl.zeta * np.exp(-2.0 * sl.lam)) / (r * r)
    if len(r) >= 3:
        r0, r1, r2 = r[:3]
        k0, k1, k2 = K[:3]
        # quadratic through the three innermost samples, evaluated at r = 0
        denom = (r0 - r1) * (r0 - r2) * (r1 - r2)
        if abs(denom) > 0:
            a = (r2 * (k1 - k0) + r1 * (k0 - k2) + r0 * (k2 - k1)) / denom
            b = (r2 * r2 * (k0 - k1) + r1 * r1 * (k2 - k0) + r0 * r0 * (k1 - k2)) / denom
            c = (r1 * r2 * (r1 - r2) * k0 + r2 * r0 * (r2 - r0) * k1
                 + r0 * r1 * (r0 - r1) * k2) / denom
            center = float(c)
        else:
            center = float(K[0])
    else:
        center = float(K[0])
    return K, center


def metric_curvature_fd(u_grid, r_grid, nu_fn, lam_fn):
    """Independent finite-difference Gauss curvature of ds^2 = -e^{2nu}du^2 - 2e^{nu+lam}dudr.

    Builds the 2x2 metric on a rectangular (u, r) lattice from callables
    nu_fn(u, r), lam_fn(u, r), forms the Christoffel symbols and the
    single independent Riemann component by centered differences, and
    returns K = R_0101/det(g) on the interior lattice points.
    """
    u = np.asarray(u_grid, dtype=float)
    r = np.asarray(r_grid, dtype=float)
    NU = np.array([[nu_fn(uu, rr) for rr in r] for uu in u])
    LA = np.array([[lam_fn(uu, rr) for rr in r] for uu in u])
    g00 = -np.exp(2.0 * NU)
    g01 = -np.exp(NU + LA)
    g = np.zeros((len(u), len(r), 2, 2))
    g[..., 0, 0] = g00
    g[..., 0, 1] = g[..., 1, 0] = g01
    det = -g01 * g01
    ginv = np.zeros_like(g)
    ginv[..., 0, 1] = ginv[..., 1, 0] = -1.0 / g01
    ginv[..., 1, 1] = -g00 / (g01 * g01)

    du = u[1] - u[0]
    dr = r[1] - r[0]

    def d(arr, axis):
        return np.gradient(arr, du if axis == 0 else dr, axis=axis, edge_order=2)

    dg = np.zeros((len(u), len(r), 2, 2, 2))  # last index: derivative direction
    for a in range(2):
        for b in range(2):
            dg[..., a, b, 0] = d(g[..., a, b], 0)
            dg[..., a, b, 1] = d(g[..., a, b], 1)
    Gam = np.zeros((len(u), len(r), 2, 2, 2))  # Gam^a_{bc}
    for a_ in range(2):
        for b_ in range(2):
            for c_ in range(2):
                acc = np.zeros((len(u), len(r)))
                for d_ in range(2):
                    acc += ginv[..., a_, d_] * (dg[..., d_, c_, b_] + dg[..., d_, b_, c_]
                                                - dg[..., b_, c_, d_])
                Gam[..., a_, b_, c_] = 0.5 * acc
    # R^a_{b c d} with (a,b,c,d) = (0,1,0,1) then lower the first index
    dGam = {}
    for a_ in range(2):
        for b_ in range(2):
            for c_ in range(2):
                dGam[(a_, b_, c_, 0)] = d(Gam[..., a_, b_, c_], 0)
                dGam[(a_, b_, c_, 1)] = d(Gam[..., a_, b_, c_], 1)
    Rup = {}
    for a_ in range(2):
        term = dGam[(a_, 1, 1, 0)] - dGam[(a_, 1, 0, 1)]
        for e_ in range(2):
            term += (Gam[..., a_, 0, e_] * Gam[..., e_, 1, 1]
                     - Gam[..., a_, 1, e_] * Gam[..., e_, 1, 0])
        Rup[a_] = term
    R0101 = g[..., 0, 0] * Rup[0] + g[..., 0, 1] * Rup[1]
    K = R0101 / det
    return K[2:-2, 2:-2]
