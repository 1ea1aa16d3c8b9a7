"""Bounded-variation profiles: piecewise-linear functions with jumps.

A profile is stored as an ordered list of breakpoints, a left and a right
value at each breakpoint (so jumps are explicit), and the slope of the
linear piece starting at each breakpoint.  Evaluation is right-continuous
at jumps.  Outside the represented range the profile is constant (the
slope after the last breakpoint is forced to zero), which keeps total
variation finite and makes the class closed under pointwise linear
combination -- sums, total variation and the two-parameter perturbation
families are all exact.

Two domains are distinguished: "s" (the whole line, data for the
dimensionless coordinate) and "r" (the half-line of radii).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConstructionError, DomainMismatchError, MalformedDataError

__all__ = [
    "BVFunction",
    "PerturbationBasis",
    "FamilyPoint",
    "total_variation",
    "phi_from_alpha",
    "PhiTheta",
    "build_f2",
    "default_f1",
    "perturb",
    "sample_to_bv",
    "box_profile",
    "hat_profile",
    "gaussian_profile",
    "to_radial",
    "to_log_coordinate",
    "write_bv",
    "read_bv",
]


@dataclass(frozen=True, eq=False)
class BVFunction:
    """Piecewise-linear function with jumps, constant outside its breakpoints.

    domain       -- "s" (line) or "r" (half-line, breakpoints >= 0)
    breakpoints  -- strictly increasing abscissae, shape (K,)
    left_values  -- limit from the left at each breakpoint
    right_values -- value at the breakpoint (evaluation is right-continuous)
    slopes       -- slope on [x_k, x_{k+1}); slopes[-1] is forced to 0
    """

    domain: str
    breakpoints: np.ndarray
    left_values: np.ndarray
    right_values: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        bp = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        lv = np.atleast_1d(np.asarray(self.left_values, dtype=float))
        rv = np.atleast_1d(np.asarray(self.right_values, dtype=float))
        sl = np.atleast_1d(np.asarray(self.slopes, dtype=float)).copy()
        if self.domain not in ("s", "r"):
            raise MalformedDataError(f"unknown domain tag {self.domain!r}")
        if bp.size < 1:
            raise MalformedDataError("need at least one breakpoint")
        if not (lv.shape == rv.shape == sl.shape == bp.shape):
            raise MalformedDataError("field arrays must share the breakpoint shape")
        if bp.size > 1 and not np.all(np.diff(bp) > 0):
            raise MalformedDataError("breakpoints must be strictly increasing")
        if self.domain == "r" and bp[0] < 0:
            raise MalformedDataError("r-domain breakpoints must be >= 0")
        for arr in (bp, lv, rv, sl):
            if not np.all(np.isfinite(arr)):
                raise MalformedDataError("non-finite entries in profile")
        sl[-1] = 0.0  # constant extension keeps total variation finite
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "left_values", lv)
        object.__setattr__(self, "right_values", rv)
        object.__setattr__(self, "slopes", sl)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Right-continuous evaluation; constant outside the breakpoints."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        below = idx < 0
        ic = np.clip(idx, 0, len(self.breakpoints) - 1)
        out = self.right_values[ic] + self.slopes[ic] * (x - self.breakpoints[ic])
        out = np.where(below, self.left_values[0], out)
        return float(out) if out.ndim == 0 else out

    def eval_left(self, x):
        """Limit from the left (differs from eval only at jump points)."""
        x = np.asarray(x, dtype=float)
        base = np.asarray(self.eval(x), dtype=float)
        j = np.searchsorted(self.breakpoints, x, side="left")
        jc = np.clip(j, 0, len(self.breakpoints) - 1)
        out = np.where(self.breakpoints[jc] == x, self.left_values[jc], base)
        return float(out) if out.ndim == 0 else out

    def slope_at(self, x):
        """Slope of the piece on the right of x (0 before the first breakpoint)."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        out = np.where(idx < 0, 0.0, self.slopes[np.clip(idx, 0, len(self.slopes) - 1)])
        return float(out) if out.ndim == 0 else out

    # -- algebra ------------------------------------------------------------

    def combine(self, other: "BVFunction", ca: float = 1.0, cb: float = 1.0) -> "BVFunction":
        """Exact pointwise ca*self + cb*other over the union of breakpoints."""
        if self.domain != other.domain:
            raise DomainMismatchError(
                f"cannot combine {self.domain!r}-domain with {other.domain!r}-domain profile")
        bp = np.union1d(self.breakpoints, other.breakpoints)
        rv = ca * np.atleast_1d(self.eval(bp)) + cb * np.atleast_1d(other.eval(bp))
        lv = ca * np.atleast_1d(self.eval_left(bp)) + cb * np.atleast_1d(other.eval_left(bp))
        sl = ca * np.atleast_1d(self.slope_at(bp)) + cb * np.atleast_1d(other.slope_at(bp))
        return BVFunction(self.domain, bp, lv, rv, sl)

    def __add__(self, other):
        return self.combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self.combine(other, 1.0, -1.0)

    def __mul__(self, c):
        c = float(c)
        return BVFunction(self.domain, self.breakpoints, c * self.left_values,
                          c * self.right_values, c * self.slopes)

    __rmul__ = __mul__

    # -- properties ---------------------------------------------------------

    @property
    def jumps(self) -> np.ndarray:
        return self.right_values - self.left_values

    def total_variation(self) -> float:
        seg = 0.0
        if len(self.breakpoints) > 1:
            seg = np.sum(np.abs(self.slopes[:-1]) * np.diff(self.breakpoints))
        return float(seg + np.sum(np.abs(self.jumps)))

    def is_zero_before(self, x0: float, atol: float = 0.0) -> bool:
        """True if the profile vanishes identically on (-inf, x0)."""
        if abs(self.left_values[0]) > atol:
            return False
        probes = [self.breakpoints[self.breakpoints < x0]]
        bp_lo = np.concatenate([self.breakpoints[self.breakpoints < x0], [x0]])
        probes.append(0.5 * (bp_lo[:-1] + bp_lo[1:]))  # segment interiors
        for xs in probes:
            if xs.size and (np.max(np.abs(np.atleast_1d(self.eval(xs)))) > atol
                            or np.max(np.abs(np.atleast_1d(self.eval_left(xs)))) > atol):
                return False
        return True


class FamilyPoint(NamedTuple):
    """Coordinates (lambda1, lambda2) in a two-parameter data family."""
    lambda1: float
    lambda2: float


@dataclass(frozen=True)
class PerturbationBasis:
    """The two perturbation directions plus the record of how f2 was built."""

    f1: BVFunction
    f2: BVFunction
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        _validate_f1(self.f1)
        _validate_f2(self.f2)


def total_variation(f: BVFunction) -> float:
    """Exact total variation: sum of |slope|*length plus jump magnitudes."""
    return f.total_variation()


def perturb(base: BVFunction, basis: PerturbationBasis, p: FamilyPoint) -> BVFunction:
    """base + lambda1*f1 + lambda2*f2, exact on the shared s-line domain."""
    if not (base.domain == basis.f1.domain == basis.f2.domain):
        raise DomainMismatchError("base and basis must share a domain")
    out = base.combine(basis.f1, 1.0, float(p.lambda1))
    return out.combine(basis.f2, 1.0, float(p.lambda2))


def _validate_f1(f1: BVFunction):
    if not f1.is_zero_before(0.0):
        raise MalformedDataError("f1 must vanish on (-inf, 0)")
    if abs(f1.eval(0.0) - 1.0) > 1e-12:
        raise MalformedDataError("f1 must have f1(0+) = 1")
    xs = np.linspace(f1.breakpoints[0], f1.breakpoints[-1], 1024)
    if np.min(np.atleast_1d(f1.eval(xs))) < -1e-14:
        raise MalformedDataError("f1 must be nonnegative")
    if abs(f1.eval(f1.breakpoints[-1])) > 1e-12:
        raise MalformedDataError("f1 must decay to 0 (integrability)")


def _validate_f2(f2: BVFunction):
    if not f2.is_zero_before(0.0):
        raise MalformedDataError("f2 must vanish on (-inf, 0]")
    if abs(f2.eval(0.0)) > 1e-12:
        raise MalformedDataError("f2 must vanish at 0")
    xs = np.linspace(f2.breakpoints[0], f2.breakpoints[-1], 1024)
    if np.min(np.atleast_1d(f2.eval(xs))) < -1e-14:
        raise MalformedDataError("f2 must be nonnegative")
    if abs(f2.eval(f2.breakpoints[-1])) > 1e-12:
        raise MalformedDataError("f2 must vanish beyond its support")
    # continuity inside the support; one jump at the upper edge is tolerated
    interior = f2.breakpoints[(f2.breakpoints > 0) & (f2.breakpoints < f2.breakpoints[-1])]
    if interior.size:
        gap = np.abs(np.atleast_1d(f2.eval(interior)) - np.atleast_1d(f2.eval_left(interior)))
        if np.max(gap) > 1e-10:
            raise MalformedDataError("f2 must be continuous inside its support")


# -- alpha <-> (phi, theta) conversion ----------------------------------------


class PhiTheta(NamedTuple):
    phi: BVFunction
    theta: BVFunction


def phi_from_alpha(alpha: BVFunction, nodes_per_segment: int = 48) -> PhiTheta:
    """Convert alpha = d(r*phi)/dr into phi(r) = r^-1 integral_0^r alpha and theta = alpha - phi.

    The segment antiderivative is quadratic and evaluated exactly at the
    sampling nodes; phi is returned as a piecewise-linear interpolant
    through those nodes.  theta = alpha - phi is an exact subtraction, so
    it inherits alpha's jumps exactly.
    """
    if alpha.domain != "r":
        raise DomainMismatchError("phi_from_alpha expects an r-domain profile")
    bp = alpha.breakpoints
    F_at = np.zeros(len(bp))  # integral of alpha from 0 to each breakpoint
    if bp[0] > 0:
        F_at[0] = alpha.left_values[0] * bp[0]
    for k in range(len(bp) - 1):
        dx = bp[k + 1] - bp[k]
        F_at[k + 1] = F_at[k] + alpha.right_values[k] * dx + 0.5 * alpha.slopes[k] * dx * dx
    if not np.all(np.isfinite(F_at)):
        raise MalformedDataError("integral of alpha diverges on the represented range")

    pieces = [np.array([0.0]), bp]
    if bp[0] > 0:
        pieces.append(np.linspace(0.0, bp[0], nodes_per_segment, endpoint=False)[1:])
    for k in range(len(bp) - 1):
        pieces.append(np.linspace(bp[k], bp[k + 1], nodes_per_segment, endpoint=False)[1:])
    x = np.unique(np.concatenate(pieces))

    idx = np.searchsorted(bp, x, side="right") - 1
    lead = idx < 0
    ic = np.clip(idx, 0, len(bp) - 1)
    dx = x - bp[ic]
    F = F_at[ic] + alpha.right_values[ic] * dx + 0.5 * alpha.slopes[ic] * dx * dx
    F[lead] = alpha.left_values[0] * x[lead]

    phi_vals = np.empty_like(x)
    pos = x > 0
    phi_vals[pos] = F[pos] / x[pos]
    phi_vals[~pos] = alpha.left_values[0] if bp[0] > 0 else alpha.eval(0.0)
    phi = sample_to_bv(x, phi_vals, domain="r")
    theta = alpha - phi
    return PhiTheta(phi, theta)


# -- perturbation modes --------------------------------------------------------


def _pl_from_nodes(domain, x, values, left_override=None):
    """Continuous PL through (x, values); optional explicit left values."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    lv = v.copy() if left_override is None else np.asarray(left_override, dtype=float)
    sl = np.zeros_like(x)
    if len(x) > 1:
        sl[:-1] = (lv[1:] - v[:-1]) / np.diff(x)
    return BVFunction(domain, x, lv, v, sl)


def default_f1(s_tail: float = 40.0, n_nodes: int = 400) -> BVFunction:
    """Default first direction: exp(-s) on [0, s_tail], tapered linearly to 0.

    Nonnegative, integrable, vanishes on (-inf, 0), value 1 at 0+ (a single
    jump at s = 0, absolutely continuous on [0, inf)).
    """
    s = np.concatenate([[0.0], np.geomspace(1e-6, s_tail, n_nodes - 1), [s_tail + 1.0]])
    v = np.exp(-s)
    v[-1] = 0.0
    lv = v.copy()
    lv[0] = 0.0  # jump 0 -> 1 at s = 0
    return _pl_from_nodes("s", s, v, left_override=lv)


def build_f2(s_table, g_table, n_nodes: int = 400, atol: float = 1e-13) -> BVFunction:
    """Build the second perturbation direction from a tabulated g on (0,1).

    Uses f2(s) = exp(-s) * sqrt(d(s g(s))/ds) on (0,1), zero elsewhere, so
    that (1/s) * integral_0^s exp(2s') f2^2 ds' reproduces g by construction.
    The tabulated s*g(s) is monotone-interpolated (PCHIP) and differentiated
    analytically.  Raises ConstructionError, naming the offending s, if the
    radicand is negative anywhere or degenerate (s*g constant).
    """
    from scipy.interpolate import PchipInterpolator

    s_table = np.asarray(s_table, dtype=float)
    g_table = np.asarray(g_table, dtype=float)
    order = np.argsort(s_table)
    s_table, g_table = s_table[order], g_table[order]
    keep = (s_table > 0) & (s_table < 1)
    s_table, g_table = s_table[keep], g_table[keep]
    if s_table.size >= 2:
        dedup = np.concatenate([[True], np.diff(s_table) > 0])
        s_table, g_table = s_table[dedup], g_table[dedup]
    if s_table.size < 4:
        raise ConstructionError("need at least 4 tabulated g samples inside (0,1)")
    if np.any(g_table <= 0):
        raise ConstructionError("g must be positive on (0,1)")
    sg = s_table * g_table
    if np.any(np.diff(sg) < -atol):
        bad = s_table[1:][np.diff(sg) < -atol][0]
        raise ConstructionError(f"s*g(s) must be nondecreasing; violated near s={bad:.6g}")
    interp = PchipInterpolator(np.concatenate([[0.0], s_table]),
                               np.concatenate([[0.0], np.maximum.accumulate(sg)]))
    deriv = interp.derivative()

    nodes = np.geomspace(max(s_table[0], 1e-14), s_table[-1], n_nodes)
    radicand = np.asarray(deriv(nodes))
    if np.min(radicand) < -atol:
        bad = nodes[int(np.argmin(radicand))]
        raise ConstructionError(f"negative radicand d(s g)/ds at s={bad:.6g}")
    if np.max(radicand) <= atol:
        raise ConstructionError("degenerate radicand: s*g(s) is constant, d(s g)/ds == 0")
    vals = np.exp(-nodes) * np.sqrt(np.maximum(radicand, 0.0))

    x = np.concatenate([[0.0], nodes, [1.0]])
    v = np.concatenate([[0.0], vals, [0.0]])
    lv = v.copy()
    lv[-1] = vals[-1]  # support ends at s = 1; single jump to 0 there
    return _pl_from_nodes("s", x, v, left_override=lv)


# -- constructors --------------------------------------------------------------


def sample_to_bv(x, y, domain: str = "r") -> BVFunction:
    """Continuous piecewise-linear profile through the sample points."""
    return _pl_from_nodes(domain, x, y)


def box_profile(lo: float, hi: float, height: float, domain: str = "r") -> BVFunction:
    """Indicator-box profile: `height` on [lo, hi), 0 elsewhere (two jumps)."""
    return BVFunction(domain, np.array([lo, hi]), np.array([0.0, height]),
                      np.array([height, 0.0]), np.zeros(2))


def hat_profile(lo: float, mid: float, hi: float, height: float, domain: str = "r") -> BVFunction:
    """Continuous hat: 0 at lo, `height` at mid, 0 at hi."""
    return sample_to_bv(np.array([lo, mid, hi]), np.array([0.0, height, 0.0]), domain)


def gaussian_profile(amplitude: float, center: float, width: float,
                     domain: str = "r", n_nodes: int = 512, cut: float = 6.0) -> BVFunction:
    """Piecewise-linear sampling of a Gaussian pulse, zero outside +-cut widths."""
    lo = center - cut * width
    hi = center + cut * width
    if domain == "r":
        lo = max(lo, 0.0)
    x = np.linspace(lo, hi, n_nodes)
    y = amplitude * np.exp(-(((x - center) / width) ** 2))
    y[0] = 0.0
    y[-1] = 0.0
    return sample_to_bv(x, y, domain)


def to_radial(f_s: BVFunction, a: float, n_per_segment: int = 24) -> BVFunction:
    """Resample an s-line profile as a radial one via r = a*exp(s)."""
    if f_s.domain != "s":
        raise DomainMismatchError("to_radial expects an s-domain profile")
    bp = f_s.breakpoints
    pieces = [bp]
    for k in range(len(bp) - 1):
        pieces.append(np.linspace(bp[k], bp[k + 1], n_per_segment, endpoint=False)[1:])
    s = np.unique(np.concatenate(pieces))
    r = a * np.exp(s)
    rv = np.atleast_1d(f_s.eval(s))
    lv = np.atleast_1d(f_s.eval_left(s))
    sl = np.zeros_like(r)
    sl[:-1] = (lv[1:] - rv[:-1]) / np.diff(r)
    return BVFunction("r", r, lv, rv, sl)


def to_log_coordinate(f_r: BVFunction, a: float, n_per_segment: int = 24,
                      s_floor: float = -12.0) -> BVFunction:
    """Resample a radial profile on the s-line via s = log(r/a)."""
    if f_r.domain != "r":
        raise DomainMismatchError("to_log_coordinate expects an r-domain profile")
    bp = f_r.breakpoints[f_r.breakpoints > 0]
    s_bp = np.log(bp / a) if bp.size else np.array([0.0])
    pieces = [np.array([s_floor]), s_bp[s_bp >= s_floor]]
    s_bp_kept = np.concatenate([[s_floor], s_bp[s_bp >= s_floor]])
    for k in range(len(s_bp_kept) - 1):
        pieces.append(np.linspace(s_bp_kept[k], s_bp_kept[k + 1], n_per_segment,
                                  endpoint=False)[1:])
    s = np.unique(np.concatenate(pieces))
    r = a * np.exp(s)
    rv = np.atleast_1d(f_r.eval(r))
    lv = np.atleast_1d(f_r.eval_left(r))
    sl = np.zeros_like(s)
    sl[:-1] = (lv[1:] - rv[:-1]) / np.diff(s)
    return BVFunction("s", s, lv, rv, sl)


# -- file format ----------------------------------------------------------------


def write_bv(f: BVFunction, path, units: str = "dimensionless"):
    """Line-oriented text format: header, then `x left right slope` per line.

    Floats are written with repr so the round-trip is exact.
    """
    with open(path, "w") as fh:
        fh.write(f"# bvprofile v1 domain={f.domain} units={units}\n")
        fh.write("# columns: breakpoint left_value right_value slope\n")
        for x, l, r, s in zip(f.breakpoints, f.left_values, f.right_values, f.slopes):
            fh.write(f"{x!r} {l!r} {r!r} {s!r}\n")


def read_bv(path) -> BVFunction:
    domain = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("domain="):
                        domain = tok.split("=", 1)[1]
                continue
            parts = line.split()
            if len(parts) != 4:
                raise MalformedDataError(f"bad bvprofile line: {line!r}")
            rows.append([float(p) for p in parts])
    if domain is None:
        raise MalformedDataError("bvprofile file missing a domain tag header")
    if not rows:
        raise MalformedDataError("bvprofile file has no data rows")
    arr = np.array(rows, dtype=float)
    return BVFunction(domain, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
