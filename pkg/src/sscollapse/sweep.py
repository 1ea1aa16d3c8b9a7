"""Families of runs over the (lambda1, lambda2) plane and amplitude brackets.

Each family point runs the full pipeline: perturb the base datum, convert
to radial data, evolve in Bondi coordinates, extract the reference
incoming curve and its boundary trace, classify.  Records stream to an
append-only JSON-lines file and completed points are skipped on resume.
Runs are independent, so a process pool maps over them; results are
deterministic per point, making the record set independent of execution
order and worker count (wall_time excepted).
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .bondi import RunConfig, run, extract_incoming_curve
from .boundary import boundary_trace_from_curve
from .bv import BVFunction, FamilyPoint, PerturbationBasis, perturb, to_radial
from .diagnostics import classify
from .errors import MalformedDataError

__all__ = ["SweepPlan", "SweepRecord", "run_sweep", "bisect_critical",
           "BisectionResult", "load_records", "write_plan", "read_plan"]


@dataclass
class SweepRecord:
    """Outcome of one family point."""

    point: tuple                      # (lambda1, lambda2) or (amplitude,)
    outcome: str                      # horizon | dispersal | undecided
    verdict: str = "undecided"
    case: Optional[int] = None
    horizon: Optional[dict] = None    # {u, r, m} when a horizon formed
    peak_mu: float = 0.0
    wall_time: float = 0.0
    n_points: int = 0
    error: str = ""

    def key(self) -> str:
        return json.dumps(list(self.point))

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "SweepRecord":
        d = json.loads(line)
        d["point"] = tuple(d["point"])
        return SweepRecord(**d)


@dataclass
class SweepPlan:
    base: BVFunction                  # s-line datum theta(0, s)
    basis: Optional[PerturbationBasis]
    points: list                      # FamilyPoint grid, or [(amp,), ...] amplitudes
    run_config: RunConfig
    workers: int = 1
    records_path: Optional[str] = None
    seed_r: Optional[float] = None    # reference curve seed; default a_scale
    mode: str = "family"              # "family" | "amplitude"

    def __post_init__(self):
        if not self.points:
            raise MalformedDataError("sweep grid must be nonempty")
        if self.mode not in ("family", "amplitude"):
            raise MalformedDataError(f"unknown sweep mode {self.mode!r}")


def _datum_for_point(plan: SweepPlan, point) -> BVFunction:
    if plan.mode == "amplitude":
        return plan.base * float(point[0])
    p = FamilyPoint(*point)
    if plan.basis is None:
        if p.lambda1 != 0.0 or p.lambda2 != 0.0:
            raise MalformedDataError("family sweep needs a perturbation basis")
        return plan.base
    return perturb(plan.base, plan.basis, p)


def run_point(plan: SweepPlan, point) -> SweepRecord:
    """One full pipeline evaluation; failures become 'undecided' records."""
    t0 = time.perf_counter()
    cfg = plan.run_config
    try:
        datum_s = _datum_for_point(plan, tuple(point))
        datum_r = to_radial(datum_s, cfg.a_scale)
        result = run(datum_r, cfg)
        outcome = result.report.outcome
        if outcome == "max-time-reached":
            outcome = "undecided"
        horizon = None
        verdict, case = "undecided", None
        if result.report.outcome == "horizon":
            horizon = {"u": result.report.u, "r": result.report.r, "m": result.report.m}
        if result.slices:
            seed = plan.seed_r if plan.seed_r is not None else cfg.a_scale
            try:
                curve = extract_incoming_curve(result.slices, seed)
                trace = boundary_trace_from_curve(curve)
                v = classify(trace, float(datum_s.eval(0.0)), initial_profile=datum_s)
                verdict, case = v.verdict, v.case
            except Exception as exc:  # classification is best-effort per point
                verdict = "undecided"
        return SweepRecord(point=tuple(point), outcome=outcome, verdict=verdict,
                           case=case, horizon=horizon,
                           peak_mu=result.report.peak_mu,
                           wall_time=time.perf_counter() - t0,
                           n_points=cfg.n_points)
    except Exception as exc:
        return SweepRecord(point=tuple(point), outcome="undecided",
                           wall_time=time.perf_counter() - t0,
                           n_points=cfg.n_points, error=repr(exc))


def load_records(path) -> dict:
    """Existing records keyed by family point (for resume)."""
    out = {}
    p = Path(path)
    if not p.exists():
        return out
    with open(p) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = SweepRecord.from_json(line)
                out[rec.key()] = rec
    return out


def run_sweep(plan: SweepPlan) -> list:
    """Execute the plan; returns records ordered like plan.points.

    Already-recorded points are skipped (resume); new records append to
    the record file as they complete.
    """
    done = load_records(plan.records_path) if plan.records_path else {}
    todo = [tuple(p) for p in plan.points
            if json.dumps(list(p)) not in done]
    fresh = {}
    if todo:
        if plan.workers > 1:
            with ProcessPoolExecutor(max_workers=plan.workers) as ex:
                for rec in ex.map(run_point, [plan] * len(todo), todo):
                    fresh[rec.key()] = rec
                    _append_record(plan.records_path, rec)
        else:
            for pt in todo:
                rec = run_point(plan, pt)
                fresh[rec.key()] = rec
                _append_record(plan.records_path, rec)
    done.update(fresh)
    return [done[json.dumps(list(p))] for p in plan.points]


def _append_record(path, rec: SweepRecord):
    if path is None:
        return
    with open(path, "a") as fh:
        fh.write(rec.to_json() + "\n")


# -- critical-amplitude search ---------------------------------------------------


@dataclass
class BisectionResult:
    lo: float
    hi: float
    n_runs: int
    records: list
    converged: bool
    detail: str = ""

    @property
    def critical(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def relative_width(self) -> float:
        return (self.hi - self.lo) / max(abs(self.critical), 1e-300)


def bisect_critical(plan: SweepPlan, lo: float, hi: float, *,
                    rel_tol: float = 1e-4, max_runs: int = 40) -> BisectionResult:
    """Bisection for the horizon/dispersal threshold along an amplitude family.

    Endpoints must produce dispersal (lo) and horizon (hi).  An undecided
    midpoint escalates the resolution once; a second undecided aborts with
    the bracket found so far.
    """
    plan = replace(plan, mode="amplitude")
    records = []

    def outcome_at(amp, cfg=None):
        p = plan if cfg is None else replace(plan, run_config=cfg)
        rec = run_point(p, (amp,))
        records.append(rec)
        return rec.outcome

    out_lo = outcome_at(lo)
    out_hi = outcome_at(hi)
    if out_lo != "dispersal" or out_hi != "horizon":
        raise MalformedDataError(
            f"bracket endpoints must be (dispersal, horizon); got ({out_lo}, {out_hi})")
    n = 2
    escalated = False
    while (hi - lo) / max(abs(0.5 * (hi + lo)), 1e-300) > rel_tol and n < max_runs:
        mid = 0.5 * (lo + hi)
        out = outcome_at(mid)
        n += 1
        if out == "undecided":
            if escalated:
                return BisectionResult(lo, hi, n, records, False,
                                       "undecided midpoint after escalation")
            escalated = True
            cfg2 = replace(plan.run_config,
                           n_points=2 * plan.run_config.n_points,
                           u_end=plan.run_config.u_end
                           + 0.5 * (plan.run_config.u_end - plan.run_config.u_start))
            out = outcome_at(mid, cfg2)
            n += 1
            if out == "undecided":
                return BisectionResult(lo, hi, n, records, False,
                                       "undecided midpoint after escalation")
        if out == "horizon":
            hi = mid
        else:
            lo = mid
    width = (hi - lo) / max(abs(0.5 * (hi + lo)), 1e-300)
    return BisectionResult(lo, hi, n, records, bool(width <= rel_tol))


# -- plan files ---------------------------------------------------------------------


def write_plan(plan_dict: dict, path):
    with open(path, "w") as fh:
        json.dump(plan_dict, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_plan(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
