"""Single shooting, smoothing continuation, and the revolution-count sweep.

The two-point boundary value problem is reduced to seven unknowns: the six
orbital-element costates and the mass costate at departure. The residual is
the arrival defect in the six elements (with the fast angle unwound by the
requested revolution count) plus the transversality defect lam_m(tf) + 1.

A solution is found at heavy smoothing first, where the control is nearly
continuous and the basin is wide, then dragged to sharp smoothing along a
geometric schedule, warm-starting each solve from the previous one. A failed
schedule step triggers log-midpoint refinement up to a fixed depth before the
whole attempt is abandoned and the next random start is tried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import root as scipy_root

from . import _core
from .adjoint import ProblemContext, pack
from .control import SmoothingParams

_FAIL_RESIDUAL = 1e3
# hybr sometimes stops "not making good progress" with the residual already
# small; one restart from its own answer rebuilds the Jacobian and usually
# finishes the polish.  Only restart when the stall is this close to a root.
_RETRY_WINDOW = 1e-3


@dataclass(frozen=True)
class SolverParams:
    rho_start: float = 1.0
    rho_final: float = 1e-2
    schedule_steps: int = 8
    max_trials: int = 32
    max_insert_depth: int = 5
    residual_tol: float = 1e-9
    maxfev: int = 250
    epsfcn: float = 1e-14
    xtol: float = 1e-12
    rtol: float = 1e-11
    atol: float = 1e-11
    max_steps: int = 200_000

    def __post_init__(self):
        if not (0.0 < self.rho_final <= self.rho_start):
            raise ValueError("need 0 < rho_final <= rho_start")
        if self.schedule_steps < 0:
            raise ValueError("schedule_steps must be >= 0")

    def schedule(self) -> np.ndarray:
        """Geometric grid from rho_start down to rho_final, inclusive."""
        if self.schedule_steps == 0 or self.rho_start == self.rho_final:
            return np.array([self.rho_start])
        return np.geomspace(self.rho_start, self.rho_final, self.schedule_steps + 1)


@dataclass(frozen=True)
class ShootingSetup:
    """One boundary value problem: context plus endpoint conditions."""

    ctx: ProblemContext
    x0: np.ndarray
    x_target: np.ndarray
    tof: float
    n_rev: int

    def with_n_rev(self, n_rev: int) -> "ShootingSetup":
        raw_l = self.x_target[5] - 2.0 * math.pi * self.n_rev
        return make_setup(self.ctx, self.x0,
                          np.concatenate([self.x_target[:5], [raw_l]]),
                          self.tof, n_rev)


def make_setup(ctx: ProblemContext, x0, x_target, tof: float,
               n_rev: int = 0) -> ShootingSetup:
    """Freeze the boundary conditions, unwinding the arrival fast angle.

    The target angle is lifted to l0 plus the principal part of the angular
    difference plus one full turn per requested revolution, so the shooting
    residual in the last element is smooth in the unknowns.
    """
    x0 = np.asarray(x0, dtype=float).copy()
    x_target = np.asarray(x_target, dtype=float).copy()
    if x0.shape != (6,) or x_target.shape != (6,):
        raise ValueError("boundary states must be 6-vectors of orbital elements")
    if tof <= 0.0:
        raise ValueError("time of flight must be positive")
    if n_rev < 0:
        raise ValueError("revolution count must be non-negative")
    principal = (x_target[5] - x0[5]) % (2.0 * math.pi)
    x_target[5] = x0[5] + principal + 2.0 * math.pi * n_rev
    return ShootingSetup(ctx=ctx, x0=x0, x_target=x_target, tof=float(tof),
                         n_rev=int(n_rev))


@dataclass
class ShootingResult:
    eta: np.ndarray
    residual: np.ndarray
    residual_inf: float
    success: bool
    nfev: int
    message: str
    z_end: np.ndarray | None = None
    rho: float = math.nan


@dataclass
class ContinuationResult:
    success: bool
    eta: np.ndarray | None
    z_end: np.ndarray | None
    residual_inf: float
    rho_final: float
    m_final_kg: float
    trial: int
    nfev_total: int
    trace: list
    message: str
    # smallest smoothing level actually converged; equals rho_final on
    # success, and on failure records how far the best trial got (nan if
    # no trial converged anywhere)
    rho_reached: float = math.nan

    @property
    def mass_fraction(self) -> float:
        return float(self.z_end[6]) if self.z_end is not None else math.nan


@dataclass
class SweepItem:
    n_rev: int
    result: ContinuationResult


@dataclass
class SweepResult:
    items: list
    best_index: int | None

    @property
    def best(self) -> SweepItem | None:
        return self.items[self.best_index] if self.best_index is not None else None


def _propagate_eta(eta, setup: ShootingSetup, flat: _core.FlatContext,
                   params: SolverParams):
    z0 = pack(setup.x0, 1.0, eta[:6], eta[6])
    return _core.propagate(z0, 0.0, setup.tof, flat, rtol=params.rtol,
                           atol=params.atol, max_steps=params.max_steps)


def residual_vector(eta, setup: ShootingSetup, flat: _core.FlatContext,
                    params: SolverParams):
    """Arrival defect for one costate guess; (residual, z_end or None)."""
    res = _propagate_eta(np.asarray(eta, dtype=float), setup, flat, params)
    if res.status != _core.STATUS_OK or not np.all(np.isfinite(res.z_end)):
        # keep the root finder inside finite territory with a flat penalty
        # wall; magnitude grows with the guess so backtracking has a slope
        scale = _FAIL_RESIDUAL * (1.0 + float(np.linalg.norm(eta)))
        return np.full(7, scale), None
    out = np.empty(7)
    out[0:6] = res.z_end[0:6] - setup.x_target
    out[6] = res.z_end[13] + 1.0
    return out, res.z_end


def solve_fixed_rho(eta0, setup: ShootingSetup, rho: float,
                    params: SolverParams) -> ShootingResult:
    """Converge the shooting problem at one smoothing level."""
    ctx = setup.ctx.with_rho(SmoothingParams(rho_b=rho, rho_c=rho))
    flat = _core.flatten_context(ctx)
    nfev = 0
    last_z = {"z": None}

    def fun(eta):
        nonlocal nfev
        nfev += 1
        r, z_end = residual_vector(eta, setup, flat, params)
        last_z["z"] = z_end
        return r

    eta0 = np.asarray(eta0, dtype=float)
    r0 = fun(eta0)
    if np.max(np.abs(r0)) < params.residual_tol:
        return ShootingResult(eta=eta0.copy(), residual=r0,
                              residual_inf=float(np.max(np.abs(r0))),
                              success=True, nfev=nfev,
                              message="already converged", z_end=last_z["z"],
                              rho=rho)

    options = {"xtol": params.xtol, "maxfev": params.maxfev,
               "eps": params.epsfcn}
    sol = scipy_root(fun, eta0, method="hybr", options=options)
    r, z_end = residual_vector(sol.x, setup, flat, params)
    nfev += 1
    rinf = float(np.max(np.abs(r)))
    message = str(sol.message)
    if z_end is not None and params.residual_tol <= rinf < _RETRY_WINDOW:
        retry = scipy_root(fun, sol.x, method="hybr", options=options)
        r2, z2 = residual_vector(retry.x, setup, flat, params)
        nfev += 1
        rinf2 = float(np.max(np.abs(r2)))
        if z2 is not None and rinf2 < rinf:
            sol, r, z_end, rinf = retry, r2, z2, rinf2
            message = f"{retry.message} (after restart)"
    ok = bool(z_end is not None and rinf < params.residual_tol)
    return ShootingResult(eta=np.asarray(sol.x, dtype=float), residual=r,
                          residual_inf=rinf, success=ok, nfev=nfev,
                          message=message, z_end=z_end, rho=rho)


def continuation_solve(setup: ShootingSetup, params: SolverParams | None = None,
                       seed: int = 0) -> ContinuationResult:
    """Multi-start shooting at heavy smoothing, then walk rho down the grid."""
    if params is None:
        params = SolverParams()
    schedule = params.schedule()
    trace: list = []
    nfev_total = 0
    partial: ShootingResult | None = None
    partial_trial = -1

    for trial in range(params.max_trials):
        rng = np.random.default_rng([seed, trial])
        eta = rng.uniform(-1.0, 1.0, size=7)

        first = solve_fixed_rho(eta, setup, float(schedule[0]), params)
        nfev_total += first.nfev
        trace.append({"trial": trial, "rho": float(schedule[0]),
                      "success": first.success, "residual_inf": first.residual_inf,
                      "nfev": first.nfev})
        if not first.success:
            continue

        eta = first.eta
        last = first
        prev_rho = float(schedule[0])
        pending = [(float(r), 0) for r in schedule[1:]]
        ok = True
        while pending:
            target, depth = pending.pop(0)
            step = solve_fixed_rho(eta, setup, target, params)
            nfev_total += step.nfev
            trace.append({"trial": trial, "rho": target, "success": step.success,
                          "residual_inf": step.residual_inf, "nfev": step.nfev,
                          "depth": depth})
            if step.success:
                eta = step.eta
                last = step
                prev_rho = target
            else:
                if depth >= params.max_insert_depth:
                    ok = False
                    break
                mid = math.sqrt(prev_rho * target)
                pending.insert(0, (target, depth + 1))
                pending.insert(0, (mid, depth + 1))
        if not ok:
            if partial is None or last.rho < partial.rho:
                partial, partial_trial = last, trial
            continue

        m_final = float(last.z_end[6]) * setup.ctx.units.mass_ref_kg
        return ContinuationResult(
            success=True, eta=eta, z_end=last.z_end,
            residual_inf=last.residual_inf, rho_final=float(schedule[-1]),
            m_final_kg=m_final, trial=trial, nfev_total=nfev_total,
            trace=trace, message=f"converged on trial {trial}",
            rho_reached=float(schedule[-1]))

    if partial is not None:
        # report the deepest smoothing level any trial reached so a caller
        # can tell a near miss from a dead problem
        m_partial = float(partial.z_end[6]) * setup.ctx.units.mass_ref_kg
        return ContinuationResult(
            success=False, eta=partial.eta, z_end=partial.z_end,
            residual_inf=partial.residual_inf, rho_final=float(schedule[-1]),
            m_final_kg=m_partial, trial=partial_trial, nfev_total=nfev_total,
            trace=trace, rho_reached=partial.rho,
            message=(f"stalled at rho={partial.rho:.6g} "
                     f"(target {schedule[-1]:.6g}) after "
                     f"{params.max_trials} attempts"))

    return ContinuationResult(
        success=False, eta=None, z_end=None, residual_inf=math.inf,
        rho_final=float(schedule[-1]), m_final_kg=math.nan,
        trial=params.max_trials, nfev_total=nfev_total, trace=trace,
        message=f"no trial converged in {params.max_trials} attempts")


def nrev_sweep(setup: ShootingSetup, n_revs, params: SolverParams | None = None,
               seed: int = 0) -> SweepResult:
    """Solve the same rendezvous for several revolution counts.

    Duplicates are dropped (first occurrence wins), failures are kept in the
    item list, and the best index points at the converged solution with the
    largest final mass.
    """
    seen = set()
    items: list[SweepItem] = []
    for n_rev in n_revs:
        n_rev = int(n_rev)
        if n_rev in seen:
            continue
        seen.add(n_rev)
        variant = setup.with_n_rev(n_rev)
        result = continuation_solve(variant, params, seed=seed)
        items.append(SweepItem(n_rev=n_rev, result=result))

    best_index = None
    best_mass = -math.inf
    for idx, item in enumerate(items):
        if item.result.success and item.result.m_final_kg > best_mass:
            best_mass = item.result.m_final_kg
            best_index = idx
    return SweepResult(items=items, best_index=best_index)
