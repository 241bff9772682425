"""Stationary states of the drift and mean-field equations.

Drift: Barenblatt-type profiles N_h = ((1-q)/q (h + V))^(1/(q-1)) with h fixed
by the mass.  Mean-field: rho solving q/(1-q) rho^(q-1) = V * rho + C with unit
mass, closed form for lambda = 2 and a damped fixed-point iteration otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import gammaln, logsumexp

from .core import ModelParams, Profile, RadialGrid, Variant, integrate_cells, total_mass
from .errors import BracketFailure, GammaDomain, NoConvergence, ParameterError
from .kernels import KernelMatrix, assemble_kernel, interaction_energy

log = logging.getLogger(__name__)


@dataclass(eq=False)
class StationaryState:
    profile: Profile
    h_or_C: float
    params: ModelParams
    residual: float
    info: dict = field(default_factory=dict)

    @property
    def density(self):
        return self.profile.density

    @property
    def grid(self):
        return self.profile.grid

    @property
    def potential_constant(self):
        """Constant C in q/(1-q) rho^(q-1) = V*rho + C.

        For lambda = 2 the closed form is written against |x|^2/2 instead of
        V*rho, and the two constants differ by half the second moment.
        """
        return self.info.get("potential_constant", self.h_or_C)


def power_profile(a_shift, q):
    """((1-q)/q * a_shift)^(1/(q-1)) evaluated in log space."""
    return np.exp(np.log((1.0 - q) / q * a_shift) / (q - 1.0))


def log_mass(a_shift, q, vol):
    """log of sum(power_profile(a_shift, q) * vol) without under/overflow."""
    return float(logsumexp(np.log((1.0 - q) / q * a_shift) / (q - 1.0), b=vol))


def potential_values(r, lam):
    return r**lam / lam


def barenblatt_profile(p: ModelParams, h: float, grid: RadialGrid) -> Profile:
    if not h > 0:
        raise ParameterError(f"h must be positive, got {h}")
    dens = power_profile(h + potential_values(grid.centers, p.lam), p.q)
    return Profile(grid, dens, meta={"h": float(h)})


def _bracket_log_root(fun, lo=1e-6, hi=1e6, max_expand=60):
    """Bracket a sign change of fun(log x) for a decreasing fun, expanding geometrically."""
    a, b = math.log(lo), math.log(hi)
    fa, fb = fun(a), fun(b)
    n = 0
    while fa < 0 and n < max_expand:
        a -= 2.0 * math.log(10.0)
        fa = fun(a)
        n += 1
    while fb > 0 and n < max_expand:
        b += 2.0 * math.log(10.0)
        fb = fun(b)
        n += 1
    if not (fa >= 0 >= fb):
        raise BracketFailure("initial bracket does not straddle the target mass")
    return a, b


def _solve_log_root(fun, lo=1e-6, hi=1e6):
    a, b = _bracket_log_root(fun, lo, hi)
    if fun(a) == 0:
        return math.exp(a)
    if fun(b) == 0:
        return math.exp(b)
    return math.exp(optimize.brentq(fun, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def solve_h_star(p: ModelParams, grid: RadialGrid, rtol=1e-12) -> StationaryState:
    """Drift stationary state whose discrete mass equals ``p.mass``."""
    if p.variant is not Variant.DRIFT:
        raise ParameterError("solve_h_star is for the drift variant")
    vol = grid.volumes
    vpot = potential_values(grid.centers, p.lam)
    log_m = math.log(p.mass)

    def excess(log_h):
        return log_mass(math.exp(log_h) + vpot, p.q, vol) - log_m

    h = _solve_log_root(excess)
    prof = barenblatt_profile(p, h, grid)
    mass = total_mass(prof)
    if abs(mass - p.mass) > max(rtol, 1e-12) * p.mass * 10:
        raise BracketFailure(f"mass inversion stalled: mass {mass!r} vs target {p.mass!r}")
    lhs = p.q / (1 - p.q) * prof.density ** (p.q - 1)
    residual = float(np.max(np.abs(lhs - h - vpot) / (h + vpot)))
    return StationaryState(prof, h, p, residual, {"mass": mass})


def lambda2_constant(dim, q):
    """Closed-form C for the lambda = 2 mean-field state (unit mass).

    Solves C^(1/(1-q) - N/2) = (2 pi)^(N/2) ((1-q)/q)^(1/(q-1))
    Gamma(1/(1-q) - N/2) / Gamma(1/(1-q)) through log-Gamma.
    """
    p = 1.0 / (1.0 - q)
    expo = p - 0.5 * dim
    if expo <= 0:
        raise GammaDomain(f"1/(1-q) - N/2 = {expo} must be positive")
    log_rhs = (
        0.5 * dim * math.log(2 * math.pi)
        + math.log((1 - q) / q) / (q - 1)
        + gammaln(expo)
        - gammaln(p)
    )
    return math.exp(log_rhs / expo)


def meanfield_lambda2(p: ModelParams, grid: RadialGrid, grid_exact=False) -> StationaryState:
    """Closed-form lambda = 2 mean-field state.

    With ``grid_exact`` the constant is re-solved so the *discrete* mass is one;
    the profile is then an exact fixed point of the finite-volume scheme.
    """
    if p.variant is not Variant.MEANFIELD or p.lam != 2:
        raise ParameterError("meanfield_lambda2 needs the mean-field variant with lambda = 2")
    c_formula = lambda2_constant(p.dim, p.q)
    half_r2 = 0.5 * grid.centers**2
    c = c_formula
    if grid_exact:
        vol = grid.volumes

        def excess(log_c):
            return log_mass(math.exp(log_c) + half_r2, p.q, vol)

        c = _solve_log_root(excess, 0.5 * c_formula, 2.0 * c_formula)
    dens = power_profile(c + half_r2, p.q)
    prof = Profile(grid, dens, meta={"C": c})
    mass = total_mass(prof)
    second = integrate_cells(grid, grid.centers**2 * dens)
    # V*rho = (|x|^2 m + M_2)/2 exactly for lambda = 2
    w = 0.5 * (grid.centers**2 * mass + second)
    c_pot = c - 0.5 * second
    lhs = p.q / (1 - p.q) * dens ** (p.q - 1)
    residual = float(np.max(np.abs(lhs - w - c_pot) / np.abs(w + c_pot)))
    info = {"formula_C": c_formula, "mass": mass, "potential_constant": c_pot}
    return StationaryState(prof, c, p, residual, info)


def _mass_one_update(w, q, vol):
    """T(rho) with the constant chosen so the discrete mass is one."""

    def excess(log_c):
        return log_mass(math.exp(log_c) + w, q, vol)

    c = _solve_log_root(excess)
    return power_profile(c + w, q), c


def meanfield_fixed_point(
    p: ModelParams,
    grid: RadialGrid,
    damping=0.5,
    tol=1e-10,
    max_iter=10000,
    kernel: KernelMatrix | None = None,
    initial: np.ndarray | None = None,
) -> StationaryState:
    """Damped fixed-point iteration for the mean-field state with lambda > 2.

    rho <- (1 - theta) rho + theta T(rho), T(rho) = ((1-q)/q (V*rho + C))^(1/(q-1))
    with C bisected so T(rho) has unit mass.  Raises NoConvergence when
    ``max_iter`` is exhausted.
    """
    if p.variant is not Variant.MEANFIELD:
        raise ParameterError("meanfield_fixed_point needs the mean-field variant")
    if not 0 < damping <= 1:
        raise ParameterError("damping must lie in (0, 1]")
    K = kernel if kernel is not None else assemble_kernel(grid, p.lam)
    vol = grid.volumes
    q = p.q
    if initial is None:
        # drift profile of unit mass: same tail exponent as the target
        drift = ModelParams(p.dim, p.lam, q, Variant.DRIFT, 1.0)
        rho = solve_h_star(drift, grid).density
    else:
        rho = np.asarray(initial, dtype=float)
    change = np.inf
    for it in range(1, max_iter + 1):
        t_rho, c = _mass_one_update(K.k_pot @ (rho * vol), q, vol)
        new = (1.0 - damping) * rho + damping * t_rho
        change = float(np.max(np.abs(new - rho)) / np.max(new))
        rho = new
        if change <= tol:
            break
    else:
        raise NoConvergence(
            f"fixed point not reached in {max_iter} iterations (last change {change:.3e})",
            residual=change,
            iterations=max_iter,
        )
    w = K.k_pot @ (rho * vol)
    rho, c = _mass_one_update(w, q, vol)
    w = K.k_pot @ (rho * vol)
    lhs = q / (1 - q) * rho ** (q - 1)
    residual = float(np.max(np.abs(lhs - w - c) / (w + c)))
    prof = Profile(grid, rho, meta={"C": c})
    info = {"iterations": it, "last_change": change, "mass": total_mass(prof), "potential_constant": c}
    log.debug("fixed point converged in %d iterations, residual %.3e", it, residual)
    return StationaryState(prof, c, p, residual, info)


def meanfield_state(p: ModelParams, grid: RadialGrid, kernel=None, **kwargs) -> StationaryState:
    """Dispatch: closed form (grid-exact) for lambda = 2, fixed point otherwise."""
    if p.lam == 2:
        return meanfield_lambda2(p, grid, grid_exact=kwargs.pop("grid_exact", True))
    return meanfield_fixed_point(p, grid, kernel=kernel, **kwargs)


def virial_residual(s: StationaryState, K: KernelMatrix) -> dict:
    """Both virial identities and their combination, as (lhs, rhs, relative gap).

    ``eqd1``: 2N int rho^q  vs  double integral of |x-y|^lambda rho rho.
    ``eqd2``: q/(1-q) int rho^q  vs  (1/lambda) double integral + C.
    ``combined``: double integral vs C(1-q) 2N lambda / (q lambda - 2N(1-q)).
    """
    p = s.params
    N, lam, q = p.dim, p.lam, p.q
    rho = s.profile
    lq = integrate_cells(rho.grid, rho.density**q)
    inter = interaction_energy(K, rho, rho)
    c = s.potential_constant

    def gap(lhs, rhs):
        return float(abs(lhs - rhs) / abs(lhs)) if lhs != 0 else float("nan")

    lhs1 = 2 * N * lq
    lhs2 = q / (1 - q) * lq
    rhs2 = inter / lam + c
    denom = q * lam - 2 * N * (1 - q)
    rhs3 = c * (1 - q) * 2 * N * lam / denom if denom != 0 else float("nan")
    return {
        "eqd1": (lhs1, inter, gap(lhs1, inter)),
        "eqd2": (lhs2, rhs2, gap(lhs2, rhs2)),
        "combined": (inter, rhs3, gap(inter, rhs3)),
    }
