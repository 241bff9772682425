"""Explicit finite-volume evolution in radial symmetry.

Both equations are written as u_t = div(u grad xi) with xi the variational
derivative of the free energy.  The interface flux is A u_up v with
v = -(xi_{i+1} - xi_i)/dr and u_up the donor cell, and the boundary fluxes at
r = 0 and r = R vanish.  Discrete stationary states have constant xi and so
zero flux, and the semi-discrete free energy decays at exactly the discrete
Fisher information.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, Profile, Variant, atomic_write_text, total_mass
from .diagnostics import CSV_COLUMNS, DiagnosticsRecord, chemical_potential, free_energy, record
from .errors import InsufficientSamples, NonFiniteState, ParameterError, StepTooLarge
from .kernels import KernelMatrix, assemble_kernel
from .stationary import StationaryState, barenblatt_profile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    dt_init: float = 1e-4
    cfl_safety: float = 0.5
    t_end: float = 1.0
    snapshot_every: float = 0.1
    entropy_guard: bool = True
    dt_max: float = math.inf
    max_steps: int = 10_000_000
    dt_min: float = 1e-15
    grow_after: int = 50
    grow_factor: float = 1.2

    def __post_init__(self):
        if not self.dt_init > 0:
            raise ParameterError("dt_init must be positive")
        if not 0 < self.cfl_safety < 1:
            raise ParameterError("cfl_safety must lie in (0, 1)")
        if not self.snapshot_every > 0:
            raise ParameterError("snapshot_every must be positive")
        if not self.t_end >= 0:
            raise ParameterError("t_end must be nonnegative")
        if not self.grow_factor >= 1 or self.grow_after < 1 or self.max_steps < 1:
            raise ParameterError("step control needs grow_factor >= 1 and positive counts")


@dataclass
class RunResult:
    final: Profile
    series: list = field(default_factory=list)
    accepted_steps: int = 0
    rejected_steps: int = 0
    t_final: float = 0.0

    def column(self, name):
        return np.array([getattr(r, name) for r in self.series])

    @property
    def times(self):
        return self.column("t")


# ---------------------------------------------------------------------------
# one step


def _fluxes(u: Profile, p: ModelParams, K):
    """Interface velocities and fluxes (length M-1) plus xi'(u) at the cells."""
    g = u.grid
    xi = chemical_potential(u, p, K)
    v = -np.diff(xi) / g.dr
    up = np.where(v >= 0.0, u.density[:-1], u.density[1:])
    flux = g.inner_areas * up * v
    dxi = p.q * u.density ** (p.q - 2.0)
    if K is not None:
        dxi = dxi + np.diag(K.k_pot) * g.volumes
    return v, flux, dxi


def _stable_dt(u: Profile, v, dxi):
    """Largest dt keeping every diagonal Jacobian entry of the update nonnegative.

    This implies positivity (outflow of cell i is at most u_i V_i / dt) and, for
    the drift equation, monotonicity of the explicit map.
    """
    g = u.grid
    d = u.density
    a = g.inner_areas / g.dr
    pos = v >= 0.0
    # d/du_i of the flux through the right face of cell i ...
    right = np.where(pos, g.inner_areas * v + a * d[:-1] * dxi[:-1], a * d[1:] * dxi[:-1])
    # ... and minus d/du_{i+1} of the flux through the left face of cell i+1
    left = np.where(pos, a * d[:-1] * dxi[1:], -g.inner_areas * v + a * d[1:] * dxi[1:])
    rate = np.zeros(g.size)
    rate[:-1] += right
    rate[1:] += left
    rate = np.maximum(rate, 0.0)
    with np.errstate(divide="ignore"):
        bound = np.where(rate > 0, g.volumes / rate, np.inf)
    return float(bound.min())


def max_stable_dt(u: Profile, p: ModelParams, kernel: KernelMatrix | None = None, cfl_safety=1.0):
    K = kernel if p.variant is Variant.MEANFIELD else None
    v, _, dxi = _fluxes(u, p, K)
    return cfl_safety * _stable_dt(u, v, dxi)


def _apply(u: Profile, flux, dt):
    net = np.zeros(u.grid.size)
    net[:-1] += flux
    net[1:] -= flux
    new = u.density - dt * net / u.grid.volumes
    return new


def step(u: Profile, p: ModelParams, kernel: KernelMatrix | None, dt, cfl_safety=1.0) -> Profile:
    """One explicit Euler step; raises StepTooLarge above the stability bound."""
    if not dt > 0:
        raise ParameterError("dt must be positive")
    K = kernel if p.variant is Variant.MEANFIELD else None
    if p.variant is Variant.MEANFIELD and K is None:
        raise ParameterError("mean-field steps need a KernelMatrix")
    v, flux, dxi = _fluxes(u, p, K)
    if not np.all(np.isfinite(flux)):
        raise NonFiniteState("non-finite flux")
    bound = cfl_safety * _stable_dt(u, v, dxi)
    if dt > bound:
        raise StepTooLarge(f"dt={dt:.3e} exceeds stability bound {bound:.3e}", dt_max=bound)
    new = _apply(u, flux, dt)
    if not np.all(np.isfinite(new)):
        raise NonFiniteState("non-finite density after step")
    if np.any(new <= 0):
        raise StepTooLarge("step produced a nonpositive density", dt_max=0.5 * dt)
    return Profile(u.grid, new, None, dict(u.meta))


# ---------------------------------------------------------------------------
# driver


def _snapshot_times(cfg: SolverConfig):
    n = int(math.floor(cfg.t_end / cfg.snapshot_every + 1e-9))
    times = [k * cfg.snapshot_every for k in range(1, n + 1)]
    if not times or cfg.t_end - times[-1] > 1e-12 * max(1.0, cfg.t_end):
        times.append(cfg.t_end)
    return times


def _kernel(u0, p, kernel):
    if p.variant is Variant.DRIFT:
        return None
    return kernel if kernel is not None else assemble_kernel(u0.grid, p.lam)


def _guard_ok(cfg, f_old, f_new):
    return not cfg.entropy_guard or f_new <= f_old + 1e-12 * abs(f_old)


def run(
    u0: Profile,
    p: ModelParams,
    cfg: SolverConfig,
    kernel: KernelMatrix | None = None,
    reference: StationaryState | None = None,
    envelope=None,
    callback=None,
) -> RunResult:
    """Adaptive explicit stepping with diagnostics every ``snapshot_every``.

    dt is halved on a stability or entropy-guard rejection and grown by
    ``grow_factor`` after ``grow_after`` consecutive acceptances; steps are
    shortened to land exactly on snapshot times.  ``envelope=(lo, hi)``
    profiles are only checked (with a warning) against u0.
    """
    K = _kernel(u0, p, kernel)
    if envelope is not None:
        lo, hi = envelope
        if np.any(u0.density < _density(lo) * (1 - 1e-12)) or np.any(u0.density > _density(hi) * (1 + 1e-12)):
            warnings.warn("initial data leaves the stationary envelope", RuntimeWarning, stacklevel=2)
    res = RunResult(final=u0)
    res.series.append(record(0.0, u0, p, reference, K))
    u, t = u0, 0.0
    dt = min(cfg.dt_init, cfg.dt_max)
    f_old = free_energy(u, p, K)
    streak = 0
    for target in _snapshot_times(cfg):
        while t < target - 1e-14 * max(1.0, target):
            if res.accepted_steps >= cfg.max_steps:
                break
            h = min(dt, target - t)
            try:
                new = step(u, p, K, h, cfg.cfl_safety)
                f_new = free_energy(new, p, K)
                if not _guard_ok(cfg, f_old, f_new):
                    raise StepTooLarge("free energy increased", dt_max=0.5 * h)
            except StepTooLarge:
                res.rejected_steps += 1
                streak = 0
                dt = 0.5 * h
                if dt < cfg.dt_min:
                    raise
                continue
            u, f_old = new, f_new
            t = target if h == target - t else t + h
            res.accepted_steps += 1
            streak += 1
            if callback is not None:
                callback(t, u)
            if streak >= cfg.grow_after:
                dt = min(cfg.grow_factor * max(dt, h), cfg.dt_max)
                streak = 0
        res.series.append(record(t, u, p, reference, K))
        if res.accepted_steps >= cfg.max_steps:
            break
    res.final, res.t_final = u, t
    return res


def _density(x):
    return x.density if isinstance(x, Profile) else np.asarray(x, dtype=float)


@dataclass
class PairResult:
    first: RunResult
    second: RunResult
    l1: list = field(default_factory=list)
    min_gap: list = field(default_factory=list)


def l1_distance(u: Profile, w: Profile) -> float:
    return float(np.dot(np.abs(u.density - w.density), u.grid.volumes))


def run_pair(
    u0: Profile,
    w0: Profile,
    p: ModelParams,
    cfg: SolverConfig,
    kernel=None,
    reference=None,
) -> PairResult:
    """Evolve two initial data with a common step sequence.

    Records the L1 distance and min(w - u) at every snapshot; with u0 <= w0
    the comparison principle says the latter stays nonnegative.
    """
    K = _kernel(u0, p, kernel)
    a, b = RunResult(u0), RunResult(w0)
    a.series.append(record(0.0, u0, p, reference, K))
    b.series.append(record(0.0, w0, p, reference, K))
    out = PairResult(a, b, [l1_distance(u0, w0)], [float(np.min(w0.density - u0.density))])
    u, w, t = u0, w0, 0.0
    dt = min(cfg.dt_init, cfg.dt_max)
    fu, fw = free_energy(u, p, K), free_energy(w, p, K)
    streak = 0
    for target in _snapshot_times(cfg):
        while t < target - 1e-14 * max(1.0, target):
            if a.accepted_steps >= cfg.max_steps:
                break
            h = min(dt, target - t)
            try:
                nu = step(u, p, K, h, cfg.cfl_safety)
                nw = step(w, p, K, h, cfg.cfl_safety)
                gu, gw = free_energy(nu, p, K), free_energy(nw, p, K)
                if not (_guard_ok(cfg, fu, gu) and _guard_ok(cfg, fw, gw)):
                    raise StepTooLarge("free energy increased", dt_max=0.5 * h)
            except StepTooLarge:
                a.rejected_steps += 1
                b.rejected_steps += 1
                streak = 0
                dt = 0.5 * h
                if dt < cfg.dt_min:
                    raise
                continue
            u, w, fu, fw = nu, nw, gu, gw
            t = target if h == target - t else t + h
            a.accepted_steps += 1
            b.accepted_steps += 1
            streak += 1
            if streak >= cfg.grow_after:
                dt = min(cfg.grow_factor * max(dt, h), cfg.dt_max)
                streak = 0
        a.series.append(record(t, u, p, reference, K))
        b.series.append(record(t, w, p, reference, K))
        out.l1.append(l1_distance(u, w))
        out.min_gap.append(float(np.min(w.density - u.density)))
        if a.accepted_steps >= cfg.max_steps:
            break
    a.final, b.final = u, w
    a.t_final = b.t_final = t
    return out


# ---------------------------------------------------------------------------
# checks and initial data


def dissipation_check(series) -> tuple[float, float]:
    """max |dF/dt + I| over consecutive samples and the same divided by 1 + I."""
    recs = series.series if isinstance(series, RunResult) else list(series)
    if len(recs) < 2:
        raise InsufficientSamples("need at least two samples")
    worst = worst_norm = 0.0
    for a, b in zip(recs[:-1], recs[1:]):
        dt = b.t - a.t
        if dt <= 0:
            continue
        d = abs((b.free_energy - a.free_energy) / dt + a.fisher)
        worst = max(worst, d)
        worst_norm = max(worst_norm, d / (1.0 + a.fisher))
    return worst, worst_norm


def format_series_csv(records, extra=None) -> str:
    """CSV text with the standard columns plus optional {name: values} columns."""
    extra = extra or {}
    cols = list(CSV_COLUMNS) + list(extra)
    lines = [",".join(cols)]
    for k, rec in enumerate(records):
        vals = list(rec.row()) + [extra[c][k] for c in extra]
        lines.append(",".join(f"{float(v):.17g}" for v in vals))
    return "\n".join(lines) + "\n"


def write_series_csv(path, records, extra=None):
    atomic_write_text(path, format_series_csv(records, extra))


def read_series_csv(path):
    """Return {column: array} from a time-series CSV."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}


def records_from_columns(cols) -> list:
    n = len(cols["t"])
    return [DiagnosticsRecord(*(float(cols[c][k]) for c in CSV_COLUMNS)) for k in range(n)]


def mixture_profile(lo: Profile, hi: Profile, theta: float) -> Profile:
    """theta * hi + (1 - theta) * lo, inside the envelope [lo, hi] for theta in [0, 1]."""
    if not 0 <= theta <= 1:
        raise ParameterError("theta must lie in [0, 1]")
    return Profile(lo.grid, theta * hi.density + (1.0 - theta) * lo.density)


def drift_envelope(p: ModelParams, grid, h_star, low=0.5, high=2.0):
    """Stationary profiles N_{high h*} <= N_{low h*} bracketing drift initial data."""
    upper = barenblatt_profile(p, low * h_star, grid)
    lower = barenblatt_profile(p, high * h_star, grid)
    return lower, upper


def drift_initial(p: ModelParams, s: StationaryState, low=0.5, high=2.0, theta=None) -> Profile:
    """Mixture of two stationary profiles with the mass of ``s``.

    With ``theta=None`` the mixing weight is chosen so the discrete mass equals
    that of the stationary state (possible whenever the envelope brackets it).
    """
    lower, upper = drift_envelope(p, s.grid, s.h_or_C, low, high)
    if theta is None:
        m_lo, m_hi, m = total_mass(lower), total_mass(upper), total_mass(s.profile)
        theta = (m - m_lo) / (m_hi - m_lo)
    u = mixture_profile(lower, upper, theta)
    u.meta.update(theta=theta)
    return u


def perturbed_profile(s: StationaryState, delta=0.3, width=1.0, mass=None) -> Profile:
    """s (1 + delta * bump) rescaled to ``mass`` (default: the mass of s).

    The ratio to s stays inside [(1 - |delta|) c, (1 + |delta|) c], which is
    the ratio form of the sandwich hypothesis.
    """
    r = s.grid.centers
    bump = np.exp(-(r / width) ** 2) - 0.5 * np.exp(-(r / (2 * width)) ** 2)
    bump = bump / np.max(np.abs(bump))
    dens = s.density * (1.0 + delta * bump)
    target = total_mass(s.profile) if mass is None else mass
    dens *= target / float(np.dot(dens, s.grid.volumes))
    return Profile(s.grid, dens)
