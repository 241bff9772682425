"""Hardy-Poincare constants, Muckenhoupt bounds, the reverse HLS quotient and
positivity of the interaction form.

Hardy-Poincare conventions.  For a stationary weight n,

    Phi_1[f] = 1/2 int f^2 n^(2-q),   Phi_2[f] = q int |f'|^2 n M,

and ``EigenEstimate.constant`` is the smallest C with Phi_1 <= C Phi_2 over
weighted-mean-zero radial f.  ``EigenEstimate.normalized`` is the same
spectral gap written as inf int |f'|^2 n M / int |f - fbar|^2 n^(2-q), the
convention of the closed form hp_constant_formula; the two are related by
normalized = 1 / (2 q constant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.linalg import eigh_tridiagonal

from .core import ModelParams, Profile, RadialGrid, integrate_cells, sphere_area, total_mass
from .diagnostics import hp_matrices, weight_m, weighted_mean
from .errors import (
    ConstraintViolated,
    DegenerateWeight,
    NoConvergence,
    ParameterError,
    QOutOfRange,
    ZeroProfile,
)
from .kernels import KernelMatrix, interaction_energy
from .stationary import StationaryState


@dataclass(frozen=True, eq=False)
class EigenEstimate:
    constant: float
    grid_size: int
    converged: bool
    iterations: int
    gap: float  # min Phi_2 / Phi_1
    q: float
    vector: np.ndarray | None = None

    @property
    def normalized(self):
        return self.gap / (2.0 * self.q)


def hp_constant_formula(dim, q):
    """(Nq - 2q - N + 4)^2 / (8 q (1 - q)).

    Accepted for q in (max{(N-4)/(N-2), 0}, 1) when N >= 3 and for q in (0, 1)
    when N <= 2.
    """
    lower = max((dim - 4.0) / (dim - 2.0), 0.0) if dim >= 3 else 0.0
    if not lower < q < 1:
        raise QOutOfRange(f"q must lie in ({lower:g}, 1) for N={dim}, got {q}")
    return (dim * q - 2 * q - dim + 4) ** 2 / (8 * q * (1 - q))


def _path_solve(c, rhs):
    """Solve the singular path-graph system S x = rhs for mean-free rhs.

    S x has entries c_{i-1/2}(x_i - x_{i-1}) - c_{i+1/2}(x_{i+1} - x_i); the
    flux through interface i+1/2 equals minus the partial sum of rhs.  Past
    the midpoint the equivalent right-hand partial sum is used, so the tiny
    weights of a decaying tail never divide a cancellation error.
    """
    left = -np.cumsum(rhs)[:-1]
    right = np.cumsum(rhs[::-1])[::-1][1:]
    mag = np.cumsum(np.abs(rhs))
    use_left = mag[:-1] <= 0.5 * mag[-1]
    steps = np.where(use_left, left, right) / c
    return np.concatenate(([0.0], np.cumsum(steps)))


def _check_weights(c, b):
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b))) or np.any(c <= 0) or np.any(b <= 0):
        raise DegenerateWeight("weights must be positive and finite on every cell and interface")


def _deflate(f, b):
    return f - np.dot(b, f) / b.sum()


def hp_estimate(s: StationaryState, tol=1e-10, max_iter=500, seed=0) -> EigenEstimate:
    """Inverse iteration for the smallest nonzero eigenvalue of S f = mu B f.

    S and B are the tridiagonal/diagonal matrices of Phi_2 and Phi_1 (same
    stencils as ``phi_functionals``); the constant mode is deflated in the
    B inner product.  Raises NoConvergence after ``max_iter`` sweeps.
    """
    c, b = hp_matrices(s)
    _check_weights(c, b)
    rng = np.random.default_rng(seed)
    f = _deflate(s.grid.centers**2 + 0.01 * rng.standard_normal(s.grid.size), b)
    lam_old = math.inf
    for it in range(1, max_iter + 1):
        x = _deflate(_path_solve(c, b * f), b)
        f = x / math.sqrt(np.dot(b, x * x))
        df = np.diff(f)
        lam = float(np.dot(c, df * df))  # Rayleigh quotient, f is B-normalized
        if abs(lam - lam_old) <= tol * abs(lam):
            return EigenEstimate(1.0 / lam, s.grid.size, True, it, lam, s.params.q, f)
        lam_old = lam
    raise NoConvergence(f"inverse iteration stalled after {max_iter} sweeps", residual=lam, iterations=max_iter)


def hp_spectrum(s: StationaryState, count=3):
    """Smallest ``count`` nonzero eigenvalues of S f = mu B f by a tridiagonal solver."""
    c, b = hp_matrices(s)
    _check_weights(c, b)
    sb = np.sqrt(b)
    diag = np.zeros(b.size)
    diag[:-1] += c
    diag[1:] += c
    vals = eigh_tridiagonal(diag / b, -c / (sb[:-1] * sb[1:]), eigvals_only=True, select="i", select_range=(1, count))
    return np.asarray(vals)


def rayleigh_ratio(f, s: StationaryState):
    """Phi_1 / Phi_2 for f after removing its weighted mean."""
    c, b = hp_matrices(s)
    f = _deflate(np.asarray(f, dtype=float), b)
    df = np.diff(f)
    return float(np.dot(b, f * f) / np.dot(c, df * df))


def muckenhoupt_B(mu, nu, grid: RadialGrid, anchor="origin", radial=True):
    """Discrete Muckenhoupt constant sup_x mu([x, R]) int_0^x 1/n.

    ``mu`` and ``nu`` are densities on the cells.  With ``radial`` they are
    densities on R^N (so the measures carry the shell factor S_N r^(N-1)),
    otherwise densities in r.  ``anchor="median"`` returns max(B+, B-) about
    the mu-median, the form that bounds the variance (Poincare) constant and
    stays finite for N >= 2.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != (grid.size,) or nu.shape != (grid.size,):
        raise ParameterError("weights must match the grid")
    if np.any(nu <= 0) or not np.all(np.isfinite(nu)):
        raise DegenerateWeight("nu needs a positive density on (0, R)")
    if radial:
        cell_mu = mu * grid.volumes
        inv_n = grid.dr / (nu * grid.sphere * grid.centers ** (grid.dim - 1))
    else:
        cell_mu = mu * grid.dr
        inv_n = grid.dr / nu
    if anchor == "origin":
        tail = np.cumsum(cell_mu[::-1])[::-1][1:]  # mu([x_k, R]) at interior interfaces
        inner = np.cumsum(inv_n)[:-1]
        return float(np.max(tail * inner))
    if anchor != "median":
        raise ParameterError(f"unknown anchor {anchor!r}")
    head = np.cumsum(cell_mu)  # mu([0, interface j+1])
    tail = np.cumsum(cell_mu[::-1])[::-1]  # mu([interface j, R])
    half = 0.5 * head[-1]
    k = int(np.searchsorted(head, half))
    lo = head[k - 1] if k > 0 else 0.0
    a = k + 1 if head[k] - half < half - lo else k  # anchor interface nearest the median
    a = min(max(a, 1), grid.size - 1)
    # x = interface j > a: mu([x, R]) * int_a^x 1/n
    b_plus = float(np.max(tail[a + 1 :] * np.cumsum(inv_n[a:-1]))) if a + 1 < grid.size else 0.0
    # x = interface j < a: mu([0, x]) * int_x^a 1/n
    b_minus = float(np.max(head[: a - 1] * np.cumsum(inv_n[1:a][::-1])[::-1])) if a > 1 else 0.0
    return max(b_plus, b_minus)


def hp_muckenhoupt(s: StationaryState, anchor="median"):
    """B for the Hardy-Poincare pair mu = n^(2-q), nu = n M (normalized convention)."""
    n, q = s.density, s.params.q
    return muckenhoupt_B(n ** (2.0 - q), n * weight_m(s.grid.centers, s.params.lam), s.grid, anchor)


# ---------------------------------------------------------------------------
# reverse HLS


@dataclass(frozen=True)
class TailMoments:
    """Integrals of rho, |x|^2 rho and rho^q over |x| > radius for a closed-form state."""

    radius: float
    mass: float
    second: float
    lq: float


def lambda2_tail(p: ModelParams, c: float, radius: float) -> TailMoments:
    """Tail moments of ((1-q)/q (c + r^2/2))^(1/(q-1)) beyond ``radius``."""
    if p.lam != 2:
        raise ParameterError("closed-form tails are available for lambda = 2 only")
    a = (1.0 - p.q) / p.q
    area = sphere_area(p.dim)

    def rho(r):
        return (a * (c + 0.5 * r * r)) ** (1.0 / (p.q - 1.0))

    def piece(f):
        val, _ = integrate.quad(lambda r: area * r ** (p.dim - 1) * f(r), radius, np.inf, limit=200, epsabs=0.0)
        return float(val)

    return TailMoments(
        radius=float(radius),
        mass=piece(rho),
        second=piece(lambda r: r * r * rho(r)),
        lq=piece(lambda r: rho(r) ** p.q),
    )


def rhls_quotient(u: Profile, p: ModelParams, K: KernelMatrix | None = None, tail=None, tail_scale=1.0) -> float:
    """I[u] / (m^alpha (int u^q)^((2 - alpha)/q)), invariant under scaling and dilation.

    With ``tail`` (lambda = 2 only) the quotient is taken over all of R^N, u
    continuing beyond the grid as ``tail_scale`` times the tail of the state;
    the radial interaction is then 2 m M_2 exactly.
    """
    alpha = p.alpha
    if not alpha < 1:
        raise ParameterError(f"reverse HLS needs alpha < 1, got {alpha}")
    m = total_mass(u)
    if not m > 0:
        raise ZeroProfile("profile has zero mass")
    lq = float(np.dot(u.density**p.q, u.grid.volumes))
    if tail is None:
        if K is None:
            raise ParameterError("a kernel is needed without a tail model")
        inter = interaction_energy(K, u, u)
    else:
        if p.lam != 2:
            raise ParameterError("tail completion is available for lambda = 2 only")
        second = integrate_cells(u.grid, u.grid.centers**2 * u.density) + tail_scale * tail.second
        m = m + tail_scale * tail.mass
        lq = lq + tail_scale**p.q * tail.lq
        inter = 2.0 * m * second
    return inter / (m**alpha * lq ** ((2.0 - alpha) / p.q))


def mass_radius(s: StationaryState, fraction=0.9):
    """Smallest cell edge enclosing ``fraction`` of the discrete mass."""
    cum = np.cumsum(s.density * s.grid.volumes)
    idx = int(np.searchsorted(cum, fraction * cum[-1]))
    return float(s.grid.interfaces[min(idx + 1, s.grid.size)])


def smooth_radial_bumps(grid: RadialGrid, rng, modes=4, scale=None):
    """Low-frequency random radial function sum a_k cos(k pi r / L) e^(-r^2/L^2)."""
    L = scale if scale is not None else 0.5 * grid.radius
    r = grid.centers
    coef = rng.standard_normal(modes)
    out = sum(a * np.cos(k * np.pi * r / L) for k, a in enumerate(coef))
    return out * np.exp(-((r / L) ** 2))


def admissible_perturbation(s: StationaryState, rng, eps, modes=4, scale=None):
    """Mean-zero radial g with max|eps g| <= 1/2, so rho (1 + eps g) > 0."""
    g = smooth_radial_bumps(s.grid, rng, modes, scale)
    g = g - weighted_mean(g, s)
    peak = np.max(np.abs(g))
    if eps * peak > 0.5:
        g *= 0.5 / (eps * peak)
    return g


@dataclass(frozen=True, eq=False)
class RhlsResult:
    violations: int
    j0: float
    j_min: float
    values: np.ndarray

    @property
    def relative_margin(self):
        """min over trials of (J - J0) / J0; negative when a trial beat the state."""
        return (self.j_min - self.j0) / self.j0


def rhls_minimality(s: StationaryState, K: KernelMatrix | None, trials=100, eps=1e-2, seed=0, scale=None, tail=None):
    """Count perturbations rho (1 + eps g) with a smaller quotient than rho.

    Bumps live on the scale of the 90% mass radius unless ``scale`` is given.
    """
    rng = np.random.default_rng(seed)
    p = s.params
    L = scale if scale is not None else mass_radius(s)
    j0 = rhls_quotient(s.profile, p, K, tail)
    values = np.empty(trials)
    for k in range(trials):
        g = admissible_perturbation(s, rng, eps, scale=L)
        # beyond the grid g has relaxed to its last value
        values[k] = rhls_quotient(Profile(s.grid, s.density * (1.0 + eps * g)), p, K, tail, 1.0 + eps * g[-1])
    worst = float(values.min()) if trials else math.inf
    return RhlsResult(int(np.sum(values < j0)), j0, worst, values)


# ---------------------------------------------------------------------------
# interaction form on modes l = 0, 1


def interaction_form(f0, f1, g0, g1, K: KernelMatrix, K1: KernelMatrix) -> float:
    """Bilinear form of |x-y|^lambda on f = f0 + f1 x_1/|x| and g likewise.

    The l = 1 block carries the 1/N from averaging (x_1/|x|)^2 over the sphere.
    """
    vol = K.grid.volumes
    N = K.grid.dim
    a0, b0 = f0 * vol, g0 * vol
    a1, b1 = f1 * vol, g1 * vol
    v0 = 0.5 * (a0 @ (K.k_pot @ b0) + b0 @ (K.k_pot @ a0))
    v1 = 0.5 * (a1 @ (K1.k_pot @ b1) + b1 @ (K1.k_pot @ a1)) / N
    return float(K.lam * (v0 + v1))


def constraint_residuals(f0, f1, grid: RadialGrid):
    """(int f, first moment) for f = f0 + f1 x_1/|x|."""
    mass = float(np.dot(f0, grid.volumes))
    moment = float(np.dot(grid.centers * f1, grid.volumes) / grid.dim)
    return mass, moment


def interaction_positivity(f0, f1, p: ModelParams, K: KernelMatrix, K1: KernelMatrix, tol=1e-10) -> float:
    """Double integral of |x-y|^lambda f(x) f(y) for zero-mass, zero-moment f."""
    f0 = np.asarray(f0, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    mass, moment = constraint_residuals(f0, f1, K.grid)
    scale = float(np.dot(np.abs(f0) + np.abs(f1), K.grid.volumes)) or 1.0
    if abs(mass) > tol * scale or abs(moment) > tol * scale * K.grid.radius:
        raise ConstraintViolated(f"mass {mass:.3e} or first moment {moment:.3e} not zero")
    return interaction_form(f0, f1, f0, f1, K, K1)


def random_constrained_pair(grid: RadialGrid, rng, modes=5, scale=None):
    """Smooth (f0, f1) with zero mass and zero first moment, unit L1 size."""
    L = scale if scale is not None else 0.4 * grid.radius
    r = grid.centers
    env = np.exp(-((r / L) ** 2))
    f0 = smooth_radial_bumps(grid, rng, modes, L)
    f0 = f0 - np.dot(f0, grid.volumes) / np.dot(env, grid.volumes) * env
    f1 = r * smooth_radial_bumps(grid, rng, modes, L)
    w = r * env
    f1 = f1 - np.dot(r * f1, grid.volumes) / np.dot(r * w, grid.volumes) * w
    size = float(np.dot(np.abs(f0) + np.abs(f1), grid.volumes)) or 1.0
    return f0 / size, f1 / size


def positivity_trials(p: ModelParams, K, K1, trials=100, seed=0, scale=None):
    """Minimum form value over seeded random constrained pairs, and the minimizing pair."""
    rng = np.random.default_rng(seed)
    best, arg = math.inf, None
    for _ in range(trials):
        f0, f1 = random_constrained_pair(K.grid, rng, scale=scale)
        val = interaction_positivity(f0, f1, p, K, K1)
        if val < best:
            best, arg = val, (f0, f1)
    return best, arg


def counterexample_search(p: ModelParams, K, K1, trials=100, seed=0, sweeps=20, scale=None):
    """Random starts plus coordinate descent on the coefficients of a bump basis.

    Minimizes the form over unit-size constrained pairs.  Returns the smallest
    value found and its pair; a nonnegative result is inconclusive.
    """
    best, arg = positivity_trials(p, K, K1, trials, seed, scale)
    rng = np.random.default_rng(seed + 1)
    basis = [random_constrained_pair(K.grid, rng, scale=scale) for _ in range(8)]
    coef = rng.standard_normal(len(basis))

    def value(cf):
        f0 = sum(c * b[0] for c, b in zip(cf, basis))
        f1 = sum(c * b[1] for c, b in zip(cf, basis))
        size = float(np.dot(np.abs(f0) + np.abs(f1), K.grid.volumes))
        return interaction_form(f0, f1, f0, f1, K, K1) / size**2, (f0 / size, f1 / size)

    cur, pair = value(coef)
    for _ in range(sweeps):
        for i in range(coef.size):
            for delta in (0.5, -0.5, 0.1, -0.1):
                trial = coef.copy()
                trial[i] += delta
                val, pr = value(trial)
                if val < cur:
                    coef, cur, pair = trial, val, pr
    if cur < best:
        best, arg = cur, pair
    return best, arg
