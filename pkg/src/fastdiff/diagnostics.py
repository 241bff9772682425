"""Scalar functionals of radial profiles.

Free energies and Fisher informations for both equations, the Bregman relative
entropy, the weighted L2 distance, the weights M and M_1, the Hardy-Poincare
functionals Phi_1/Phi_2, the quadratic forms Psi_1..3, Q_1, Q_2 of the
linearized mean-field problem (modes l = 0 and l = 1), and the residual of the
three-term integration-by-parts identity for |grad(alpha(w) N^(q-1))|^2.

Radial derivatives are one-sided differences across interfaces, i.e. centred
at the interface.  For N = 1 the interface r = 0 is a genuine interior face of
the full line and is kept with half weight, using the even (l = 0) or odd
(l = 1) reflection of the cell values.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import ModelParams, Profile, RadialGrid, Variant, integrate_cells, radial_moment, total_mass
from .errors import GridMismatch, MassMismatch, MassNotZero, ParameterError
from .kernels import KernelMatrix, assemble_kernel, convolve_potential, interaction_energy
from .stationary import StationaryState, potential_values, power_profile

CSV_COLUMNS = ("t", "mass", "free_energy", "fisher", "rel_entropy", "weighted_l2", "second_moment")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    free_energy: float
    fisher: float
    rel_entropy: float
    weighted_l2: float
    second_moment: float

    def row(self):
        return tuple(getattr(self, c) for c in CSV_COLUMNS)

    def as_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# helpers


def _density(u):
    return u.density if isinstance(u, Profile) else np.asarray(u, dtype=float)


def _check_grid(u: Profile, grid: RadialGrid):
    if not u.grid.same_as(grid):
        raise GridMismatch("profile and reference live on different grids")


def _kernel_for(u: Profile, p: ModelParams, ref):
    if isinstance(ref, KernelMatrix):
        return ref
    return assemble_kernel(u.grid, p.lam)


def potential_field(u: Profile, p: ModelParams, kernel=None):
    """V_lambda at cell centres (drift) or V_lambda * u (mean-field)."""
    if p.variant is Variant.DRIFT:
        return potential_values(u.grid.centers, p.lam)
    return convolve_potential(_kernel_for(u, p, kernel), u)


def chemical_potential(u: Profile, p: ModelParams, kernel=None):
    """xi = q/(q-1) u^(q-1) + potential, the variational derivative of the energy."""
    return p.q / (p.q - 1.0) * u.density ** (p.q - 1.0) + potential_field(u, p, kernel)


def face_velocity(xi, grid: RadialGrid):
    """v = -d xi / dr at the M-1 interior interfaces."""
    return -np.diff(xi) / grid.dr


def upwind_density(u, v):
    """Donor-cell density at interior interfaces for velocities v."""
    d = _density(u)
    return np.where(v >= 0.0, d[:-1], d[1:])


def _faces(grid: RadialGrid, values, parity=1.0):
    """Interface radii, quadrature weights, differences and means of ``values``.

    Interior interfaces carry weight A dr.  In one dimension the origin is kept
    with weight A dr / 2 and a reflected ghost cell (parity +1 for even, -1 for
    odd functions); in higher dimensions its area vanishes and it is dropped.
    """
    v = np.asarray(values, dtype=float)
    dr = grid.dr
    r = grid.interfaces[1:-1]
    wts = grid.inner_areas * dr
    grad = np.diff(v) / dr
    mean = 0.5 * (v[1:] + v[:-1])
    if grid.dim == 1:
        r = np.concatenate(([0.0], r))
        wts = np.concatenate(([0.5 * grid.areas[0] * dr], wts))
        grad = np.concatenate(([(1.0 - parity) * v[0] / dr], grad))
        mean = np.concatenate(([0.5 * (1.0 + parity) * v[0]], mean))
    return r, wts, grad, mean


def _face_density(grid: RadialGrid, dens):
    """Density at the interfaces used by _faces (even reflection at r = 0)."""
    return _faces(grid, dens, 1.0)[3]


# ---------------------------------------------------------------------------
# energies


def free_energy(u: Profile, p: ModelParams, ref=None) -> float:
    """Drift: -1/(1-q) int u^q + int V u.  Mean-field: -1/(1-q) int u^q + I[u]/(2 lambda).

    ``ref`` may be a KernelMatrix (reused for the interaction) or anything
    else, in which case a kernel is assembled for mean-field profiles.
    """
    q = p.q
    entropy = -integrate_cells(u.grid, u.density**q) / (1.0 - q)
    if p.variant is Variant.DRIFT:
        return entropy + integrate_cells(u.grid, potential_values(u.grid.centers, p.lam) * u.density)
    K = _kernel_for(u, p, ref)
    return entropy + interaction_energy(K, u, u) / (2.0 * p.lam)


def fisher_information(u: Profile, p: ModelParams, ref=None, face="upwind") -> float:
    """int u |d/dr xi|^2 with xi the chemical potential.

    With ``face="upwind"`` the interface density is the donor cell of the
    scheme's velocity, so dF/dt = -I holds exactly for the semi-discrete
    evolution; ``face="mean"`` uses the arithmetic mean instead.
    """
    K = ref if isinstance(ref, KernelMatrix) else None
    xi = chemical_potential(u, p, K)
    v = face_velocity(xi, u.grid)
    if face == "upwind":
        dens = upwind_density(u, v)
    elif face == "mean":
        dens = 0.5 * (u.density[1:] + u.density[:-1])
    else:
        raise ValueError(f"unknown face rule {face!r}")
    return float(np.sum(u.grid.inner_areas * u.grid.dr * dens * v * v))


def relative_entropy(u: Profile, s: StationaryState, kernel=None, mass_tol=1e-8) -> float:
    """Bregman form of F[u] - F[s] for phi(x) = x^q/(q-1).

    The mean-field variant adds 1/2 double integral of V(x-y) j(x) j(y) with
    j = u - s.  Raises MassMismatch when the masses differ by more than
    ``mass_tol`` relative.
    """
    _check_grid(u, s.grid)
    p = s.params
    q = p.q
    m_u, m_s = total_mass(u), total_mass(s.profile)
    if abs(m_u - m_s) > mass_tol * abs(m_s):
        raise MassMismatch(f"mass {m_u!r} differs from stationary mass {m_s!r}")
    a, b = u.density, s.density
    breg = (a**q - b**q - q * b ** (q - 1.0) * (a - b)) / (q - 1.0)
    val = integrate_cells(u.grid, breg)
    if p.variant is Variant.MEANFIELD:
        K = kernel if kernel is not None else assemble_kernel(u.grid, p.lam)
        j = a - b
        val += 0.5 * interaction_energy(K, j, j) / p.lam
    return float(val)


def bregman_part(u: Profile, s: StationaryState) -> float:
    """Entropy part of the relative entropy, without the interaction term."""
    q = s.params.q
    a, b = u.density, s.density
    return integrate_cells(u.grid, (a**q - b**q - q * b ** (q - 1.0) * (a - b)) / (q - 1.0))


def weighted_l2(u: Profile, s: StationaryState) -> float:
    _check_grid(u, s.grid)
    q = s.params.q
    b = s.density
    return integrate_cells(u.grid, b ** (q - 2.0) * (u.density - b) ** 2)


def ratio_bounds(u: Profile, s: StationaryState):
    """Cellwise extrema (W_0, W_1) of u / s."""
    w = u.density / s.density
    return float(w.min()), float(w.max())


def sandwich_bounds(u: Profile, s: StationaryState):
    """Two-sided bound on the Bregman part by W^(q-2) q/2 int |w-1|^2 s^q.

    Returns (lower, value, upper); lower uses W_1, upper uses W_0.
    """
    q = s.params.q
    w0, w1 = ratio_bounds(u, s)
    base = 0.5 * q * integrate_cells(u.grid, (u.density / s.density - 1.0) ** 2 * s.density**q)
    return w1 ** (q - 2.0) * base, bregman_part(u, s), w0 ** (q - 2.0) * base


def record(t, u: Profile, p: ModelParams, s: StationaryState | None = None, kernel=None):
    """Assemble one DiagnosticsRecord; entries needing a reference are nan without one."""
    rel = wl2 = float("nan")
    if s is not None:
        rel = relative_entropy(u, s, kernel=kernel, mass_tol=1e-6)
        wl2 = weighted_l2(u, s)
    return DiagnosticsRecord(
        t=float(t),
        mass=total_mass(u),
        free_energy=free_energy(u, p, kernel),
        fisher=fisher_information(u, p, kernel),
        rel_entropy=rel,
        weighted_l2=wl2,
        second_moment=radial_moment(u, 2.0),
    )


# ---------------------------------------------------------------------------
# weights and Hardy-Poincare functionals


def weight_m(r, lam):
    """M(r) = 1/(1 + r^(lambda-2)), identically 1 for lambda = 2."""
    r = np.asarray(r, dtype=float)
    if lam == 2:
        return np.ones_like(r)
    return 1.0 / (1.0 + r ** (lam - 2.0))


def weight_m1(r, lam, dim, q):
    r = np.asarray(r, dtype=float)
    a = (1.0 - q) / q
    if lam == 2:
        return np.full_like(r, dim * a)
    t = r ** (lam - 2.0)
    return a * (dim * t * t + (lam + dim - 2.0) * t) / (1.0 + t) ** 2


def weights_M(grid: RadialGrid, p: ModelParams):
    """(M, M_1) at cell centres."""
    return weight_m(grid.centers, p.lam), weight_m1(grid.centers, p.lam, grid.dim, p.q)


def hp_matrices(s: StationaryState):
    """Face weights c and cell weights b with Phi_2 = sum c (df)^2, Phi_1 = sum b f^2.

    Phi_1 = 1/2 int f^2 n^(2-q), Phi_2 = q int |f'|^2 n M with n the stationary
    density; c lives on the interior interfaces (the origin never contributes
    for radial f).
    """
    g = s.grid
    n = s.density
    q = s.params.q
    r_f = g.interfaces[1:-1]
    n_f = 0.5 * (n[1:] + n[:-1])
    c = q * g.inner_areas * n_f * weight_m(r_f, s.params.lam) / g.dr
    b = 0.5 * n ** (2.0 - q) * g.volumes
    return c, b


def phi_functionals(f, s: StationaryState):
    f = np.asarray(f, dtype=float)
    c, b = hp_matrices(s)
    df = np.diff(f)
    return float(np.dot(b, f * f)), float(np.dot(c, df * df))


# ---------------------------------------------------------------------------
# linearized mean-field forms


@dataclass(frozen=True)
class PsiForms:
    psi1: float
    psi2: float
    psi3: float
    q1: float  # limit of 2 (F[rho(1 + eps g)] - F[rho]) / eps^2: q Psi_1 + interaction
    q2: float  # limit of I[rho(1 + eps g)] / eps^2: int rho |q grad(rho^(q-1) g) + grad V*(rho g)|^2
    q2_printed: float  # the same integrand with a minus sign between the two gradients
    interaction_moment: float  # -Psi_3, valid for lambda = 2
    interaction_kernel: float  # bilinear kernel form, l = 0 plus l = 1
    first_moment: float
    q_factor: float

    @property
    def q1_printed(self):
        """Psi_1 - Psi_3, the identity without the entropy factor q."""
        return self.psi1 - self.psi3

    @property
    def q1_scaled(self):
        """q Psi_1 - Psi_3, the identity with the entropy factor q kept."""
        return self.q_factor * self.psi1 - self.psi3

    def residuals(self):
        """Relative residuals of the lambda = 2 identities.

        Q_1 against Psi_1 - Psi_3 and q Psi_1 - Psi_3; the minus-sign Q_2
        against Psi_2 + 3 Psi_3 and the expansion Q_2 against Psi_2 - Psi_3.
        """

        def rel(a, b):
            return abs(a - b) / max(abs(a), abs(b), 1e-300)

        return {
            "q1_printed": rel(self.q1, self.q1_printed),
            "q1_scaled": rel(self.q1, self.q1_scaled),
            "q2_printed": rel(self.q2_printed, self.psi2 + 3.0 * self.psi3),
            "q2": rel(self.q2, self.psi2 - self.psi3),
            "interaction": abs(self.interaction_kernel - self.interaction_moment)
            / max(abs(self.interaction_moment), 1.0),
        }


def weighted_mean(g0, s: StationaryState):
    """int g rho_inf / int rho_inf for the radial part g0."""
    rho = s.density
    return float(np.dot(g0 * rho, s.grid.volumes) / np.dot(rho, s.grid.volumes))


def project_mean_zero(g0, s: StationaryState):
    return np.asarray(g0, dtype=float) - weighted_mean(g0, s)


def psi_q_forms(
    g,
    s: StationaryState,
    K: KernelMatrix | None = None,
    K1: KernelMatrix | None = None,
    mean_tol=1e-10,
) -> PsiForms:
    """Psi_1, Psi_2, Psi_3, Q_1, Q_2 for g = g0(r) + g1(r) x_1/|x|.

    ``g`` is either a Profile (density = g0, mode1 = g1; only usable when
    g0 >= 0) or a pair of arrays (g0, g1) with g1 possibly None.  K and K1 are the l = 0 and l = 1 kernels; they are
    assembled when missing.
    """
    grid = s.grid
    p = s.params
    q, N, lam = p.q, grid.dim, p.lam
    if isinstance(g, Profile):
        _check_grid(g, grid)
        g0, g1 = g.density, g.mode1
    else:
        g0, g1 = (np.asarray(a, dtype=float) if a is not None else None for a in g)
    g1 = np.zeros_like(g0) if g1 is None else g1
    if g0.shape != (grid.size,) or g1.shape != (grid.size,):
        raise GridMismatch("perturbation arrays do not match the grid")
    if abs(weighted_mean(g0, s)) > mean_tol:
        raise MassNotZero(f"l = 0 part has weighted mean {weighted_mean(g0, s):.3e}")
    K = K if K is not None else assemble_kernel(grid, lam)
    K1 = K1 if K1 is not None else assemble_kernel(grid, lam, mode=1)
    rho, vol, r = s.density, grid.volumes, grid.centers
    rq1 = rho ** (q - 1.0)

    psi1 = float(np.dot(rho**q * (g0 * g0 + g1 * g1 / N), vol))

    F0, G1 = rq1 * g0, rq1 * g1
    r_f, w_f, dF0, _ = _faces(grid, F0, 1.0)
    _, _, dG1, _ = _faces(grid, G1, -1.0)
    rho_f = _face_density(grid, rho)
    m_f = weight_m(r_f, lam)
    m_c = weight_m(r, lam)
    rad1 = (N - 1.0) * np.dot(vol * rho * m_c, (G1 / r) ** 2)
    psi2 = q * q * float(np.dot(w_f * rho_f * m_f, dF0**2) + (np.dot(w_f * rho_f * m_f, dG1**2) + rad1) / N)

    j0, j1 = g0 * rho * vol, g1 * rho * vol
    moment = float(np.dot(r, j1) / N)
    psi3 = moment * moment

    inter0 = float(j0 @ (K.k_pot @ j0))
    inter1 = float(j1 @ (K1.k_pot @ j1) / N)
    inter_kernel = inter0 + inter1
    q1 = q * psi1 + inter_kernel

    # Q_2: the convolution fields W0 = V*(rho g0), W1 x_1/r = V*(rho g1 x_1/r)
    dW0 = K.k_force @ j0
    W1 = K1.k_pot @ j1
    dW1 = K1.k_force @ j1
    dW0_f = _faces(grid, dW0, -1.0)[3]
    dW1_f = _faces(grid, dW1, 1.0)[3]

    def q2_form(sign):
        e0 = q * dF0 + sign * dW0_f
        e1 = q * dG1 + sign * dW1_f
        z1 = (q * G1 + sign * W1) / r
        return float(np.dot(w_f * rho_f, e0**2) + (np.dot(w_f * rho_f, e1**2) + (N - 1.0) * np.dot(vol * rho, z1**2)) / N)

    return PsiForms(
        psi1=psi1,
        psi2=psi2,
        psi3=psi3,
        q1=q1,
        q2=q2_form(1.0),
        q2_printed=q2_form(-1.0),
        interaction_moment=-psi3,
        interaction_kernel=inter_kernel,
        first_moment=moment,
        q_factor=q,
    )


# ---------------------------------------------------------------------------
# integration-by-parts identity


def named_map(name, q=None):
    """(alpha, alpha') for h_q, h_2 or h_k given as 'h_<k>'; h_k(x) = (x^(k-1) - 1)/(k-1)."""
    key = str(name).strip().lower()
    if key in ("h_q", "hq"):
        if q is None:
            raise ParameterError("h_q needs q")
        k = q
    elif key.startswith("h_"):
        k = float(key[2:])
    else:
        raise ParameterError(f"unknown map {name!r}")
    if k == 1:
        return np.log, lambda x: 1.0 / x
    return (lambda x: (x ** (k - 1.0) - 1.0) / (k - 1.0)), (lambda x: x ** (k - 2.0))


def ibp_terms(w, alpha, s: StationaryState):
    """Left side and the three right-side terms of the identity

    int |grad(a(w) P)|^2 n M = int a'(w)^2 |grad w|^2 n^(2q-1) M
        + 1/(1-q) int a(w)^2 |grad P|^2 n M - int a(w)^2 n^q M_1,

    with n the drift stationary profile and P = n^(q-1).
    """
    p = s.params
    if p.variant is not Variant.DRIFT:
        raise ParameterError("the identity is stated for the drift stationary profile")
    fn, dfn = named_map(alpha, p.q) if not isinstance(alpha, tuple) else alpha
    grid = s.grid
    q, lam, N = p.q, p.lam, grid.dim
    w = np.asarray(w, dtype=float)
    h = s.h_or_C

    def n_at(r):
        return power_profile(h + potential_values(r, lam), q)

    P_c = n_at(grid.centers) ** (q - 1.0)
    a_c = fn(w)
    r_f, w_f, dw, w_mean = _faces(grid, w, 1.0)
    dprod = _faces(grid, a_c * P_c, 1.0)[2]
    n_f = n_at(r_f)
    m_f = weight_m(r_f, lam)
    gradP = (1.0 - q) / q * r_f ** (lam - 1.0)
    a_f = fn(w_mean)
    lhs = float(np.dot(w_f * n_f * m_f, dprod**2))
    t1 = float(np.dot(w_f * n_f ** (2 * q - 1.0) * m_f, dfn(w_mean) ** 2 * dw**2))
    t2 = float(np.dot(w_f * n_f * m_f, a_f**2 * gradP**2) / (1.0 - q))
    n_c = n_at(grid.centers)
    t3 = float(np.dot(grid.volumes * a_c**2 * n_c**q, weight_m1(grid.centers, lam, N, q)))
    return lhs, t1, t2, t3


def ibp_identity_residual(w, alpha, s: StationaryState) -> float:
    lhs, t1, t2, t3 = ibp_terms(w, alpha, s)
    return abs(lhs - (t1 + t2 - t3)) / (1.0 + abs(lhs))
