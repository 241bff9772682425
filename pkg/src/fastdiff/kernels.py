"""Sphere-averaged power-law interaction kernels on a radial grid.

For V(x) = |x|^lambda / lambda and radial arguments r = |x|, s = |y| the
convolution with a radial density reduces to a kernel k(r, s), the mean of
V(r e - s w) over unit vectors w.  For the l = 1 harmonic the kernel picks up
the extra factor cos(theta).  In one dimension the "sphere" is {+1, -1} and the
mean is a two-point average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Profile, RadialGrid
from .errors import GridMismatch, QuadratureFailure

DEFAULT_ORDER = 64
_ROW_BLOCK = 256


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    k_pot: np.ndarray
    k_force: np.ndarray
    grid: RadialGrid
    lam: float
    mode: int = 0
    order: int = DEFAULT_ORDER


def angular_rule(dim, order=DEFAULT_ORDER):
    """Nodes cos(theta_k) and normalized weights of the polar-angle average.

    Gauss-Legendre in theta on [0, pi] with the sin^(N-2) Jacobian folded into
    the weights, rescaled so the weights sum to one.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    theta = 0.5 * np.pi * (x + 1.0)
    w = w * np.sin(theta) ** (dim - 2)
    w = w / w.sum()
    return np.cos(theta), w


def _pair_values(r, s, lam, dim, order, mode):
    """Potential and r-derivative kernels for rows r against columns s."""
    r = r[:, None]
    s = s[None, :]
    if dim == 1:
        dm = np.abs(r - s)
        dp = r + s
        sgn = np.sign(r - s)
        pot_m, pot_p = dm**lam / lam, dp**lam / lam
        f_m = sgn * dm ** (lam - 1.0)
        f_p = dp ** (lam - 1.0)
        if mode == 0:
            return 0.5 * (pot_m + pot_p), 0.5 * (f_m + f_p)
        return 0.5 * (pot_m - pot_p), 0.5 * (f_m - f_p)

    cos_t, wts = angular_rule(dim, order)
    pot = np.zeros(np.broadcast(r, s).shape)
    force = np.zeros_like(pot)
    rr, ss = r * r + s * s, 2.0 * r * s
    for c, wk in zip(cos_t, wts):
        d2 = np.maximum(rr - ss * c, 0.0)
        fac = wk * (c if mode == 1 else 1.0)
        pot += fac * d2 ** (0.5 * lam) / lam
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (r - s * c) * d2 ** (0.5 * lam - 1.0)
        g = np.where(d2 > 0, g, 0.0)
        force += fac * g
    return pot, force


def assemble_kernel(grid: RadialGrid, lam: float, order: int = DEFAULT_ORDER, mode: int = 0):
    """Dense potential/force kernels over grid centers.

    ``k_pot[i, j]`` approximates the sphere average of V(r_i e - r_j w) and
    ``k_force[i, j]`` its derivative in r_i.  ``mode=1`` gives the l = 1
    projections (weighted by cos theta).
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if mode not in (0, 1):
        raise ValueError("mode must be 0 or 1")
    c = grid.centers
    m = c.size
    pot = np.empty((m, m))
    force = np.empty((m, m))
    for start in range(0, m, _ROW_BLOCK):
        stop = min(start + _ROW_BLOCK, m)
        p_blk, f_blk = _pair_values(c[start:stop], c, lam, grid.dim, order, mode)
        pot[start:stop] = p_blk
        force[start:stop] = f_blk
    if not (np.all(np.isfinite(pot)) and np.all(np.isfinite(force))):
        raise QuadratureFailure("non-finite kernel values")
    # the exact kernel is symmetric; remove quadrature asymmetry bit-for-bit
    pot = 0.5 * (pot + pot.T)
    pot.setflags(write=False)
    force.setflags(write=False)
    return KernelMatrix(pot, force, grid, float(lam), mode, order)


def _weights(K: KernelMatrix, u):
    if isinstance(u, Profile):
        if not K.grid.same_as(u.grid):
            raise GridMismatch("kernel and profile live on different grids")
        dens = u.density
    else:
        dens = np.asarray(u, dtype=float)
        if dens.shape != (K.grid.size,):
            raise GridMismatch(f"array of shape {dens.shape} does not match the kernel grid")
    return dens * K.grid.volumes


def convolve_potential(K: KernelMatrix, u) -> np.ndarray:
    """(V * u)(r_i) on cell centers."""
    return K.k_pot @ _weights(K, u)


def convolve_force(K: KernelMatrix, u) -> np.ndarray:
    """Radial derivative of V * u at cell centers."""
    return K.k_force @ _weights(K, u)


def interaction_energy(K: KernelMatrix, u, w) -> float:
    """Double integral of |x-y|^lambda u(x) w(y) (bilinear, exactly symmetric)."""
    a = _weights(K, u)
    b = _weights(K, w)
    val = 0.5 * (a @ (K.k_pot @ b) + b @ (K.k_pot @ a))
    return float(K.lam * val)
