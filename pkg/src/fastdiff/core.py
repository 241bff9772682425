"""Model parameters, radial grids, profiles and midpoint quadrature.

Everything here assumes radial symmetry in R^N: a density is stored as cell
averages on a uniform partition of [0, R] and integrals over R^N become sums
against the spherical-shell volumes of the cells.
"""

from __future__ import annotations

import enum
import math
import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

from .errors import BadGridSpec, LambdaOutOfRange, ParameterError, QOutOfRange


class Variant(str, enum.Enum):
    DRIFT = "drift"
    MEANFIELD = "meanfield"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower().replace("-", "").replace("_", ""))


def sphere_area(dim):
    """Area of the unit (N-1)-sphere, 2 pi^(N/2) / Gamma(N/2); S_1 = 2."""
    return 2.0 * math.exp(0.5 * dim * math.log(math.pi) - gammaln(0.5 * dim))


def alpha_exponent(dim, lam, q):
    return (2 * dim - q * (2 * dim + lam)) / (dim * (1.0 - q))


def q_star(dim, lam):
    """Lower end of the Dirac-free mean-field range."""
    if lam == 2:
        return dim / (dim + 2.0)
    return 2.0 * dim / (2.0 * dim + lam)


def q_sharp(dim, lam):
    return (dim - 2.0 - lam) / (dim - 2.0) if dim >= 3 else 0.0


@dataclass(frozen=True)
class ModelParams:
    dim: int
    lam: float
    q: float
    variant: Variant = Variant.DRIFT
    mass: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))

    @property
    def alpha(self):
        return alpha_exponent(self.dim, self.lam, self.q)

    @property
    def q_star(self):
        return q_star(self.dim, self.lam)

    @property
    def q_sharp(self):
        return q_sharp(self.dim, self.lam)

    @property
    def q_finite_mass(self):
        """N/(N+lambda): threshold for finite-mass stationary profiles."""
        return self.dim / (self.dim + self.lam)

    @property
    def is_drift(self):
        return self.variant is Variant.DRIFT

    def echo(self):
        return {
            "N": self.dim,
            "lambda": self.lam,
            "q": self.q,
            "variant": self.variant.value,
            "mass": self.mass,
        }


def validate_params(p: ModelParams) -> ModelParams:
    """Check the admissible parameter ranges and return the parameters.

    Drift requires N/(N+lambda) < q < 1. MeanField requires lambda >= 2 and
    q above q_*(N, lambda); its mass is pinned to 1.
    """
    if int(p.dim) != p.dim or p.dim < 1:
        raise ParameterError(f"dimension must be a positive integer, got {p.dim}")
    if not p.lam > 0:
        raise LambdaOutOfRange(f"lambda must be positive, got {p.lam}")
    if not 0 < p.q < 1:
        raise QOutOfRange(f"q must lie in (0, 1), got {p.q}")
    if not p.mass > 0:
        raise ParameterError(f"mass must be positive, got {p.mass}")
    if p.variant is Variant.DRIFT:
        if p.q <= p.q_finite_mass:
            raise QOutOfRange(
                f"drift needs q > N/(N+lambda) = {p.q_finite_mass:.6g}, got q={p.q}"
            )
    else:
        if p.lam < 2:
            raise LambdaOutOfRange(f"mean-field needs lambda >= 2, got {p.lam}")
        if p.q <= p.q_star:
            raise QOutOfRange(f"mean-field needs q > q_* = {p.q_star:.6g}, got q={p.q}")
        if p.mass != 1.0:
            p = replace(p, mass=1.0)
    return replace(p, dim=int(p.dim))


@dataclass(frozen=True, eq=False)
class RadialGrid:
    dim: int
    interfaces: np.ndarray
    centers: np.ndarray
    volumes: np.ndarray
    areas: np.ndarray  # at every interface, including r=0 and r=R
    dr: float

    @property
    def size(self):
        return self.centers.size

    @property
    def radius(self):
        return float(self.interfaces[-1])

    @property
    def inner_areas(self):
        return self.areas[1:-1]

    @property
    def sphere(self):
        return sphere_area(self.dim)

    def same_as(self, other):
        return self is other or (
            self.dim == other.dim
            and self.size == other.size
            and np.array_equal(self.interfaces, other.interfaces)
        )


def build_grid(dim, radius, cells) -> RadialGrid:
    if int(dim) != dim or dim < 1:
        raise BadGridSpec(f"dimension must be a positive integer, got {dim}")
    if not (radius > 0 and math.isfinite(radius)):
        raise BadGridSpec(f"radius must be positive and finite, got {radius}")
    if int(cells) != cells or cells < 1:
        raise BadGridSpec(f"cell count must be a positive integer, got {cells}")
    dim, cells = int(dim), int(cells)
    edges = np.linspace(0.0, float(radius), cells + 1)
    edges[0] = 0.0
    s = sphere_area(dim)
    pw = edges**dim
    volumes = (s / dim) * np.diff(pw)
    areas = s * edges ** (dim - 1) if dim > 1 else np.full_like(edges, s)
    if dim > 1:
        areas[0] = 0.0
    return RadialGrid(
        dim=dim,
        interfaces=edges,
        centers=0.5 * (edges[1:] + edges[:-1]),
        volumes=volumes,
        areas=areas,
        dr=float(radius) / cells,
    )


@dataclass(eq=False)
class Profile:
    grid: RadialGrid
    density: np.ndarray
    mode1: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        if self.density.shape != (self.grid.size,):
            raise BadGridSpec(
                f"density has shape {self.density.shape}, grid has {self.grid.size} cells"
            )
        if np.any(self.density < 0):
            raise ValueError("density must be nonnegative")
        if self.mode1 is not None:
            self.mode1 = np.asarray(self.mode1, dtype=float)
            if self.mode1.shape != self.density.shape:
                raise BadGridSpec("mode1 must have the same length as density")

    def with_density(self, density, **meta):
        return Profile(self.grid, density, None, {**self.meta, **meta})

    def scaled(self, factor):
        return Profile(
            self.grid,
            self.density * factor,
            None if self.mode1 is None else self.mode1 * factor,
            dict(self.meta),
        )


def total_mass(u: Profile) -> float:
    return float(np.dot(u.density, u.grid.volumes))


def radial_moment(u: Profile, p: float) -> float:
    """Midpoint approximation of the integral of |x|^p u over R^N."""
    if p < 0:
        raise ValueError("moment exponent must be nonnegative")
    if p == 0:
        return total_mass(u)
    return float(np.dot(u.grid.centers**p * u.density, u.grid.volumes))


def integrate_cells(grid: RadialGrid, values) -> float:
    return float(np.dot(values, grid.volumes))


def tail_radius(p: ModelParams, mass=None, tol=1e-10, shift=0.0):
    """Radius beyond which the stationary envelope carries < tol * mass.

    Uses ((1-q)/q (shift + |x|^lambda/lambda))^(1/(q-1)); with shift=0 this is
    the parameter-free bound, with shift=h (or C) the tighter one.
    """
    mass = p.mass if mass is None else mass
    N, lam, q = p.dim, p.lam, p.q
    expo = 1.0 / (1.0 - q)
    if lam * expo <= N:
        raise BadGridSpec("stationary envelope has infinite mass for these parameters")
    log_s = math.log(sphere_area(N))
    a = (1.0 - q) / q

    def log_f(r):
        return log_s + (N - 1) * math.log(r) - expo * math.log(a * (shift + r**lam / lam))

    def log_tail(log_r):
        r = math.exp(log_r)
        if shift == 0.0:
            return (
                log_s - expo * math.log(a / lam) + (N - lam * expo) * log_r - math.log(lam * expo - N)
            )
        ref = log_f(r)
        val, _ = integrate.quad(lambda x: math.exp(log_f(x) - ref), r, np.inf, limit=200)
        return ref + math.log(val)

    target = math.log(tol * mass)
    lo, hi = math.log(1e-3), 0.0
    while log_tail(hi) > target:
        hi += 1.0
        if hi > 30:
            raise BadGridSpec("no finite truncation radius meets the tail tolerance")
    while log_tail(lo) < target and lo > -25:
        lo -= 1.0
    return math.exp(optimize.brentq(lambda x: log_tail(x) - target, lo, hi, xtol=1e-8))


# ---------------------------------------------------------------------------
# snapshot files


def _fmt(x):
    return repr(float(x))


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_snapshot(u: Profile, params: ModelParams | None = None, t=0.0, **extra) -> str:
    meta = {}
    if params is not None:
        meta.update(N=params.dim, **{"lambda": params.lam}, q=params.q, variant=params.variant.value)
    else:
        meta["N"] = u.grid.dim
    meta.update(R=u.grid.radius, M=u.grid.size, t=t)
    meta.update(u.meta)
    meta.update(extra)
    lines = []
    for key, val in meta.items():
        sval = _fmt(val) if isinstance(val, float) else str(val)
        lines.append(f"# {key}={sval}")
    cols = "r,density,mode1" if u.mode1 is not None else "r,density"
    lines.append(f"# columns={cols}")
    for i, r in enumerate(u.grid.centers):
        row = [r, u.density[i]] + ([u.mode1[i]] if u.mode1 is not None else [])
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_snapshot(path, u: Profile, params=None, t=0.0, **extra):
    atomic_write_text(path, format_snapshot(u, params, t, **extra))


def read_snapshot(path):
    """Load a snapshot; returns (Profile, metadata dict of strings)."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            else:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float)
    grid = build_grid(int(meta["N"]), float(meta["R"]), int(meta["M"]))
    if data.shape[0] != grid.size or not np.allclose(data[:, 0], grid.centers, rtol=1e-12):
        raise BadGridSpec(f"{path}: rows do not match the declared uniform grid")
    mode1 = data[:, 2] if data.shape[1] > 2 else None
    return Profile(grid, data[:, 1], mode1), meta


def params_from_meta(meta, mass=None):
    return ModelParams(
        dim=int(meta["N"]),
        lam=float(meta["lambda"]),
        q=float(meta["q"]),
        variant=meta.get("variant", "drift"),
        mass=float(mass if mass is not None else meta.get("mass", 1.0)),
    )
