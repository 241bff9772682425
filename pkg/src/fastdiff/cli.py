"""Command-line entry point.

    fastdiff stationary --variant drift --dim 1 --lambda 2 --q 0.5 --mass 2.2214415
    fastdiff evolve --dim 1 --lambda 2 --q 0.7 --t-end 1
    fastdiff hp --dim 3 --q 0.8 --lambda 2
    fastdiff rhls --lambda 3 --dim 2 --q 0.8 --seed 1
    fastdiff positivity --lambda 4 --seed 7 --trials 100
    fastdiff rates --series out/evolve_series.csv

Every command writes delimited results, figures and a ``<command>.manifest``
(key=value, sha256 per artifact) into ``--outdir``.  ``--check`` re-runs the
command in a scratch directory and compares against that manifest.

Exit codes: 0 success, 2 usage or parameter error, 3 numerical failure
(including a failed ``--check``).
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import inequalities as ineq
from . import plotting
from .core import (
    ModelParams,
    Variant,
    atomic_write_text,
    build_grid,
    read_snapshot,
    tail_radius,
    total_mass,
    validate_params,
    write_snapshot,
)
from .errors import (
    ConstraintViolated,
    FastDiffError,
    GridMismatch,
    MassMismatch,
    MassNotZero,
    ParameterError,
    ZeroProfile,
)
from .evolve import (
    SolverConfig,
    dissipation_check,
    drift_initial,
    format_series_csv,
    perturbed_profile,
    read_series_csv,
    run,
    run_pair,
)
from .kernels import assemble_kernel
from .rates import DecayKind, classify_decay, fit_decay
from .stationary import (
    lambda2_constant,
    meanfield_lambda2,
    meanfield_state,
    solve_h_star,
    virial_residual,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

USAGE_ERRORS = (ParameterError, GridMismatch, MassMismatch, MassNotZero, ZeroProfile, ConstraintViolated, OSError)

# model flags each command cannot run without (beyond argparse's own checks)
REQUIRED = {
    "stationary": ("dim", "lam", "q"),
    "evolve": ("dim", "lam", "q"),
    "hp": ("dim", "lam", "q"),
    "rhls": ("dim", "lam", "q", "seed"),
    "positivity": ("lam", "seed"),
    "rates": ("series",),
}


# ---------------------------------------------------------------------------
# manifest


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    echo: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    checksums: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def add(self, name, path, outdir):
        self.artifacts[name] = os.path.relpath(path, outdir)
        self.checksums[name] = sha256_file(path)

    def format(self) -> str:
        lines = [f"command={self.command}"]
        lines += [f"arg.{k}={_text(v)}" for k, v in sorted(self.echo.items())]
        for name in sorted(self.artifacts):
            lines.append(f"artifact.{name}={self.artifacts[name]}")
            lines.append(f"sha256.{name}={self.checksums[name]}")
        lines.append(f"wall_clock_s={self.wall_clock:.6f}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text):
        m = cls(command="")
        for line in text.splitlines():
            key, sep, val = line.partition("=")
            if not sep:
                continue
            if key == "command":
                m.command = val
            elif key == "wall_clock_s":
                m.wall_clock = float(val)
            elif key.startswith("arg."):
                m.echo[key[4:]] = val
            elif key.startswith("artifact."):
                m.artifacts[key[9:]] = val
            elif key.startswith("sha256."):
                m.checksums[key[7:]] = val
        return m


def manifest_path(outdir, command):
    return os.path.join(outdir, f"{command}.manifest")


def verify_manifest(path) -> list:
    """Problems found: missing artifacts or checksum mismatches."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        m = RunManifest.parse(fh.read())
    problems = []
    for name, rel in sorted(m.artifacts.items()):
        full = os.path.join(base, rel)
        if not os.path.exists(full):
            problems.append(f"{name}: {rel} is missing")
        elif sha256_file(full) != m.checksums.get(name):
            problems.append(f"{name}: {rel} does not match its checksum")
    return problems


# ---------------------------------------------------------------------------
# output helpers


def _text(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (np.floating, np.integer)):
        return _text(v.item())
    if isinstance(v, Variant):
        return v.value
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def result_csv(row: dict) -> str:
    """Header plus a single data line."""
    for key in row:
        if "," in key:
            raise ParameterError(f"bad column name {key!r}")
    return ",".join(row) + "\n" + ",".join(_text(v) for v in row.values()) + "\n"


class Outputs:
    """Collects artifacts written by one command."""

    def __init__(self, outdir, figures=True):
        self.outdir = outdir
        self.figures = figures
        self.written = {}
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.outdir, name)

    def text(self, key, name, text):
        atomic_write_text(self.path(name), text)
        self.written[key] = self.path(name)

    def snapshot(self, key, name, u, params, t=0.0, **extra):
        write_snapshot(self.path(name), u, params, t, **extra)
        self.written[key] = self.path(name)

    def figure(self, key, name, fn, *args, **kwargs):
        if not self.figures:
            return
        fn(self.path(name), *args, **kwargs)
        self.written[key] = self.path(name)


# ---------------------------------------------------------------------------
# shared setup


def model_params(args, variant=None) -> ModelParams:
    variant = variant or args.variant
    mass = 1.0 if Variant.parse(variant) is Variant.MEANFIELD else args.mass
    return validate_params(ModelParams(args.dim, args.lam, args.q, variant, mass))


def model_grid(args, p: ModelParams):
    radius = args.radius
    if radius is None:
        shift = lambda2_constant(p.dim, p.q) if p.variant is Variant.MEANFIELD and p.lam == 2 else 0.0
        radius = tail_radius(p, tol=args.tail_tol, shift=shift)
    return build_grid(p.dim, radius, args.cells)


def stationary_state(p, grid, args, kernel=None):
    if p.variant is Variant.DRIFT:
        return solve_h_star(p, grid)
    return meanfield_state(
        p, grid, kernel=kernel, **({} if p.lam == 2 else {"damping": args.damping, "tol": args.fp_tol, "max_iter": args.max_iter})
    )


def echo(args, p: ModelParams | None = None, grid=None):
    row = {"command": args.command}
    if p is not None:
        row.update(p.echo())
    if grid is not None:
        row.update(R=grid.radius, M=grid.size)
    return row


# ---------------------------------------------------------------------------
# commands


def cmd_stationary(args, out: Outputs):
    p = model_params(args)
    grid = model_grid(args, p)
    K = None if p.variant is Variant.DRIFT else assemble_kernel(grid, p.lam)
    s = stationary_state(p, grid, args, K)
    row = echo(args, p, grid)
    row.update(h_or_C=s.h_or_C, residual=s.residual, discrete_mass=total_mass(s.profile))
    extra = {"h_or_C": float(s.h_or_C), "residual": float(s.residual)}
    if K is not None:
        if p.lam == 2:
            row["formula_C"] = s.info["formula_C"]
            extra["formula_C"] = float(s.info["formula_C"])
        for name, (lhs, rhs, gap) in virial_residual(s, K).items():
            row.update({f"{name}_lhs": lhs, f"{name}_rhs": rhs, f"{name}_gap": gap})
    out.snapshot("snapshot", "stationary.csv", s.profile, p, **extra)
    out.text("report", "stationary_report.csv", result_csv(row))
    out.figure("figure", "stationary.png", plotting.plot_profiles, {f"{p.variant.value} state": s.profile})
    return row


def _initial(args, p, s):
    if args.init == "mixture":
        if p.variant is not Variant.DRIFT:
            raise ParameterError("the mixture initial datum is defined for the drift variant")
        return drift_initial(p, s, args.low, args.high, args.theta)
    return perturbed_profile(s, args.delta, args.width)


def cmd_evolve(args, out: Outputs):
    p = model_params(args)
    u0 = None
    if args.initial:
        u0, _ = read_snapshot(args.initial)
        grid = u0.grid
        if grid.dim != p.dim:
            raise GridMismatch(f"initial datum has N={grid.dim}, flags say N={p.dim}")
        if p.variant is Variant.DRIFT:
            p = validate_params(ModelParams(p.dim, p.lam, p.q, p.variant, total_mass(u0)))
    else:
        grid = model_grid(args, p)
    K = None if p.variant is Variant.DRIFT else assemble_kernel(grid, p.lam)
    s = stationary_state(p, grid, args, K)
    if u0 is None:
        u0 = _initial(args, p, s)
    cfg = SolverConfig(
        dt_init=args.dt_init,
        cfl_safety=args.cfl,
        t_end=args.t_end,
        snapshot_every=args.snapshot_every,
        entropy_guard=not args.no_entropy_guard,
        dt_max=args.dt_max,
        max_steps=args.max_steps,
    )
    extra = None
    if args.compare:
        w0, _ = read_snapshot(args.compare)
        if not w0.grid.same_as(grid):
            raise GridMismatch("--compare datum lives on a different grid")
        m = total_mass(s.profile)
        same = all(abs(total_mass(v) - m) <= 1e-8 * m for v in (u0, w0))
        pair = run_pair(u0, w0, p, cfg, K, s if same else None)
        res = pair.first
        extra = {"l1_distance": pair.l1, "min_gap": pair.min_gap}
    else:
        res = run(u0, p, cfg, K, s)
    recs = res.series
    _, defect = dissipation_check(recs)
    mass = np.array([r.mass for r in recs])
    fe = np.array([r.free_energy for r in recs])
    row = echo(args, p, grid)
    row.update(
        t_final=res.t_final,
        accepted_steps=res.accepted_steps,
        rejected_steps=res.rejected_steps,
        mass_drift=float(np.max(np.abs(mass - mass[0])) / mass[0]),
        free_energy_monotone=bool(np.all(np.diff(fe) <= 1e-12 * np.abs(fe[:-1]))),
        dissipation_defect=defect,
        min_density=float(np.min(res.final.density)),
    )
    if extra:
        row["l1_monotone"] = bool(np.all(np.diff(extra["l1_distance"]) <= 1e-12))
        row["min_gap"] = float(np.min(extra["min_gap"]))
    out.text("series", "evolve_series.csv", format_series_csv(recs, extra))
    out.snapshot("final", "evolve_final.csv", res.final, p, res.t_final)
    out.text("report", "evolve_report.csv", result_csv(row))
    cols = {c: np.array([getattr(r, c) for r in recs]) for c in ("t", "free_energy", "rel_entropy", "weighted_l2", "fisher")}
    if extra:
        cols["l1_distance"] = np.asarray(extra["l1_distance"])
    out.figure("series_figure", "evolve_series.png", plotting.plot_series, cols,
               ("free_energy", "rel_entropy", "weighted_l2", "fisher", "l1_distance"))
    out.figure("profile_figure", "evolve_profiles.png", plotting.plot_profiles,
               {"initial": u0, f"t={res.t_final:.4g}": res.final, "stationary": s.profile})
    return row


def cmd_hp(args, out: Outputs):
    p = model_params(args)
    grid = model_grid(args, p)
    K = None if p.variant is Variant.DRIFT or p.lam == 2 else assemble_kernel(grid, p.lam)
    s = stationary_state(p, grid, args, K)
    est = ineq.hp_estimate(s, tol=args.tol, max_iter=args.eig_max_iter, seed=args.seed or 0)
    B = ineq.hp_muckenhoupt(s, anchor=args.anchor)
    inv = 1.0 / est.normalized
    try:
        formula = ineq.hp_constant_formula(p.dim, p.q) if p.lam == 2 else math.nan
    except ParameterError:
        formula = math.nan
    row = echo(args, p, grid)
    row.update(
        constant=est.constant,
        gap=est.gap,
        normalized=est.normalized,
        inverse_normalized=inv,
        formula=formula,
        formula_relerr=abs(est.normalized - formula) / formula if formula == formula else math.nan,
        muckenhoupt_B=B,
        bracket_ok=bool(B <= inv <= 4 * B),
        iterations=est.iterations,
        converged=bool(est.converged),
    )
    out.text("report", "hp.csv", result_csv(row))
    out.figure("figure", "hp_eigenvector.png", plotting.plot_eigenvector, grid, est.vector,
               title=f"normalized gap {est.normalized:.6g}")
    return row


def cmd_rhls(args, out: Outputs):
    p = model_params(args, Variant.MEANFIELD)
    grid = model_grid(args, p)
    use_tail = args.tail == "on" or (args.tail == "auto" and p.lam == 2)
    if use_tail:
        if p.lam != 2:
            raise ParameterError("tail completion needs lambda = 2")
        s = meanfield_lambda2(p, grid, grid_exact=False)
        tail, K = ineq.lambda2_tail(p, s.h_or_C, grid.radius), None
    else:
        K = assemble_kernel(grid, p.lam)
        s = stationary_state(p, grid, args, K)
        tail = None
    res = ineq.rhls_minimality(s, K, args.trials, args.eps, args.seed, args.scale, tail)
    row = echo(args, p, grid)
    row.update(
        seed=args.seed,
        trials=args.trials,
        eps=args.eps,
        tail_completion=use_tail,
        violations=res.violations,
        J0=res.j0,
        J_min=res.j_min,
        relative_margin=res.relative_margin,
    )
    out.text("report", "rhls.csv", result_csv(row))
    out.figure("figure", "rhls_trials.png", plotting.plot_trials, res.values, res.j0, ylabel="J")
    return row


def cmd_positivity(args, out: Outputs):
    dim = args.dim or 1
    p = ModelParams(dim, args.lam, args.q if args.q is not None else 0.9, Variant.MEANFIELD)
    grid = build_grid(dim, args.radius or 10.0, args.cells)
    K = assemble_kernel(grid, p.lam)
    K1 = assemble_kernel(grid, p.lam, mode=1)
    best, pair = ineq.positivity_trials(p, K, K1, args.trials, args.seed)
    row = {"command": args.command, "N": dim, "lambda": p.lam, "R": grid.radius, "M": grid.size,
           "seed": args.seed, "trials": args.trials, "min_value": best, "nonnegative": bool(best >= -1e-10)}
    if args.search:
        found, pair = ineq.counterexample_search(p, K, K1, args.trials, args.seed, args.sweeps)
        row.update(search_min=found, search_result="counterexample" if found < -1e-10 else "inconclusive")
    out.text("report", "positivity.csv", result_csv(row))
    if pair is not None:
        out.figure("figure", "positivity_pair.png", plotting.plot_pair, grid, *pair,
                   title=f"lambda={p.lam:g}: form value {row.get('search_min', best):.4g}")
    return row


def cmd_rates(args, out: Outputs):
    cols = read_series_csv(args.series)
    if args.column not in cols:
        raise ParameterError(f"{args.series} has no column {args.column!r}")
    t, y = cols["t"], cols[args.column]
    window = tuple(args.window) if args.window else None
    if args.kind == "auto":
        best, fits = classify_decay(t, y, window, args.floor)
    else:
        best = DecayKind.parse(args.kind)
        fits = {best: fit_decay(t, y, best, window, args.floor)}
    row = {"command": args.command, "series": os.path.basename(args.series), "column": args.column, "best": best.value}
    for kind, fit in fits.items():
        k = kind.value
        row.update({f"{k}_rate": fit.rate, f"{k}_prefactor": fit.prefactor, f"{k}_r2": fit.r_squared,
                    f"{k}_t0": fit.window[0], f"{k}_t1": fit.window[1], f"{k}_samples": fit.samples})
    row["monotone"] = bool(np.all(np.diff(y) <= 0))
    out.text("report", "rates.csv", result_csv(row))
    out.figure("figure", "rates.png", plotting.plot_fit, t, y, fits, label=args.column)
    return row


COMMANDS = {
    "stationary": cmd_stationary,
    "evolve": cmd_evolve,
    "hp": cmd_hp,
    "rhls": cmd_rhls,
    "positivity": cmd_positivity,
    "rates": cmd_rates,
}


# ---------------------------------------------------------------------------
# parser


def _common(sub):
    g = sub.add_argument_group("run control")
    g.add_argument("--outdir", default=".", help="directory for results, figures and manifest")
    g.add_argument("--config", help="file of key=value lines; flags override it")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--check", action="store_true", help="re-run and compare against the existing manifest")
    g.add_argument("--no-figures", action="store_true")


def _model(sub, variant="drift"):
    g = sub.add_argument_group("model")
    g.add_argument("--dim", type=int, default=None, help="space dimension N")
    g.add_argument("--lambda", dest="lam", type=float, default=None, help="potential/kernel exponent")
    g.add_argument("--q", type=float, default=None, help="diffusion exponent in (0, 1)")
    g.add_argument("--variant", choices=[v.value for v in Variant], default=variant)
    g.add_argument("--mass", type=float, default=1.0, help="drift mass (mean-field mass is 1)")
    g = sub.add_argument_group("grid")
    g.add_argument("--radius", type=float, default=None, help="domain radius R (default: tail rule)")
    g.add_argument("--cells", type=int, default=2048, help="number of cells M")
    g.add_argument("--tail-tol", type=float, default=1e-6, help="mass fraction allowed beyond R")
    g = sub.add_argument_group("fixed point (mean-field, lambda > 2)")
    g.add_argument("--damping", type=float, default=0.5)
    g.add_argument("--fp-tol", type=float, default=1e-10)
    g.add_argument("--max-iter", type=int, default=10000)


def _pair(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers") from None
    return a, b


def build_parser():
    parser = argparse.ArgumentParser(prog="fastdiff", description=__doc__.split("\n")[0])
    subs = parser.add_subparsers(dest="command", required=True)
    table = {}

    sub = subs.add_parser("stationary", help="stationary state, virial report")
    _model(sub)
    _common(sub)
    table["stationary"] = sub

    sub = subs.add_parser("evolve", help="time evolution with diagnostics")
    _model(sub)
    _common(sub)
    g = sub.add_argument_group("initial data")
    g.add_argument("--initial", help="snapshot file; overrides the built-in generators")
    g.add_argument("--init", choices=["mixture", "perturbed"], default="mixture")
    g.add_argument("--low", type=float, default=0.5, help="mixture envelope N_(high h*) <= u <= N_(low h*)")
    g.add_argument("--high", type=float, default=2.0)
    g.add_argument("--theta", type=float, default=None, help="mixture weight (default: mass-matched)")
    g.add_argument("--delta", type=float, default=0.3, help="perturbation amplitude")
    g.add_argument("--width", type=float, default=1.0, help="perturbation width")
    g.add_argument("--compare", help="second initial snapshot; adds the L1 distance column")
    g = sub.add_argument_group("solver")
    g.add_argument("--t-end", type=float, default=1.0)
    g.add_argument("--snapshot-every", type=float, default=0.1)
    g.add_argument("--dt-init", type=float, default=1e-4)
    g.add_argument("--dt-max", type=float, default=math.inf)
    g.add_argument("--cfl", type=float, default=0.5)
    g.add_argument("--max-steps", type=int, default=10_000_000)
    g.add_argument("--no-entropy-guard", action="store_true")
    table["evolve"] = sub

    sub = subs.add_parser("hp", help="Hardy-Poincare constant and Muckenhoupt bracket")
    _model(sub, variant="meanfield")
    _common(sub)
    sub.add_argument("--tol", type=float, default=1e-10, help="inverse iteration tolerance")
    sub.add_argument("--eig-max-iter", type=int, default=500)
    sub.add_argument("--anchor", choices=["origin", "median"], default="median")
    table["hp"] = sub

    sub = subs.add_parser("rhls", help="local minimality of the reverse HLS quotient")
    _model(sub, variant="meanfield")
    _common(sub)
    sub.add_argument("--trials", type=int, default=100)
    sub.add_argument("--eps", type=float, default=1e-2)
    sub.add_argument("--scale", type=float, default=None, help="bump length (default: 90%% mass radius)")
    sub.add_argument("--tail", choices=["auto", "on", "off"], default="auto",
                     help="complete the quotient with the closed-form tail beyond R (lambda = 2)")
    table["rhls"] = sub

    sub = subs.add_parser("positivity", help="sign of the interaction form on constrained pairs")
    sub.add_argument("--lambda", dest="lam", type=float, default=None)
    sub.add_argument("--dim", type=int, default=1)
    sub.add_argument("--q", type=float, default=None, help="recorded only; the form does not depend on q")
    sub.add_argument("--radius", type=float, default=10.0)
    sub.add_argument("--cells", type=int, default=256)
    sub.add_argument("--trials", type=int, default=100)
    sub.add_argument("--search", action="store_true", help="add coordinate descent from the best trial")
    sub.add_argument("--sweeps", type=int, default=20)
    _common(sub)
    table["positivity"] = sub

    sub = subs.add_parser("rates", help="fit exponential and algebraic decay to a series column")
    sub.add_argument("--series", default=None, help="time-series CSV written by evolve")
    sub.add_argument("--column", default="rel_entropy")
    sub.add_argument("--kind", choices=["auto", "exponential", "algebraic"], default="auto")
    sub.add_argument("--window", type=_pair, default=None, help="t_a,t_b")
    sub.add_argument("--floor", type=float, default=None, help="drop samples at or below this value")
    _common(sub)
    table["rates"] = sub
    return parser, table


def _read_config(path):
    cfg = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ParameterError(f"{path}:{n}: expected key=value")
            cfg[key.strip().replace("-", "_")] = val.strip()
    return cfg


def _apply_config(sub, cfg):
    actions = {a.dest: a for a in sub._actions}
    aliases = {"lambda": "lam", "M": "cells", "R": "radius", "N": "dim"}
    defaults = {}
    for key, val in cfg.items():
        dest = aliases.get(key, key)
        act = actions.get(dest)
        if act is None or dest in ("config", "check", "help"):
            sub.error(f"unknown config key {key!r}")
        if isinstance(act, argparse._StoreTrueAction):
            defaults[dest] = val.lower() in ("1", "true", "yes", "on")
        else:
            # argparse converts string defaults with the action's type
            defaults[dest] = val
    sub.set_defaults(**defaults)


def parse_args(argv=None):
    parser, table = build_parser()
    args = parser.parse_args(argv)
    sub = table[args.command]
    if args.config:
        try:
            cfg = _read_config(args.config)
        except OSError as exc:
            sub.error(f"cannot read config: {exc}")
        except ParameterError as exc:
            sub.error(str(exc))
        _apply_config(sub, cfg)
        args = parser.parse_args(argv)
    missing = [d for d in REQUIRED[args.command] if getattr(args, d, None) is None]
    if missing:
        flags = ", ".join("--" + ("lambda" if d == "lam" else d.replace("_", "-")) for d in missing)
        sub.error(f"missing required flag(s): {flags}")
    return args


# ---------------------------------------------------------------------------
# driver


def execute(args, outdir):
    """Run one command into ``outdir``; returns (row, manifest)."""
    out = Outputs(outdir, figures=not args.no_figures)
    start = time.perf_counter()
    row = COMMANDS[args.command](args, out)
    manifest = RunManifest(args.command)
    manifest.echo = {k: v for k, v in vars(args).items() if k not in ("check", "outdir", "config")}
    for key, path in out.written.items():
        manifest.add(key, path, outdir)
    manifest.wall_clock = time.perf_counter() - start
    atomic_write_text(manifest_path(outdir, args.command), manifest.format())
    return row, manifest


def check(args):
    path = manifest_path(args.outdir, args.command)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no manifest at {path}")
    problems = verify_manifest(path)
    with open(path) as fh:
        old = RunManifest.parse(fh.read())
    with tempfile.TemporaryDirectory() as tmp:
        _, new = execute(args, tmp)
    for name, digest in sorted(new.checksums.items()):
        if not new.artifacts[name].endswith(".csv"):
            continue
        if old.checksums.get(name) != digest:
            problems.append(f"{name}: re-run output differs from {old.artifacts.get(name, '(not recorded)')}")
    return problems


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if args.check:
            problems = check(args)
            for msg in problems:
                print(f"check: {msg}", file=sys.stderr)
            print("check ok" if not problems else f"check failed: {len(problems)} problem(s)")
            return EXIT_OK if not problems else EXIT_NUMERIC
        row, _ = execute(args, args.outdir)
    except USAGE_ERRORS as exc:
        print(f"fastdiff {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FastDiffError, ArithmeticError) as exc:
        print(f"fastdiff {args.command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(result_csv(row))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
