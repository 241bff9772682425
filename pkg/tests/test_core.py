import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fastdiff.core import (
    ModelParams,
    Profile,
    Variant,
    alpha_exponent,
    build_grid,
    format_snapshot,
    q_sharp,
    q_star,
    radial_moment,
    read_snapshot,
    sphere_area,
    tail_radius,
    total_mass,
    validate_params,
    write_snapshot,
)
from fastdiff.errors import BadGridSpec, LambdaOutOfRange, ParameterError, QOutOfRange
from fastdiff.stationary import barenblatt_profile

# frozen oracles: surface areas of the unit spheres S^0, S^1, S^2, S^3
SPHERE_AREAS = {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi, 4: 2 * math.pi**2}


@pytest.mark.parametrize("dim", sorted(SPHERE_AREAS))
def test_sphere_area(dim):
    assert sphere_area(dim) == pytest.approx(SPHERE_AREAS[dim], rel=1e-14)


def test_derived_exponents():
    assert q_star(3, 2) == pytest.approx(3 / 5)
    assert q_star(2, 4) == pytest.approx(0.5)
    # alpha < 1 exactly when q > N/(N + lambda)
    assert alpha_exponent(1, 2, 1 / 3) == pytest.approx(1.0)
    assert alpha_exponent(2, 3, 0.8) < 1
    assert q_sharp(3, 2) == pytest.approx(-1.0)
    assert q_sharp(5, 2) == pytest.approx(1 / 3)
    assert q_sharp(2, 2) == 0.0


@pytest.mark.parametrize(
    "params, err",
    [
        (ModelParams(1, 2.0, 1.2), QOutOfRange),
        (ModelParams(1, 2.0, 0.0), QOutOfRange),
        (ModelParams(1, 2.0, 1 / 3), QOutOfRange),  # drift mass threshold N/(N+lambda)
        (ModelParams(1, 1.5, 0.9, "meanfield"), LambdaOutOfRange),
        (ModelParams(3, 2.0, 0.6, "meanfield"), QOutOfRange),  # q_* = 3/5
        (ModelParams(1, -1.0, 0.5), LambdaOutOfRange),
        (ModelParams(0, 2.0, 0.5), ParameterError),
        (ModelParams(1, 2.0, 0.5, mass=-1.0), ParameterError),
    ],
)
def test_validate_rejects(params, err):
    with pytest.raises(err):
        validate_params(params)


def test_validate_pins_meanfield_mass():
    p = validate_params(ModelParams(1, 2.0, 0.7, "meanfield", mass=3.0))
    assert p.mass == 1.0 and p.variant is Variant.MEANFIELD


@pytest.mark.parametrize("spec", [(0, 1.0, 10), (1, 0.0, 10), (1, math.inf, 10), (1, 1.0, 0), (1, 1.0, 2.5)])
def test_build_grid_rejects(spec):
    with pytest.raises(BadGridSpec):
        build_grid(*spec)


@given(
    dim=st.integers(1, 4),
    radius=st.floats(0.1, 100.0),
    cells=st.integers(1, 300),
)
def test_grid_volumes_sum_to_ball(dim, radius, cells):
    g = build_grid(dim, radius, cells)
    ball = sphere_area(dim) * radius**dim / dim
    assert g.volumes.sum() == pytest.approx(ball, rel=1e-12)
    assert np.all(g.volumes > 0)
    assert g.interfaces[0] == 0.0 and g.radius == pytest.approx(radius)
    assert np.allclose(g.centers, 0.5 * (g.interfaces[1:] + g.interfaces[:-1]))


def test_midpoint_moment_second_order():
    """Second moment of the unit-ball indicator converges at rate 2."""
    exact = sphere_area(3) / 5.0
    errs = []
    for m in (32, 64, 128):
        g = build_grid(3, 1.0, m)
        errs.append(abs(radial_moment(Profile(g, np.ones(m)), 2.0) - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_profile_rejects_negative_and_shape():
    g = build_grid(1, 1.0, 4)
    with pytest.raises(ValueError):
        Profile(g, [1.0, -1.0, 1.0, 1.0])
    with pytest.raises(BadGridSpec):
        Profile(g, np.ones(3))


def test_barenblatt_hand_values():
    p = ModelParams(1, 2.0, 0.5)
    g = build_grid(1, 4.0, 4)
    u = barenblatt_profile(p, 1.0, g)
    r = g.centers
    assert np.allclose(u.density, (1 + r**2 / 2) ** -2, rtol=1e-15)


def test_tail_radius_meets_tolerance():
    p = validate_params(ModelParams(1, 2.0, 0.5))
    r = tail_radius(p, tol=1e-6, shift=1.0)
    # tail of (1 + r^2/2)^(-2) over |x| > r in closed form
    theta = math.atan(r / math.sqrt(2))
    t = math.sqrt(2) * (0.5 * math.pi - theta - (r / math.sqrt(2)) / (1 + r * r / 2))
    assert t == pytest.approx(1e-6 * p.mass, rel=1e-6)


def test_snapshot_roundtrip(tmp_path):
    p = ModelParams(2, 3.0, 0.8, "meanfield")
    g = build_grid(2, 3.0, 17)
    u = Profile(g, np.exp(-g.centers), mode1=np.sin(g.centers), meta={"h_or_C": 1.25})
    path = tmp_path / "snap.csv"
    write_snapshot(path, u, p, t=0.5, residual=1e-3)
    v, meta = read_snapshot(path)
    assert np.array_equal(v.density, u.density)
    assert np.array_equal(v.mode1, u.mode1)
    assert meta["variant"] == "meanfield" and float(meta["h_or_C"]) == 1.25
    assert float(meta["t"]) == 0.5
    assert total_mass(v) == pytest.approx(total_mass(u), rel=1e-15)
    assert format_snapshot(v, p, 0.5, h_or_C=1.25, residual=1e-3) == path.read_text()
