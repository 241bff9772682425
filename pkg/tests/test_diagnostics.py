import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fastdiff.core import ModelParams, Profile, build_grid, total_mass, validate_params
from fastdiff.diagnostics import (
    CSV_COLUMNS,
    fisher_information,
    free_energy,
    ibp_identity_residual,
    named_map,
    phi_functionals,
    project_mean_zero,
    psi_q_forms,
    record,
    relative_entropy,
    sandwich_bounds,
    weight_m,
    weight_m1,
    weighted_l2,
)
from fastdiff.errors import MassMismatch, MassNotZero, ParameterError
from fastdiff.evolve import max_stable_dt, step
from fastdiff.stationary import solve_h_star


def _bump(s, amp, k=1.0):
    r = s.grid.centers
    n = s.density * (1.0 + amp * np.cos(k * r) * np.exp(-r * r / 8.0))
    n *= total_mass(s.profile) / np.dot(n, s.grid.volumes)
    return Profile(s.grid, n)


def test_relative_entropy_zero_at_state(drift_07, meanfield_07):
    p, s = drift_07
    assert relative_entropy(s.profile, s) == 0.0
    assert weighted_l2(s.profile, s) == 0.0
    p, s, K, _ = meanfield_07
    assert relative_entropy(s.profile, s, kernel=K) == pytest.approx(0.0, abs=1e-15)


@given(st.floats(-0.6, 0.6), st.floats(0.2, 3.0))
def test_relative_entropy_matches_free_energy_gap(drift_07, amp, k):
    """Drift: F[u] - F[N] equals the Bregman form when the masses agree."""
    p, s = drift_07
    u = _bump(s, amp, k)
    rel = relative_entropy(u, s)
    assert rel >= 0
    assert rel == pytest.approx(free_energy(u, p) - free_energy(s.profile, p), rel=1e-7, abs=1e-13)


@given(st.floats(-0.6, 0.6), st.floats(0.2, 3.0))
def test_meanfield_relative_entropy_is_free_energy_gap(meanfield_07, amp, k):
    p, s, K, _ = meanfield_07
    u = _bump(s, amp, k)
    gap = free_energy(u, p, K) - free_energy(s.profile, p, K)
    assert relative_entropy(u, s, kernel=K) == pytest.approx(gap, rel=1e-6, abs=1e-13)


@given(st.floats(-0.7, 0.7), st.floats(0.2, 3.0))
def test_sandwich(drift_07, amp, k):
    _, s = drift_07
    lo, val, hi = sandwich_bounds(_bump(s, amp, k), s)
    assert lo <= val * (1 + 1e-12) + 1e-300
    assert val <= hi * (1 + 1e-12) + 1e-300


def test_mass_mismatch(drift_07):
    _, s = drift_07
    with pytest.raises(MassMismatch):
        relative_entropy(s.profile.scaled(1.01), s)


def test_fisher_vanishes_at_state(drift_07, meanfield_07):
    p, s = drift_07
    assert fisher_information(s.profile, p) < 1e-20
    p, s, K, _ = meanfield_07
    assert fisher_information(s.profile, p, K) < 1e-20


@pytest.mark.parametrize("which", ["drift", "meanfield"])
def test_semidiscrete_dissipation(drift_07, meanfield_07, which):
    """(F(u + dt du) - F(u))/dt + I(u) = O(dt)."""
    if which == "drift":
        p, s = drift_07
        K = None
    else:
        p, s, K, _ = meanfield_07
    u = _bump(s, 0.5)
    dt0 = 0.5 * max_stable_dt(u, p, K)
    f0, i0 = free_energy(u, p, K), fisher_information(u, p, K)
    defects = [abs((free_energy(step(u, p, K, dt), p, K) - f0) / dt + i0) for dt in (dt0, dt0 / 2, dt0 / 4)]
    assert defects[1] < 0.6 * defects[0] and defects[2] < 0.6 * defects[1]
    assert defects[2] < 1e-2 * i0


def test_fisher_face_rules_agree_on_smooth_data(drift_07):
    p, s = drift_07
    u = _bump(s, 0.3)
    a = fisher_information(u, p, face="upwind")
    b = fisher_information(u, p, face="mean")
    assert a == pytest.approx(b, rel=5e-2)
    with pytest.raises(ValueError):
        fisher_information(u, p, face="centred")


def test_record_columns(drift_07):
    p, s = drift_07
    rec = record(0.5, _bump(s, 0.2), p, s)
    assert tuple(rec.as_dict()) == CSV_COLUMNS
    assert rec.t == 0.5 and rec.rel_entropy > 0 and rec.weighted_l2 > 0
    bare = record(0.0, s.profile, p)
    assert np.isnan(bare.rel_entropy) and np.isnan(bare.weighted_l2)


# ---------------------------------------------------------------------------
# weights


def test_weight_m_lambda2():
    r = np.linspace(0, 5, 11)
    assert np.array_equal(weight_m(r, 2.0), np.ones_like(r))
    assert np.allclose(weight_m1(r, 2.0, 3, 0.8), 3 * 0.2 / 0.8)


@pytest.mark.parametrize("dim, lam, q", [(1, 3.0, 0.8), (2, 4.0, 0.9), (3, 3.5, 0.85)])
def test_weight_m1_from_definition(dim, lam, q):
    """M_1 = Laplacian(P) M + grad M . grad P for P = (1-q)/q (h + r^lambda/lambda)."""
    r = np.linspace(0.5, 4.0, 4001)
    dr = r[1] - r[0]
    a = (1 - q) / q
    P = a * (0.7 + r**lam / lam)
    M = 1.0 / (1.0 + r ** (lam - 2))
    dP = np.gradient(P, dr)
    lap = np.gradient(dP, dr) + (dim - 1) / r * dP
    oracle = lap * M + np.gradient(M, dr) * dP
    sl = slice(5, -5)
    assert np.allclose(weight_m1(r, lam, dim, q)[sl], oracle[sl], rtol=1e-4)


def test_phi_functionals_constant_and_scaling(drift_07):
    _, s = drift_07
    one = np.ones(s.grid.size)
    phi1, phi2 = phi_functionals(one, s)
    assert phi2 == 0.0 and phi1 > 0
    f = np.sin(s.grid.centers)
    a1, a2 = phi_functionals(f, s)
    b1, b2 = phi_functionals(3 * f, s)
    assert b1 == pytest.approx(9 * a1) and b2 == pytest.approx(9 * a2)


# ---------------------------------------------------------------------------
# linearized forms


def test_psi_forms_lambda2(meanfield_07):
    p, s, K, K1 = meanfield_07
    r = s.grid.centers
    g0 = project_mean_zero(np.exp(-r * r) * (1 - r * r / 2), s)
    g1 = r * np.exp(-r * r / 2)
    f = psi_q_forms((g0, g1), s, K, K1)
    res = f.residuals()
    assert res["q1_scaled"] < 1e-12
    assert res["q1_printed"] > 0.1
    assert res["interaction"] < 1e-12
    assert res["q2"] < 1e-3 and res["q2_printed"] < 1e-3
    assert f.psi1 > 0 and f.psi2 > 0 and f.psi3 > 0


def test_psi_forms_mean_check(meanfield_07):
    p, s, K, K1 = meanfield_07
    with pytest.raises(MassNotZero):
        psi_q_forms((np.ones(s.grid.size), None), s, K, K1)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_psi_forms_quadratic(meanfield_07, a, b):
    """Every form is quadratic: Q(c g) = c^2 Q(g)."""
    p, s, K, K1 = meanfield_07
    r = s.grid.centers
    g0 = project_mean_zero(np.exp(-r * r) * np.cos(r), s)
    g1 = r * np.exp(-r * r / 2)
    one = psi_q_forms((a * g0, a * g1), s, K, K1)
    two = psi_q_forms((b * a * g0, b * a * g1), s, K, K1)
    for name in ("psi1", "psi2", "psi3", "q1", "q2", "q2_printed"):
        assert getattr(two, name) == pytest.approx(b * b * getattr(one, name), rel=1e-9, abs=1e-14)


def test_named_maps():
    f, df = named_map("h_2")
    x = np.array([0.5, 1.0, 2.0])
    assert np.allclose(f(x), x - 1) and np.allclose(df(x), 1.0)
    f, df = named_map("h_q", 0.7)
    assert f(1.0) == 0.0 and df(1.0) == 1.0
    f, _ = named_map("h_1")
    assert f(np.e) == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        named_map("h_q")
    with pytest.raises(ParameterError):
        named_map("sqrt")


def test_ibp_identity_converges():
    p = validate_params(ModelParams(2, 3.0, 0.85))
    res = []
    for m in (256, 512):
        s = solve_h_star(p, build_grid(2, 15.0, m))
        w = 1.0 + 0.3 * np.exp(-s.grid.centers**2)
        res.append(ibp_identity_residual(w, "h_2", s))
    assert res[1] < res[0] / 3 and res[1] < 1e-3
