import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fastdiff.errors import NonPositiveValues, ParameterError, TooFewSamples
from fastdiff.rates import MIN_SAMPLES, DecayKind, classify_decay, fit_decay


@given(st.floats(0.05, 5.0), st.floats(0.1, 10.0))
def test_exponential_recovered(mu, kappa):
    t = np.linspace(0, 4, 40)
    fit = fit_decay(t, kappa * np.exp(-mu * t), window=(0, 4))
    assert fit.rate == pytest.approx(mu, rel=1e-9)
    assert fit.prefactor == pytest.approx(kappa, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0) and fit.decaying


@given(st.floats(0.1, 4.0), st.floats(0.1, 10.0))
def test_algebraic_recovered(mu, kappa):
    t = np.linspace(0, 200, 60)
    fit = fit_decay(t, kappa * (1 + t) ** -mu, "algebraic")
    assert fit.rate == pytest.approx(mu, rel=1e-9)
    assert fit.kind is DecayKind.ALGEBRAIC


def test_classification():
    t = np.linspace(0, 200, 101)
    best, fits = classify_decay(t, 3.0 * (1 + t) ** -1.5)
    assert best is DecayKind.ALGEBRAIC
    assert fits[DecayKind.EXPONENTIAL].r_squared < fits[DecayKind.ALGEBRAIC].r_squared - 1e-3
    t = np.linspace(0, 10, 101)
    best, _ = classify_decay(t, np.exp(-2 * t) * (1 + 0.01 * np.sin(t)))
    assert best is DecayKind.EXPONENTIAL


def test_default_window_is_last_half():
    t = np.linspace(0, 10, 40)
    y = np.where(t < 5, np.exp(-5 * t), np.exp(-25 + 5) * np.exp(-t))
    fit = fit_decay(t, y)
    assert fit.rate == pytest.approx(1.0, rel=1e-9)
    assert fit.samples == 20 and fit.window[0] >= 5


def test_floor_drops_plateau():
    t = np.linspace(0, 20, 81)
    y = np.maximum(np.exp(-3 * t), 1e-14)
    with_floor = fit_decay(t, y, window=(0, 20), floor=1e-12)
    assert with_floor.rate == pytest.approx(3.0, rel=1e-9)
    assert fit_decay(t, y, window=(0, 20)).rate < 2.5


def test_errors():
    t = np.linspace(0, 1, MIN_SAMPLES - 1)
    with pytest.raises(TooFewSamples):
        fit_decay(t, np.exp(-t), window=(0, 1))
    t = np.linspace(0, 1, 30)
    y = np.exp(-t)
    y[-1] = 0.0
    with pytest.raises(NonPositiveValues):
        fit_decay(t, y)
    with pytest.raises(ParameterError):
        fit_decay(t, y[:-1])
    with pytest.raises(ValueError):
        fit_decay(t, np.exp(-t), kind="power")


def test_kind_parse():
    assert DecayKind.parse(" Exponential ") is DecayKind.EXPONENTIAL
    assert DecayKind.parse(DecayKind.ALGEBRAIC) is DecayKind.ALGEBRAIC
