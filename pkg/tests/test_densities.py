import csv
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad as scipy_quad

from traceineq.densities import (
    QuadratureError,
    beta,
    beta_cdf_tail,
    beta_table,
    integrate_beta,
    make_quadrature,
    tail_constant,
)

BETA_REF = Path(__file__).parent / "data" / "beta_reference.csv"


def reference_rows():
    with BETA_REF.open() as fh:
        return [(float(r["theta"]), float(r["t"]), float(r["beta"])) for r in csv.DictReader(fh)]


@pytest.mark.parametrize("theta,value", [(0, 0.785398), (0.25, 0.828427), (0.5, 1.0), (0.75, 1.60948)])
def test_peak_values(theta, value):
    assert beta(theta, 0.0) == pytest.approx(value, abs=1e-5)


def test_closed_forms_at_peak():
    assert beta(0, 0) == pytest.approx(math.pi / 4, rel=1e-15)
    assert beta(0.5, 0) == pytest.approx(1.0, rel=1e-15)
    assert beta(0.25, 0) == pytest.approx(2 * (math.sqrt(2) - 1), rel=1e-15)


def test_reference_curves():
    rows = reference_rows()
    assert len(rows) == 4 * 121
    ref = np.array([r[2] for r in rows])
    got = np.array([beta(th, t) for th, t, _ in rows])
    assert np.abs(got - ref).max() <= 1e-4


def test_rejects_theta_out_of_range():
    for th in (-0.1, 1.1):
        with pytest.raises(ValueError):
            beta(th, 0.0)
    with pytest.raises(ValueError):
        beta(1.0, 0.0)


@given(st.floats(0, 0.999), st.floats(-40, 40))
@settings(max_examples=200, deadline=None)
def test_even_and_positive(theta, t):
    assert beta(theta, t) == beta(theta, -t)
    assert beta(theta, t) > 0


def test_large_t_no_overflow():
    for th in (0.0, 0.3, 0.9):
        v = beta(th, 1e4)
        assert np.isfinite(v) and v >= 0.0


def test_theta_zero_limit():
    t = np.linspace(-5, 5, 201)
    assert np.abs(beta(1e-8, t) - beta(0, t)).max() <= 1e-6


@pytest.mark.parametrize("theta", [0.0, 0.2, 0.5, 0.7, 0.95])
def test_exact_tail_against_scipy(theta):
    for T in (0.5, 2.0, 5.0):
        ref, _ = scipy_quad(lambda t: beta(theta, t), T, np.inf, epsabs=1e-14, epsrel=1e-12)
        assert beta_cdf_tail(theta, T) == pytest.approx(2 * ref, rel=1e-8, abs=1e-15)


@pytest.mark.parametrize("theta", [0.0, 0.3, 0.6, 0.9, 0.99])
def test_tail_bound_dominates_exact_tail(theta):
    c, t0 = tail_constant(theta)
    for T in np.linspace(max(t0, 0.01), 8, 40):
        assert beta_cdf_tail(theta, T) <= c * math.exp(-math.pi * T) * (1 + 1e-12)


def test_normalization_sweep():
    for k in range(10):
        rule = make_quadrature(k / 10, 1e-10)
        assert abs(rule.density_weights.sum() - 1) <= 1e-8
        assert rule.tail_bound <= 5e-11


def test_normalization_theta_09_tol_1e8():
    rule = make_quadrature(0.9, 1e-8)
    assert abs(rule.normalization() - 1) <= 1e-8


def test_dirac_rule():
    rule = make_quadrature(1.0)
    assert rule.nodes.tolist() == [0.0]
    assert rule.density_weights.tolist() == [1.0]
    assert integrate_beta(1.0, lambda t: 3 * t + 2, rule).value == 2.0


@pytest.mark.parametrize("tol", [0.0, 1e-15, 1e-2, 0.5])
def test_tolerance_range(tol):
    with pytest.raises(ValueError):
        make_quadrature(0.0, tol)


def test_panel_cap():
    with pytest.raises(QuadratureError):
        make_quadrature(0.5, 1e-12, max_panels=4)


def test_panels_respect_width():
    rule = make_quadrature(0.0, 1e-10)
    assert rule.truncation / (rule.panels / 2) <= 0.5 + 1e-15


def test_integrate_constant_and_odd():
    r = integrate_beta(0.3, lambda t: 1.0)
    assert r.value == pytest.approx(1.0, abs=1e-10)
    assert abs(integrate_beta(0.3, lambda t: t).value) <= 1e-10


def test_characteristic_function_of_beta0():
    # int beta_0(t) cos(w t) dt = w / sinh(w)
    for w in (0.3, 1.0, 2.0):
        r = integrate_beta(0.0, lambda t: np.cos(w * t), vectorized=True)
        assert r.value == pytest.approx(w / math.sinh(w), abs=1e-10)


def test_scalar_log_kernel_identity():
    x, y = 1.0, math.e
    r = integrate_beta(0.0, lambda t: (y / x) ** (0.5j * t) / math.sqrt(x * y), vectorized=True)
    assert r.value.real == pytest.approx(math.log(y / x) / (y - x), abs=1e-10)
    assert r.value.real == pytest.approx(0.581977, abs=1e-6)


def test_integrate_matrix_valued():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    r = integrate_beta(0.5, lambda t: A * np.cos(t))
    assert r.value.shape == (2, 2)
    ref, _ = scipy_quad(lambda t: beta(0.5, t) * np.cos(t), -np.inf, np.inf)
    assert np.allclose(r.value, A * ref, atol=1e-9)


def test_integrate_nan_is_reported():
    with pytest.raises(QuadratureError):
        integrate_beta(0.0, lambda t: np.nan)


def test_error_certificate():
    rule = make_quadrature(0.0, 1e-6)
    r = integrate_beta(0.0, lambda t: 5.0, rule)
    assert r.error == pytest.approx(5 * rule.tail_bound)


def test_wrong_rule_theta():
    with pytest.raises(ValueError):
        integrate_beta(0.2, lambda t: 1.0, make_quadrature(0.3))


def test_beta_table_grid():
    rows = beta_table(0.0, -2, 2, 0.05)
    assert len(rows) == 81
    assert rows[0][0] == pytest.approx(-2)
    assert rows[40][1] == pytest.approx(math.pi / 4)
