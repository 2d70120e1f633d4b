import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from two_end_lab import geometry
from two_end_lab.errors import ChartDomainError, DomainError, ExtractionError
from two_end_lab.geometry import (CatenoidCurve, FermiChart, SampledCurve, TodaCurve,
                                  fermi_forward, fermi_inverse, laplacian_pullback_coeffs,
                                  metric_factors)
from two_end_lab.pde import AxiGrid, ScalarField
from two_end_lab.verify import admissible_points

CURVES = [CatenoidCurve(2.0), CatenoidCurve(6.0, 0.5), TodaCurve(0.1), TodaCurve(1.0)]


def test_catenoid_value():
    assert abs(CatenoidCurve(2.0).f(4.0) - 2.0 * math.acosh(2.0)) < 1e-12


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: repr(c))
def test_derivatives_match_finite_differences(curve):
    r = np.linspace(curve.r_min + 0.5, curve.r_min + 40.0, 17)
    h = 1e-4
    for n, (lo, hi) in enumerate([(curve.f, curve.df), (curve.df, curve.d2f),
                                  (curve.d2f, curve.d3f)]):
        fd = (lo(r + h) - lo(r - h)) / (2 * h)
        scale = max(1.0, np.max(np.abs(hi(r))))
        assert np.max(np.abs(fd - hi(r))) < 1e-6 * scale, n


def test_catenoid_has_zero_mean_curvature_in_3d():
    # meridian z = f(r) of a minimal surface of revolution: f'' / (1 + f'^2) + f' / r = 0
    c = CatenoidCurve(3.0)
    r = np.linspace(3.5, 200.0, 50)
    fp, fpp = c.df(r), c.d2f(r)
    assert np.max(np.abs(fpp / (1 + fp**2) + fp / r)) < 1e-12


def test_domain_errors():
    with pytest.raises(DomainError):
        CatenoidCurve(6.0).f(5.0)
    with pytest.raises(DomainError):
        CatenoidCurve(-1.0)
    with pytest.raises(DomainError):
        TodaCurve(0.0)
    with pytest.raises(DomainError):
        SampledCurve([0, 1, 1, 2], [0, 1, 2, 3])


def test_sampled_curve_reproduces_smooth_curve():
    c = CatenoidCurve(4.0)
    r = np.linspace(5.0, 60.0, 400)
    s = SampledCurve(r, c.f(r))
    q = np.linspace(6.0, 59.0, 101)
    assert np.max(np.abs(s.f(q) - c.f(q))) < 1e-6
    assert np.max(np.abs(s.df(q) - c.df(q))) < 1e-4
    rows = s.to_rows()
    assert rows.shape == (400, 4)


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: repr(c))
def test_metric_identity(curve, rng):
    chart = FermiChart(curve, r_max=200.0)
    r1, z1 = admissible_points(chart, 2000, rng)
    A, B = metric_factors(chart, r1, z1)
    assert np.max(np.abs(A - (1 + curve.df(r1) ** 2) * B**2) / A) < 1e-12


@pytest.mark.parametrize("curve", CURVES, ids=lambda c: repr(c))
def test_round_trip(curve, rng):
    chart = FermiChart(curve, r_max=200.0)
    r1, z1 = admissible_points(chart, 200, rng)
    for a, b in zip(r1, z1):
        x, y = fermi_forward(chart, a, b)
        ra, za = fermi_inverse(chart, x, y)
        assert abs(ra - a) < 1e-10 and abs(za - b) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-0.95, 0.95))
def test_metric_factor_is_the_jacobian(u, v):
    # A is |d X / d r1|^2, which finite differences of the forward map check independently
    chart = FermiChart(CatenoidCurve(3.0), r_max=80.0)
    r1 = 3.5 + u * 70.0
    z1 = v * chart.half_width(r1)
    A, _ = metric_factors(chart, r1, z1)
    h = 1e-6
    xp = np.array(chart.to_cartesian(r1 + h, z1))
    xm = np.array(chart.to_cartesian(r1 - h, z1))
    J = (xp - xm) / (2 * h)
    assert float(J @ J) == pytest.approx(float(A), rel=1e-7)


def test_projection_outside_chart_raises():
    chart = FermiChart(CatenoidCurve(6.0), r_max=100.0)
    with pytest.raises(ChartDomainError):
        fermi_forward(chart, 20.0, 50.0)
    with pytest.raises(ChartDomainError):
        fermi_inverse(chart, 20.0, 80.0)


def test_pullback_coefficients_reproduce_flat_laplacian():
    # independent oracle: u(r, z) = sin(0.3 r) cos(0.2 z) + 0.01 r z, whose flat
    # Laplacian is known exactly, pulled back and differentiated numerically
    chart = FermiChart(CatenoidCurve(3.0), r_max=60.0)

    def u(r, z):
        return np.sin(0.3 * r) * np.cos(0.2 * z) + 0.01 * r * z

    def lap(r, z):
        return -(0.09 + 0.04) * np.sin(0.3 * r) * np.cos(0.2 * z)

    def u1(a, b):
        return u(*chart.to_cartesian(a, b))

    h = 1e-3
    for r1, frac in [(4.0, 0.3), (10.0, -0.5), (25.0, 0.7), (50.0, 0.0)]:
        z1 = frac * chart.half_width(r1)
        co = laplacian_pullback_coeffs(chart, r1, z1)
        d_rr = (u1(r1 + h, z1) - 2 * u1(r1, z1) + u1(r1 - h, z1)) / h**2
        d_zz = (u1(r1, z1 + h) - 2 * u1(r1, z1) + u1(r1, z1 - h)) / h**2
        d_r = (u1(r1 + h, z1) - u1(r1 - h, z1)) / (2 * h)
        d_z = (u1(r1, z1 + h) - u1(r1, z1 - h)) / (2 * h)
        got = co[0] * d_rr + co[1] * d_zz + co[2] * d_r + co[3] * d_z
        assert float(got) == pytest.approx(float(lap(*chart.to_cartesian(r1, z1))), abs=1e-5)


def test_half_width_is_lipschitz_and_bounded():
    chart = FermiChart(CatenoidCurve(6.0), r_max=100.0)
    r = np.linspace(6.0, 100.0, 3000)
    d = chart.half_width(r)
    assert np.all(d <= chart.max_half_width + 1e-12)
    assert np.all(np.abs(np.diff(d)) <= 0.5 * np.diff(r) + 1e-12)


def test_smoothstep_and_cutoff():
    x = np.linspace(-1, 2, 301)
    s = geometry.smoothstep(x)
    assert s[0] == 0 and s[-1] == 1 and np.all(np.diff(s) >= 0)
    chart = FermiChart(CatenoidCurve(6.0), r_max=100.0)
    assert chart.cutoff(50.0, 0.0) == pytest.approx(1.0)
    assert chart.cutoff(50.0, chart.half_width(50.0)) == pytest.approx(0.0)


def _field_from(fn, R=20.0, Z=20.0, h=0.1):
    grid = AxiGrid.from_spacing(R, Z, h)
    RR, ZZ = grid.mesh()
    return ScalarField(grid, fn(RR, ZZ))


def test_extraction_recovers_planted_curve():
    c = CatenoidCurve(2.0)
    fld = _field_from(lambda r, z: np.tanh(z - c.f(np.maximum(r, 2.0)) - 0.5 * (r < 2.0)))
    curve = geometry.nodal_curve_from_field(fld, window=(3.0, 20.0))
    rr = np.linspace(3.0, 20.0, 50)
    assert np.max(np.abs(curve.f(rr) - c.f(rr))) < 5e-3


def test_extraction_reports_missing_columns():
    fld = _field_from(lambda r, z: np.tanh(z - 5.0) + 2.0 * (r > 10.0))
    with pytest.raises(ExtractionError) as err:
        geometry.nodal_curve_from_field(fld, window=(0.0, 20.0))
    assert len(err.value.columns) > 0
