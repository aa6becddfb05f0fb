import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loewner_lab.conformal import (INF, CenteredVerticalSlit, ComplexPoint, ConformalMap, HullSpec,
                                   InverseVerticalSlit, JoukowskiHull, Mobius, PlanarCurve, PolynomialDisk,
                                   SqrtOpening, apply, circle, derivatives, hausdorff, read_curve,
                                   resample_arclength, schwarzian, write_curve)
from loewner_lab.errors import BranchError, DegenerateError, DomainError, InvalidInput, NotSimple

coef = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


def test_identity_mobius():
    m = ConformalMap((Mobius(),))
    assert complex(apply(m, 1 + 2j)) == 1 + 2j


def test_semidisk_uniformizer_value_and_slope():
    psi = HullSpec.semidisk(2, 1).uniformizer
    assert abs(complex(psi(1j)) - (-0.4 + 0.8j)) < 1e-15
    (d1,) = derivatives(psi, 0.0, order=1)
    assert abs(complex(d1) - 0.75) < 1e-15


def test_slit_closing_on_imaginary_axis():
    g = ConformalMap((CenteredVerticalSlit(0.3),))
    # sqrt((iy)^2 + 4 dt) = i sqrt(y^2 - 4 dt) above the tip
    y = 1.7
    assert abs(complex(g(1j * y)) - 1j * np.sqrt(y * y - 1.2)) < 1e-14


def test_square_schwarzian():
    # z -> z^2 = -(i sqrt z)^2 inverted: use SqrtOpening inverse, w -> -w^2
    sq = ConformalMap((SqrtOpening(True),))
    assert abs(complex(schwarzian(sq, 1.0)) + 1.5) < 1e-14


@given(coef, coef, coef, coef, st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
@settings(max_examples=60, deadline=None)
def test_mobius_schwarzian_vanishes(a, b, c, d, z):
    if abs(a * d - b * c) < 1e-2 or abs(c * z + d) < 0.5:
        return
    m = ConformalMap((Mobius(a, b, c, d),))
    scale = max(1.0, abs(c / (c * z + d)) ** 2)
    assert abs(complex(m.schwarzian(z))) < 1e-12 * scale


@given(st.floats(-1.5, 1.5), st.floats(0.2, 3.0), st.floats(1e-3, 0.5), st.floats(-1, 1))
@settings(max_examples=60, deadline=None)
def test_chain_rule_schwarzian_matches_direct(x, y, dt, u):
    m = ConformalMap((JoukowskiHull(3.0, 1.0), CenteredVerticalSlit(dt, u)))
    z = complex(x, y)
    s1 = complex(m.schwarzian(z))
    s2 = complex(m.schwarzian_direct(z))
    assert abs(s1 - s2) <= 1e-9 * max(1.0, abs(s2))


def test_semidisk_schwarzian_direct_at_zero():
    psi = HullSpec.semidisk(2, 1).uniformizer
    _, d1, d2, d3 = psi.jet(0.0)
    expect = d3 / d1 - 1.5 * (d2 / d1) ** 2
    assert abs(complex(schwarzian(psi, 0.0)) - expect) < 1e-14


def test_derivatives_match_finite_differences():
    m = ConformalMap((Mobius(1.0, 0.3, 0.2, 1.0), JoukowskiHull(2.5, 1.0), CenteredVerticalSlit(0.1, 0.2)))
    z, h = 0.4 + 0.9j, 1e-3
    f = lambda s: complex(m(s))
    fd1 = (f(z - 2 * h) - 8 * f(z - h) + 8 * f(z + h) - f(z + 2 * h)) / (12 * h)
    fd2 = (-f(z - 2 * h) + 16 * f(z - h) - 30 * f(z) + 16 * f(z + h) - f(z + 2 * h)) / (12 * h * h)
    d1, d2, _ = (complex(v) for v in derivatives(m, z))
    assert abs(d1 - fd1) < 1e-6 * abs(d1)
    assert abs(d2 - fd2) < 1e-6 * max(1.0, abs(d2))


@pytest.mark.parametrize("stage", [Mobius(1.0, 2.0, 0.5, 3.0), CenteredVerticalSlit(0.4, 0.3),
                                   InverseVerticalSlit(0.4, -0.2), JoukowskiHull(2.0, 1.0)])
def test_inverse_round_trip(stage):
    m = ConformalMap((stage,))
    z = np.array([0.3 + 2.1j, -1.2 + 0.7j, 2.5 + 3.0j])
    back = m.inverse()(m(z))
    assert np.max(np.abs(back - z)) < 1e-10


def test_domain_and_branch_errors():
    with pytest.raises(DomainError):
        apply(ConformalMap((CenteredVerticalSlit(1.0),)), 1j)
    with pytest.raises(BranchError):
        apply(ConformalMap((SqrtOpening(),)), -1.0 + 0j)
    with pytest.raises(DegenerateError):
        Mobius(1.0, 1.0, 1.0, 1.0)


def test_infinity_flag():
    assert apply(HullSpec.semidisk(2, 1).uniformizer, INF).at_infinity
    p = apply(ConformalMap((Mobius(1.0, 0.0, 1.0, 1.0),)), INF)
    assert not p.at_infinity and complex(p) == 1.0
    with pytest.raises(InvalidInput):
        ComplexPoint(float("nan"), 0.0)


def test_hull_normalization_at_infinity():
    for h in (HullSpec.semidisk(2, 1), HullSpec.vertical_slit(1.5, 0.7)):
        _, d1, _, _ = h.uniformizer.jet(1e5j)
        assert abs(complex(d1) - 1) < 1e-8


def test_hull_validation():
    with pytest.raises(InvalidInput):
        HullSpec.semidisk(1, 1)
    with pytest.raises(InvalidInput):
        HullSpec.vertical_slit(0.0, 1.0)


def test_polynomial_inverse():
    p = PolynomialDisk.quadratic(0.2)
    z = 0.9 * np.exp(1j * np.linspace(0, 6, 7))
    assert np.max(np.abs(p.quadratic_inverse(p(z)) - z)) < 1e-13


def test_simplicity():
    sq = PlanarCurve([0, 1, 1 + 1j, 1j], closed=True, check_simple=True)
    assert sq.is_simple()
    with pytest.raises(NotSimple):
        PlanarCurve([0, 1, 1j, 1 + 1j], closed=True, check_simple=True)
    assert circle(64).is_simple()


def test_curve_invariants():
    with pytest.raises(InvalidInput):
        PlanarCurve([0, 1])
    with pytest.raises(InvalidInput):
        PlanarCurve([0, 1, 1, 2])


def test_curve_file_round_trip(tmp_path):
    c = circle(32, center=0.5 + 0.1j, radius=1 / 3)
    path = tmp_path / "c.curve"
    write_curve(path, c, comment="test")
    back = read_curve(path)
    assert back.closed and np.array_equal(back.points, c.points)
    bad = tmp_path / "bad.curve"
    bad.write_text("0,0\n1;2\n")
    with pytest.raises(InvalidInput):
        read_curve(bad)


def test_resample_and_hausdorff():
    pts = resample_arclength(circle(4000).points, 500, closed=True)
    steps = np.abs(np.diff(np.append(pts, pts[0])))
    assert steps.std() < 1e-6 * steps.mean()
    assert hausdorff(pts, circle(500).points) < 1e-4
