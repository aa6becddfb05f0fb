import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loewner_lab.conformal import (ConformalMap, Mobius, PlanarCurve, PolynomialDisk, circle,
                                   resample_arclength, segment_chord, winding_number)
from loewner_lab.energy import (chordal_energy, chordal_energy_in_domain, equipotential, loop_energy,
                                wp_integral)
from loewner_lab.errors import InvalidInput
from loewner_lab.loewner import DrivingFunction, compute_driving, flow_state

GAMMA_02 = ConformalMap((PolynomialDisk.quadratic(0.2),))


def gamma(c, n=8192):
    return equipotential(ConformalMap((PolynomialDisk.quadratic(c),)), 0.0, n)


def test_exact_chordal_energies():
    assert chordal_energy(DrivingFunction(np.linspace(0, 3, 11), np.zeros(11))) == 0.0
    w = DrivingFunction.from_function(lambda t: 1.5 * t, 2.0, 7)
    assert chordal_energy(w) == pytest.approx(2.25, abs=1e-14)


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=20), st.integers(2, 5))
@settings(max_examples=40, deadline=None)
def test_refinement_of_piecewise_linear_is_exact(vals, k):
    w = DrivingFunction(np.linspace(0, 1, len(vals) + 1), np.concatenate([[0.0], vals]))
    assert chordal_energy(w.refine(k)) == pytest.approx(chordal_energy(w), rel=1e-10, abs=1e-12)


@given(st.floats(0.05, 0.95))
@settings(max_examples=20, deadline=None)
def test_truncation_monotone(frac):
    w = DrivingFunction.from_function(lambda t: np.sin(3 * t), 1.0, 200)
    assert chordal_energy(w.restrict(frac)) <= chordal_energy(w) + 1e-12


def test_geodesic_in_domain_is_zero():
    assert chordal_energy_in_domain(segment_chord(2j, 400), ConformalMap.identity(), 400) < 1e-6


def test_scaling_invariance_in_domain():
    arc = PlanarCurve(1 + np.exp(1j * np.linspace(np.pi, 0.2 * np.pi, 4000)))
    e1 = chordal_energy_in_domain(arc, ConformalMap.identity(), 1000)
    e2 = chordal_energy_in_domain(arc, ConformalMap((Mobius(3.0, 0.0, 0.0, 1.0),)), 1000)
    assert e1 > 0
    assert abs(e1 - e2) < 0.01 * e1


def test_arc_energy_two_factorizations():
    # direct, and split at capacity time s: I = I(W on [0, s]) + I(g_s(rest) - W_s)
    arc = PlanarCurve(1 + np.exp(1j * np.linspace(np.pi, 0.2 * np.pi, 20000)))
    n = 2000
    pts = resample_arclength(arc.points, n)
    w = compute_driving(PlanarCurve(pts), n, resample=False)
    direct = chordal_energy(w)
    k = n // 2
    head = DrivingFunction(w.times[:k], w.values[:k])
    g = flow_state(head).g.then(Mobius(1.0, -head.values[-1], 0.0, 1.0))
    split = chordal_energy(head) + chordal_energy_in_domain(PlanarCurve(pts[k - 1:]), g, n)
    assert direct > 0
    assert abs(direct - split) < 0.02 * direct


def test_circle_loop_energy_zero():
    for root in (0, 3000):
        r = loop_energy(circle(8192), root=root)
        assert r.value < 1e-2 and r.converged


def test_mobius_circle_loop_energy_zero():
    c = circle(8192).mapped(ConformalMap((Mobius(1.0, 0.3, 0.2, 1.0),)))
    assert loop_energy(c).value < 1e-2


def test_loop_energy_minimality_and_monotone():
    vals = [loop_energy(gamma(c)).value for c in (0.0, 0.1, 0.2, 0.3)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_loop_energy_root_and_mobius_invariance():
    g = gamma(0.2)
    ref = loop_energy(g).value
    for root in (1000, 4000, 6000):
        assert abs(loop_energy(g, root=root).value - ref) < 0.05 * ref
    for lam in (0.5, 2.0):
        img = PlanarCurve(lam * g.points + (1 + 1j), closed=True)
        assert abs(loop_energy(img).value - ref) < 0.05 * ref


def test_loop_energy_matches_fine_reference():
    # frozen fine-grid value: n = 8000, eps schedule down to 1e-3, 65536 vertices
    e_ref = 0.0228351
    assert abs(loop_energy(gamma(0.2)).value - e_ref) < 0.05 * e_ref


def test_loop_energy_report_json():
    rep = loop_energy(gamma(0.1, 4096), n=1000)
    assert '"converged": true' in rep.to_json()


def test_loop_energy_input_checks():
    with pytest.raises(InvalidInput):
        loop_energy(segment_chord())
    with pytest.raises(InvalidInput):
        loop_energy(circle(4096), eps_schedule=(0.01, 0.02))
    with pytest.warns(UserWarning):
        loop_energy(circle(256), n=1000)


def test_equipotentials():
    eq = equipotential(ConformalMap.identity(), 0.5, 256)
    assert np.allclose(np.abs(eq.points), 0.5)
    outer = equipotential(GAMMA_02, 0.0, 512)
    inner = equipotential(GAMMA_02, 0.1, 512)
    assert np.all(np.abs(winding_number(outer, inner.points)) == 1)
    with pytest.raises(InvalidInput):
        equipotential(GAMMA_02, 1.0)


def test_wp_integral():
    assert wp_integral(ConformalMap.identity()).value == 0.0
    a = 0.3
    auto = ConformalMap((Mobius(1.0, -a, -a, 1.0),))
    v1, v2 = wp_integral(auto, n=32).value, wp_integral(auto, n=64).value
    assert v2 > 0 and abs(v1 - v2) < 0.01 * v2
    f = GAMMA_02
    diffs = []
    for eps in (0.2, 0.1, 0.05):
        fe = ConformalMap((Mobius(1 - eps, 0.0, 0.0, 1.0),) + f.stages)
        diffs.append(wp_integral(f, g=fe).value)
    assert np.isfinite(wp_integral(f).value)
    assert diffs[0] > diffs[1] > diffs[2]
