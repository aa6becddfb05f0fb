import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loewner_lab.conformal import ConformalMap, HullSpec, Mobius, PlanarCurve, hausdorff, segment_chord
from loewner_lab.energy import chordal_energy
from loewner_lab.errors import HullHit, InvalidInput, NotSimple, StepTooLarge
from loewner_lab.loewner import (DrivingFunction, compute_driving, flow_state, flow_taylor, image_driving,
                                 read_driving, solve_forward, write_driving)


def zero(T=1.0, n=1000):
    return DrivingFunction(np.linspace(0, T, n + 1), np.zeros(n + 1))


def test_zero_driving_traces_vertical_slit():
    tr = solve_forward(zero())
    assert abs(tr.points[-1] - 2j) < 1e-2
    assert np.max(np.abs(tr.points.real)) < 1e-12
    assert abs(solve_forward(zero(0.25)).points[-1] - 1j) < 1e-2


def test_tip_matches_flow_state():
    w = DrivingFunction.from_function(lambda t: 0.4 * np.sin(3 * t), 1.0, 400)
    assert abs(solve_forward(w).points[-1] - flow_state(w).tip) < 1e-12


def test_hydrodynamic_normalization():
    w = DrivingFunction.from_function(lambda t: 0.5 * t, 0.7, 300)
    st_ = flow_state(w)
    R = 1e4
    z = 1j * R
    resid = abs(complex(st_.g(z)) - z - 2 * st_.T / z) * R
    assert resid < 1e-3 * st_.T


def test_step_too_large():
    w = DrivingFunction(np.array([0.0, 1e-4, 2e-4]), np.array([0.0, 0.1, 0.0]))
    with pytest.raises(StepTooLarge):
        solve_forward(w)


def test_segment_driving_is_zero():
    w = compute_driving(segment_chord(2j, 500), 500)
    assert np.max(np.abs(w.values)) < 1e-3
    assert abs(w.T - 1) < 1e-3


def test_compute_driving_rejects_bad_chords():
    with pytest.raises(NotSimple):
        compute_driving(PlanarCurve([0, 1j, 1 + 2j, 2 + 1j, -1 + 1.5j]), 50, check_simple=True)
    with pytest.raises(InvalidInput):
        compute_driving(PlanarCurve([1j, 2j, 3j]), 50)


def test_mobius_chord_energy_stable():
    m = ConformalMap((Mobius(1.0, 0.0, -0.1, 1.0),))
    chord = segment_chord(2j, 20000).mapped(m)
    e1 = chordal_energy(compute_driving(chord, 1000))
    e2 = chordal_energy(compute_driving(chord, 2000))
    assert e1 > 0
    assert abs(e1 - e2) < 0.02 * e2


@pytest.mark.parametrize("lam", [0.5, 2.0, 5.0])
def test_scaling_covariance(lam):
    w = DrivingFunction.from_function(lambda t: 0.6 * np.sin(2 * t), 1.0, 4000)
    chord = solve_forward(w)
    ws = compute_driving(PlanarCurve(lam * chord.points), 2000)
    expect = lam * w(ws.times / lam**2)
    assert np.max(np.abs(ws.values - expect)) < 5e-3 * lam


def test_round_trip_trace_hausdorff():
    w = DrivingFunction.from_function(lambda t: 0.3 * np.sin(4 * t), 1.0, 20000)
    chord = solve_forward(w)
    back = solve_forward(compute_driving(chord, 2000))
    assert hausdorff(back.points, chord.points) < 1e-2


def test_capacity_additivity():
    a = DrivingFunction.from_function(lambda t: t, 0.4, 40)
    b = DrivingFunction.from_function(lambda t: -t * t, 0.6, 60)
    c = a.concatenate(b)
    assert c.T == a.T + b.T
    assert len(c) == len(a) + len(b) - 1


def test_driving_file_round_trip(tmp_path):
    w = DrivingFunction.from_function(lambda t: np.cos(t) - 1, 1.0, 50)
    p = tmp_path / "w.drv"
    write_driving(p, w)
    back = read_driving(p)
    assert np.array_equal(back.times, w.times) and np.array_equal(back.values, w.values)
    p.write_text("0,0\n0,1\n")
    with pytest.raises(InvalidInput):
        read_driving(p)


@given(st.lists(st.floats(-0.05, 0.05), min_size=3, max_size=30))
@settings(max_examples=30, deadline=None)
def test_driving_invariants_accept_valid(increments):
    w = np.concatenate([[0.0], np.cumsum(increments)])
    d = DrivingFunction(np.linspace(0, 1, len(w)), w)
    assert d.oscillation() >= 0 and d.T == 1.0
    assert np.array_equal(d.refine(3)(d.times), d.values)


def test_image_driving_initial_slope():
    hull = HullSpec.semidisk(2, 1)
    flow = flow_taylor(zero(0.01, 1000), hull, 0.01)
    img = flow.image
    psi = hull.uniformizer
    _, d1, d2, _ = (complex(v).real for v in psi.jet(0.0))
    assert abs(img.values[0] - psi(0.0).real) < 1e-15
    # in the chord's capacity time the slope is -3 psi''(0); a(t) grows like psi'(0)^2 t.
    # The first zipper steps under-resolve the slope, so read it at t = 1e-3.
    k = 100
    slope_t = (img.values[k] - img.values[0]) / flow.times[k]
    assert abs(slope_t - (-3 * d2)) < 0.02 * abs(3 * d2)
    assert abs(img.times[k] / flow.times[k] - d1**2) < 0.02


def test_far_hull_is_identity():
    w = DrivingFunction.from_function(lambda t: 0.3 * t, 1.0, 500)
    img = image_driving(w, HullSpec.semidisk(2, 1e-4), 1.0)
    assert np.max(np.abs(img.values - w(img.times))) < 1e-4


def test_image_energy_two_pipelines():
    hull = HullSpec.semidisk(2, 1)
    w = zero(1.0, 4000)
    e_img = chordal_energy(image_driving(w, hull, 1.0))
    mapped = solve_forward(w).mapped(hull.uniformizer)
    shifted = PlanarCurve(mapped.points - mapped.points[0])
    e_zip = chordal_energy(compute_driving(shifted, 2000))
    assert abs(e_img - e_zip) < 0.02 * e_zip


def test_capacity_from_derivative_matches_zipper():
    flow = flow_taylor(zero(1.0, 2000), HullSpec.semidisk(2, 1), 1.0)
    assert abs(flow.capacity_from_derivative() - flow.image.T) < 1e-3 * flow.image.T


def test_hull_hit():
    w = DrivingFunction.from_function(lambda t: 3 * t, 1.0, 200)
    with pytest.raises(HullHit):
        image_driving(w, HullSpec.semidisk(2.2, 1.8), 1.0)
