"""Acceptance criteria 1 to 12. Each test prints one PASS/FAIL line."""
import numpy as np
import pytest

from conftest import record
from loewner_lab.conformal import ConformalMap, HullSpec, Mobius, PlanarCurve, PolynomialDisk, circle
from loewner_lab.energy import chordal_energy, equipotential, loop_energy
from loewner_lab.loewner import DrivingFunction, compute_driving, solve_forward
from loewner_lab.loops import (CompactSet, Domain, MassConfig, MCParams, brownian_mass, coupled_masses,
                               schwarzian_bridge_mass, synthetic_mass)
from loewner_lab.verify import (verify_chordal_restriction, verify_cutoff, verify_loop_restriction,
                                verify_two_domain)

pytestmark = pytest.mark.slow

E_REF_02 = 0.0228351  # frozen fine-grid loop energy of Gamma_0.2
N_DENSE = 8192


def zero(T=1.0, n=2000):
    return DrivingFunction(np.linspace(0, T, n + 1), np.zeros(n + 1))


def gamma(c):
    return equipotential(ConformalMap((PolynomialDisk.quadratic(c),)), 0.0, N_DENSE)


def test_c01_exact_energies():
    e0 = chordal_energy(zero(1.0, 50))
    e1 = chordal_energy(DrivingFunction.from_function(lambda t: 1.5 * t, 2.0, 20))
    ok = e0 == 0.0 and abs(e1 - 2.25) < 1e-12
    assert record("C1 exact energies", ok, f"E(0)={e0} E(1.5t)={e1!r}")


CHORDS = {"sin": lambda t: 0.5 * np.sin(2 * np.pi * t), "lin": lambda t: t, "quad": lambda t: -0.8 * t**2,
          "cos": lambda t: 0.3 * np.cos(3 * t) - 0.3, "tsin": lambda t: 0.6 * t * np.sin(5 * t)}


def test_c02_zipper_round_trip():
    ok, parts = True, []
    for name, f in CHORDS.items():
        w = DrivingFunction.from_function(f, 1.0, 20000)
        tr = solve_forward(w)
        errs = []
        for n in (2000, 4000):
            v = compute_driving(PlanarCurve(tr.points), n)
            errs.append(np.max(np.abs(v.values - f(v.times))))
        good = errs[0] < 5e-2 * w.oscillation() and errs[0] / errs[1] >= 1.5
        ok &= bool(good)
        parts.append(f"{name}:{errs[0] / w.oscillation():.1e}/x{errs[0] / errs[1]:.2f}")
    assert record("C2 zipper round trip", ok, " ".join(parts))


def test_c03_circle_minimality():
    e_s = loop_energy(circle(N_DENSE)).value
    vals = [loop_energy(gamma(c)).value for c in (0.1, 0.2, 0.3)]
    ok = e_s < 1e-2 and all(a < b for a, b in zip(vals, vals[1:])) and min(vals) > e_s
    assert record("C3 circle minimality", ok, f"S1={e_s:.2e} Gamma={[round(v, 5) for v in vals]}")


def test_c04_root_and_mobius_invariance():
    g = gamma(0.2)
    vals = [loop_energy(g, root=r).value for r in (0, 2048, 4096, 6144)]
    for m in (Mobius(1.0, 0.5, 0.0, 2.0), Mobius(1.0, 0.3, 0.2, 1.0)):
        vals.append(loop_energy(g.mapped(ConformalMap((m,)))).value)
    ref = vals[0]
    spread = max(abs(v - ref) for v in vals) / ref
    assert record("C4 root and Mobius invariance", spread < 0.05, f"max rel dev={spread:.2e}")


def test_c05_schwarzian_cross_check():
    hull = HullSpec.semidisk(2, 1)
    est = brownian_mass(CompactSet.segment(0j, 2j), CompactSet.hull(hull), "H",
                        MCParams(n=1_000_000, seed=2024))
    b = schwarzian_bridge_mass(zero(), hull, 1.0)
    ok = abs(est.mean - b) <= 3 * est.stderr
    assert record("C5 Schwarzian cross-check", ok, f"MC={est.mean:.5f}+-{est.stderr:.5f} B={b:.5f}")


def test_c06_chordal_restriction():
    rep = verify_chordal_restriction(zero(), HullSpec.semidisk(2, 1), 1.0)
    ok = rep.passed and abs(rep.residual) < 0.05 * max(abs(rep.lhs), abs(rep.rhs))
    assert record("C6 chordal restriction", ok, f"lhs={rep.lhs:.5f} rhs={rep.rhs:.5f}")


def test_c07_attached_werner_equals_brownian():
    g = CompactSet.segment(0j, 2j)
    k = CompactSet.hull(HullSpec.semidisk(2, 1))
    h = Domain.half_plane()
    ce = coupled_masses([MassConfig((g, k), h), MassConfig((g, k), h, werner=True)], MCParams(n=200_000, seed=7))
    a, b = ce.estimate([1, 0]), ce.estimate([0, 1])
    ok = abs(a.mean - b.mean) <= 3 * np.hypot(a.stderr, b.stderr)
    assert record("C7 attached sets", ok, f"brownian={a.mean:.5f} werner={b.mean:.5f} se={a.stderr:.5f}")


def test_c08_werner_conformal_invariance():
    # two disjoint circles in H and their image under the H automorphism z/(1 - 0.2 z)
    k1, k2 = CompactSet.circle(0.4, center=1j), CompactSet.circle(0.4, center=1.5 + 1j)
    m = (1.0, 0.0, -0.2, 1.0)
    h = Domain.half_plane()
    ce = coupled_masses([MassConfig((k1.pushed(m), k2.pushed(m)), h, werner=True),
                         MassConfig((k1, k2), h, werner=True)], MCParams(n=100_000, seed=7), target=[1, 0])
    a, b = ce.estimate([1, 0]), ce.estimate([0, 1])
    ok = abs(a.mean - b.mean) <= 3 * np.hypot(a.stderr, b.stderr)
    assert record("C8 Werner conformal invariance", ok,
                  f"image={a.mean:.4f}+-{a.stderr:.4f} original={b.mean:.4f}+-{b.stderr:.4f}")


def test_c09_loop_restriction():
    rep = verify_loop_restriction(0.2, params=MCParams(n=10_000, seed=9))
    ok = rep.passed and rep.extras["shrink_within_budget"]
    assert record("C9 loop restriction", ok,
                  f"lhs={rep.lhs:.5f} rhs={rep.rhs:.3f}+-{rep.rhs_err:.3f} shrink={rep.extras['shrink_change']:.3f}")


def test_c10_cutoff_renormalization():
    reps, series = verify_cutoff(0.2, params=MCParams(n=20_000, seed=10), reference=E_REF_02)
    ok = all(r.passed for r in reps) and series["trend_toward_reference"]
    rhs = " ".join(f"{e}:{v:.3f}" for e, v in zip(series["eps"], series["rhs"]))
    assert record("C10 cut-off renormalization", ok, f"rhs {rhs} se~{reps[-1].rhs_err:.3f}")


def test_c11_synthetic_unbiased():
    est, exact = synthetic_mass(0.3 + 0.2j, 0.5, 0.1, 2.0, (-1.0, 1.0, -1.0, 1.0), MCParams(n=200_000, seed=11))
    ok = abs(est.mean - exact) < 3 * est.stderr
    assert record("C11 synthetic target", ok, f"MC={est.mean:.5f}+-{est.stderr:.5f} exact={exact:.5f}")


def test_c12_determinism():
    h = HullSpec.semidisk(2, 1)
    p = MCParams(n=2000, seed=12)
    runs = [(verify_chordal_restriction(zero(1.0, 400), h, 1.0, p, route="montecarlo").to_json(),
             verify_two_domain(zero(1.0, 400), h, HullSpec.semidisk(-2, 1), 1.0, p).to_json()) for _ in range(2)]
    assert record("C12 determinism", runs[0] == runs[1])
