"""Energy change under hull removal and the Brownian loop mass.

Removing SemiDisk(2, 1) from H changes the energy of the vertical slit by
3 log psi'(0) plus 12 times the Brownian loop mass of loops meeting both
the slit and the hull. The mass comes from a deterministic Schwarzian
integral and, independently, from Monte Carlo.
"""
import numpy as np

from loewner_lab.conformal import HullSpec
from loewner_lab.loewner import DrivingFunction
from loewner_lab.loops import CompactSet, MCParams, brownian_mass, schwarzian_bridge_mass
from loewner_lab.verify import verify_chordal_restriction


def main():
    w = DrivingFunction(np.linspace(0, 1, 2001), np.zeros(2001))
    hull = HullSpec.semidisk(2, 1)
    rep = verify_chordal_restriction(w, hull, 1.0)
    print(f"energy change {rep.lhs:.5f}  predicted {rep.rhs:.5f}  pass={rep.passed}")
    b = schwarzian_bridge_mass(w, hull, 1.0)
    est = brownian_mass(CompactSet.segment(0j, 2j), CompactSet.hull(hull), "H", MCParams(n=50_000, seed=1))
    print(f"loop mass: Schwarzian {b:.4f}  Monte Carlo {est.mean:.4f} +- {est.stderr:.4f}")


if __name__ == "__main__":
    main()
