"""Loop energy of equipotentials of f(z) = z + c z^2.

The round circle has zero energy; deforming it raises the energy, which
does not depend on the root or on a Mobius change of coordinates.
"""
from loewner_lab.conformal import ConformalMap, Mobius, PolynomialDisk, circle
from loewner_lab.energy import equipotential, loop_energy

N = 1000  # zipper resolution; curves carry 4N vertices or more


def main():
    print(f"circle        {loop_energy(circle(4 * N), n=N).value:.5f}")
    for c in (0.1, 0.2, 0.3):
        g = equipotential(ConformalMap((PolynomialDisk.quadratic(c),)), 0.0, 4 * N)
        print(f"Gamma_{c}     {loop_energy(g, n=N).value:.5f}")
    g = equipotential(ConformalMap((PolynomialDisk.quadratic(0.2),)), 0.0, 4 * N)
    print(f"rerooted      {loop_energy(g, root=N, n=N).value:.5f}")
    img = g.mapped(ConformalMap((Mobius(1.0, 0.3, 0.2, 1.0),)))
    print(f"Mobius image  {loop_energy(img, n=N).value:.5f}")


if __name__ == "__main__":
    main()
