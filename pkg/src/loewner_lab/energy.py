"""Loewner energies of chords and Jordan curves, equipotentials and the
Weil-Petersson integral diagnostic."""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .conformal import ConformalMap, Mobius, PlanarCurve, SqrtOpening, resample_arclength
from .errors import DomainError, InvalidInput
from .loewner import DrivingFunction, compute_driving, zip_points

DEFAULT_EPS_SCHEDULE = (0.05, 0.02, 0.01, 0.005)
RESOLUTION_FLOOR = 1e-2
# polygon corners carry energy once the zipper resolves them
MIN_VERTEX_FACTOR = 4
SNAP_TOL = 1e-6


def chordal_energy(w: DrivingFunction) -> float:
    """Dirichlet energy (1/2) int W'^2 of the piecewise-linear interpolant."""
    return float(0.5 * np.sum(np.diff(w.values) ** 2 / np.diff(w.times)))


def chordal_energy_in_domain(curve, phi: ConformalMap, n: int = 2000) -> float:
    """Energy of a chord of (D, a, b), where ``phi`` sends (D, a, b) to (H, 0, inf)."""
    pts = curve.points if isinstance(curve, PlanarCurve) else np.asarray(curve, dtype=complex)
    img = np.array(phi(pts), dtype=complex)
    if np.any(~np.isfinite(img)):
        raise DomainError("uniformizer sends a curve point to infinity")
    # slit maps send a tip to its base with sqrt-amplified roundoff
    if abs(img[0]) < SNAP_TOL * max(1.0, np.abs(img).max()):
        img[0] = 0.0
    return chordal_energy(compute_driving(PlanarCurve(img), n))


@dataclass
class EnergyReport:
    value: float
    resolution: int
    eps: float | None = None
    converged: bool = True
    refinement_ratio: float | None = None
    raw_values: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = asdict(self)
        d["raw_values"] = {f"{k:.6g}": v for k, v in self.raw_values.items()}
        return json.dumps(d, sort_keys=True)


def loop_zipper_terms(points, n: int, root: int = 0):
    """Per-step energy terms of the rooted loop zipper.

    The curve is rolled so the root comes first and resampled to ``n`` points
    by arc length. The segment [z0, z1] is opened by z -> i sqrt((z - z1)/(z - z0)),
    then every further point is flattened by a vertical slit map. Entry j of
    the result is the energy of the step that flattens point j + 2.
    """
    pts = np.roll(np.asarray(points, dtype=complex), -root)
    z = resample_arclength(pts, n, closed=True)
    opening = ConformalMap((Mobius.sending(z[1], z[0]), SqrtOpening()))
    dts, ws = zip_points(opening(z[2:]))
    W = np.concatenate([[0.0], ws])
    return 0.5 * np.diff(W) ** 2 / dts


def loop_energy(curve: PlanarCurve, root: int = 0, eps_schedule=DEFAULT_EPS_SCHEDULE,
                n: int = 2000, tol: float = 0.05) -> EnergyReport:
    """Rooted loop energy as the limit of chord energies with a root arc removed.

    The curve should carry at least MIN_VERTEX_FACTOR * n vertices.
    ``eps_schedule`` lists arc-length fractions of the removed arc; the value
    is a linear (Richardson) extrapolation of the last two entries.
    """
    if not curve.closed:
        raise InvalidInput("loop_energy needs a closed curve")
    eps = np.asarray(eps_schedule, dtype=float)
    if np.any((eps <= 0) | (eps >= 1)) or np.any(np.diff(eps) >= 0):
        raise InvalidInput("eps_schedule must be decreasing in (0, 1)")
    if not 0 <= root < len(curve):
        raise InvalidInput("root index out of range")
    if len(curve) < MIN_VERTEX_FACTOR * n:
        warnings.warn(f"curve has {len(curve)} vertices for n={n}; corner energy may inflate the value",
                      stacklevel=2)
    terms = loop_zipper_terms(curve.points, n, root)
    tail = np.cumsum(terms[::-1])[::-1]
    values = {}
    for e in eps:
        k = max(1, int(round(e * n)))
        if k + 1 > len(tail):
            raise InvalidInput("removed arc swallows the curve")
        # chord starts at point k: energy of the steps flattening points k+1, ...
        values[float(e)] = float(tail[k - 1])
    v = list(values.values())
    if len(v) >= 2:
        e1, e2 = eps[-2], eps[-1]
        extrap = (e1 * v[-1] - e2 * v[-2]) / (e1 - e2)
        ratio = abs(v[-1] - v[-2]) / max(abs(v[-1]), RESOLUTION_FLOOR)
    else:
        extrap, ratio = v[-1], 0.0
    value = max(float(extrap), 0.0)
    return EnergyReport(value=value, resolution=n, eps=float(eps[-1]), converged=bool(ratio <= tol),
                        refinement_ratio=float(ratio), raw_values=values)


def equipotential(f: ConformalMap, eps: float, n: int = 1024) -> PlanarCurve:
    """The curve f((1 - eps) S^1), sampled uniformly in angle."""
    if not 0 <= eps < 1:
        raise InvalidInput("eps must lie in [0, 1)")
    th = 2 * np.pi * np.arange(n) / n
    pts = np.asarray(f((1 - eps) * np.exp(1j * th)), dtype=complex)
    if not np.all(np.isfinite(pts)):
        raise DomainError("map is not finite on the circle")
    return PlanarCurve(pts, closed=True)


@dataclass
class WPResult:
    value: float
    truncation_bound: float
    diverging: bool
    shells: np.ndarray

    def __float__(self):
        return self.value


def _log_derivative(f, z):
    _, f1, f2, _ = f.jet(z)
    return f2 / f1


def wp_integral(f, n: int = 64, shells: int = 40, g=None) -> WPResult:
    """Integral of |f''/f'|^2 over the unit disk.

    Gauss-Legendre in the radius on dyadic shells [1 - 2^-j, 1 - 2^-j-1] and
    the trapezoid rule in angle. With ``g`` given, integrates
    |f''/f' - g''/g'|^2 instead. The last shells are extrapolated
    geometrically to bound the missing rim.
    """
    xg, wg = np.polynomial.legendre.leggauss(n)
    n_th = 4 * n
    th = 2 * np.pi * np.arange(n_th) / n_th
    e = np.exp(1j * th)
    masses = np.empty(shells)
    for j in range(shells):
        a, b = 1 - 2.0**-j, 1 - 2.0 ** -(j + 1)
        r = 0.5 * (b - a) * xg + 0.5 * (b + a)
        z = r[:, None] * e[None, :]
        h = _log_derivative(f, z)
        if g is not None:
            h = h - _log_derivative(g, z)
        ring = (np.abs(h) ** 2).mean(axis=1) * 2 * np.pi
        masses[j] = 0.5 * (b - a) * np.sum(wg * r * ring)
    head = masses[-3:]
    ratios = head[1:] / np.where(head[:-1] > 0, head[:-1], np.inf)
    q = float(ratios.max()) if np.all(np.isfinite(ratios)) else 0.0
    diverging = bool(q >= 1.0)
    bound = float(masses[-1] * q / (1 - q)) if not diverging else float("inf")
    return WPResult(float(masses.sum()), bound, diverging, masses)
