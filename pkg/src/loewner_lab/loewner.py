"""Chordal Loewner evolution with vertical-slit elementary maps.

Forward direction: a sampled driving function is turned into a trace by
composing inverse slit maps. Inverse direction (zipper): each point of a
chord is mapped down to the real line in turn, yielding capacity increments
and driving values. ``image_driving`` and ``flow_taylor`` follow the
conjugated flow psi_t = g~_t o psi o g_t^{-1} of a hull uniformizer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import (CenteredVerticalSlit, ConformalMap, HullSpec, PlanarCurve,
                        resample_arclength, sqrt_upper)
from .errors import (HullHit, InvalidInput, NonFinite, NotSimple, StepTooLarge,
                     TipCollision)

DEFAULT_RATIO_BOUND = 4.0


@dataclass(frozen=True, eq=False)
class DrivingFunction:
    """Samples of W on a capacity grid, piecewise linear in between."""
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        w = np.asarray(self.values, dtype=float).ravel()
        if len(t) != len(w) or len(t) < 2:
            raise InvalidInput("times and values must have the same length >= 2")
        if t[0] != 0:
            raise InvalidInput("times must start at 0")
        if np.any(np.diff(t) <= 0):
            raise InvalidInput("times must be strictly increasing")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(t)):
            raise InvalidInput("driving values must be finite")
        t.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", w)

    @classmethod
    def from_function(cls, fn, T, n):
        t = np.linspace(0.0, T, n + 1)
        return cls(t, np.asarray(fn(t), dtype=float) * np.ones_like(t))

    def __len__(self):
        return len(self.times)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def oscillation(self) -> float:
        return float(self.values.max() - self.values.min())

    def restrict(self, T) -> "DrivingFunction":
        if not 0 < T <= self.T * (1 + 1e-12):
            raise InvalidInput("restriction time outside (0, T]")
        keep = self.times < T - 1e-12 * max(T, 1.0)
        t = np.append(self.times[keep], T)
        return DrivingFunction(t, self(t))

    def refine(self, k: int) -> "DrivingFunction":
        """Insert k - 1 equally spaced samples in every interval (same interpolant)."""
        if k < 1:
            raise InvalidInput("refinement factor must be >= 1")
        s = np.linspace(0, 1, k + 1)[:-1]
        t0, t1 = self.times[:-1], self.times[1:]
        t = (t0[:, None] + np.outer(t1 - t0, s)).ravel()
        t = np.append(t, self.times[-1])
        return DrivingFunction(t, self(t))

    def concatenate(self, other: "DrivingFunction") -> "DrivingFunction":
        """Run ``other`` after ``self`` (other is shifted to start at W(T))."""
        t = np.concatenate([self.times, self.T + other.times[1:]])
        w = np.concatenate([self.values, self.values[-1] - other.values[0] + other.values[1:]])
        return DrivingFunction(t, w)


def read_driving(path) -> DrivingFunction:
    t, w = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                a, b = line.split(",")
                t.append(float(a))
                w.append(float(b))
            except ValueError as exc:
                raise InvalidInput(f"{path}:{lineno}: expected 't,w'") from exc
    return DrivingFunction(np.array(t), np.array(w))


def write_driving(path, w: DrivingFunction, comment=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for a, b in zip(w.times, w.values):
            fh.write(f"{a:.17g},{b:.17g}\n")


def _steps(w: DrivingFunction, substeps: int, ratio_bound):
    fine = w.refine(substeps) if substeps > 1 else w
    dt = np.diff(fine.times)
    dW = np.diff(fine.values)
    if ratio_bound is not None:
        ratio = np.abs(dW) / np.sqrt(dt)
        if np.any(ratio > ratio_bound):
            k = int(np.argmax(ratio))
            raise StepTooLarge(f"|dW|/sqrt(dt) = {ratio[k]:.3g} exceeds {ratio_bound} at step {k}")
    return fine, dt, fine.values[1:]


def _open_slits(z, dts, us):
    """Apply inverse slit maps with parameters (dts[j], us[j]) for j = last .. 0."""
    for dt, u in zip(dts[::-1], us[::-1]):
        v = z - u
        z = u + sqrt_upper(v * v - 4.0 * dt, v)
    return z


def _trace_points(dts, us):
    """Tip positions g_k^{-1}(W_k) for every k, in one triangular sweep."""
    n = len(dts)
    z = us.astype(complex)
    for j in range(n - 1, -1, -1):
        v = z[j:] - us[j]
        z[j:] = us[j] + sqrt_upper(v * v - 4.0 * dts[j], v)
    if not np.all(np.isfinite(z)):
        raise NonFinite("trace computation produced non-finite values")
    return z


def solve_forward(w: DrivingFunction, substeps: int = 1, ratio_bound=DEFAULT_RATIO_BOUND) -> PlanarCurve:
    """Trace of the Loewner chain driven by ``w`` at the sample times of ``w``."""
    if substeps < 1:
        raise InvalidInput("substeps must be >= 1")
    _, dts, us = _steps(w, substeps, ratio_bound)
    tips = _trace_points(dts, us)[substeps - 1::substeps]
    return PlanarCurve(np.concatenate([[complex(w.values[0])], tips]))


@dataclass(frozen=True)
class FlowState:
    T: float
    g: ConformalMap
    tip: complex


def flow_state(w: DrivingFunction, substeps: int = 1, ratio_bound=DEFAULT_RATIO_BOUND) -> FlowState:
    """Mapping-out function g_T as an explicit composition of slit maps."""
    _, dts, us = _steps(w, substeps, ratio_bound)
    g = ConformalMap(tuple(CenteredVerticalSlit(float(dt), float(u)) for dt, u in zip(dts, us)))
    tip = complex(_open_slits(np.array([us[-1]], dtype=complex), dts, us)[0])
    return FlowState(w.T, g, tip)


def zip_points(z, w0=0.0, collision_tol=1e-13):
    """Zipper: flatten the points ``z`` (all in H) one after another.

    Returns the capacity increments and the driving values reached after
    each point.
    """
    z = np.array(z, dtype=complex)
    n = len(z)
    dts = np.empty(n)
    ws = np.empty(n)
    scale = max(float(np.abs(z).max()), 1e-300)
    for k in range(n):
        zeta = z[k]
        if not np.isfinite(zeta):
            raise NonFinite("zipper produced a non-finite image")
        if zeta.imag <= collision_tol * scale:
            if zeta.imag < -collision_tol * scale:
                raise NotSimple(f"point {k} was mapped below the real line (curve not simple?)")
            raise TipCollision(f"point {k} collapsed onto the real line")
        u = zeta.real
        dt = zeta.imag**2 / 4.0
        dts[k], ws[k] = dt, u
        if k + 1 < n:
            v = z[k + 1:] - u
            z[k + 1:] = u + sqrt_upper(v * v + 4.0 * dt, v)
    return dts, ws


def compute_driving(chord: PlanarCurve, n: int, resample: bool = True, check_simple: bool = False,
                    tol=1e-12) -> DrivingFunction:
    """Driving function of a chord from 0 (resampled to ``n`` points by arc length)."""
    pts = chord.points if isinstance(chord, PlanarCurve) else np.asarray(chord, dtype=complex)
    if check_simple and isinstance(chord, PlanarCurve) and not chord.is_simple():
        raise NotSimple("chord has a self-intersection")
    if abs(pts[0]) > tol * max(1.0, float(np.abs(pts).max())):
        raise InvalidInput("chord must start at 0")
    if resample:
        if n < 3:
            raise InvalidInput("n must be >= 3")
        pts = resample_arclength(pts, n)
    dts, ws = zip_points(pts[1:])
    return DrivingFunction(np.concatenate([[0.0], np.cumsum(dts)]), np.concatenate([[0.0], ws]))


@dataclass(frozen=True, eq=False)
class ImageFlow:
    """Conjugated flow of a hull uniformizer along a chord.

    ``psi1, psi2, psi3`` are the derivatives of psi_t at W_t on the grid
    ``times``; ``image`` is the driving function of psi(gamma[0, T]).
    """
    times: np.ndarray
    w: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    image: DrivingFunction
    trace: np.ndarray
    rho: np.ndarray

    @property
    def schwarzian(self):
        return self.psi3 / self.psi1 - 1.5 * (self.psi2 / self.psi1) ** 2

    def capacity_from_derivative(self):
        """a(T) from integrating psi_t'(W_t)^2, to compare with the zipper capacity."""
        return float(np.trapezoid(self.psi1**2, self.times))


def _image_setup(w: DrivingFunction, hull: HullSpec, T):
    wT = w.restrict(T) if T < w.T else w
    dts = np.diff(wT.times)
    us = wT.values[1:]
    trace = _trace_points(dts, us)
    if np.any(hull.distance(trace) <= 0):
        raise HullHit("trace enters the hull")
    psi = hull.uniformizer
    img = psi(trace)
    idts, iws = zip_points(img, collision_tol=1e-14)
    w0 = float(psi(complex(wT.values[0])).real)
    image = DrivingFunction(np.concatenate([[0.0], np.cumsum(idts)]), np.concatenate([[w0], iws]))
    return wT, dts, us, trace, idts, iws, image


def image_driving(w: DrivingFunction, hull: HullSpec, T: float) -> DrivingFunction:
    """Driving function of psi(gamma[0, T]) on its own capacity grid."""
    return _image_setup(w, hull, T)[-1]


def flow_taylor(w: DrivingFunction, hull: HullSpec, T: float, n_circle: int = 32,
                rho_frac: float = 0.4) -> ImageFlow:
    """Derivatives of psi_t at W_t for every grid time.

    psi_t is analytic across the real line near W_t (Schwarz reflection),
    but its slit-map factors are singular exactly at W_t, so the derivatives
    are read off Taylor coefficients from values on a circle of radius rho_t
    around W_t (upper half evaluated through the composition, lower half by
    reflection).
    """
    wT, dts, us, trace, idts, iws, image = _image_setup(w, hull, T)
    n = len(dts)
    psi = hull.uniformizer
    # distance from W_t to the flowed hull g_t(K) sets the admissible radius
    bnd = hull.boundary_points(96).astype(complex)
    dist = np.empty(n + 1)
    dist[0] = np.abs(bnd - wT.values[0]).min()
    for k in range(n):
        v = bnd - us[k]
        bnd = us[k] + sqrt_upper(v * v + 4.0 * dts[k], v)
        dist[k + 1] = np.abs(bnd - us[k]).min()
    rho = rho_frac * dist
    th = np.pi * (np.arange(n_circle) + 0.5) / n_circle
    e = np.exp(1j * th)

    z = us[:, None] + rho[1:, None] * e[None, :]
    for j in range(n - 1, -1, -1):
        v = z[j:] - us[j]
        z[j:] = us[j] + sqrt_upper(v * v - 4.0 * dts[j], v)
    z = psi(z)
    for j in range(n):
        v = z[j:] - iws[j]
        z[j:] = iws[j] + sqrt_upper(v * v + 4.0 * idts[j], v)
    if not np.all(np.isfinite(z)):
        raise NonFinite("flow evaluation produced non-finite values")

    coef = []
    for m in (1, 2, 3):
        c = (z * np.exp(-1j * m * th)[None, :]).real.sum(axis=1) / (n_circle * rho[1:] ** m)
        coef.append(c)
    jet0 = psi.jet(complex(wT.values[0]))
    psi1 = np.concatenate([[jet0[1].real], coef[0]])
    psi2 = np.concatenate([[jet0[2].real], 2 * coef[1]])
    psi3 = np.concatenate([[jet0[3].real], 6 * coef[2]])
    return ImageFlow(wT.times, wT.values, psi1, psi2, psi3, image, trace, rho)
