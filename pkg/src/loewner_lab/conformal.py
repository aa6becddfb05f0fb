"""Plane geometry primitives and composable elementary conformal maps.

Every map is a finite composition of closed-form stages. Each stage knows its
value and first three derivatives, so the composition gets exact derivatives
(Faa di Bruno up to order three) and an exact Schwarzian (cocycle rule)
without any finite differencing.

Arrays of complex numbers are the working currency; :class:`ComplexPoint`
is only used at API boundaries where the point at infinity must be
representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .errors import BranchError, DegenerateError, DomainError, InvalidInput, NotSimple

__all__ = [
    "ComplexPoint", "INF", "Stage", "Mobius", "CenteredVerticalSlit",
    "InverseVerticalSlit", "SqrtOpening", "PolynomialDisk", "JoukowskiHull",
    "ConformalMap", "HullSpec", "PlanarCurve", "apply", "derivatives",
    "schwarzian", "sqrt_upper", "read_curve", "write_curve",
    "winding_number", "hausdorff", "resample_arclength", "circle", "segment_chord",
]


@dataclass(frozen=True)
class ComplexPoint:
    re: float = 0.0
    im: float = 0.0
    at_infinity: bool = False

    def __post_init__(self):
        if not self.at_infinity and not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise InvalidInput("ComplexPoint components must be finite; use INF for infinity")

    @classmethod
    def from_complex(cls, z) -> "ComplexPoint":
        z = complex(z)
        return cls(z.real, z.imag)

    def __complex__(self):
        if self.at_infinity:
            raise DomainError("the point at infinity has no finite coordinates")
        return complex(self.re, self.im)


INF = ComplexPoint(0.0, 0.0, at_infinity=True)


def sqrt_upper(u, ref):
    """Square root of ``u`` on the branch taking values in the closed upper half-plane.

    On the real axis (where both roots are real) the root whose sign matches
    ``Re(ref)`` is chosen; this selects the side of a slit a boundary point
    belongs to.
    """
    u = np.asarray(u, dtype=complex)
    s = np.sqrt(u)
    ref = np.broadcast_to(np.asarray(ref, dtype=complex), s.shape)
    tiny = 1e-14 * np.abs(s)
    flip = np.where(np.abs(s.imag) > tiny, s.imag < 0, s.real * ref.real < 0)
    return np.where(flip, -s, s)


class Stage:
    """One elementary map. Subclasses implement ``jet`` (value and three derivatives)."""

    kind = "stage"

    def __call__(self, z):
        return self.jet(z)[0]

    def jet(self, z):
        raise NotImplementedError

    def check_domain(self, z):
        pass

    def at_infinity(self):
        """Image of the point at infinity, or ``None`` if it is infinity again."""
        return None

    def inverse(self) -> "Stage":
        raise NotImplementedError(f"{self.kind} has no closed-form inverse")


@dataclass(frozen=True)
class Mobius(Stage):
    a: complex = 1.0
    b: complex = 0.0
    c: complex = 0.0
    d: complex = 1.0
    kind = "mobius"

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c) == 0:
            raise DegenerateError("Mobius map with ad - bc = 0")

    @classmethod
    def sending(cls, p, q) -> "Mobius":
        """The map z -> (z - p)/(z - q): p goes to 0 and q to infinity."""
        return cls(1.0, -complex(p), 1.0, -complex(q))

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        den = self.c * z + self.d
        det = self.a * self.d - self.b * self.c
        f = (self.a * z + self.b) / den
        f1 = det / den**2
        f2 = -2 * self.c * det / den**3
        f3 = 6 * self.c**2 * det / den**4
        return f, f1, f2, f3

    def check_domain(self, z):
        if self.c != 0 and np.any(np.asarray(z) == -self.d / self.c):
            raise DomainError("Mobius pole: point maps to infinity")

    def at_infinity(self):
        if self.c == 0:
            return None
        return complex(self.a / self.c)

    def inverse(self):
        return Mobius(self.d, -self.b, -self.c, self.a)


@dataclass(frozen=True)
class CenteredVerticalSlit(Stage):
    """Slit-closing map z -> u + sqrt((z - u)^2 + 4 dt).

    Maps H minus the vertical segment [u, u + 2i sqrt(dt)] onto H; the tip
    goes to u and the map is z + 2 dt / z + O(1/z^2) at infinity.
    """
    dt: float
    u: float = 0.0
    kind = "slit"

    def __post_init__(self):
        if not self.dt >= 0:
            raise InvalidInput("slit capacity must be nonnegative")

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        v = z - self.u
        c = 4.0 * self.dt
        s = sqrt_upper(v * v + c, v)
        f1 = v / s
        f2 = c / s**3
        f3 = -3 * c * v / s**5
        return self.u + s, f1, f2, f3

    def check_domain(self, z):
        v = np.asarray(z, dtype=complex) - self.u
        h = 2 * math.sqrt(self.dt)
        on = (v.real == 0) & (v.imag >= 0) & (v.imag <= h)
        if np.any(on):
            raise DomainError("point lies on the slit")

    def inverse(self):
        return InverseVerticalSlit(self.dt, self.u)


@dataclass(frozen=True)
class InverseVerticalSlit(Stage):
    """w -> u + sqrt((w - u)^2 - 4 dt): opens a vertical slit of capacity dt at u."""
    dt: float
    u: float = 0.0
    kind = "inverse_slit"

    def __post_init__(self):
        if not self.dt >= 0:
            raise InvalidInput("slit capacity must be nonnegative")

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        v = z - self.u
        c = -4.0 * self.dt
        s = sqrt_upper(v * v + c, v)
        f1 = v / s
        f2 = c / s**3
        f3 = -3 * c * v / s**5
        return self.u + s, f1, f2, f3

    def check_domain(self, z):
        v = np.asarray(z, dtype=complex) - self.u
        h = 2 * math.sqrt(self.dt)
        if np.any(np.abs(v * v - h * h) == 0):
            raise DomainError("branch point of the slit opening")

    def inverse(self):
        return CenteredVerticalSlit(self.dt, self.u)


@dataclass(frozen=True)
class SqrtOpening(Stage):
    """z -> i sqrt(z) (principal root): C minus the negative axis onto H.

    With ``inverse=True`` the stage is w -> -w^2.
    """
    inverse_: bool = False
    kind = "sqrt"

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        if self.inverse_:
            return -z * z, -2 * z, np.full_like(z, -2.0), np.zeros_like(z)
        r = np.sqrt(z)
        return 1j * r, 0.5j / r, -0.25j / (r * z), 0.375j / (r * z * z)

    def check_domain(self, z):
        if self.inverse_:
            return
        z = np.asarray(z, dtype=complex)
        if np.any(z == 0):
            raise DomainError("sqrt opening is singular at 0")
        if np.any((z.imag == 0) & (z.real < 0)):
            raise BranchError("point lies on the branch cut of the square root")

    def at_infinity(self):
        return None

    def inverse(self):
        return SqrtOpening(not self.inverse_)


@dataclass(frozen=True)
class PolynomialDisk(Stage):
    """Polynomial map sum_k coeffs[k] z^k, e.g. z + c z^2 on the unit disk."""
    coeffs: tuple = (0.0, 1.0)
    kind = "polynomial"

    @classmethod
    def quadratic(cls, c) -> "PolynomialDisk":
        return cls((0.0, 1.0, complex(c)))

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        p = np.polynomial.Polynomial(self.coeffs)
        d1 = p.deriv(1)
        d2 = p.deriv(2) if len(self.coeffs) > 2 else np.polynomial.Polynomial([0.0])
        d3 = p.deriv(3) if len(self.coeffs) > 3 else np.polynomial.Polynomial([0.0])
        return p(z), d1(z) + 0j * z, d2(z) + 0j * z, d3(z) + 0j * z

    def inverse(self):
        raise NotImplementedError("polynomial stages are not inverted in closed form")

    def quadratic_inverse(self, w):
        """Principal inverse of z + c z^2 (the branch with value ~w near 0)."""
        if len(self.coeffs) != 3 or self.coeffs[0] != 0 or self.coeffs[1] != 1:
            raise NotImplementedError("only z + c z^2 has a closed-form inverse")
        c = complex(self.coeffs[2])
        w = np.asarray(w, dtype=complex)
        if c == 0:
            return w
        return 2 * w / (1 + np.sqrt(1 + 4 * c * w))


@dataclass(frozen=True)
class JoukowskiHull(Stage):
    """z -> z + r^2/(z - x0): uniformizer of H minus the half disk |z - x0| <= r."""
    x0: float
    r: float
    inverse_: bool = False
    kind = "joukowski"

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidInput("JoukowskiHull radius must be positive")

    def _forward(self, z):
        v = z - self.x0
        r2 = self.r**2
        return z + r2 / v, 1 - r2 / v**2, 2 * r2 / v**3, -6 * r2 / v**4

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        if not self.inverse_:
            return self._forward(z)
        v = z - self.x0
        s = sqrt_upper(v * v - 4 * self.r**2, v)
        zeta = (z + self.x0 + s) / 2
        _, g1, g2, g3 = self._forward(zeta)
        f1 = 1 / g1
        f2 = -g2 / g1**3
        f3 = (3 * g2**2 - g1 * g3) / g1**5
        return zeta, f1, f2, f3

    def check_domain(self, z):
        z = np.asarray(z, dtype=complex)
        if not self.inverse_ and np.any(z == self.x0):
            raise DomainError("Joukowski pole")
        if self.inverse_ and np.any(np.abs((z - self.x0) ** 2 - 4 * self.r**2) == 0):
            raise DomainError("Joukowski inverse branch point")

    def inverse(self):
        return JoukowskiHull(self.x0, self.r, not self.inverse_)


def _as_array(z):
    if isinstance(z, ComplexPoint):
        return np.asarray(complex(z))
    return np.asarray(z, dtype=complex)


@dataclass(frozen=True)
class ConformalMap:
    """Ordered composition; ``stages[0]`` is applied first."""
    stages: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))

    @classmethod
    def identity(cls) -> "ConformalMap":
        return cls(())

    def then(self, other) -> "ConformalMap":
        """self followed by other (i.e. other o self)."""
        more = other.stages if isinstance(other, ConformalMap) else (other,)
        return ConformalMap(self.stages + tuple(more))

    def inverse(self) -> "ConformalMap":
        return ConformalMap(tuple(s.inverse() for s in reversed(self.stages)))

    def __call__(self, z, check=False):
        if isinstance(z, ComplexPoint) and z.at_infinity:
            return self.at_infinity()
        w = _as_array(z)
        for s in self.stages:
            if check:
                s.check_domain(w)
            w = s(w)
        return w

    def at_infinity(self) -> ComplexPoint:
        cur = INF
        for s in self.stages:
            if cur.at_infinity:
                img = s.at_infinity()
                cur = INF if img is None else ComplexPoint.from_complex(img)
            else:
                s.check_domain(complex(cur))
                cur = ComplexPoint.from_complex(complex(s(complex(cur))))
        return cur

    def jet(self, z, check=False):
        """Value and first three derivatives of the composition at ``z``."""
        w = _as_array(z)
        d1 = np.ones_like(w)
        d2 = np.zeros_like(w)
        d3 = np.zeros_like(w)
        for s in self.stages:
            if check:
                s.check_domain(w)
            w, f1, f2, f3 = s.jet(w)
            d3 = f3 * d1**3 + 3 * f2 * d1 * d2 + f1 * d3
            d2 = f2 * d1**2 + f1 * d2
            d1 = f1 * d1
        return w, d1, d2, d3

    def schwarzian(self, z, check=False):
        """Schwarzian by the cocycle rule S(f o g) = (Sf o g) g'^2 + Sg."""
        w = _as_array(z)
        g1 = np.ones_like(w)
        S = np.zeros_like(w)
        for s in self.stages:
            if check:
                s.check_domain(w)
            w, f1, f2, f3 = s.jet(w)
            S = (f3 / f1 - 1.5 * (f2 / f1) ** 2) * g1**2 + S
            g1 = g1 * f1
        return S

    def schwarzian_direct(self, z):
        _, d1, d2, d3 = self.jet(z)
        return d3 / d1 - 1.5 * (d2 / d1) ** 2


def apply(cmap: ConformalMap, z):
    """Image of ``z``; ComplexPoint in gives ComplexPoint out (INF allowed)."""
    if isinstance(z, ComplexPoint):
        if z.at_infinity:
            return cmap.at_infinity()
        return ComplexPoint.from_complex(complex(cmap(z, check=True)))
    return cmap(z, check=True)


def derivatives(cmap: ConformalMap, z, order=3):
    if order not in (1, 2, 3):
        raise InvalidInput("order must be 1, 2 or 3")
    jet = cmap.jet(z, check=True)
    if np.any(np.abs(jet[1]) == 0):
        raise DegenerateError("first derivative vanishes")
    out = list(jet[1:order + 1])
    if isinstance(z, ComplexPoint):
        return [ComplexPoint.from_complex(complex(v)) for v in out]
    return out


def schwarzian(cmap: ConformalMap, z):
    zz = _as_array(z)
    if np.any(np.abs(cmap.jet(zz, check=True)[1]) == 0):
        raise DegenerateError("first derivative vanishes")
    S = cmap.schwarzian(zz)
    if isinstance(z, ComplexPoint):
        return ComplexPoint.from_complex(complex(S))
    return S


@dataclass(frozen=True)
class HullSpec:
    """A compact hull in H at positive distance from 0.

    ``kind`` is "semidisk" (params x0, r) or "slit" (params x0, h).
    """
    kind: str
    x0: float
    size: float

    def __post_init__(self):
        if self.kind not in ("semidisk", "slit"):
            raise InvalidInput(f"unknown hull kind {self.kind!r}")
        if not self.size > 0:
            raise InvalidInput("hull size must be positive")
        if self.kind == "semidisk" and not self.size < abs(self.x0):
            raise InvalidInput("semidisk hull must stay at positive distance from 0 (r < |x0|)")
        if self.kind == "slit" and self.x0 == 0:
            raise InvalidInput("slit hull must not touch 0")

    @classmethod
    def semidisk(cls, x0, r):
        return cls("semidisk", float(x0), float(r))

    @classmethod
    def vertical_slit(cls, x0, h):
        return cls("slit", float(x0), float(h))

    @property
    def uniformizer(self) -> ConformalMap:
        if self.kind == "semidisk":
            return ConformalMap((JoukowskiHull(self.x0, self.size),))
        return ConformalMap((CenteredVerticalSlit(self.size**2 / 4, self.x0),))

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "semidisk":
            return (np.abs(z - self.x0) <= self.size) & (z.imag >= 0)
        return (z.real == self.x0) & (z.imag >= 0) & (z.imag <= self.size)

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "semidisk":
            v = z - self.x0
            # nearest point of the closed half disk
            d_disk = np.maximum(np.abs(v) - self.size, 0.0)
            d_base = np.hypot(np.maximum(np.abs(v.real) - self.size, 0.0), v.imag)
            return np.where(v.imag >= 0, d_disk, d_base)
        y = np.clip(z.imag, 0, self.size)
        return np.hypot(z.real - self.x0, z.imag - y)

    def boundary_points(self, n=256):
        """Boundary of the hull inside the closed half-plane, as a polyline."""
        if self.kind == "semidisk":
            th = np.linspace(0, np.pi, n)
            return self.x0 + self.size * np.exp(1j * th)
        return self.x0 + 1j * np.linspace(0, self.size, n)


class PlanarCurve:
    """Polyline in the plane; ``closed`` curves store each point once."""

    def __init__(self, points, closed=False, check_simple=False):
        pts = np.asarray(points, dtype=complex).ravel()
        if closed and len(pts) > 1 and pts[0] == pts[-1]:
            pts = pts[:-1]
        if len(pts) < 3:
            raise InvalidInput("a curve needs at least 3 points")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("curve points must be finite")
        if np.any(np.diff(pts) == 0) or (closed and pts[0] == pts[-1]):
            raise InvalidInput("consecutive curve points must be distinct")
        pts.setflags(write=False)
        self.points = pts
        self.closed = bool(closed)
        if check_simple and not self.is_simple():
            raise NotSimple("curve has a self-intersection")

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PlanarCurve(n={len(self)}, closed={self.closed})"

    def vertices(self):
        """Vertices with the closing point repeated for closed curves."""
        if self.closed:
            return np.append(self.points, self.points[0])
        return self.points

    def length(self):
        return float(np.abs(np.diff(self.vertices())).sum())

    def is_simple(self) -> bool:
        v = self.vertices()
        return not _has_crossing(v, closed=self.closed)

    def mapped(self, cmap: ConformalMap, check_simple=False) -> "PlanarCurve":
        return PlanarCurve(cmap(self.points), self.closed, check_simple)


def _orient(a, b, c):
    return np.sign((b.real - a.real) * (c.imag - a.imag) - (b.imag - a.imag) * (c.real - a.real))


def _has_crossing(v, closed):
    p, q = v[:-1], v[1:]
    m = len(p)
    for i in range(m - 2):
        j0 = i + 2
        j1 = m - 1 if (closed and i == 0) else m
        if j0 >= j1:
            continue
        a, b = p[i], q[i]
        c, d = p[j0:j1], q[j0:j1]
        o1, o2 = _orient(a, b, c), _orient(a, b, d)
        o3, o4 = _orient(c, d, a), _orient(c, d, b)
        proper = (o1 * o2 < 0) & (o3 * o4 < 0)
        if np.any(proper):
            return True
        # collinear overlaps / touching
        for o, pt, s0, s1 in ((o1, c, a, b), (o2, d, a, b)):
            hit = (o == 0) & _on_segment(s0, s1, pt)
            if np.any(hit):
                return True
        for o, pt in ((o3, a), (o4, b)):
            hit = (o == 0) & _on_segment(c, d, pt)
            if np.any(hit):
                return True
    return False


def _on_segment(a, b, p):
    return ((np.minimum(a.real, b.real) <= p.real) & (p.real <= np.maximum(a.real, b.real))
            & (np.minimum(a.imag, b.imag) <= p.imag) & (p.imag <= np.maximum(a.imag, b.imag)))


def winding_number(curve, z):
    """Winding number of a closed polyline around each point of ``z``."""
    v = curve.vertices() if isinstance(curve, PlanarCurve) else np.append(curve, curve[0])
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    d = v[None, :] - z[:, None]
    ang = np.angle(d[:, 1:] / d[:, :-1])
    return np.rint(ang.sum(axis=1) / (2 * np.pi)).astype(int)


def hausdorff(a, b) -> float:
    a = np.column_stack([np.real(a), np.imag(a)])
    b = np.column_stack([np.real(b), np.imag(b)])
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def resample_arclength(points, n, closed=False):
    """``n`` points equally spaced in arc length along a polyline.

    Open curves keep both endpoints; closed curves start at ``points[0]`` and
    do not repeat it.
    """
    pts = np.asarray(points, dtype=complex)
    if closed:
        pts = np.append(pts, pts[0])
    seg = np.abs(np.diff(pts))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if closed:
        targets = np.linspace(0, s[-1], n + 1)[:-1]
    else:
        targets = np.linspace(0, s[-1], n)
    re = np.interp(targets, s, pts.real)
    im = np.interp(targets, s, pts.imag)
    return re + 1j * im


def read_curve(path) -> PlanarCurve:
    closed = False
    pts = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.replace(" ", "").lower().startswith("closed="):
                closed = line.split("=", 1)[1].strip().lower() == "true"
                continue
            try:
                re_s, im_s = line.split(",")
                pts.append(complex(float(re_s), float(im_s)))
            except ValueError as exc:
                raise InvalidInput(f"{path}:{lineno}: expected 're,im'") from exc
    return PlanarCurve(pts, closed=closed)


def write_curve(path, curve: PlanarCurve, comment: str | None = None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        if curve.closed:
            fh.write("closed=true\n")
        for z in curve.points:
            fh.write(f"{z.real:.17g},{z.imag:.17g}\n")


def circle(n=512, center=0.0, radius=1.0, phase=0.0) -> PlanarCurve:
    th = phase + 2 * np.pi * np.arange(n) / n
    return PlanarCurve(center + radius * np.exp(1j * th), closed=True)


def segment_chord(top=2j, n=200) -> PlanarCurve:
    """Straight chord from 0 to ``top``."""
    return PlanarCurve(np.linspace(0, 1, n) * complex(top))


def as_points(z: Sequence) -> np.ndarray:
    return np.asarray([complex(p) for p in z])
