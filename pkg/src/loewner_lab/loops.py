"""Brownian loop and Werner measure masses by importance-sampled Monte Carlo,
and the deterministic Schwarzian route along a Loewner flow.

Loop measure: mu = int_0^inf dt/t int W^t_{x->x} dA(x), whose mass density
in (t, x) is 1/(2 pi t^2). The bridge path of a loop of duration t has
per-coordinate variance ``VAR_SCALE * t``.
"""
from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage import measure

from . import _kernels as K
from .conformal import ComplexPoint, HullSpec, Mobius, PlanarCurve
from .errors import (ResolutionTooCoarse, TailNotDecaying, TruncationDominates,
                     InvalidInput)
from .loewner import DrivingFunction, flow_taylor

# Per-coordinate path variance per unit time. Variance t (generator Delta/2)
# is the value selected by the Schwarzian cross-check (acceptance criterion 5);
# variance 2t would double every mass.
VAR_SCALE = 1.0
DEFAULT_SEED = 20240601
SEED_ENV = "LOEWNER_LAB_SEED"

CURVE, INSIDE, OUTSIDE, SEGMENT = 0, 1, 2, 3
_IDENTITY = (1.0, 0.0, 0.0, 1.0)


def default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    return int(env) if env not in (None, "") else DEFAULT_SEED


# ---------------------------------------------------------------- sets

@dataclass(frozen=True)
class _Item:
    prim: tuple
    mode: int
    needs_test: bool
    test_points: np.ndarray = field(compare=False, hash=False)


def _circle_prim(radius, center=0.0, quad=0.0, pre=_IDENTITY):
    a, b, c, d = pre
    return (0, complex(a), complex(b), complex(c), complex(d), complex(quad), complex(center), complex(radius))


def _mapped_circle_points(radius, center, quad, pre, n):
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    zeta = center + radius * np.exp(1j * th)
    w = zeta + quad * zeta**2
    a, b, c, d = pre
    return (d * w - b) / (a - c * w)


class CompactSet:
    """A compact set (or closed unbounded region) given as a union of items.

    Each item is a level-set primitive with a mode: a curve, the inside or
    outside of a closed curve, or a segment. ``test_points`` sample the
    boundary of each bounded item and drive the outer-boundary test.
    """

    def __init__(self, items, bounded=True, label=""):
        self.items = tuple(items)
        self.bounded = bounded
        self.label = label

    def __repr__(self):
        return f"CompactSet({self.label or len(self.items)})"

    @property
    def boundary_points(self):
        return np.concatenate([it.test_points for it in self.items])

    # constructors
    @classmethod
    def circle(cls, radius=1.0, center=0.0, quad=0.0, pre=_IDENTITY, n=None):
        """The curve Q(center + radius S^1) pulled back by ``pre``, Q(z) = z + quad z^2."""
        pts = _mapped_circle_points(radius, center, quad, pre, n or _n_test(radius))
        it = _Item(_circle_prim(radius, center, quad, pre), CURVE, True, pts)
        return cls([it], True, f"circle(r={radius}, quad={quad})")

    @classmethod
    def disk(cls, center=0.0, radius=1.0, quad=0.0, pre=_IDENTITY, n=None):
        pts = _mapped_circle_points(radius, center, quad, pre, n or _n_test(radius))
        it = _Item(_circle_prim(radius, center, quad, pre), INSIDE, True, pts)
        return cls([it], True, f"disk({center}, {radius})")

    @classmethod
    def segment(cls, p, q, n=None):
        p, q = complex(p), complex(q)
        n = n or max(64, int(abs(q - p) / 0.002))
        pts = p + (q - p) * np.linspace(0, 1, n)
        return cls([_Item((1, p, q, 0j, 0j, 0j, 0j, 0j), SEGMENT, True, pts)], True, f"segment({p}, {q})")

    @classmethod
    def polyline(cls, curve: PlanarCurve):
        """CurveSet of a polygonal curve, one segment item per edge."""
        v = curve.vertices()
        items = []
        for p, q in zip(v[:-1], v[1:]):
            items.extend(cls.segment(p, q, n=max(8, int(abs(q - p) / 0.002))).items)
        return cls(items, True, "polyline")

    @classmethod
    def hull(cls, hull: HullSpec):
        """The hull as a subset of the closed upper half-plane."""
        if hull.kind == "slit":
            return cls.segment(hull.x0, hull.x0 + 1j * hull.size)
        x0, r = hull.x0, hull.size
        n = _n_test(r)
        arc = x0 + r * np.exp(1j * np.pi * (np.arange(n) + 0.5) / n)
        base = np.linspace(x0 - r, x0 + r, n) + 0j
        pts = np.concatenate([arc, base])
        return cls([_Item(_circle_prim(r, x0), INSIDE, True, pts)], True, f"semidisk({x0}, {r})")

    @classmethod
    def annulus_complement(cls, inner, outer, quad=0.0, pre=_IDENTITY):
        """Complement of the image of {inner < |z| < outer} under Q(z) = z + quad z^2,
        pulled back by the Mobius map ``pre``."""
        a = cls.disk(0.0, inner, quad, pre).items[0]
        b = _Item(_circle_prim(outer, 0.0, quad, pre), OUTSIDE, False, np.empty(0, complex))
        s = cls([a, b], False, f"annulus_complement({inner}, {outer}, quad={quad})")
        s.inner_points = a.test_points
        s.outer_points = _mapped_circle_points(outer, 0.0, quad, pre, _n_test(outer))
        return s

    @classmethod
    def exterior(cls, radius, quad=0.0, pre=_IDENTITY):
        """The closed unbounded region outside Q(radius S^1), pulled back by ``pre``."""
        it = _Item(_circle_prim(radius, 0.0, quad, pre), OUTSIDE, False, np.empty(0, complex))
        s = cls([it], False, f"exterior({radius}, quad={quad})")
        s.outer_points = _mapped_circle_points(radius, 0.0, quad, pre, _n_test(radius))
        return s

    def pushed(self, m: Mobius | tuple) -> "CompactSet":
        """Image of the set under the Mobius map m(z) = (a z + b)/(c z + d)."""
        a, b, c, d = (m.a, m.b, m.c, m.d) if isinstance(m, Mobius) else m
        fwd = lambda z: (a * z + b) / (c * z + d)
        # level(new, z) = level(old, m^-1(z)); m^-1 has matrix (d, -b, -c, a)
        inv = (d, -b, -c, a)
        items = []
        for it in self.items:
            if it.prim[0] == 0:
                pa, pb, pc, pd = it.prim[1:5]
                # compose pre o m^-1
                A = pa * inv[0] + pb * inv[2]
                B = pa * inv[1] + pb * inv[3]
                C = pc * inv[0] + pd * inv[2]
                D = pc * inv[1] + pd * inv[3]
                prim = (0, complex(A), complex(B), complex(C), complex(D)) + tuple(it.prim[5:])
            elif it.prim[0] == 1:
                if abs(c) > 0:
                    raise InvalidInput("segments can only be pushed by affine maps")
                prim = (1, complex(fwd(it.prim[1])), complex(fwd(it.prim[2]))) + tuple(it.prim[3:])
            else:
                raise InvalidInput("cannot push a line primitive")
            items.append(_Item(prim, it.mode, it.needs_test, fwd(it.test_points)))
        out = CompactSet(items, self.bounded, f"pushed {self.label}")
        for attr in ("inner_points", "outer_points"):
            if hasattr(self, attr):
                setattr(out, attr, fwd(getattr(self, attr)))
        return out


def _n_test(radius):
    return int(np.clip(2 * np.pi * abs(radius) / 0.002, 256, 8192))


def _extent_points(s: CompactSet):
    pts = s.boundary_points
    if hasattr(s, "outer_points"):
        pts = np.concatenate([pts, s.outer_points])
    return pts


# ---------------------------------------------------------------- domains

@dataclass(frozen=True)
class Domain:
    """A domain as the plane minus finitely many excluded primitives.

    ``constraints`` are (prim, sign): sign +1 keeps the positive side of the
    level function, -1 the negative side, 0 forbids crossing a segment.
    """
    constraints: tuple = ()
    label: str = "C"

    @classmethod
    def plane(cls):
        return cls((), "C")

    @classmethod
    def half_plane(cls):
        return cls((((2, 0j, 0j, 0j, 0j, 0j, 0j, 0j), 1),), "H")

    @classmethod
    def half_plane_minus(cls, *hulls: HullSpec):
        cons = list(cls.half_plane().constraints)
        for h in hulls:
            if h.kind == "semidisk":
                cons.append((_circle_prim(h.size, h.x0), 1))
            else:
                cons.append(((1, complex(h.x0), complex(h.x0 + 1j * h.size), 0j, 0j, 0j, 0j, 0j), 0))
        return cls(tuple(cons), "H minus " + ", ".join(f"{h.kind}({h.x0}, {h.size})" for h in hulls))

    def restricted(self, other: "Domain") -> "Domain":
        """Intersection of two domains."""
        cons = self.constraints + tuple(c for c in other.constraints if c not in self.constraints)
        return Domain(cons, f"{self.label} & {other.label}")


def as_domain(D) -> Domain:
    if isinstance(D, Domain):
        return D
    if D in ("C", "plane", None):
        return Domain.plane()
    if D in ("H", "half_plane"):
        return Domain.half_plane()
    if isinstance(D, HullSpec):
        return Domain.half_plane_minus(D)
    raise InvalidInput(f"unknown domain {D!r}")


# ---------------------------------------------------------------- estimates

@dataclass
class MCParams:
    n: int = 200_000
    seed: int | None = None
    streams: int = 8
    threads: int | None = None
    t_range: tuple | None = None
    t_factors: tuple = (1e-4, 1e4)
    var_scale: float = VAR_SCALE
    delta: float | None = None
    kappa_geom: float = 0.35
    kappa_raster: float = 0.04
    m0: int = 64
    pilot_frac: float = 0.2
    pad: float = 0.5
    max_points: int = 1 << 20

    def resolved_seed(self) -> int:
        return int(self.seed) if self.seed is not None else default_seed()


@dataclass
class MassEstimate:
    mean: float
    stderr: float
    n_samples: int
    n_hits: int
    seed: int
    streams: int = 1
    t_range: tuple = (0.0, 0.0)
    tail_bound: float = 0.0
    stat_stderr: float = 0.0

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class MassConfig:
    sets: tuple
    domain: Domain = Domain.plane()
    werner: bool = False


def _sub_seed(seed, phase, stream):
    return int(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, phase, stream]).generate_state(1)[0])


class _Geometry:
    def __init__(self, configs, params: MCParams):
        prims, prim_idx = [], {}

        def pid(p):
            if p not in prim_idx:
                prim_idx[p] = len(prims)
                prims.append(p)
            return prim_idx[p]

        # identical items share one hit decision per loop
        items, item_idx = [], {}
        for cfg in configs:
            for s in cfg.sets:
                for it in s.items:
                    key = (it.prim, it.mode, it.needs_test)
                    if key not in item_idx:
                        item_idx[key] = len(items)
                        items.append(it)
        cons, cons_idx = [], {}
        for cfg in configs:
            for c in cfg.domain.constraints:
                if c not in cons_idx:
                    cons_idx[c] = len(cons)
                    cons.append(c)
        item_prim = np.array([pid(it.prim) for it in items], dtype=np.int64)
        cons_prim = np.array([pid(c[0]) for c in cons], dtype=np.int64)
        self.prims = np.array(prims, dtype=np.complex128).reshape(len(prims), 8)
        refine = np.ones(len(prims), dtype=np.bool_)
        for c in cons:
            if c[0][0] == 2:
                refine[prim_idx[c[0]]] = False
        self.refine = refine
        self.item_prim = item_prim
        self.item_mode = np.array([it.mode for it in items], dtype=np.int64)
        self.cons_prim = cons_prim
        self.cons_sign = np.array([c[1] for c in cons], dtype=np.int64)
        max_sets = max(len(c.sets) for c in configs)
        max_items = max(len(s.items) for c in configs for s in c.sets)
        cs = -np.ones((len(configs), max_sets, max_items), dtype=np.int64)
        cc = -np.ones((len(configs), max(1, max(len(c.domain.constraints) for c in configs))), dtype=np.int64)
        for i, cfg in enumerate(configs):
            for j, s in enumerate(cfg.sets):
                for k, it in enumerate(s.items):
                    cs[i, j, k] = item_idx[(it.prim, it.mode, it.needs_test)]
            for k, c in enumerate(cfg.domain.constraints):
                cc[i, k] = cons_idx[c]
        self.cfg_sets, self.cfg_cons = cs, cc
        self.cfg_werner = np.array([c.werner for c in configs], dtype=np.bool_)
        self.use_raster = bool(self.cfg_werner.any())

        # scale: minimal distance between the sets of each configuration
        d = np.inf
        for cfg in configs:
            pts = [_extent_points(s) for s in cfg.sets]
            for a in range(len(pts)):
                for b in range(a + 1, len(pts)):
                    d = min(d, _min_dist(pts[a], pts[b]))
        if not np.isfinite(d) or d <= 0:
            raise InvalidInput("sets must be at positive distance")
        self.d = d
        if not any(s.bounded for s in configs[0].sets):
            raise InvalidInput("at least one set must be bounded")
        bp = np.concatenate([_extent_points(s) for cfg in configs for s in cfg.sets])
        m = 0.1 * d
        self.box = np.array([bp.real.min() - m, bp.real.max() + m, bp.imag.min() - m, bp.imag.max() + m])
        self.c0 = complex(0.5 * (self.box[0] + self.box[1]), 0.5 * (self.box[2] + self.box[3]))
        self.kappa = params.kappa_raster
        self.ntheta = int(np.ceil(2 * np.pi / self.kappa))
        self.log_rcore = float(np.log(0.05 * d))
        tir, tit, titem = [], [], []
        for k, it in enumerate(items):
            if it.needs_test and it.test_points.size:
                ir, itheta = _cells(it.test_points, self.c0, self.kappa, self.log_rcore, self.ntheta)
                tir.append(ir)
                tit.append(itheta)
                titem.append(np.full(ir.size, k))
        if tir:
            self.test_ir = np.concatenate(tir).astype(np.int64)
            self.test_it = np.concatenate(tit).astype(np.int64)
            self.test_item = np.concatenate(titem).astype(np.int64)
        else:
            self.test_ir = self.test_it = self.test_item = np.zeros(0, np.int64)
        self.needs_test = np.array([it.needs_test for it in items], dtype=np.bool_)


def _min_dist(a, b):
    from scipy.spatial import cKDTree
    dd, _ = cKDTree(np.c_[b.real, b.imag]).query(np.c_[a.real, a.imag])
    return float(dd.min())


def _cells(z, c0, kappa, log_rcore, ntheta):
    v = np.asarray(z) - c0
    r = np.abs(v)
    with np.errstate(divide="ignore"):
        ir = np.floor((np.log(r) - log_rcore) / kappa).astype(np.int64)
    ir[ir < 0] = -1
    th = np.mod(np.angle(v), 2 * np.pi)
    it = np.minimum((th / (2 * np.pi / ntheta)).astype(np.int64), ntheta - 1)
    return ir, it


class CoupledEstimate:
    """Per-sample weighted indicators of several configurations evaluated on
    the same loops, stratified by dyadic duration shells."""

    def __init__(self, values, shells, shell_tlo, seed, streams, t_range, n_points, overflow, werner):
        self.values = values
        self.shells = shells
        self.shell_tlo = shell_tlo
        self.seed = seed
        self.streams = streams
        self.t_range = t_range
        self.n_points = n_points
        self.overflow = overflow
        self.werner = werner

    @property
    def n_configs(self):
        return self.values.shape[1]

    def shell_stats(self, coeffs):
        v = self.values @ np.asarray(coeffs, dtype=float)
        ks = len(self.shell_tlo)
        mean = np.zeros(ks)
        var = np.zeros(ks)
        for k in range(ks):
            x = v[self.shells == k]
            if x.size:
                mean[k] = x.mean()
                var[k] = x.var(ddof=1) / x.size if x.size > 1 else 0.0
        return mean, var

    def estimate(self, coeffs=None, check_tail=True) -> MassEstimate:
        if coeffs is None:
            coeffs = np.eye(self.n_configs)[0]
        coeffs = np.asarray(coeffs, dtype=float)
        mean, var = self.shell_stats(coeffs)
        total = float(mean.sum())
        stat = float(np.sqrt(var.sum()))
        tail, decaying = _tail_bound(mean, np.sqrt(var))
        is_werner = bool(np.any(self.werner[coeffs != 0]))
        single = np.count_nonzero(coeffs) == 1
        if check_tail and single and not decaying and is_werner:
            raise TailNotDecaying(f"dyadic shell masses do not decrease: {mean[-4:]}")
        if check_tail and single and not is_werner and total > 0 and tail > 0.2 * total:
            raise TruncationDominates(f"tail bound {tail:.3g} exceeds 20% of {total:.3g}")
        hits = int(np.count_nonzero(self.values @ np.abs(coeffs)))
        return MassEstimate(mean=total if not single else max(total, 0.0), stderr=stat + tail,
                            n_samples=int(self.values.shape[0]), n_hits=hits, seed=self.seed,
                            streams=self.streams, t_range=tuple(self.t_range), tail_bound=tail,
                            stat_stderr=stat)

    def variance_ratio(self, coeffs):
        """Var(independent) / Var(coupled) for a linear combination."""
        coupled = self.shell_stats(coeffs)[1].sum()
        indep = sum(c * c * self.shell_stats(np.eye(self.n_configs)[i])[1].sum()
                    for i, c in enumerate(coeffs) if c)
        return float(indep / coupled) if coupled > 0 else float("inf")


def _tail_bound(mean, se):
    """Geometric extrapolation beyond the last shell; returns (bound, decaying)."""
    up = np.abs(mean[-4:]) + 2 * se[-4:]
    if np.all(up == 0):
        return 0.0, True
    decaying = not (np.abs(mean[-1]) > np.abs(mean[-4]) + 3 * np.hypot(se[-1], se[-4]) and mean[-1] != 0)
    ratios = up[1:] / np.where(up[:-1] > 0, up[:-1], np.inf)
    q = float(np.clip(np.max(ratios), 0.0, 0.9))
    return float(up[-1] * q / (1 - q)), decaying


def _shell_grid(geom: _Geometry, params: MCParams):
    if params.t_range is not None:
        lo, hi = params.t_range
    else:
        lo = params.t_factors[0] * geom.d**2 / params.var_scale
        hi = params.t_factors[1] * geom.d**2 / params.var_scale
    ks = int(np.ceil(np.log2(hi / lo)))
    return lo * 2.0 ** np.arange(ks), (lo, lo * 2.0**ks)


def _split(shell_ids, streams):
    return [shell_ids[s::streams] for s in range(streams)]


def _run_phase(geom, params, shell_ids, tlo, phase, seed):
    streams = params.streams
    parts = _split(shell_ids, streams)
    delta = params.delta if params.delta is not None else geom.d / 32
    nc = geom.cfg_sets.shape[0]

    def work(s):
        ids = parts[s]
        vals = np.zeros((ids.size, nc))
        info = np.zeros((ids.size, 3))
        K.run_stream(_sub_seed(seed, phase, s), ids, tlo, geom.box, params.pad, params.var_scale,
                     params.m0, geom.prims, geom.refine, geom.item_prim, geom.item_mode,
                     geom.cons_prim, geom.cons_sign, geom.cfg_sets, geom.cfg_cons, geom.cfg_werner,
                     geom.needs_test, geom.test_ir, geom.test_it, geom.test_item,
                     geom.c0, geom.kappa, geom.log_rcore, geom.ntheta, geom.use_raster,
                     delta, params.kappa_geom, params.max_points, vals, info)
        return vals, info

    threads = params.threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=max(1, min(threads, streams))) as ex:
        res = list(ex.map(work, range(streams)))
    return (np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res]),
            np.concatenate(parts))


def _allocate(n, sigma, floor_frac=0.2):
    """Neyman allocation on pilot deviations, smoothed over neighbouring
    shells so that shells with no pilot hits are not starved."""
    ks = sigma.size
    if not np.any(sigma > 0):
        weight = np.ones(ks)
    else:
        smooth = ndimage.maximum_filter1d(sigma, size=5, mode="constant")
        weight = smooth / smooth.sum() + floor_frac / ks
    alloc = np.floor(n * weight / weight.sum()).astype(np.int64)
    alloc = np.maximum(alloc, 2)
    alloc[np.argmax(weight)] += max(n - alloc.sum(), 0)
    return alloc


def coupled_masses(configs, params: MCParams | None = None, target=None) -> CoupledEstimate:
    """Evaluate several configurations on one stream of loops.

    ``target`` gives the linear combination whose variance drives the
    Neyman allocation over shells (default: the first configuration).
    """
    params = params or MCParams()
    configs = list(configs)
    geom = _Geometry(configs, params)
    tlo, t_range = _shell_grid(geom, params)
    seed = params.resolved_seed()
    ks = tlo.size
    n_pilot = max(int(params.pilot_frac * params.n), 8 * ks)
    pilot_ids = np.repeat(np.arange(ks), int(np.ceil(n_pilot / ks)))
    pv, _, pids = _run_phase(geom, params, pilot_ids, tlo, 0, seed)
    coeffs = np.eye(len(configs))[0] if target is None else np.asarray(target, float)
    tv = pv @ coeffs
    sigma = np.array([tv[pids == k].std() if np.any(pids == k) else 0.0 for k in range(ks)])
    n_main = max(params.n - pilot_ids.size, 4 * ks)
    alloc = _allocate(n_main, sigma)
    main_ids = np.repeat(np.arange(ks), alloc)
    vals, info, ids = _run_phase(geom, params, main_ids, tlo, 1, seed)
    overflow = int(info[:, 2].sum())
    if overflow:
        warnings.warn(f"{overflow} loops hit the point budget before full refinement")
    return CoupledEstimate(vals, ids, tlo, seed, params.streams, t_range, info[:, 1], overflow,
                           geom.cfg_werner)


def brownian_mass(K1: CompactSet, K2: CompactSet, D="H", params: MCParams | None = None) -> MassEstimate:
    """Mass of Brownian loops in D that hit both K1 and K2."""
    return coupled_masses([MassConfig((K1, K2), as_domain(D))], params).estimate()


def werner_mass(K1: CompactSet, K2: CompactSet, D="C", params: MCParams | None = None) -> MassEstimate:
    """Werner-measure mass: loops in D whose outer boundary hits K1 and K2."""
    return coupled_masses([MassConfig((K1, K2), as_domain(D), werner=True)], params).estimate()


def synthetic_mass(center, radius, t_a, t_b, box, params: MCParams | None = None):
    """Estimator check: importance-sampled mass of loops with basepoint in the
    disk and duration in [t_a, t_b]. Returns (MassEstimate, exact value)."""
    params = params or MCParams()
    seed = params.resolved_seed()
    lo, hi = params.t_range or (t_a / 4, t_b * 4)
    ks = int(np.ceil(np.log2(hi / lo)))
    tlo = lo * 2.0 ** np.arange(ks)
    ids = np.repeat(np.arange(ks), int(np.ceil(params.n / ks)))
    parts = _split(ids, params.streams)
    vals = []
    for s, p in enumerate(parts):
        v = np.zeros((p.size, 1))
        K.run_synthetic(_sub_seed(seed, 2, s), p, tlo, np.asarray(box, float), params.pad,
                        params.var_scale, complex(center), float(radius), float(t_a), float(t_b), v)
        vals.append(v)
    est = CoupledEstimate(np.concatenate(vals), np.concatenate(parts), tlo, seed, params.streams,
                          (lo, lo * 2.0**ks), None, 0, np.zeros(1, bool))
    exact = radius**2 * (1 / t_a - 1 / t_b) / 2
    return est.estimate(check_tail=False), exact


# ---------------------------------------------------------------- single loops

@dataclass
class LoopSample:
    duration: float
    basepoint: ComplexPoint
    path: np.ndarray

    @property
    def steps(self):
        return len(self.path) - 1


def sample_bridge(t: float, x=0.0, m: int = 256, rng=None, var_scale: float = VAR_SCALE) -> LoopSample:
    """Exact discrete Brownian bridge loop of duration t rooted at x."""
    if not t > 0:
        raise InvalidInput("t must be positive")
    if m < 8:
        raise InvalidInput("m must be at least 8")
    rng = np.random.default_rng(rng)
    x = complex(x)
    path = x + np.sqrt(var_scale) * K.bridge_path(rng.standard_normal((m, 2)), t, m)
    path[-1] = path[0]
    return LoopSample(float(t), ComplexPoint(x.real, x.imag), path)


def outer_boundary(loop, grid: int = 512) -> PlanarCurve:
    """Boundary of the unbounded complementary component of a closed path.

    The path is rasterized on a ``grid`` x ``grid`` lattice over its bounding
    box with margin; the exterior is the free component touching the frame.
    """
    if isinstance(loop, LoopSample):
        z = loop.path
    elif isinstance(loop, PlanarCurve):
        z = loop.vertices()
    else:
        z = np.asarray(loop, dtype=complex)
    lo = complex(z.real.min(), z.imag.min())
    span = max(np.ptp(z.real), np.ptp(z.imag)) or 1.0
    inner = grid - 4
    h = span / inner
    origin = lo - 2 * h * (1 + 1j)
    ij = np.floor(np.c_[(z - origin).real, (z - origin).imag] / h).astype(int)
    if np.any(np.abs(np.diff(ij, axis=0)).max(axis=1) > 1):
        raise ResolutionTooCoarse("path jumps more than one cell; refine the path or coarsen the grid")
    blocked = np.zeros((grid, grid), dtype=bool)
    blocked[ij[:, 0], ij[:, 1]] = True
    # close diagonal moves so the 4-connected exterior cannot leak
    dij = np.diff(ij, axis=0)
    diag = np.all(dij != 0, axis=1)
    blocked[ij[:-1][diag, 0] + dij[diag, 0], ij[:-1][diag, 1]] = True
    labels, _ = ndimage.label(~blocked)
    ext = labels == labels[0, 0]
    contours = measure.find_contours(ext.astype(float), 0.5)
    c = max(contours, key=len)
    pts = origin + h * (c[:, 0] + 0.5) + 1j * h * (c[:, 1] + 0.5)
    if abs(pts[0] - pts[-1]) < 1e-12:
        pts = pts[:-1]
    return PlanarCurve(pts, closed=True)


# ---------------------------------------------------------------- Schwarzian route

def schwarzian_bridge_mass(w: DrivingFunction, hull: HullSpec, T: float, n_circle: int = 32,
                           check_refinement: bool = True) -> float:
    """B(Gamma[0,T], K; H) = -(1/3) int_0^T S psi_t(W_t) dt along the Loewner flow."""
    flow = flow_taylor(w.restrict(T) if T < w.T else w, hull, T, n_circle=n_circle)
    value = -np.trapezoid(flow.schwarzian, flow.times) / 3
    if check_refinement and len(flow.times) > 16:
        coarse = -np.trapezoid(flow.schwarzian[::2], flow.times[::2]) / 3
        if abs(coarse - value) > 0.01 * max(abs(value), 1e-12):
            warnings.warn(f"quadrature refinement changes the Schwarzian mass by "
                          f"{abs(coarse - value) / max(abs(value), 1e-12):.2%}")
    return float(value)
