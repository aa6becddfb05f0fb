"""Numerical checks of the conformal restriction identities.

Each check returns an IdentityReport whose ``passed`` flag is the k-sigma
rule |lhs - rhs| <= k (lhs_err + rhs_err). Error terms are reported as an
additive decomposition in ``budget``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conformal import ConformalMap, HullSpec, PlanarCurve, PolynomialDisk, circle
from .energy import MIN_VERTEX_FACTOR, chordal_energy, loop_energy
from .errors import InvalidInput
from .loewner import DrivingFunction, flow_taylor, image_driving, solve_forward
from .loops import CompactSet, Domain, MassConfig, MCParams, brownian_mass, coupled_masses

K_SIGMA = 3.0


@dataclass
class IdentityReport:
    identity: str
    lhs: float
    rhs: float
    lhs_err: float
    rhs_err: float
    k: float = K_SIGMA
    inputs: dict = field(default_factory=dict)
    budget: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return abs(self.residual) <= self.k * (self.lhs_err + self.rhs_err)

    def to_dict(self) -> dict:
        return {"identity": self.identity, "lhs": self.lhs, "rhs": self.rhs,
                "lhs_err": self.lhs_err, "rhs_err": self.rhs_err, "residual": self.residual,
                "pass": self.passed, "k": self.k, "inputs": self.inputs,
                "budget": self.budget, "extras": self.extras}

    def to_json(self, timestamp: str | None = None) -> str:
        d = _clean(self.to_dict())
        if timestamp is not None:
            d["timestamp"] = timestamp
        return json.dumps(d, sort_keys=True, indent=2)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_reports(reports, out_dir, timestamp: str | None = None):
    """One JSON file per report plus index.json listing them in order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for i, r in enumerate(reports):
        name = f"{i:02d}_{r.identity}.json"
        (out / name).write_text(r.to_json(timestamp) + "\n")
        index.append({"file": name, "identity": r.identity, "pass": r.passed})
    (out / "index.json").write_text(json.dumps(index, sort_keys=True, indent=2) + "\n")
    return out / "index.json"


def _hull_dict(h: HullSpec):
    return {"kind": h.kind, "x0": h.x0, "size": h.size}


# ------------------------------------------------------------ chordal restriction

def _restriction_terms(w: DrivingFunction, hull: HullSpec, T: float, n_circle: int):
    flow = flow_taylor(w, hull, T, n_circle=n_circle)
    b = float(-np.trapezoid(flow.schwarzian, flow.times) / 3)
    return flow, b


def verify_chordal_restriction(w: DrivingFunction, hull: HullSpec, T: float,
                               params: MCParams | None = None, route: str = "schwarzian",
                               n_circle: int = 32, k: float = K_SIGMA) -> IdentityReport:
    """I_{H minus K}(gamma[0,T]) - I_H(gamma[0,T]) against
    3 log psi'(W_0) + 12 B - 3 log psi_T'(W_T)."""
    if route not in ("schwarzian", "montecarlo"):
        raise InvalidInput("route must be 'schwarzian' or 'montecarlo'")
    wT = w.restrict(T) if T < w.T else w
    img = image_driving(wT, hull, T)
    lhs = chordal_energy(img) - chordal_energy(wT)
    # zipper refinement delta from the half-resolution grid
    wh = DrivingFunction(wT.times[::2], wT.values[::2]) if len(wT) > 8 else wT
    lhs_half = chordal_energy(image_driving(wh, hull, T)) - chordal_energy(wh)
    lhs_err = abs(lhs - lhs_half)

    flow, b_s = _restriction_terms(wT, hull, T, n_circle)
    b_half = float(-np.trapezoid(flow.schwarzian[::2], flow.times[::2]) / 3)
    quad_err = abs(b_s - b_half)
    log_terms = 3 * math.log(flow.psi1[0]) - 3 * math.log(abs(flow.psi1[-1]))

    extras = {"B_schwarzian": b_s, "B_schwarzian_refinement": quad_err,
              "log_psi0": math.log(flow.psi1[0]), "log_psiT": math.log(abs(flow.psi1[-1])),
              "route": route}
    b_mc = None
    if params is not None or route == "montecarlo":
        p = params or MCParams()
        est = brownian_mass(_chord_set(wT), CompactSet.hull(hull), Domain.half_plane(), p)
        b_mc = est
        extras["B_montecarlo"] = est.mean
        extras["B_montecarlo_stderr"] = est.stderr
        extras["mc"] = est.to_dict()
    if route == "schwarzian":
        b, b_err = b_s, quad_err
        budget = {"zipper_refinement": lhs_err, "quadrature_refinement": 12 * quad_err, "statistical": 0.0}
    else:
        b, b_err = b_mc.mean, b_mc.stderr
        budget = {"zipper_refinement": lhs_err, "quadrature_refinement": 0.0, "statistical": 12 * b_err}
    rhs = log_terms + 12 * b
    inputs = {"T": T, "hull": _hull_dict(hull), "grid": len(wT), "n_circle": n_circle,
              "driving_oscillation": wT.oscillation()}
    if params is not None:
        inputs["seed"] = params.resolved_seed()
        inputs["n"] = params.n
    return IdentityReport("chordal_restriction", lhs, rhs, lhs_err, 12 * b_err, k, inputs, budget, extras)


def _chord_set(w: DrivingFunction) -> CompactSet:
    """The trace gamma[0,T] as a hit set (a segment when it is straight)."""
    tr = solve_forward(w).points
    if np.allclose(tr.real, tr.real[0], atol=1e-12):
        return CompactSet.segment(tr[0], tr[-1])
    step = max(1, (len(tr) - 1) // 128)
    idx = np.unique(np.r_[np.arange(0, len(tr), step), len(tr) - 1])
    return CompactSet.polyline(PlanarCurve(tr[idx]))


# ------------------------------------------------------------ two domains

def _domain_of(hull):
    return Domain.half_plane() if hull is None else Domain.half_plane_minus(hull)


def verify_two_domain(w: DrivingFunction, hull_d: HullSpec | None, hull_dp: HullSpec | None, T: float,
                      params: MCParams | None = None, n_circle: int = 32, k: float = K_SIGMA) -> IdentityReport:
    """Two domains D = H minus hull_d and D' = H minus hull_dp agreeing near 0 and infinity.

    lhs = I_{D'}(gamma[0,T]) - I_D(gamma[0,T]); rhs = 3 log psi'(0) + 12 W(gamma, D minus D'; D)
    - 12 W(gamma, D' minus D; D') with the finite-T flow corrections at W_T.
    """
    params = params or MCParams()
    wT = w.restrict(T) if T < w.T else w

    def side(h):
        if h is None:
            return chordal_energy(wT), 0.0, 0.0, None
        e = chordal_energy(image_driving(wT, h, T))
        fl = flow_taylor(wT, h, T, n_circle=n_circle)
        return e, math.log(fl.psi1[0]), math.log(abs(fl.psi1[-1])), fl

    e_d, l0_d, lT_d, fl_d = side(hull_d)
    e_dp, l0_dp, lT_dp, fl_dp = side(hull_dp)
    lhs = e_dp - e_d
    same = hull_d == hull_dp
    chord = _chord_set(wT)
    mass_a = mass_b = None
    configs, labels = [], []
    if hull_dp is not None and not same:
        configs.append(MassConfig((chord, CompactSet.hull(hull_dp)), _domain_of(hull_d), werner=True))
        labels.append("D_minus_Dp")
    if hull_d is not None and not same:
        configs.append(MassConfig((chord, CompactSet.hull(hull_d)), _domain_of(hull_dp), werner=True))
        labels.append("Dp_minus_D")
    est = {}
    if configs:
        ce = coupled_masses(configs, params, target=[1.0] + [-1.0] * (len(configs) - 1))
        for i, lab in enumerate(labels):
            est[lab] = ce.estimate(np.eye(len(configs))[i], check_tail=False)
    mass_a = est.get("D_minus_Dp")
    mass_b = est.get("Dp_minus_D")
    wa = mass_a.mean if mass_a else 0.0
    wb = mass_b.mean if mass_b else 0.0
    sa = mass_a.stderr if mass_a else 0.0
    sb = mass_b.stderr if mass_b else 0.0
    # psi = g_{D'}^-1 o g_D with both uniformizers centred at 0
    log_psi = (l0_d - l0_dp) if not same else 0.0
    corr = -3 * ((lT_d - lT_dp) if not same else 0.0)
    rhs = 3 * log_psi + 12 * wa - 12 * wb + corr
    lhs_err = 0.0
    if not same:
        wh = DrivingFunction(wT.times[::2], wT.values[::2])
        e_h = [chordal_energy(wh) if h is None else chordal_energy(image_driving(wh, h, T))
               for h in (hull_d, hull_dp)]
        lhs_err = abs((e_h[1] - e_h[0]) - lhs)
    rhs_err = 12 * float(np.hypot(sa, sb))
    inputs = {"T": T, "D": _hull_dict(hull_d) if hull_d else "H", "Dp": _hull_dict(hull_dp) if hull_dp else "H",
              "seed": params.resolved_seed(), "n": params.n}
    extras = {"W_D_minus_Dp": wa, "W_Dp_minus_D": wb, "stderr": [sa, sb], "log_psi_prime_0": log_psi,
              "finite_T_correction": corr, "energies": [e_d, e_dp]}
    budget = {"zipper_refinement": lhs_err, "statistical": rhs_err}
    return IdentityReport("two_domain", lhs, rhs, lhs_err, rhs_err, k, inputs, budget, extras)


# ------------------------------------------------------------ loop restriction

def coupling_mobius(c: float):
    """m(z) = z / (1 - c z): agrees with z + c z^2 to second order at 0.

    Werner's measure is Mobius invariant, so sets on the image side may be
    pulled back by m before evaluation on shared loops; this couples the two
    masses of a difference closely.
    """
    return (1.0, 0.0, -float(c), 1.0)


def _energy_with_err(curve, n=2000):
    rep = loop_energy(curve, n=n)
    half = loop_energy(curve, n=n // 2)
    return rep.value, abs(rep.value - half.value), rep


def verify_loop_restriction(c: float, annulus=(0.7, 1.3), shrink=(0.8, 1.2), params: MCParams | None = None,
                            outer_radius: float | None = None, direct: bool = True, k: float = K_SIGMA,
                            n_energy: int = 2000) -> IdentityReport:
    """eta = S^1 and Gamma = f(S^1) with f(z) = z + c z^2 on an annulus A.

    lhs = I(Gamma) - I(S^1). The rhs 12 W(eta, A^c) - 12 W(Gamma, f(A)^c) is
    estimated two ways on shared loops: directly, and through the
    neighbourhood decomposition with the disk |z| < R on which f is
    conformal (loops inside it cancel exactly), keeping only loops that
    also reach |z| >= R. The decomposed route decides ``passed``.
    """
    params = params or MCParams()
    if abs(c) >= 0.5:
        raise InvalidInput("f must be univalent on the closed disk: |c| < 1/2")
    R = outer_radius if outer_radius is not None else (min(2.4, 0.96 / (2 * abs(c))) if c else 2.4)
    f = ConformalMap((PolynomialDisk.quadratic(c),))
    m = MIN_VERTEX_FACTOR * n_energy
    gamma = circle(m).mapped(f) if c else circle(m)
    e_g, err_g, _ = _energy_with_err(gamma, n_energy)
    e_s, err_s, _ = _energy_with_err(circle(m), n_energy)
    lhs = e_g - e_s
    lhs_err = err_g + err_s

    pre = coupling_mobius(c)
    S = CompactSet.circle(1.0)
    G = CompactSet.circle(1.0, quad=c, pre=pre)
    configs = [MassConfig((S, CompactSet.exterior(R)), werner=True),
               MassConfig((G, CompactSet.exterior(R, c, pre)), werner=True)]
    if direct:
        for (a, b) in (annulus, shrink):
            configs.append(MassConfig((S, CompactSet.annulus_complement(a, b)), werner=True))
            configs.append(MassConfig((G, CompactSet.annulus_complement(a, b, c, pre)), werner=True))
    nc = len(configs)
    ce = coupled_masses(configs, params, target=[1, -1] + [0] * (nc - 2))

    def diff(i):
        co = np.zeros(nc)
        co[i], co[i + 1] = 1, -1
        return ce.estimate(co, check_tail=False)

    dec = diff(0)
    rhs = 12 * dec.mean
    rhs_err = 12 * dec.stderr
    extras = {"route": "decomposed", "outer_radius": R,
              "decomposed": {"rhs": rhs, "stat": 12 * dec.stat_stderr, "tail": 12 * dec.tail_bound},
              "variance_ratio_decomposed": ce.variance_ratio([1, -1] + [0] * (nc - 2)),
              "coupling_mobius": list(pre)}
    budget = {"loop_energy_refinement": lhs_err, "statistical": 12 * dec.stat_stderr,
              "tail": 12 * dec.tail_bound}
    if direct:
        da, db = diff(2), diff(4)
        extras["direct_A"] = {"rhs": 12 * da.mean, "err": 12 * da.stderr}
        extras["direct_B"] = {"rhs": 12 * db.mean, "err": 12 * db.stderr}
        co = np.zeros(nc)
        co[2], co[3], co[4], co[5] = 1, -1, -1, 1
        sh = ce.estimate(co, check_tail=False)
        extras["shrink_change"] = 12 * sh.mean
        extras["shrink_change_err"] = 12 * sh.stderr
        extras["shrink_within_budget"] = bool(abs(12 * sh.mean) <= K_SIGMA * (12 * sh.stderr) + rhs_err)
    inputs = {"c": c, "annulus": list(annulus), "shrink": list(shrink), "seed": params.resolved_seed(),
              "n": params.n, "n_energy": n_energy}
    return IdentityReport("loop_restriction", lhs, rhs, lhs_err, rhs_err, k, inputs, budget, extras)


# ------------------------------------------------------------ cut-off

def verify_cutoff(c: float, eps_list=(0.3, 0.2, 0.1), params: MCParams | None = None,
                  reference: float | None = None, outer_radius: float | None = None,
                  k: float = K_SIGMA, n_energy: int = 2000):
    """Per-eps identity I(Gamma^(1-eps)) = 12 W(S^1, S^(1-eps)) - 12 W(Gamma, Gamma^(1-eps)).

    For f(z) = z + c z^2, Gamma^(1-eps) = f((1-eps) S^1), and the identity is
    the loop restriction identity for eta = (1-eps) S^1 with A the disk of
    radius R on which f is conformal. All eps share one stream of loops.
    Returns (reports, series) where series records coupling variance ratios
    and whether the rhs values move toward ``reference`` as eps decreases.
    """
    params = params or MCParams()
    eps_list = sorted(eps_list, reverse=True)
    R = outer_radius if outer_radius is not None else (min(2.4, 0.96 / (2 * abs(c))) if c else 2.4)
    f = ConformalMap((PolynomialDisk.quadratic(c),))
    pre = coupling_mobius(c)
    configs = []
    for e in eps_list:
        configs.append(MassConfig((CompactSet.circle(1 - e), CompactSet.exterior(R)), werner=True))
        configs.append(MassConfig((CompactSet.circle(1 - e, quad=c, pre=pre), CompactSet.exterior(R, c, pre)),
                                  werner=True))
    nc = len(configs)
    target = np.zeros(nc)
    target[0::2], target[1::2] = 1, -1
    ce = coupled_masses(configs, params, target=target)
    reports, rhs_vals, ratios = [], [], []
    for i, e in enumerate(eps_list):
        co = np.zeros(nc)
        co[2 * i], co[2 * i + 1] = 1, -1
        est = ce.estimate(co, check_tail=False)
        curve = circle(MIN_VERTEX_FACTOR * n_energy, radius=1 - e).mapped(f)
        lhs, lhs_err, _ = _energy_with_err(curve, n_energy)
        rhs, rhs_err = 12 * est.mean, 12 * est.stderr
        ratio = ce.variance_ratio(co)
        ratios.append(ratio)
        rhs_vals.append(rhs)
        reports.append(IdentityReport(
            "cutoff", lhs, rhs, lhs_err, rhs_err, k,
            {"c": c, "eps": e, "outer_radius": R, "seed": params.resolved_seed(), "n": params.n},
            {"loop_energy_refinement": lhs_err, "statistical": 12 * est.stat_stderr, "tail": 12 * est.tail_bound},
            {"variance_ratio": ratio, "coupling_mobius": list(pre)}))
    trend = None
    if reference is not None and len(rhs_vals) > 1:
        gaps = [abs(r - reference) for r in rhs_vals]
        trend = bool(all(b <= a for a, b in zip(gaps, gaps[1:])))
    series = {"eps": list(eps_list), "rhs": rhs_vals, "reference": reference, "trend_toward_reference": trend,
              "monotone_rhs": bool(all(b >= a for a, b in zip(rhs_vals, rhs_vals[1:]))),
              "variance_ratios": ratios}
    return reports, series
