"""Compiled inner loops of the loop-measure estimators.

Geometry is passed as flat arrays. A primitive row ``prims[k]`` is complex:

* kind 0, mapped circle: ``[0, a, b, c, d, q, center, r]``; the level
  function is |Q^-1((a z + b)/(c z + d)) - center| - r with
  Q^-1(w) = 2w / (1 + sqrt(1 + 4 q w)) (identity when q = 0).
* kind 1, segment ``[1, p, q, ...]``; level function is the distance.
* kind 2, horizontal line ``[2, y0, ...]``; level function is Im z - y0.

Item modes: 0 curve (level set), 1 inside (level <= 0), 2 outside
(level >= 0), 3 segment. Brownian motion has unit variance per unit time
in each coordinate.
"""
import cmath
import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True)
def level(pr, z):
    kind = int(pr[0].real)
    if kind == 0:
        den = pr[3] * z + pr[4]
        if abs(den) < 1e-280:
            return 1e300, 1e300
        w = (pr[1] * z + pr[2]) / den
        dw = (pr[1] * pr[4] - pr[2] * pr[3]) / (den * den)
        q = pr[5]
        if q != 0:
            s = cmath.sqrt(1.0 + 4.0 * q * w)
            zeta = 2.0 * w / (1.0 + s)
            dz = dw / (1.0 + 2.0 * q * zeta)
        else:
            zeta = w
            dz = dw
        phi = abs(zeta - pr[6]) - pr[7].real
        jac = abs(dz)
        if jac == 0.0:
            return phi, 1e300
        return phi, abs(phi) / jac
    elif kind == 1:
        p = pr[1]
        q = pr[2]
        v = q - p
        L2 = v.real * v.real + v.imag * v.imag
        u = ((z - p).real * v.real + (z - p).imag * v.imag) / L2
        if u < 0.0:
            u = 0.0
        elif u > 1.0:
            u = 1.0
        dd = abs(z - (p + u * v))
        return dd, dd
    else:
        phi = z.imag - pr[1].real
        return phi, abs(phi)


@njit(cache=True, nogil=True)
def _orient(a, b, c):
    return (b.real - a.real) * (c.imag - a.imag) - (b.imag - a.imag) * (c.real - a.real)


@njit(cache=True, nogil=True)
def seg_cross(a, b, c, d):
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, d)
    o3 = _orient(c, d, a)
    o4 = _orient(c, d, b)
    return (o1 * o2 <= 0.0) and (o3 * o4 <= 0.0)


@njit(cache=True, nogil=True)
def _resolution(phis, dists, k, n_prims, refine_prim, delta, kappa_g, use_raster, c0, kap_lp, r_core):
    dmin = 1e300
    for j in range(n_prims):
        if refine_prim[j] and dists[k, j] < dmin:
            dmin = dists[k, j]
    h = kappa_g * dmin
    if h < delta:
        h = delta
    return h


@njit(cache=True, nogil=True)
def _raster_h(z, c0, kap_lp, r_core):
    r = abs(z - c0)
    if r < r_core:
        r = r_core
    return 0.5 * kap_lp * r


@njit(cache=True, nogil=True)
def _cell(z, c0, kap_lp, log_rcore, ntheta):
    v = z - c0
    r = abs(v)
    if r <= 0.0:
        return -1, 0
    ir = int(math.floor((math.log(r) - log_rcore) / kap_lp))
    if ir < 0:
        ir = -1
    th = math.atan2(v.imag, v.real)
    if th < 0.0:
        th += TWO_PI
    it = int(th / (TWO_PI / ntheta))
    if it >= ntheta:
        it = ntheta - 1
    return ir, it


@njit(cache=True, nogil=True)
def exterior_cells(path, npts, c0, kap_lp, log_rcore, ntheta, test_ir, test_it, out):
    """For each test cell decide whether it lies in the unbounded component of
    the complement of the rasterized closed polyline ``path[:npts]``."""
    r_core = math.exp(log_rcore)
    ir_min = 1 << 30
    ir_max = -1
    core_blocked = False
    for i in range(npts):
        ir, it = _cell(path[i], c0, kap_lp, log_rcore, ntheta)
        if ir < 0:
            core_blocked = True
        else:
            if ir < ir_min:
                ir_min = ir
            if ir > ir_max:
                ir_max = ir
    if ir_max < 0:
        # whole loop inside the core disk
        for k in range(len(test_ir)):
            out[k] = test_ir[k] >= 0
        return
    lo = ir_min - 1
    if lo < 0 or core_blocked:
        lo = 0
    hi = ir_max + 1
    rows = hi - lo + 1
    blocked = np.zeros((rows, ntheta), dtype=np.uint8)
    for i in range(npts):
        p = path[i]
        q = path[i + 1] if i + 1 < npts else path[0]
        rp = min(abs(p - c0), abs(q - c0))
        if rp < r_core:
            rp = r_core
        cs = 0.45 * kap_lp * rp
        nsub = int(abs(q - p) / cs) + 1
        for s in range(nsub):
            z = p + (q - p) * (s / nsub)
            ir, it = _cell(z, c0, kap_lp, log_rcore, ntheta)
            if ir < 0:
                core_blocked = True
            elif ir >= lo and ir <= hi:
                blocked[ir - lo, it] = 1
    visited = np.zeros((rows, ntheta), dtype=np.uint8)
    qr = np.empty(rows * ntheta + 1, dtype=np.int32)
    qt = np.empty(rows * ntheta + 1, dtype=np.int32)
    head = 0
    tail = 0
    for it in range(ntheta):
        if blocked[rows - 1, it] == 0:
            visited[rows - 1, it] = 1
            qr[tail] = rows - 1
            qt[tail] = it
            tail += 1
    core_visited = False
    while head < tail:
        r0 = qr[head]
        t0 = qt[head]
        head += 1
        for dr, dth in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            r1 = r0 + dr
            if r1 < 0:
                if lo == 0 and not core_blocked and not core_visited:
                    core_visited = True
                    for it in range(ntheta):
                        if blocked[0, it] == 0 and visited[0, it] == 0:
                            visited[0, it] = 1
                            qr[tail] = 0
                            qt[tail] = it
                            tail += 1
                continue
            if r1 >= rows:
                continue
            t1 = (t0 + dth) % ntheta
            if blocked[r1, t1] == 0 and visited[r1, t1] == 0:
                visited[r1, t1] = 1
                qr[tail] = r1
                qt[tail] = t1
                tail += 1
    inner_ext = False
    if lo > 0:
        for it in range(ntheta):
            if visited[0, it] == 1:
                inner_ext = True
                break
    else:
        inner_ext = core_visited
    for k in range(len(test_ir)):
        ir = test_ir[k]
        if ir > hi:
            out[k] = True
        elif ir < lo:
            out[k] = inner_ext
        elif ir < 0:
            out[k] = core_visited
        else:
            out[k] = visited[ir - lo, test_it[k]] == 1


@njit(cache=True, nogil=True)
def _box_density(x, a, b, s):
    return 0.5 * (math.erf((x - a) / (s * math.sqrt(2.0))) - math.erf((x - b) / (s * math.sqrt(2.0)))) / (b - a)


@njit(cache=True, nogil=True)
def _raster_refine(pool_z, order, seg_dt, nseg, c0, kap_lp, r_core, path, rs_a, rs_b, rs_dt):
    """Refine an ordered bridge path until steps are below half a log-polar
    cell; writes the open polyline into ``path`` and returns its length."""
    cap = len(path) - 1
    n = 0
    path[n] = pool_z[order[0]]
    n += 1
    for k in range(nseg):
        sp = 0
        rs_a[0] = pool_z[order[k]]
        rs_b[0] = pool_z[order[k + 1]]
        rs_dt[0] = seg_dt[k]
        sp = 1
        while sp > 0:
            sp -= 1
            a = rs_a[sp]
            b = rs_b[sp]
            dt = rs_dt[sp]
            h = min(_raster_h(a, c0, kap_lp, r_core), _raster_h(b, c0, kap_lp, r_core))
            if max(abs(b - a), math.sqrt(dt)) > h and n < cap and sp < len(rs_a) - 2 and dt > 1e-16:
                sm = math.sqrt(dt / 4.0)
                m = 0.5 * (a + b) + complex(sm * np.random.standard_normal(), sm * np.random.standard_normal())
                rs_a[sp] = m
                rs_b[sp] = b
                rs_dt[sp] = dt / 2.0
                sp += 1
                rs_a[sp] = a
                rs_b[sp] = m
                rs_dt[sp] = dt / 2.0
                sp += 1
            elif n < cap:
                path[n] = b
                n += 1
    return n


@njit(cache=True, nogil=True)
def propose(tlo, box, pad, var_scale):
    """Draw (t, x) with t log-uniform on [tlo, 2 tlo] and x uniform on the box
    plus a Gaussian margin; returns the weight density(loop) / density(proposal)."""
    t = tlo * math.exp(np.random.random() * math.log(2.0))
    s = pad * math.sqrt(var_scale * t)
    x = box[0] + (box[1] - box[0]) * np.random.random() + s * np.random.standard_normal()
    y = box[2] + (box[3] - box[2]) * np.random.random() + s * np.random.standard_normal()
    qx = _box_density(x, box[0], box[1], s) * _box_density(y, box[2], box[3], s)
    return t, complex(x, y), math.log(2.0) / (TWO_PI * t * qx)


@njit(cache=True, nogil=True)
def sample_seed(seed, i):
    """splitmix64 of (stream seed, sample index): every proposal owns its
    random numbers, so configurations evaluated together stay coupled
    sample by sample whatever work other configurations trigger."""
    z = np.uint64(seed) ^ (np.uint64(i + 1) * np.uint64(0x9E3779B97F4A7C15))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return np.uint32(z & np.uint64(0xFFFFFFFF))


@njit(cache=True, nogil=True)
def run_synthetic(seed, shell_idx, shell_tlo, box, pad, var_scale, center, radius, t_a, t_b, out_vals):
    """Same proposal as run_stream with the indicator replaced by
    1[|x - center| < radius, t_a < t < t_b]."""
    for i in range(len(shell_idx)):
        np.random.seed(sample_seed(seed, i))
        t, x0, w0 = propose(shell_tlo[shell_idx[i]], box, pad, var_scale)
        out_vals[i, 0] = w0 if (abs(x0 - center) < radius and t_a < t < t_b) else 0.0


@njit(cache=True, nogil=True)
def run_stream(seed, shell_idx, shell_tlo, box, pad, var_scale, m0,
               prims, refine_prim, item_prim, item_mode,
               cons_prim, cons_sign,
               cfg_sets, cfg_cons, cfg_werner,
               item_needs_test, test_ir, test_it, test_item,
               c0, kap_lp, log_rcore, ntheta, use_raster,
               delta, kappa_g, max_pts, out_vals, out_info):
    """Simulate one stream of proposals; fills ``out_vals[i, config]`` with
    importance-weighted indicators and ``out_info[i] = (t, n_points, overflow)``.

    The path of a loop of duration t has per-coordinate variance
    ``var_scale * t``; the measure density stays 1/(2 pi t^2)."""
    n_prims = prims.shape[0]
    n_items = item_prim.shape[0]
    n_cons = cons_prim.shape[0]
    n_cfg = cfg_sets.shape[0]
    r_core = math.exp(log_rcore)

    pool_z = np.empty(max_pts, dtype=np.complex128)
    pool_phi = np.empty((max_pts, n_prims))
    pool_d = np.empty((max_pts, n_prims))
    pool_h = np.empty(max_pts)
    st_a = np.empty(max_pts, dtype=np.int64)
    st_b = np.empty(max_pts, dtype=np.int64)
    st_dt = np.empty(max_pts)
    order = np.empty(max_pts + 1, dtype=np.int64)
    seg_dt = np.empty(max_pts + 1)
    path = np.empty(4 * max_pts + 1, dtype=np.complex128)
    item_hit = np.zeros(n_items, dtype=np.bool_)
    item_ob = np.zeros(n_items, dtype=np.bool_)
    stay = np.ones(n_cons)
    ext = np.zeros(len(test_ir), dtype=np.bool_)
    skel = np.empty(m0 + 1, dtype=np.complex128)
    rs_a = np.empty(256, dtype=np.complex128)
    rs_b = np.empty(256, dtype=np.complex128)
    rs_dt = np.empty(256)

    for i in range(len(shell_idx)):
        np.random.seed(sample_seed(seed, i))
        t, x0, w0 = propose(shell_tlo[shell_idx[i]], box, pad, var_scale)

        # coarse discrete bridge
        dt0 = var_scale * t / m0
        sd = math.sqrt(dt0)
        acc = 0j
        skel[0] = 0j
        for k in range(1, m0 + 1):
            acc += complex(sd * np.random.standard_normal(), sd * np.random.standard_normal())
            skel[k] = acc
        end = skel[m0]
        for k in range(m0 + 1):
            skel[k] = x0 + skel[k] - end * (k / m0)
        skel[m0] = x0

        # early exit when every configuration already leaves its domain
        if n_cons > 0:
            alive = False
            for c in range(n_cfg):
                ok = True
                for kk in range(cfg_cons.shape[1]):
                    cc = cfg_cons[c, kk]
                    if cc < 0 or cons_sign[cc] == 0:
                        continue
                    pr = prims[cons_prim[cc]]
                    for k in range(m0 + 1):
                        ph, dd = level(pr, skel[k])
                        if ph * cons_sign[cc] <= 0.0:
                            ok = False
                            break
                    if not ok:
                        break
                if ok:
                    alive = True
                    break
            if not alive:
                for c in range(n_cfg):
                    out_vals[i, c] = 0.0
                out_info[i, 0] = t
                out_info[i, 1] = m0
                out_info[i, 2] = 0.0
                continue

        # adaptive Levy refinement
        npool = 0
        overflow = False
        for k in range(m0 + 1):
            z = skel[k]
            pool_z[npool] = z
            for j in range(n_prims):
                ph, dd = level(prims[j], z)
                pool_phi[npool, j] = ph
                pool_d[npool, j] = dd
            h = _resolution(pool_phi, pool_d, npool, n_prims, refine_prim, delta, kappa_g,
                            use_raster, c0, kap_lp, r_core)
            pool_h[npool] = h
            npool += 1
        nout = 1
        order[0] = 0
        sp = 0
        for k in range(m0 - 1, -1, -1):
            st_a[sp] = k
            st_b[sp] = k + 1
            st_dt[sp] = dt0
            sp += 1
        while sp > 0:
            sp -= 1
            a = st_a[sp]
            b = st_b[sp]
            dt = st_dt[sp]
            za = pool_z[a]
            zb = pool_z[b]
            hh = min(pool_h[a], pool_h[b])
            span = max(abs(zb - za), math.sqrt(dt))
            if span > hh and dt > 1e-14 and npool < max_pts - 1 and sp < max_pts - 2:
                sm = math.sqrt(dt / 4.0)
                zm = 0.5 * (za + zb) + complex(sm * np.random.standard_normal(), sm * np.random.standard_normal())
                m = npool
                pool_z[m] = zm
                for j in range(n_prims):
                    ph, dd = level(prims[j], zm)
                    pool_phi[m, j] = ph
                    pool_d[m, j] = dd
                h = _resolution(pool_phi, pool_d, m, n_prims, refine_prim, delta, kappa_g,
                                use_raster, c0, kap_lp, r_core)
                pool_h[m] = h
                npool += 1
                st_a[sp] = m
                st_b[sp] = b
                st_dt[sp] = dt / 2.0
                sp += 1
                st_a[sp] = a
                st_b[sp] = m
                st_dt[sp] = dt / 2.0
                sp += 1
            else:
                if span > hh and dt > 1e-14:
                    overflow = True
                order[nout] = b
                seg_dt[nout - 1] = dt
                nout += 1
        nseg = nout - 1

        # hits of every item, with bridge-crossing corrections between samples
        for it_ in range(n_items):
            j = item_prim[it_]
            mode = item_mode[it_]
            hit = False
            for k in range(nseg):
                a = order[k]
                b = order[k + 1]
                pa = pool_phi[a, j]
                pb = pool_phi[b, j]
                if mode == 0:
                    if pa == 0.0 or pa * pb < 0.0:
                        hit = True
                elif mode == 1:
                    if pa <= 0.0 or pb <= 0.0:
                        hit = True
                elif mode == 2:
                    if pa >= 0.0 or pb >= 0.0:
                        hit = True
                else:
                    if pa == 0.0 or seg_cross(pool_z[a], pool_z[b], prims[j, 1], prims[j, 2]):
                        hit = True
                if hit:
                    break
                e = 2.0 * pool_d[a, j] * pool_d[b, j] / seg_dt[k]
                if e < 30.0:
                    if np.random.random() < math.exp(-e):
                        hit = True
                        break
            item_hit[it_] = hit

        # survival weights for domain constraints (exact for lines)
        for c in range(n_cons):
            j = cons_prim[c]
            sg = cons_sign[c]
            wgt = 1.0
            for k in range(nseg):
                a = order[k]
                b = order[k + 1]
                if sg == 0:
                    if pool_phi[a, j] == 0.0 or seg_cross(pool_z[a], pool_z[b], prims[j, 1], prims[j, 2]):
                        wgt = 0.0
                        break
                else:
                    pa = pool_phi[a, j] * sg
                    pb = pool_phi[b, j] * sg
                    if pa <= 0.0 or pb <= 0.0:
                        wgt = 0.0
                        break
                e = 2.0 * pool_d[a, j] * pool_d[b, j] / seg_dt[k]
                if e < 40.0:
                    wgt *= 1.0 - math.exp(-e)
            stay[c] = wgt

        need_raster = False
        for c in range(n_cfg):
            val = w0
            for kk in range(cfg_cons.shape[1]):
                cc = cfg_cons[c, kk]
                if cc >= 0:
                    val *= stay[cc]
            ok = val > 0.0
            for sset in range(cfg_sets.shape[1]):
                if not ok:
                    break
                any_set = False
                empty = True
                for kk in range(cfg_sets.shape[2]):
                    itx = cfg_sets[c, sset, kk]
                    if itx >= 0:
                        empty = False
                        if item_hit[itx]:
                            any_set = True
                if not empty and not any_set:
                    ok = False
            out_vals[i, c] = val if ok else 0.0
            if ok and cfg_werner[c]:
                need_raster = True

        if need_raster:
            npath = _raster_refine(pool_z, order, seg_dt, nseg, c0, kap_lp, r_core, path, rs_a, rs_b, rs_dt)
            if npath >= len(path) - 1:
                overflow = True
            exterior_cells(path, npath, c0, kap_lp, log_rcore, ntheta, test_ir, test_it, ext)
            for it_ in range(n_items):
                item_ob[it_] = item_hit[it_] and not item_needs_test[it_]
            for k in range(len(test_ir)):
                itx = test_item[k]
                if ext[k] and item_hit[itx]:
                    item_ob[itx] = True
            for c in range(n_cfg):
                if not cfg_werner[c] or out_vals[i, c] == 0.0:
                    continue
                ok = True
                for sset in range(cfg_sets.shape[1]):
                    any_set = False
                    empty = True
                    for kk in range(cfg_sets.shape[2]):
                        itx = cfg_sets[c, sset, kk]
                        if itx >= 0:
                            empty = False
                            if item_ob[itx]:
                                any_set = True
                    if not empty and not any_set:
                        ok = False
                        break
                if not ok:
                    out_vals[i, c] = 0.0
        out_info[i, 0] = t
        out_info[i, 1] = nseg
        out_info[i, 2] = 1.0 if overflow else 0.0


@njit(cache=True, nogil=True)
def bridge_path(seed_normals, t, m):
    """Exact discrete Brownian bridge of duration t from 0 to 0 (m steps)."""
    sd = math.sqrt(t / m)
    out = np.empty(m + 1, dtype=np.complex128)
    acc = 0j
    out[0] = 0j
    for k in range(1, m + 1):
        acc += complex(sd * seed_normals[k - 1, 0], sd * seed_normals[k - 1, 1])
        out[k] = acc
    end = out[m]
    for k in range(m + 1):
        out[k] = out[k] - end * (k / m)
    out[m] = 0j
    return out
