"""Compiled line-of-sight kernels.

Blockers are passed as parallel arrays (see ``geometry.pack_shapes``):
``kind`` is 0 for discs and 1 for oriented rectangles, ``a``/``b`` hold the
radius (disc) or half-length/half-width (rect), ``ca``/``sa`` the heading
cosine/sine and ``brad`` the circumradius used for culling.
"""

import math

import numpy as np
from numba import njit

DISC = 0
RECT = 1


@njit(cache=True)
def seg_blocked(ox, oy, tx, ty, kind, cx, cy, a, b, ca, sa, exempt_at_origin, eps):
    """True if the closed segment o->t meets the shape anywhere farther than
    ``eps`` from the exempt endpoint (the target by default, else the origin)."""
    dx = tx - ox
    dy = ty - oy
    length = math.sqrt(dx * dx + dy * dy)
    if length == 0.0:
        return False
    if kind == DISC:
        if a <= 0.0:
            return False
        ux = dx / length
        uy = dy / length
        px = cx - ox
        py = cy - oy
        proj = px * ux + py * uy
        perp = px * uy - py * ux
        r2 = a * a
        p2 = perp * perp
        if p2 > r2:
            return False
        h = math.sqrt(r2 - p2)
        lo = max(proj - h, 0.0)
        hi = min(proj + h, length)
        if lo > hi:
            return False
        if exempt_at_origin:
            return hi > eps
        return lo < length - eps
    # oriented rectangle: Liang-Barsky clip in the local frame
    qx = ox - cx
    qy = oy - cy
    lx = qx * ca + qy * sa
    ly = -qx * sa + qy * ca
    ldx = dx * ca + dy * sa
    ldy = -dx * sa + dy * ca
    t0 = 0.0
    t1 = 1.0
    for axis in range(2):
        if axis == 0:
            p = lx
            d = ldx
            half = a
        else:
            p = ly
            d = ldy
            half = b
        if d == 0.0:
            if p < -half or p > half:
                return False
        else:
            ta = (-half - p) / d
            tb = (half - p) / d
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
            if t0 > t1:
                return False
    if exempt_at_origin:
        return t1 * length > eps
    return t0 * length < length - eps


@njit(cache=True)
def _bucket_blockers(ox, oy, maxd, ex_origin, cx, cy, brad, nbins, eps):
    """Bucket blockers by the angular interval of their circumcircle seen from o,
    each bucket ordered by distance to the nearest circumcircle point."""
    m = cx.size
    width = 2.0 * math.pi / nbins
    b0 = np.empty(m, dtype=np.int64)
    b1 = np.empty(m, dtype=np.int64)
    dnear = np.full(m, np.inf)
    use = np.zeros(m, dtype=np.bool_)
    counts = np.zeros(nbins + 1, dtype=np.int64)
    for k in range(m):
        if k == ex_origin or brad[k] <= 0.0:
            continue
        d = math.hypot(cx[k] - ox, cy[k] - oy)
        dn = d - brad[k]
        if dn > maxd + eps:
            continue
        use[k] = True
        dnear[k] = dn
        if d <= brad[k] * (1.0 + 1e-12):
            lo = 0
            hi = nbins - 1
        else:
            phi = math.atan2(cy[k] - oy, cx[k] - ox)
            alpha = math.asin(min(1.0, brad[k] / d)) + 1e-9
            lo = int(math.floor((phi - alpha + math.pi) / width))
            hi = int(math.floor((phi + alpha + math.pi) / width))
            if hi - lo + 1 >= nbins:
                lo = 0
                hi = nbins - 1
        b0[k] = lo
        b1[k] = hi
        for bb in range(lo, hi + 1):
            counts[(bb % nbins) + 1] += 1
    for bb in range(nbins):
        counts[bb + 1] += counts[bb]
    fill = counts[:nbins].copy()
    idx = np.empty(counts[nbins], dtype=np.int64)
    # nearest first, so scans can stop at the first blocker beyond the target
    for k in np.argsort(np.where(use, dnear, np.inf)):
        if not use[k]:
            continue
        for bb in range(b0[k], b1[k] + 1):
            j = bb % nbins
            idx[fill[j]] = k
            fill[j] += 1
    return counts, idx, dnear


@njit(cache=True)
def target_bins(ox, oy, tx, ty, nbins):
    n = tx.size
    width = 2.0 * math.pi / nbins
    dist = np.empty(n, dtype=np.float64)
    bins = np.empty(n, dtype=np.int64)
    for i in range(n):
        dist[i] = math.hypot(tx[i] - ox, ty[i] - oy)
        bb = int(math.floor((math.atan2(ty[i] - oy, tx[i] - ox) + math.pi) / width))
        if bb >= nbins:
            bb = nbins - 1
        elif bb < 0:
            bb = 0
        bins[i] = bb
    return dist, bins


@njit(cache=True)
def los_binned(ox, oy, tx, ty, tdist, tbin, ex_target, ex_origin, exempt_at_origin,
               kind, cx, cy, a, b, ca, sa, brad, nbins, eps):
    """``los_batch`` with target distances and angular bins precomputed."""
    n = tx.size
    out = np.ones(n, dtype=np.bool_)
    if n == 0 or kind.size == 0:
        return out
    maxd = 0.0
    for i in range(n):
        if tdist[i] > maxd:
            maxd = tdist[i]
    counts, idx, dnear = _bucket_blockers(ox, oy, maxd, ex_origin, cx, cy, brad, nbins, eps)
    for i in range(n):
        dist = tdist[i]
        if dist == 0.0:
            continue
        bb = tbin[i]
        skip = ex_target[i]
        px = tx[i]
        py = ty[i]
        for j in range(counts[bb], counts[bb + 1]):
            k = idx[j]
            if dnear[k] > dist + eps:
                break
            if k == skip:
                continue
            if seg_blocked(ox, oy, px, py, kind[k], cx[k], cy[k], a[k], b[k],
                           ca[k], sa[k], exempt_at_origin, eps):
                out[i] = False
                break
    return out


@njit(cache=True)
def los_batch(ox, oy, tx, ty, ex_target, ex_origin, exempt_at_origin,
              kind, cx, cy, a, b, ca, sa, brad, nbins, eps):
    """Visibility of many targets from one origin.

    ``ex_target[i]`` is a blocker index ignored for target ``i`` (-1 for none),
    ``ex_origin`` a blocker ignored for every target. Blockers are bucketed by
    the angular interval of their circumcircle so each target only tests the
    handful of shapes whose cone contains it.
    """
    tdist, tbin = target_bins(ox, oy, tx, ty, nbins)
    return los_binned(ox, oy, tx, ty, tdist, tbin, ex_target, ex_origin, exempt_at_origin,
                      kind, cx, cy, a, b, ca, sa, brad, nbins, eps)


@njit(cache=True)
def points_in_shapes(px, py, kind, cx, cy, a, b, ca, sa, brad, eps):
    """Index of the first shape containing each point, or -1."""
    n = px.size
    m = kind.size
    out = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for k in range(m):
            dx = px[i] - cx[k]
            dy = py[i] - cy[k]
            if dx * dx + dy * dy > (brad[k] + eps) * (brad[k] + eps):
                continue
            if kind[k] == DISC:
                inside = dx * dx + dy * dy <= (a[k] + eps) * (a[k] + eps)
            else:
                u = dx * ca[k] + dy * sa[k]
                v = -dx * sa[k] + dy * ca[k]
                inside = abs(u) <= a[k] + eps and abs(v) <= b[k] + eps
            if inside:
                out[i] = k
                break
    return out


@njit(cache=True)
def _inside(px, py, kind, cx, cy, a, b, ca, sa, eps):
    dx = px - cx
    dy = py - cy
    if kind == DISC:
        return dx * dx + dy * dy <= (a + eps) * (a + eps)
    u = dx * ca + dy * sa
    v = -dx * sa + dy * ca
    return abs(u) <= a + eps and abs(v) <= b + eps


@njit(cache=True)
def horizon(ox, oy, own, maxd, kind, cx, cy, a, b, nbins):
    """Per angular bin, a distance beyond which every ray in the bin is blocked.

    A shape's inscribed disc that spans a whole bin is entered by every ray of
    the bin no later than the disc centre, so cells farther than the nearest
    such centre are occluded.
    """
    h = np.full(nbins, np.inf)
    width = 2.0 * math.pi / nbins
    for k in range(kind.size):
        if k == own:
            continue
        rin = a[k] if kind[k] == DISC else min(a[k], b[k])
        if rin <= 0.0:
            continue
        d = math.hypot(cx[k] - ox, cy[k] - oy)
        if d - rin > maxd:
            continue
        if d <= rin:
            for j in range(nbins):
                h[j] = 0.0
            break
        phi = math.atan2(cy[k] - oy, cx[k] - ox)
        alpha = math.asin(rin / d) * (1.0 - 1e-12)
        b0 = int(math.ceil((phi - alpha + math.pi) / width))
        b1 = int(math.floor((phi + alpha + math.pi) / width)) - 1
        for bb in range(b0, b1 + 1):
            j = bb % nbins
            if d < h[j]:
                h[j] = d
    return h


@njit(cache=True)
def visible_sorted(sx, sy, dx, dy, tdist, bstart, rmax, own, own_reach,
                   kind, cx, cy, a, b, ca, sa, brad, nbins, eps):
    """Coverage mask of an omni sensor at (sx, sy) over template cells (sx+dx, sy+dy).

    Cells must be grouped by angular bin (``bstart`` holds the offsets) and
    sorted by distance within each bin. ``own`` is the sensor's blocker index:
    its body is transparent and cells inside it are covered.
    """
    n = dx.size
    out = np.zeros(n, dtype=np.bool_)
    counts, idx, dnear = _bucket_blockers(sx, sy, rmax, own, cx, cy, brad, nbins, eps)
    hz = horizon(sx, sy, own, rmax, kind, cx, cy, a, b, nbins)
    ko = kind[own]
    for bb in range(nbins):
        stop = max(hz[bb] + eps, own_reach)
        for i in range(bstart[bb], bstart[bb + 1]):
            dist = tdist[i]
            if dist > rmax + eps or dist > stop:
                break
            px = sx + dx[i]
            py = sy + dy[i]
            if dist == 0.0 or _inside(px, py, ko, cx[own], cy[own], a[own], b[own], ca[own], sa[own], eps):
                out[i] = True
                continue
            if dist > hz[bb] + eps:
                continue
            ok = True
            for j in range(counts[bb], counts[bb + 1]):
                k = idx[j]
                if dnear[k] > dist + eps:
                    break
                if seg_blocked(sx, sy, px, py, kind[k], cx[k], cy[k], a[k], b[k], ca[k], sa[k], False, eps):
                    ok = False
                    break
            out[i] = ok
    return out


@njit(cache=True)
def point_in_each(px, py, idx, kind, cx, cy, a, b, ca, sa, eps):
    """For each shape index in ``idx``: does it contain (px, py)?"""
    out = np.zeros(idx.size, dtype=np.bool_)
    for j in range(idx.size):
        k = idx[j]
        out[j] = _inside(px, py, kind[k], cx[k], cy[k], a[k], b[k], ca[k], sa[k], eps)
    return out


@njit(cache=True)
def accumulate_visible(sx, sy, rmax, own, own_reach, x0, y0, res, mask, counts,
                       kind, cx, cy, a, b, ca, sa, brad, nbins, eps):
    """Add 1 to ``counts`` at every masked grid cell an omni sensor covers.

    Cell (r, c) has its centre at (x0 + (c + 0.5) res, y0 + (r + 0.5) res).
    Only cells in the sensor's bounding box are visited.
    """
    ny, nx = counts.shape
    c0 = max(0, int(math.floor((sx - rmax - x0) / res)) - 1)
    c1 = min(nx, int(math.ceil((sx + rmax - x0) / res)) + 1)
    r0 = max(0, int(math.floor((sy - rmax - y0) / res)) - 1)
    r1 = min(ny, int(math.ceil((sy + rmax - y0) / res)) + 1)
    if c0 >= c1 or r0 >= r1:
        return
    counts_b, idx, dnear = _bucket_blockers(sx, sy, rmax, own, cx, cy, brad, nbins, eps)
    hz = horizon(sx, sy, own, rmax, kind, cx, cy, a, b, nbins)
    width = 2.0 * math.pi / nbins
    ko = kind[own]
    for r in range(r0, r1):
        py = y0 + (r + 0.5) * res
        for c in range(c0, c1):
            if not mask[r, c]:
                continue
            px = x0 + (c + 0.5) * res
            dist = math.hypot(px - sx, py - sy)
            if dist > rmax + eps:
                continue
            if dist <= own_reach and (dist == 0.0 or _inside(px, py, ko, cx[own], cy[own], a[own], b[own],
                                                             ca[own], sa[own], eps)):
                counts[r, c] += 1
                continue
            bb = int(math.floor((math.atan2(py - sy, px - sx) + math.pi) / width))
            if bb >= nbins:
                bb = nbins - 1
            if dist > hz[bb] + eps:
                continue
            ok = True
            for j in range(counts_b[bb], counts_b[bb + 1]):
                k = idx[j]
                if dnear[k] > dist + eps:
                    break
                if seg_blocked(sx, sy, px, py, kind[k], cx[k], cy[k], a[k], b[k], ca[k], sa[k], False, eps):
                    ok = False
                    break
            if ok:
                counts[r, c] += 1
