"""Pure-Python/numpy reference implementation of the hot kernels.

``_core.pyx`` mirrors every function here with the same signature and the
same floating-point operation order. Keep the two in sync.
"""
import math

import numpy as np

EMPTY, UNKNOWN, GROUND, NOISY, OBJECT = 0, 1, 2, 3, 4
AZIMUTH_SNAP = 1e-9
INF = math.inf
NAN = math.nan


def bin_points(pts, include, bounds, delta_alpha, L, M):
    x = pts[:, 0]
    y = pts[:, 1]
    r = np.sqrt(x * x + y * y)
    v = (np.pi - np.arctan2(y, x)) / delta_alpha
    i = np.clip(np.floor(v + AZIMUTH_SNAP), 0, L - 1).astype(np.int64)
    valid = (include != 0) & (r >= bounds[0]) & (r < bounds[M])
    j = np.searchsorted(bounds, r, side="right").astype(np.int64) - 1
    j = np.clip(j, 0, M - 1)
    cell_id = np.where(valid, i * M + j, -1).astype(np.int64)

    binned = np.flatnonzero(valid)
    cells = cell_id[binned]
    order = binned[np.argsort(cells, kind="stable")].astype(np.int64)
    counts = np.bincount(cells, minlength=L * M)
    offsets = np.zeros(L * M + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])

    rep_index = np.full(L * M, -1, dtype=np.int64)
    if len(binned):
        by_z = binned[np.lexsort((binned, pts[binned, 2], cells))]
        first = np.ones(len(by_z), dtype=bool)
        cz = cell_id[by_z]
        first[1:] = cz[1:] != cz[:-1]
        rep_index[cz[first]] = by_z[first]
    return cell_id, rep_index, order, offsets


def pair_slope(xk, yk, zk, sxk, syk, szk, xl, yl, zl, sxl, syl, szl, adaptive):
    dx = xl - xk
    dy = yl - yk
    dz = zl - zk
    dr = math.sqrt(dx * dx + dy * dy)
    if dr == 0.0:
        return NAN
    if not adaptive:
        return dz / dr
    sdz = math.sqrt(szl * szl + szk * szk)
    if abs(dz) <= sdz:
        return 0.0
    ux = dx / dr
    uy = dy / dr
    sdr = math.sqrt(ux * ux * (sxl * sxl + sxk * sxk) + uy * uy * (syl * syl + syk * syk))
    if dz > 0:
        return (dz - sdz) / (dr + sdr)
    return (dz + sdz) / (dr + sdr)


def _slope(rep, sig, i0, j0, i1, j1, adaptive):
    a = rep[i0, j0]
    sa = sig[i0, j0]
    b = rep[i1, j1]
    sb = sig[i1, j1]
    return pair_slope(a[0], a[1], a[2], sa[0], sa[1], sa[2],
                      b[0], b[1], b[2], sb[0], sb[1], sb[2], adaptive)


def _origin_slope(rep, sig, i, j, origin_z, adaptive):
    b = rep[i, j]
    sb = sig[i, j]
    return pair_slope(0.0, 0.0, origin_z, 0.0, 0.0, 0.0,
                      b[0], b[1], b[2], sb[0], sb[1], sb[2], adaptive)


def _next_nonempty(labels, i, j, M):
    j += 1
    while j < M and labels[i, j] == EMPTY:
        j += 1
    return j if j < M else -1


def select_seed(rep, sig, labels, i, origin_z, t_h, t_slope, adaptive):
    M = labels.shape[1]
    for j in range(M):
        if labels[i, j] == EMPTY:
            continue
        if not rep[i, j, 2] < t_h:
            continue
        s0 = _origin_slope(rep, sig, i, j, origin_z, adaptive)
        if not abs(s0) < t_slope:
            continue
        jn = _next_nonempty(labels, i, j, M)
        if jn >= 0:
            s1 = _slope(rep, sig, i, j, i, jn, adaptive)
            if not abs(s0 - s1) < t_slope:
                continue
        return j
    return -1


def label_segment(rep, sig, labels, i, j_seed, origin_z, t_slope, t_dr, adaptive):
    M = labels.shape[1]
    labels[i, j_seed] = GROUND
    j_last = j_seed
    s_last = _origin_slope(rep, sig, i, j_seed, origin_z, adaptive)
    for j in range(j_seed + 1, M):
        if labels[i, j] == EMPTY:
            continue
        dx = rep[i, j, 0] - rep[i, j_last, 0]
        dy = rep[i, j, 1] - rep[i, j_last, 1]
        if not math.sqrt(dx * dx + dy * dy) < t_dr:
            continue
        s = _slope(rep, sig, i, j_last, i, j, adaptive)
        if abs(s_last - s) < t_slope:
            j_last = j
            s_last = s
            labels[i, j] = GROUND
        elif s < 0:
            labels[i, j] = NOISY
        else:
            labels[i, j] = OBJECT
    # n1, n2: nearest and second-nearest non-empty cells farther than j
    n1 = j_last
    n2 = _next_nonempty(labels, i, j_last, M)
    for j in range(j_last - 1, -1, -1):
        if labels[i, j] == EMPTY:
            continue
        if labels[i, j] != GROUND and n2 >= 0 and labels[i, n1] == GROUND and labels[i, n2] == GROUND:
            s_ref = _slope(rep, sig, i, n2, i, n1, adaptive)
            s = _slope(rep, sig, i, n1, i, j, adaptive)
            if abs(s_ref - s) < t_slope:
                labels[i, j] = GROUND
            elif s < 0:
                labels[i, j] = NOISY
            else:
                labels[i, j] = OBJECT
        n2 = n1
        n1 = j


def sgl(rep, sig, labels, origin_z, t_h, t_slope, t_dr, adaptive):
    L = labels.shape[0]
    seeds = np.full(L, -1, dtype=np.int64)
    for i in range(L):
        js = select_seed(rep, sig, labels, i, origin_z, t_h, t_slope, adaptive)
        seeds[i] = js
        if js >= 0:
            label_segment(rep, sig, labels, i, js, origin_z, t_slope, t_dr, adaptive)
    return seeds


def slope_vertical(rep, sig, labels, i, j, adaptive):
    M = labels.shape[1]
    if j - 1 >= 0 and labels[i, j - 1] == GROUND:
        return _slope(rep, sig, i, j - 1, i, j, adaptive)
    if j + 1 < M and labels[i, j + 1] == GROUND:
        return _slope(rep, sig, i, j, i, j + 1, adaptive)
    return INF


def _within(a, b, t):
    if math.isinf(a) or math.isinf(b):
        return False
    return abs(a - b) < t


def cgp_pass(rep, sig, labels, left_to_right, near_to_far, t_slope, adaptive, wrap):
    L, M = labels.shape
    rows = range(M) if near_to_far else range(M - 1, -1, -1)
    if wrap:
        cols = range(L) if left_to_right else range(L - 1, -1, -1)
    else:
        cols = range(2, L) if left_to_right else range(L - 3, -1, -1)
    step = -1 if left_to_right else 1
    changed = 0
    for j in rows:
        for i in cols:
            p1 = (i + step) % L
            p2 = (i + 2 * step) % L
            lab = labels[i, j]
            if labels[p1, j] != GROUND or lab == GROUND or lab == EMPTY:
                continue
            s_h = _slope(rep, sig, p1, j, i, j, adaptive)
            ok = False
            if labels[p2, j] == GROUND:
                ok = abs(_slope(rep, sig, p2, j, p1, j, adaptive) - s_h) < t_slope
            if not ok:
                s_v = slope_vertical(rep, sig, labels, i, j, adaptive)
                ok = _within(slope_vertical(rep, sig, labels, p1, j, adaptive), s_v, t_slope)
            if ok:
                labels[i, j] = GROUND
                changed += 1
    return changed


def node_heights(rep, zval, mask, node_xy, H):
    L, M1 = H.shape
    M = M1 - 1
    for i in range(L):
        im = (i - 1) % L
        for j in range(M1):
            if not math.isnan(H[i, j]):
                continue
            nx = node_xy[i, j, 0]
            ny = node_xy[i, j, 1]
            num = 0.0
            den = 0.0
            hit = False
            for ci, cj in ((im, j - 1), (i, j - 1), (im, j), (i, j)):
                if cj < 0 or cj >= M or not mask[ci, cj]:
                    continue
                dx = rep[ci, cj, 0] - nx
                dy = rep[ci, cj, 1] - ny
                w = math.exp(-math.sqrt(dx * dx + dy * dy))
                num += w * zval[ci, cj]
                den += w
                hit = True
            if hit:
                H[i, j] = num / den


def _deposit(rep, src_z, src_d, i, j, si, sj, k):
    dx = rep[i, j, 0] - rep[si, sj, 0]
    dy = rep[i, j, 1] - rep[si, sj, 1]
    src_z[i, j, k] = rep[si, sj, 2]
    src_d[i, j, k] = math.sqrt(dx * dx + dy * dy)


def propagate_four_paths(rep, labels):
    L, M = labels.shape
    src_z = np.full((L, M, 4), np.nan)
    src_d = np.full((L, M, 4), np.nan)
    for j in range(M):
        for k, cols in ((0, range(L)), (1, range(L - 1, -1, -1))):
            si = -1
            for i in cols:
                lab = labels[i, j]
                if lab == GROUND:
                    si = i
                elif lab == NOISY and si >= 0:
                    _deposit(rep, src_z, src_d, i, j, si, j, k)
    for i in range(L):
        for k, rows in ((2, range(M)), (3, range(M - 1, -1, -1))):
            sj = -1
            for j in rows:
                lab = labels[i, j]
                if lab == GROUND:
                    sj = j
                elif lab == NOISY and sj >= 0:
                    _deposit(rep, src_z, src_d, i, j, i, sj, k)
    return src_z, src_d


def classify(pts, cell_id, labels_flat, H, bounds, delta_alpha, L, M, t_z):
    n = len(pts)
    ground = np.zeros(n, dtype=np.uint8)
    elev = np.full(n, np.nan)
    c = cell_id
    sel = np.flatnonzero(c >= 0)
    lab = labels_flat[c[sel]]
    keep = (lab == GROUND) | (lab == NOISY)
    sel = sel[keep]
    lab = lab[keep]
    if not len(sel):
        return ground, elev
    cs = c[sel]
    i = cs // M
    j = cs % M
    x = pts[sel, 0]
    y = pts[sel, 1]
    z = pts[sel, 2]
    v = (np.pi - np.arctan2(y, x)) / delta_alpha
    a1 = np.clip(v - i, 0.0, 1.0)
    r = np.sqrt(x * x + y * y)
    b1 = np.clip((r - bounds[j]) / (bounds[j + 1] - bounds[j]), 0.0, 1.0)
    a2 = 1.0 - a1
    b2 = 1.0 - b1
    ip = (i + 1) % L
    wbl = a2 + b2
    wbr = a1 + b2
    wtl = a2 + b1
    wtr = a1 + b1
    e = (wbl * H[i, j] + wbr * H[ip, j] + wtl * H[i, j + 1] + wtr * H[ip, j + 1]) / (wbl + wbr + wtl + wtr)
    is_g = np.where(lab == GROUND, z < e + t_z, np.abs(z - e) < t_z) & ~np.isnan(e)
    ground[sel] = is_g
    elev[sel] = e
    return ground, elev
