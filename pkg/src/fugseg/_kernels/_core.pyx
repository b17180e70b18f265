# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_pure.py`` for the reference semantics.

Every function keeps the operation order of its pure-Python twin so the two
backends agree bit-for-bit on labels.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, atan2, floor, fabs, isnan, isinf, INFINITY, NAN, M_PI

cnp.import_array()

cdef enum:
    EMPTY = 0
    UNKNOWN = 1
    GROUND = 2
    NOISY = 3
    OBJECT = 4

cdef double AZIMUTH_SNAP = 1e-9


def bin_points(const double[:, ::1] pts, const unsigned char[::1] include_mask,
               const double[::1] bounds, double delta_alpha, Py_ssize_t L, Py_ssize_t M):
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t k, c, lo, hi, mid, i, j
    cdef double x, y, r, v
    cell_id_a = np.empty(n, dtype=np.int64)
    rep_a = np.full(L * M, -1, dtype=np.int64)
    offsets_a = np.zeros(L * M + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] cell_id = cell_id_a
    cdef cnp.int64_t[::1] rep = rep_a
    cdef cnp.int64_t[::1] offsets = offsets_a
    cdef double r0 = bounds[0]
    cdef double rmax = bounds[M]
    cdef Py_ssize_t nbinned = 0
    with nogil:
        for k in range(n):
            x = pts[k, 0]
            y = pts[k, 1]
            r = sqrt(x * x + y * y)
            if include_mask[k] == 0 or not (r >= r0 and r < rmax):
                cell_id[k] = -1
                continue
            v = (M_PI - atan2(y, x)) / delta_alpha
            i = <Py_ssize_t>floor(v + AZIMUTH_SNAP)
            if i < 0:
                i = 0
            elif i > L - 1:
                i = L - 1
            lo = 0
            hi = M
            while hi - lo > 1:
                mid = (lo + hi) >> 1
                if bounds[mid] <= r:
                    lo = mid
                else:
                    hi = mid
            c = i * M + lo
            cell_id[k] = c
            offsets[c + 1] += 1
            nbinned += 1
            if rep[c] < 0 or pts[k, 2] < pts[rep[c], 2]:
                rep[c] = k
        for c in range(L * M):
            offsets[c + 1] += offsets[c]
    order_a = np.empty(nbinned, dtype=np.int64)
    fill_a = offsets_a[:-1].copy()
    cdef cnp.int64_t[::1] order = order_a
    cdef cnp.int64_t[::1] fill = fill_a
    with nogil:
        for k in range(n):
            c = cell_id[k]
            if c >= 0:
                order[fill[c]] = k
                fill[c] += 1
    return cell_id_a, rep_a, order_a, offsets_a


cdef inline double pair_slope_c(double xk, double yk, double zk, double sxk, double syk, double szk,
                                double xl, double yl, double zl, double sxl, double syl, double szl,
                                bint adaptive) noexcept nogil:
    cdef double dx = xl - xk
    cdef double dy = yl - yk
    cdef double dz = zl - zk
    cdef double dr = sqrt(dx * dx + dy * dy)
    cdef double sdz, sdr, ux, uy
    if dr == 0.0:
        return NAN
    if not adaptive:
        return dz / dr
    sdz = sqrt(szl * szl + szk * szk)
    if fabs(dz) <= sdz:
        return 0.0
    ux = dx / dr
    uy = dy / dr
    sdr = sqrt(ux * ux * (sxl * sxl + sxk * sxk) + uy * uy * (syl * syl + syk * syk))
    if dz > 0:
        return (dz - sdz) / (dr + sdr)
    return (dz + sdz) / (dr + sdr)


def pair_slope(double xk, double yk, double zk, double sxk, double syk, double szk,
               double xl, double yl, double zl, double sxl, double syl, double szl, bint adaptive):
    return pair_slope_c(xk, yk, zk, sxk, syk, szk, xl, yl, zl, sxl, syl, szl, adaptive)


cdef inline double slope_c(const double[:, :, ::1] rep, const double[:, :, ::1] sig,
                           Py_ssize_t i0, Py_ssize_t j0, Py_ssize_t i1, Py_ssize_t j1,
                           bint adaptive) noexcept nogil:
    return pair_slope_c(rep[i0, j0, 0], rep[i0, j0, 1], rep[i0, j0, 2],
                        sig[i0, j0, 0], sig[i0, j0, 1], sig[i0, j0, 2],
                        rep[i1, j1, 0], rep[i1, j1, 1], rep[i1, j1, 2],
                        sig[i1, j1, 0], sig[i1, j1, 1], sig[i1, j1, 2], adaptive)


cdef inline double origin_slope_c(const double[:, :, ::1] rep, const double[:, :, ::1] sig,
                                  Py_ssize_t i, Py_ssize_t j, double origin_z,
                                  bint adaptive) noexcept nogil:
    return pair_slope_c(0.0, 0.0, origin_z, 0.0, 0.0, 0.0,
                        rep[i, j, 0], rep[i, j, 1], rep[i, j, 2],
                        sig[i, j, 0], sig[i, j, 1], sig[i, j, 2], adaptive)


cdef inline Py_ssize_t next_nonempty_c(signed char[:, ::1] labels, Py_ssize_t i, Py_ssize_t j,
                                       Py_ssize_t M) noexcept nogil:
    j += 1
    while j < M and labels[i, j] == EMPTY:
        j += 1
    return j if j < M else -1


cdef Py_ssize_t select_seed_c(const double[:, :, ::1] rep, const double[:, :, ::1] sig,
                              signed char[:, ::1] labels, Py_ssize_t i, double origin_z,
                              double t_h, double t_slope, bint adaptive) noexcept nogil:
    cdef Py_ssize_t M = labels.shape[1]
    cdef Py_ssize_t j, jn
    cdef double s0, s1
    for j in range(M):
        if labels[i, j] == EMPTY:
            continue
        if not rep[i, j, 2] < t_h:
            continue
        s0 = origin_slope_c(rep, sig, i, j, origin_z, adaptive)
        if not fabs(s0) < t_slope:
            continue
        jn = next_nonempty_c(labels, i, j, M)
        if jn >= 0:
            s1 = slope_c(rep, sig, i, j, i, jn, adaptive)
            if not fabs(s0 - s1) < t_slope:
                continue
        return j
    return -1


cdef void label_segment_c(const double[:, :, ::1] rep, const double[:, :, ::1] sig,
                          signed char[:, ::1] labels, Py_ssize_t i, Py_ssize_t j_seed,
                          double origin_z, double t_slope, double t_dr,
                          bint adaptive) noexcept nogil:
    cdef Py_ssize_t M = labels.shape[1]
    cdef Py_ssize_t j, j_last, n1, n2
    cdef double s_last, s, s_ref, dx, dy
    labels[i, j_seed] = GROUND
    j_last = j_seed
    s_last = origin_slope_c(rep, sig, i, j_seed, origin_z, adaptive)
    for j in range(j_seed + 1, M):
        if labels[i, j] == EMPTY:
            continue
        dx = rep[i, j, 0] - rep[i, j_last, 0]
        dy = rep[i, j, 1] - rep[i, j_last, 1]
        if not sqrt(dx * dx + dy * dy) < t_dr:
            continue
        s = slope_c(rep, sig, i, j_last, i, j, adaptive)
        if fabs(s_last - s) < t_slope:
            j_last = j
            s_last = s
            labels[i, j] = GROUND
        elif s < 0:
            labels[i, j] = NOISY
        else:
            labels[i, j] = OBJECT
    n1 = j_last
    n2 = next_nonempty_c(labels, i, j_last, M)
    j = j_last - 1
    while j >= 0:
        if labels[i, j] != EMPTY:
            if (labels[i, j] != GROUND and n2 >= 0 and labels[i, n1] == GROUND
                    and labels[i, n2] == GROUND):
                s_ref = slope_c(rep, sig, i, n2, i, n1, adaptive)
                s = slope_c(rep, sig, i, n1, i, j, adaptive)
                if fabs(s_ref - s) < t_slope:
                    labels[i, j] = GROUND
                elif s < 0:
                    labels[i, j] = NOISY
                else:
                    labels[i, j] = OBJECT
            n2 = n1
            n1 = j
        j -= 1


def select_seed(const double[:, :, ::1] rep, const double[:, :, ::1] sig, signed char[:, ::1] labels,
                Py_ssize_t i, double origin_z, double t_h, double t_slope, bint adaptive):
    return select_seed_c(rep, sig, labels, i, origin_z, t_h, t_slope, adaptive)


def label_segment(const double[:, :, ::1] rep, const double[:, :, ::1] sig, signed char[:, ::1] labels,
                  Py_ssize_t i, Py_ssize_t j_seed, double origin_z, double t_slope, double t_dr,
                  bint adaptive):
    label_segment_c(rep, sig, labels, i, j_seed, origin_z, t_slope, t_dr, adaptive)


def sgl(const double[:, :, ::1] rep, const double[:, :, ::1] sig, signed char[:, ::1] labels,
        double origin_z, double t_h, double t_slope, double t_dr, bint adaptive):
    cdef Py_ssize_t L = labels.shape[0]
    cdef Py_ssize_t i, js
    seeds_a = np.full(L, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] seeds = seeds_a
    with nogil:
        for i in range(L):
            js = select_seed_c(rep, sig, labels, i, origin_z, t_h, t_slope, adaptive)
            seeds[i] = js
            if js >= 0:
                label_segment_c(rep, sig, labels, i, js, origin_z, t_slope, t_dr, adaptive)
    return seeds_a


cdef inline double slope_vertical_c(const double[:, :, ::1] rep, const double[:, :, ::1] sig,
                                    signed char[:, ::1] labels, Py_ssize_t i, Py_ssize_t j,
                                    bint adaptive) noexcept nogil:
    cdef Py_ssize_t M = labels.shape[1]
    if j - 1 >= 0 and labels[i, j - 1] == GROUND:
        return slope_c(rep, sig, i, j - 1, i, j, adaptive)
    if j + 1 < M and labels[i, j + 1] == GROUND:
        return slope_c(rep, sig, i, j, i, j + 1, adaptive)
    return INFINITY


def slope_vertical(const double[:, :, ::1] rep, const double[:, :, ::1] sig, signed char[:, ::1] labels,
                   Py_ssize_t i, Py_ssize_t j, bint adaptive):
    return slope_vertical_c(rep, sig, labels, i, j, adaptive)


cdef inline Py_ssize_t wrap_index(Py_ssize_t i, Py_ssize_t L) noexcept nogil:
    i = i % L
    return i + L if i < 0 else i


def cgp_pass(const double[:, :, ::1] rep, const double[:, :, ::1] sig, signed char[:, ::1] labels,
             bint left_to_right, bint near_to_far, double t_slope, bint adaptive, bint wrap):
    cdef Py_ssize_t L = labels.shape[0]
    cdef Py_ssize_t M = labels.shape[1]
    cdef Py_ssize_t jj, ii, i, j, p1, p2, i_start, i_stop, i_step, n_cols
    cdef Py_ssize_t step = -1 if left_to_right else 1
    cdef Py_ssize_t changed = 0
    cdef signed char lab
    cdef double s_h, s_v, s_v1
    cdef bint ok
    if wrap:
        i_start = 0 if left_to_right else L - 1
        n_cols = L
    else:
        i_start = 2 if left_to_right else L - 3
        n_cols = L - 2 if L > 2 else 0
    i_step = 1 if left_to_right else -1
    with nogil:
        for jj in range(M):
            j = jj if near_to_far else M - 1 - jj
            for ii in range(n_cols):
                i = i_start + ii * i_step
                p1 = wrap_index(i + step, L)
                p2 = wrap_index(i + 2 * step, L)
                lab = labels[i, j]
                if labels[p1, j] != GROUND or lab == GROUND or lab == EMPTY:
                    continue
                s_h = slope_c(rep, sig, p1, j, i, j, adaptive)
                ok = False
                if labels[p2, j] == GROUND:
                    ok = fabs(slope_c(rep, sig, p2, j, p1, j, adaptive) - s_h) < t_slope
                if not ok:
                    s_v = slope_vertical_c(rep, sig, labels, i, j, adaptive)
                    s_v1 = slope_vertical_c(rep, sig, labels, p1, j, adaptive)
                    if not (isinf(s_v) or isinf(s_v1)):
                        ok = fabs(s_v1 - s_v) < t_slope
                if ok:
                    labels[i, j] = GROUND
                    changed += 1
    return changed


def node_heights(const double[:, :, ::1] rep, const double[:, ::1] zval, const unsigned char[:, ::1] mask,
                 const double[:, :, ::1] node_xy, double[:, ::1] H):
    cdef Py_ssize_t L = H.shape[0]
    cdef Py_ssize_t M1 = H.shape[1]
    cdef Py_ssize_t M = M1 - 1
    cdef Py_ssize_t i, j, im, q, ci, cj
    cdef double nx, ny, num, den, dx, dy, w
    cdef bint hit
    cdef Py_ssize_t cis[4]
    cdef Py_ssize_t cjs[4]
    with nogil:
        for i in range(L):
            im = wrap_index(i - 1, L)
            for j in range(M1):
                if not isnan(H[i, j]):
                    continue
                nx = node_xy[i, j, 0]
                ny = node_xy[i, j, 1]
                num = 0.0
                den = 0.0
                hit = False
                cis[0] = im; cjs[0] = j - 1
                cis[1] = i; cjs[1] = j - 1
                cis[2] = im; cjs[2] = j
                cis[3] = i; cjs[3] = j
                for q in range(4):
                    ci = cis[q]
                    cj = cjs[q]
                    if cj < 0 or cj >= M or not mask[ci, cj]:
                        continue
                    dx = rep[ci, cj, 0] - nx
                    dy = rep[ci, cj, 1] - ny
                    w = exp(-sqrt(dx * dx + dy * dy))
                    num += w * zval[ci, cj]
                    den += w
                    hit = True
                if hit:
                    H[i, j] = num / den


cdef inline void deposit_c(const double[:, :, ::1] rep, double[:, :, ::1] src_z, double[:, :, ::1] src_d,
                           Py_ssize_t i, Py_ssize_t j, Py_ssize_t si, Py_ssize_t sj,
                           Py_ssize_t k) noexcept nogil:
    cdef double dx = rep[i, j, 0] - rep[si, sj, 0]
    cdef double dy = rep[i, j, 1] - rep[si, sj, 1]
    src_z[i, j, k] = rep[si, sj, 2]
    src_d[i, j, k] = sqrt(dx * dx + dy * dy)


def propagate_four_paths(const double[:, :, ::1] rep, signed char[:, ::1] labels):
    cdef Py_ssize_t L = labels.shape[0]
    cdef Py_ssize_t M = labels.shape[1]
    src_z_a = np.full((L, M, 4), np.nan)
    src_d_a = np.full((L, M, 4), np.nan)
    cdef double[:, :, ::1] src_z = src_z_a
    cdef double[:, :, ::1] src_d = src_d_a
    cdef Py_ssize_t i, j, t, si, sj
    cdef signed char lab
    with nogil:
        for j in range(M):
            si = -1
            for i in range(L):
                lab = labels[i, j]
                if lab == GROUND:
                    si = i
                elif lab == NOISY and si >= 0:
                    deposit_c(rep, src_z, src_d, i, j, si, j, 0)
            si = -1
            for t in range(L):
                i = L - 1 - t
                lab = labels[i, j]
                if lab == GROUND:
                    si = i
                elif lab == NOISY and si >= 0:
                    deposit_c(rep, src_z, src_d, i, j, si, j, 1)
        for i in range(L):
            sj = -1
            for j in range(M):
                lab = labels[i, j]
                if lab == GROUND:
                    sj = j
                elif lab == NOISY and sj >= 0:
                    deposit_c(rep, src_z, src_d, i, j, i, sj, 2)
            sj = -1
            for t in range(M):
                j = M - 1 - t
                lab = labels[i, j]
                if lab == GROUND:
                    sj = j
                elif lab == NOISY and sj >= 0:
                    deposit_c(rep, src_z, src_d, i, j, i, sj, 3)
    return src_z_a, src_d_a


def classify(const double[:, ::1] pts, const cnp.int64_t[::1] cell_id, const signed char[::1] labels_flat,
             const double[:, ::1] H, const double[::1] bounds, double delta_alpha,
             Py_ssize_t L, Py_ssize_t M, double t_z):
    cdef Py_ssize_t n = pts.shape[0]
    ground_a = np.zeros(n, dtype=np.uint8)
    elev_a = np.full(n, np.nan)
    cdef unsigned char[::1] ground = ground_a
    cdef double[::1] elev = elev_a
    cdef Py_ssize_t k, c, i, j, ip
    cdef signed char lab
    cdef double x, y, z, v, a1, a2, b1, b2, r, wbl, wbr, wtl, wtr, e
    with nogil:
        for k in range(n):
            c = cell_id[k]
            if c < 0:
                continue
            lab = labels_flat[c]
            if lab != GROUND and lab != NOISY:
                continue
            i = c // M
            j = c % M
            x = pts[k, 0]
            y = pts[k, 1]
            z = pts[k, 2]
            v = (M_PI - atan2(y, x)) / delta_alpha
            a1 = v - i
            if a1 < 0.0:
                a1 = 0.0
            elif a1 > 1.0:
                a1 = 1.0
            r = sqrt(x * x + y * y)
            b1 = (r - bounds[j]) / (bounds[j + 1] - bounds[j])
            if b1 < 0.0:
                b1 = 0.0
            elif b1 > 1.0:
                b1 = 1.0
            a2 = 1.0 - a1
            b2 = 1.0 - b1
            ip = (i + 1) % L
            wbl = a2 + b2
            wbr = a1 + b2
            wtl = a2 + b1
            wtr = a1 + b1
            e = (wbl * H[i, j] + wbr * H[ip, j] + wtl * H[i, j + 1] + wtr * H[ip, j + 1]) / (wbl + wbr + wtl + wtr)
            elev[k] = e
            if isnan(e):
                continue
            if lab == GROUND:
                ground[k] = z < e + t_z
            else:
                ground[k] = fabs(z - e) < t_z
    return ground_a, elev_a
