# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled decode loop — exact twin of the NumPy backend.

Semantics (flooding schedule, per-message renormalization with the
1e-300 floor, degenerate rows replaced by uniform and flagged, hard
ties to the lowest class id, stop test every iteration including on
the channel evidence alone) are identical to ``py_backend.decode``;
this module exists purely to make large frames fast on one core.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()

__all__ = ["decode"]

cdef double FLOOR = 1e-300


cdef inline bint _norm_row(double[:] x) noexcept:
    """Floor + renormalize one row; True when the raw row was degenerate."""
    cdef Py_ssize_t i, k = x.shape[0]
    cdef double s = 0.0, s2 = 0.0
    cdef bint bad
    for i in range(k):
        s += x[i]
    bad = (not isfinite(s)) or (s <= 0.0)
    if bad:
        for i in range(k):
            x[i] = 1.0
    for i in range(k):
        if x[i] < FLOOR:
            x[i] = FLOOR
        s2 += x[i]
    for i in range(k):
        x[i] /= s2
    return bad


cdef inline void _conv(const double[:] a, const double[:] b, double[:] out) noexcept:
    """Group convolution over (Z_2)^log2(D): out[s] = sum_p a[p] b[p^s]."""
    cdef Py_ssize_t s, p, d = a.shape[0]
    cdef double acc
    for s in range(d):
        acc = 0.0
        for p in range(d):
            acc += a[p] * b[p ^ s]
        out[s] = acc


cdef bint _check_pass(
    const cnp.int32_t[:] chk_ptr,
    const cnp.int32_t[:] chk_edges,
    const cnp.int32_t[:, :] perm,
    const cnp.int32_t[:] map_tab,
    const double[:] inv_csize,
    double[:, :] t,
    double[:, :] tau,
    double[:, :] r,
    double[:, :] pref,
    double[:, :] suf,
    double[:, :] w,
) noexcept:
    cdef Py_ssize_t m_checks = chk_ptr.shape[0] - 1
    cdef Py_ssize_t d = tau.shape[1]
    cdef Py_ssize_t k = w.shape[1]
    cdef Py_ssize_t e_all = tau.shape[0]
    cdef Py_ssize_t m, i, j, s, e, deg, kk
    cdef bint fail = False

    # lift cluster messages to group states through each edge's permutation
    for e in range(e_all):
        for s in range(d):
            tau[e, perm[e, s]] = t[e, map_tab[s]] * inv_csize[map_tab[s]]

    for m in range(m_checks):
        deg = chk_ptr[m + 1] - chk_ptr[m]
        if deg == 0:
            continue
        for s in range(d):
            pref[0, s] = 0.0
            suf[deg, s] = 0.0
        pref[0, 0] = 1.0
        suf[deg, 0] = 1.0
        for i in range(deg):
            e = chk_edges[chk_ptr[m] + i]
            _conv(pref[i], tau[e], pref[i + 1])
            j = deg - 1 - i
            e = chk_edges[chk_ptr[m] + j]
            _conv(suf[j + 1], tau[e], suf[j])
        for i in range(deg):
            e = chk_edges[chk_ptr[m] + i]
            _conv(pref[i], suf[i + 1], r[e])

    # project back: gather own permutation, accumulate onto clusters
    for e in range(e_all):
        for kk in range(k):
            w[e, kk] = 0.0
        for s in range(d):
            w[e, map_tab[s]] += r[e, perm[e, s]]
        if _norm_row(w[e]):
            fail = True
    return fail


cdef bint _symbol_pass(
    const cnp.int32_t[:] sym_ptr,
    const cnp.int32_t[:] sym_edges,
    const double[:, :] prior_pow1,
    const double[:, :] prior_pow0,
    const double[:, :] u,
    double[:, :] w,
    double[:, :] t,
    double[:, :] spref,
    double[:, :] ssuf,
    double[:, :] posterior,
) noexcept:
    cdef Py_ssize_t n = sym_ptr.shape[0] - 1
    cdef Py_ssize_t k = u.shape[1]
    cdef Py_ssize_t n0, i, j, kk, e, deg
    cdef bint fail = False

    for n0 in range(n):
        deg = sym_ptr[n0 + 1] - sym_ptr[n0]
        if deg == 0:
            for kk in range(k):
                posterior[n0, kk] = u[n0, kk]
            continue
        for kk in range(k):
            spref[0, kk] = 1.0
            ssuf[deg, kk] = 1.0
        for i in range(deg):
            e = sym_edges[sym_ptr[n0] + i]
            for kk in range(k):
                spref[i + 1, kk] = spref[i, kk] * w[e, kk]
            j = deg - 1 - i
            e = sym_edges[sym_ptr[n0] + j]
            for kk in range(k):
                ssuf[j, kk] = ssuf[j + 1, kk] * w[e, kk]
        for i in range(deg):
            e = sym_edges[sym_ptr[n0] + i]
            for kk in range(k):
                t[e, kk] = (
                    prior_pow1[n0, kk] * u[n0, kk] * spref[i, kk] * ssuf[i + 1, kk]
                )
            if _norm_row(t[e]):
                fail = True
        for kk in range(k):
            posterior[n0, kk] = prior_pow0[n0, kk] * u[n0, kk] * spref[deg, kk]
    # whole-matrix renormalization mirrors the NumPy backend
    for n0 in range(n):
        if _norm_row(posterior[n0]):
            fail = True
    return fail


cdef void _decide(
    const cnp.int32_t[:] merge_tab,
    const double[:, :] posterior,
    double[:] merged,
    cnp.int32_t[:] hard,
    cnp.int32_t[:] fine,
) noexcept:
    cdef Py_ssize_t n = posterior.shape[0]
    cdef Py_ssize_t k = posterior.shape[1]
    cdef Py_ssize_t kp = merged.shape[0]
    cdef Py_ssize_t n0, kk, c, best
    cdef double best_v
    for n0 in range(n):
        for c in range(kp):
            merged[c] = 0.0
        for kk in range(k):
            merged[merge_tab[kk]] += posterior[n0, kk]
        best = 0
        best_v = merged[0]
        for c in range(1, kp):
            if merged[c] > best_v:
                best_v = merged[c]
                best = c
        hard[n0] = <cnp.int32_t> best
        best = 0
        best_v = posterior[n0, 0]
        for kk in range(1, k):
            if posterior[n0, kk] > best_v:
                best_v = posterior[n0, kk]
                best = kk
        fine[n0] = <cnp.int32_t> best


cdef bint _satisfied(
    const cnp.int32_t[:] chk_ptr,
    const cnp.int32_t[:] chk_edges,
    const cnp.int32_t[:] edge_sym,
    const cnp.int32_t[:, :] perm,
    const cnp.uint8_t[:, :] allowed,
    const cnp.int32_t[:] merge_tab,
    const cnp.int32_t[:] hard,
    const cnp.int32_t[:] fine,
    double[:, :] bmask,
    double[:] reach,
    double[:] reach2,
) noexcept:
    cdef Py_ssize_t m_checks = chk_ptr.shape[0] - 1
    cdef Py_ssize_t d = bmask.shape[1]
    cdef Py_ssize_t e_all = bmask.shape[0]
    cdef Py_ssize_t nsym = hard.shape[0]
    cdef Py_ssize_t m, i, s, e, deg, cls
    # broadcast word must be the merge of the fine word; tab consistency is
    # then tested at the fine level (coarse-only tests stop too early on
    # cluster maps without group structure)
    for i in range(nsym):
        if merge_tab[fine[i]] != hard[i]:
            return False
    for e in range(e_all):
        cls = fine[edge_sym[e]]
        for s in range(d):
            bmask[e, perm[e, s]] = <double> allowed[cls, s]
    for m in range(m_checks):
        deg = chk_ptr[m + 1] - chk_ptr[m]
        if deg == 0:
            continue
        for s in range(d):
            reach[s] = 0.0
        reach[0] = 1.0
        for i in range(deg):
            e = chk_edges[chk_ptr[m] + i]
            _conv(reach, bmask[e], reach2)
            for s in range(d):
                reach[s] = 1.0 if reach2[s] > 0.0 else 0.0
        if not reach[0] > 0.0:
            return False
    return True


def decode(g, u_init, int max_iter):
    """Run the full decode loop; see the NumPy backend for the contract."""
    cdef bint fail = False
    cdef cnp.ndarray[double, ndim=2] u_arr = np.array(u_init, dtype=np.float64)
    cdef double[:, :] u = u_arr
    cdef Py_ssize_t n0
    for n0 in range(u.shape[0]):
        if _norm_row(u[n0]):
            fail = True

    cdef const cnp.int32_t[:] edge_sym = g.edge_sym
    cdef const cnp.int32_t[:, :] perm = g.perm
    cdef const cnp.int32_t[:] map_tab = g.map_tab
    cdef const cnp.int32_t[:] merge_tab = g.merge_tab
    cdef const double[:] inv_csize = g.inv_csize
    cdef const cnp.uint8_t[:, :] allowed = g.allowed
    cdef const double[:, :] prior_pow1 = g.prior_pow1
    cdef const double[:, :] prior_pow0 = g.prior_pow0
    cdef const cnp.int32_t[:] chk_ptr = g.chk_ptr
    cdef const cnp.int32_t[:] chk_edges = g.chk_edges
    cdef const cnp.int32_t[:] sym_ptr = g.sym_ptr
    cdef const cnp.int32_t[:] sym_edges = g.sym_edges

    cdef Py_ssize_t n = g.n, e_all = g.e, d = g.d, k = g.k, kp = g.k_hard
    cdef int max_cdeg = int(np.max(g.chk_deg)) if g.m else 0
    cdef int max_sdeg = int(np.max(g.sym_deg)) if g.n else 0

    cdef cnp.ndarray[double, ndim=2] t_arr = np.empty((e_all, k))
    cdef double[:, :] t = t_arr
    cdef cnp.ndarray[double, ndim=2] post_arr = u_arr.copy()
    cdef double[:, :] posterior = post_arr
    cdef cnp.ndarray[cnp.int32_t, ndim=1] hard_arr = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[:] hard = hard_arr
    cdef cnp.int32_t[:] fine = np.empty(n, dtype=np.int32)

    cdef double[:, :] tau = np.empty((e_all, d))
    cdef double[:, :] r = np.empty((e_all, d))
    cdef double[:, :] w = np.empty((e_all, k))
    cdef double[:, :] pref = np.empty((max_cdeg + 1, d))
    cdef double[:, :] suf = np.empty((max_cdeg + 1, d))
    cdef double[:, :] spref = np.empty((max_sdeg + 1, k))
    cdef double[:, :] ssuf = np.empty((max_sdeg + 1, k))
    cdef double[:, :] bmask = np.empty((e_all, d))
    cdef double[:] merged = np.empty(kp)
    cdef double[:] reach = np.empty(d)
    cdef double[:] reach2 = np.empty(d)

    cdef Py_ssize_t e, kk
    for e in range(e_all):
        for kk in range(k):
            t[e, kk] = u[edge_sym[e], kk]

    _decide(merge_tab, posterior, merged, hard, fine)
    if _satisfied(
        chk_ptr, chk_edges, edge_sym, perm, allowed, merge_tab, hard, fine,
        bmask, reach, reach2,
    ):
        return hard_arr, True, 0, post_arr, bool(fail)

    cdef int it
    for it in range(1, max_iter + 1):
        if _check_pass(
            chk_ptr, chk_edges, perm, map_tab, inv_csize, t, tau, r, pref, suf, w
        ):
            fail = True
        if _symbol_pass(
            sym_ptr, sym_edges, prior_pow1, prior_pow0, u, w, t, spref, ssuf, posterior
        ):
            fail = True
        _decide(merge_tab, posterior, merged, hard, fine)
        if _satisfied(
            chk_ptr, chk_edges, edge_sym, perm, allowed, merge_tab, hard, fine,
            bmask, reach, reach2,
        ):
            return hard_arr, True, it, post_arr, bool(fail)
    return hard_arr, False, max_iter, post_arr, bool(fail)
