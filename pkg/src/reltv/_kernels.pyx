# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled state-sum kernel.

Same contract as ``reltv._pykernels``; the enumeration runs without the GIL
so blocks can be evaluated from several threads.
"""
from libc.math cimport exp, fabs
from libc.stdlib cimport free, malloc


cdef inline bint _adm(int a, int b, int c, int r) noexcept nogil:
    cdef int s = a + b + c
    if a + b < c or b + c < a or c + a < b:
        return 0
    return s <= 2 * (r - 2) and (s & 1) == 0


cdef void _sixj(const int* a, int r, const double* logf, const signed char* sgnf,
                double* buf, double scale, double* ore, double* oim) noexcept nogil:
    cdef int T[4]
    cdef int Q[3]
    cdef int F[12]
    cdef int i, k, kmin, kmax, neg = 0, e, s, tot
    cdef double lrad = 0.0, m, acc, lg, mag
    T[0] = (a[0] + a[1] + a[2]) >> 1
    T[1] = (a[0] + a[4] + a[5]) >> 1
    T[2] = (a[1] + a[3] + a[5]) >> 1
    T[3] = (a[2] + a[3] + a[4]) >> 1
    Q[0] = (a[0] + a[1] + a[3] + a[4]) >> 1
    Q[1] = (a[0] + a[2] + a[3] + a[5]) >> 1
    Q[2] = (a[1] + a[2] + a[4] + a[5]) >> 1
    F[0] = a[0]; F[1] = a[1]; F[2] = a[2]
    F[3] = a[0]; F[4] = a[4]; F[5] = a[5]
    F[6] = a[1]; F[7] = a[3]; F[8] = a[5]
    F[9] = a[2]; F[10] = a[3]; F[11] = a[4]
    for i in range(4):
        lrad += logf[T[i] - F[3 * i]] + logf[T[i] - F[3 * i + 1]] + logf[T[i] - F[3 * i + 2]] - logf[T[i] + 1]
        s = sgnf[T[i] - F[3 * i]] * sgnf[T[i] - F[3 * i + 1]] * sgnf[T[i] - F[3 * i + 2]] * sgnf[T[i] + 1]
        if s < 0:
            neg += 1
    kmin = T[0]
    for i in range(1, 4):
        if T[i] > kmin:
            kmin = T[i]
    kmax = r - 2
    for i in range(3):
        if Q[i] < kmax:
            kmax = Q[i]
    m = -1e300
    for k in range(kmin, kmax + 1):
        lg = logf[k + 1]
        for i in range(4):
            lg -= logf[k - T[i]]
        for i in range(3):
            lg -= logf[Q[i] - k]
        buf[k - kmin] = lg
        if lg > m:
            m = lg
    acc = 0.0
    for k in range(kmin, kmax + 1):
        s = sgnf[k + 1]
        if k & 1:
            s = -s
        for i in range(4):
            s *= sgnf[k - T[i]]
        for i in range(3):
            s *= sgnf[Q[i] - k]
        acc += s * exp(buf[k - kmin] - m)
    mag = acc * exp(0.5 * lrad + m - scale)
    tot = a[0] + a[1] + a[2] + a[3] + a[4] + a[5]
    e = ((neg - tot) % 4 + 4) % 4
    if e == 0:
        ore[0] = mag; oim[0] = 0.0
    elif e == 1:
        ore[0] = 0.0; oim[0] = mag
    elif e == 2:
        ore[0] = -mag; oim[0] = 0.0
    else:
        ore[0] = 0.0; oim[0] = -mag


def sixj_value(a, int r, const double[::1] logf, const signed char[::1] sgnf, double scale=0.0):
    """6j-symbol of an admissible tuple as (re, im), times exp(-scale)."""
    cdef int c[6]
    cdef double re, im
    cdef double* buf = <double*> malloc(r * sizeof(double))
    for i in range(6):
        c[i] = a[i]
    _sixj(c, r, &logf[0], &sgnf[0], buf, scale, &re, &im)
    free(buf)
    return re, im


cdef inline void _neumaier(double* s, double* comp, double x) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        comp[0] += (s[0] - t) + x
    else:
        comp[0] += (x - t) + s[0]
    s[0] = t


def statesum_block(const int[:, ::1] tets, const int[::1] order, const int[::1] face_ptr,
                   const int[:, ::1] face_edges, const int[::1] tet_ptr, const int[::1] tet_ids,
                   const double[:, ::1] hw, const double[::1] logf, const signed char[::1] sgnf,
                   int r, int step, const int[::1] first_colors, bint compensated, double scale):
    """Sum of prod H * prod 6j over the admissible colorings in one block.

    See ``reltv._pykernels.statesum_block`` for the meaning of the arrays.
    """
    cdef int E = order.shape[0]
    cdef int nedges = hw.shape[0]
    cdef int nfirst = first_colors.shape[0]
    cdef int maxc = r - 2
    cdef int p, c, e, f, j, t, ok
    cdef long long count = 0
    cdef double vr, vi, sr, si, tmp, h
    cdef double sum_re = 0.0, sum_im = 0.0, comp_re = 0.0, comp_im = 0.0
    cdef int a6[6]
    cdef int* colors = <int*> malloc(nedges * sizeof(int))
    cdef int* nxt = <int*> malloc((E + 1) * sizeof(int))
    cdef double* wre = <double*> malloc((E + 1) * sizeof(double))
    cdef double* wim = <double*> malloc((E + 1) * sizeof(double))
    cdef double* buf = <double*> malloc((r + 1) * sizeof(double))
    if not (colors and nxt and wre and wim and buf):
        free(colors); free(nxt); free(wre); free(wim); free(buf)
        raise MemoryError()
    with nogil:
        wre[0] = 1.0
        wim[0] = 0.0
        p = 0
        nxt[0] = 0
        while p >= 0:
            if p == 0:
                if nxt[0] >= nfirst:
                    break
                c = first_colors[nxt[0]]
            else:
                c = nxt[p] * step
                if c > maxc:
                    p -= 1
                    continue
            nxt[p] += 1
            e = order[p]
            colors[e] = c
            ok = 1
            for f in range(face_ptr[p], face_ptr[p + 1]):
                if not _adm(colors[face_edges[f, 0]], colors[face_edges[f, 1]], colors[face_edges[f, 2]], r):
                    ok = 0
                    break
            if not ok:
                continue
            h = hw[e, c]
            vr = wre[p] * h
            vi = wim[p] * h
            for j in range(tet_ptr[p], tet_ptr[p + 1]):
                t = tet_ids[j]
                for f in range(6):
                    a6[f] = colors[tets[t, f]]
                _sixj(a6, r, &logf[0], &sgnf[0], buf, scale, &sr, &si)
                tmp = vr * sr - vi * si
                vi = vr * si + vi * sr
                vr = tmp
            if p == E - 1:
                if compensated:
                    _neumaier(&sum_re, &comp_re, vr)
                    _neumaier(&sum_im, &comp_im, vi)
                else:
                    sum_re += vr
                    sum_im += vi
                count += 1
            else:
                wre[p + 1] = vr
                wim[p + 1] = vi
                p += 1
                nxt[p] = 0
    free(colors); free(nxt); free(wre); free(wim); free(buf)
    return sum_re + comp_re, sum_im + comp_im, count
