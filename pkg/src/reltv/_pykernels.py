"""Pure-Python state-sum kernel; same contract as the compiled ``_kernels``.

Used when the extension is not built, and as the reference in benchmarks.
"""
import math

_I_POW = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))


def _adm(a, b, c, r):
    s = a + b + c
    return a + b >= c and b + c >= a and c + a >= b and s <= 2 * (r - 2) and not s & 1


def sixj_value(a, r, logf, sgnf, scale=0.0):
    """6j-symbol of an admissible tuple as (re, im), times exp(-scale)."""
    a0, a1, a2, a3, a4, a5 = a
    T = ((a0 + a1 + a2) >> 1, (a0 + a4 + a5) >> 1, (a1 + a3 + a5) >> 1, (a2 + a3 + a4) >> 1)
    Q = ((a0 + a1 + a3 + a4) >> 1, (a0 + a2 + a3 + a5) >> 1, (a1 + a2 + a4 + a5) >> 1)
    faces = ((a0, a1, a2), (a0, a4, a5), (a1, a3, a5), (a2, a3, a4))
    lrad = 0.0
    neg = 0
    for (x, y, z), h in zip(faces, T):
        lrad += logf[h - x] + logf[h - y] + logf[h - z] - logf[h + 1]
        if sgnf[h - x] * sgnf[h - y] * sgnf[h - z] * sgnf[h + 1] < 0:
            neg += 1
    kmin = max(T)
    kmax = min(min(Q), r - 2)
    logs = []
    signs = []
    for k in range(kmin, kmax + 1):
        lg = logf[k + 1]
        s = -sgnf[k + 1] if k & 1 else sgnf[k + 1]
        for x in T:
            lg -= logf[k - x]
            s *= sgnf[k - x]
        for y in Q:
            lg -= logf[y - k]
            s *= sgnf[y - k]
        logs.append(lg)
        signs.append(s)
    m = max(logs)
    acc = 0.0
    for s, lg in zip(signs, logs):
        acc += s * math.exp(lg - m)
    mag = acc * math.exp(0.5 * lrad + m - scale)
    pr, pi = _I_POW[(neg - a0 - a1 - a2 - a3 - a4 - a5) % 4]
    return pr * mag, pi * mag


def statesum_block(tets, order, face_ptr, face_edges, tet_ptr, tet_ids, hw, logf, sgnf,
                   r, step, first_colors, compensated, scale):
    """Sum of prod H * prod 6j over the admissible colorings in one block.

    Edges are assigned in ``order``; ``first_colors`` lists the colors of
    the first edge handled by this block.  At depth p the faces
    face_edges[face_ptr[p]:face_ptr[p+1]] become complete and are checked,
    and the tetrahedra tet_ids[tet_ptr[p]:tet_ptr[p+1]] contribute their
    6j-symbol.  Returns (re, im, number of colorings).
    """
    tets = [tuple(int(e) for e in t) for t in tets]
    order = [int(e) for e in order]
    face_ptr = [int(x) for x in face_ptr]
    face_edges = [tuple(int(e) for e in f) for f in face_edges]
    tet_ptr = [int(x) for x in tet_ptr]
    tet_ids = [int(x) for x in tet_ids]
    logf = [float(x) for x in logf]
    sgnf = [int(x) for x in sgnf]
    hw = [[float(x) for x in row] for row in hw]
    E = len(order)
    maxc = r - 2
    colors = [0] * len(hw)
    cache = {}
    out = [0.0, 0.0, 0.0, 0.0]  # sum re, sum im, compensation re, im
    count = 0

    def add(xr, xi):
        if not compensated:
            out[0] += xr
            out[1] += xi
            return
        for j, x in ((0, xr), (1, xi)):
            s = out[j]
            t = s + x
            if abs(s) >= abs(x):
                out[j + 2] += (s - t) + x
            else:
                out[j + 2] += (x - t) + s
            out[j] = t

    def visit(p, wr, wi):
        nonlocal count
        e = order[p]
        cands = first_colors if p == 0 else range(0, maxc + 1, step)
        for c in cands:
            colors[e] = c
            ok = True
            for f in range(face_ptr[p], face_ptr[p + 1]):
                x, y, z = face_edges[f]
                if not _adm(colors[x], colors[y], colors[z], r):
                    ok = False
                    break
            if not ok:
                continue
            h = hw[e][c]
            vr, vi = wr * h, wi * h
            for j in range(tet_ptr[p], tet_ptr[p + 1]):
                key = tuple(colors[x] for x in tets[tet_ids[j]])
                sj = cache.get(key)
                if sj is None:
                    sj = cache[key] = sixj_value(key, r, logf, sgnf, scale)
                vr, vi = vr * sj[0] - vi * sj[1], vr * sj[1] + vi * sj[0]
            if p == E - 1:
                add(vr, vi)
                count += 1
            else:
                visit(p + 1, vr, vi)

    visit(0, 1.0, 0.0)
    return out[0] + out[2], out[1] + out[3], count
