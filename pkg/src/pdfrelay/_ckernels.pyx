# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of :mod:`pdfrelay._pykernels`.

Same layouts, same operation order, same results to the last bit on IEEE
hardware without fast-math.
"""
from libc.math cimport log, log1p, sqrt

cdef enum:
    MAXN = 16

OBJ_COROLLARY = 0
OBJ_CUTSET = 1


cdef void _terms(const double* g, const double* a, const double* p, int i4_mode, double* out) noexcept nogil:
    cdef double g01 = g[0], g02 = g[1], g03 = g[2], g12 = g[3], g13 = g[4], g23 = g[5]
    cdef double a22 = a[0], b22 = a[1], a11 = a[2], a12 = a[3], b11 = a[4]
    cdef double a00 = a[5], a01 = a[6], a02 = a[7], b01 = a[8], b02 = a[9]
    cdef double f01 = a[10], f02 = a[11], f03 = a[12]
    cdef double relay1_noise, relay2_noise, c, w1, s, own, v

    relay1_noise = g01 * g01 * (b02 * b02 + f02 * f02 + f03 * f03) + 1.0
    out[0] = 0.5 * log1p(g01 * g01 * f01 * f01 / relay1_noise)
    out[1] = 0.5 * log1p(g01 * g01 * (a00 * a00 + f01 * f01) / relay1_noise)

    c = g02 * b01 + g12 * b11
    relay2_noise = c * c + g02 * g02 * (f01 * f01 + f03 * f03) + 1.0
    out[2] = 0.5 * log1p(g02 * g02 * f02 * f02 / relay2_noise)
    w1 = g02 * a01 + g12 * a11
    if i4_mode == 0:
        s = a00 + f02
        own = s * s
    else:
        own = a00 * a00 + f02 * f02
    out[3] = 0.5 * log1p((g02 * g02 * own + w1 * w1) / relay2_noise)

    out[4] = 0.5 * log1p(g03 * g03 * f03 * f03)
    c = g03 * b01 + g13 * b11
    out[5] = 0.5 * log1p(c * c + g03 * g03 * (f01 * f01 + f03 * f03))
    c = g03 * b02 + g23 * b22
    out[6] = 0.5 * log1p(c * c + g03 * g03 * (f02 * f02 + f03 * f03))
    v = (
        g03 * g03 * p[0]
        + g13 * g13 * p[1]
        + g23 * g23 * p[2]
        + 2.0 * g03 * g13 * (a01 * a11 + a02 * a12 + b01 * b11)
        + 2.0 * g03 * g23 * (a02 * a22 + b02 * b22)
        + 2.0 * g13 * g23 * a12 * a22
    )
    out[7] = 0.5 * log1p(v)


cdef double _combine(const double* t, int* which) noexcept nogil:
    cdef double vals[5]
    cdef int k, best = 0
    vals[0] = t[0] + t[3] + t[4]
    vals[1] = t[1] + t[2] + t[4]
    vals[2] = t[1] + t[6]
    vals[3] = t[3] + t[5]
    vals[4] = t[7]
    for k in range(1, 5):
        if vals[k] < vals[best]:
            best = k
    which[0] = best
    return vals[best]


cdef inline double _dot(const double* u, const double* v) noexcept nogil:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


cdef int _orthonormal(const double* rows, const int* idx, int count, double* q) noexcept nogil:
    """Gram-Schmidt basis of the listed rows, same thresholds as the Python twin."""
    cdef int m = 0, j, k
    cdef double w[3]
    cdef double n0, n, d, s
    for j in range(count):
        w[0] = rows[3 * idx[j]]
        w[1] = rows[3 * idx[j] + 1]
        w[2] = rows[3 * idx[j] + 2]
        n0 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
        for k in range(m):
            d = w[0] * q[3 * k] + w[1] * q[3 * k + 1] + w[2] * q[3 * k + 2]
            w[0] -= d * q[3 * k]
            w[1] -= d * q[3 * k + 1]
            w[2] -= d * q[3 * k + 2]
        n = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
        if n > 1e-12 * n0 and n > 1e-300:
            s = 1.0 / sqrt(n)
            q[3 * m] = w[0] * s
            q[3 * m + 1] = w[1] * s
            q[3 * m + 2] = w[2] * s
            m += 1
    return m


cdef void _residual(const double* rows, int i, const double* q, int m, double* out) noexcept nogil:
    cdef int k
    cdef double d
    out[0] = rows[3 * i]
    out[1] = rows[3 * i + 1]
    out[2] = rows[3 * i + 2]
    for k in range(m):
        d = out[0] * q[3 * k] + out[1] * q[3 * k + 1] + out[2] * q[3 * k + 2]
        out[0] -= d * q[3 * k]
        out[1] -= d * q[3 * k + 1]
        out[2] -= d * q[3 * k + 2]


cdef inline double _two_receiver(const double* y, const double* z) noexcept nogil:
    cdef double m11 = 1.0 + _dot(y, y)
    cdef double m22 = 1.0 + _dot(z, z)
    cdef double m12 = _dot(y, z)
    return 0.5 * log(m11 * m22 - m12 * m12)


cdef void _cuts(const double* g, const double* rows, double* out) noexcept nogil:
    cdef double g01 = g[0], g02 = g[1], g03 = g[2], g12 = g[3], g13 = g[4], g23 = g[5]
    cdef double q[9]
    cdef double r0[3]
    cdef double r1[3]
    cdef double y[3]
    cdef double z[3]
    cdef int idx[2]
    cdef int m, i

    idx[0] = 1
    idx[1] = 2
    m = _orthonormal(rows, idx, 2, q)
    _residual(rows, 0, q, m, r0)
    out[0] = 0.5 * log1p((g01 * g01 + g02 * g02 + g03 * g03) * _dot(r0, r0))

    idx[0] = 2
    m = _orthonormal(rows, idx, 1, q)
    _residual(rows, 0, q, m, r0)
    _residual(rows, 1, q, m, r1)
    for i in range(3):
        y[i] = g02 * r0[i] + g12 * r1[i]
        z[i] = g03 * r0[i] + g13 * r1[i]
    out[1] = _two_receiver(y, z)

    idx[0] = 1
    m = _orthonormal(rows, idx, 1, q)
    _residual(rows, 0, q, m, r0)
    _residual(rows, 2, q, m, r1)
    for i in range(3):
        y[i] = g01 * r0[i]
        z[i] = g03 * r0[i] + g23 * r1[i]
    out[2] = _two_receiver(y, z)

    for i in range(3):
        y[i] = g03 * rows[i] + g13 * rows[3 + i] + g23 * rows[6 + i]
    out[3] = 0.5 * log1p(_dot(y, y))


cdef double _cut_min(const double* c, int* which) noexcept nogil:
    cdef int k, best = 0
    for k in range(1, 4):
        if c[k] < c[best]:
            best = k
    which[0] = best
    return c[best]


cdef int _project(double* x, int n, const int* block_of, const double* powers) noexcept nogil:
    cdef double norms[3]
    cdef double scale[3]
    cdef int i, b
    norms[0] = 0.0
    norms[1] = 0.0
    norms[2] = 0.0
    for i in range(n):
        norms[block_of[i]] += x[i] * x[i]
    for b in range(3):
        scale[b] = 0.0
        if powers[b] > 0.0:
            if norms[b] <= 0.0:
                return 0
            scale[b] = sqrt(powers[b] / norms[b])
    for i in range(n):
        x[i] = x[i] * scale[block_of[i]]
    return 1


cdef double _objective(int kind, const double* g, const double* x, const double* p, int i4_mode) noexcept nogil:
    cdef double buf[8]
    cdef int which
    if kind == 0:
        _terms(g, x, p, i4_mode, buf)
        return _combine(buf, &which)
    _cuts(g, x, buf)
    return _cut_min(buf, &which)


cdef int _load(object seq, double* dst, int n) except -1:
    cdef int i
    if len(seq) < n:
        raise ValueError(f"expected {n} values, got {len(seq)}")
    for i in range(n):
        dst[i] = seq[i]
    return 0


def corollary_terms(g, a, p, int i4_mode):
    cdef double cg[6]
    cdef double ca[13]
    cdef double cp[3]
    cdef double out[8]
    _load(g, cg, 6)
    _load(a, ca, 13)
    _load(p, cp, 3)
    _terms(cg, ca, cp, i4_mode, out)
    return [out[i] for i in range(8)]


def combine(t):
    cdef double ct[8]
    cdef int which
    _load(t, ct, 8)
    value = _combine(ct, &which)
    return value, which


def corollary_rate(g, a, p, int i4_mode):
    cdef double cg[6]
    cdef double ca[13]
    cdef double cp[3]
    cdef double out[8]
    cdef int which
    _load(g, cg, 6)
    _load(a, ca, 13)
    _load(p, cp, 3)
    _terms(cg, ca, cp, i4_mode, out)
    value = _combine(out, &which)
    return value, which


def cutset_cuts(g, rows):
    cdef double cg[6]
    cdef double cr[9]
    cdef double out[4]
    _load(g, cg, 6)
    _load(rows, cr, 9)
    _cuts(cg, cr, out)
    return [out[i] for i in range(4)]


def cutset_value(g, rows):
    cdef double cg[6]
    cdef double cr[9]
    cdef double out[4]
    cdef int which
    _load(g, cg, 6)
    _load(rows, cr, 9)
    _cuts(cg, cr, out)
    value = _cut_min(out, &which)
    return value, which


def project(x, block_of, powers):
    cdef int n = len(x)
    cdef double cx[MAXN]
    cdef int cb[MAXN]
    cdef double cp[3]
    cdef int i
    if n > MAXN:
        raise ValueError("vector too long")
    _load(x, cx, n)
    for i in range(n):
        cb[i] = block_of[i]
    _load(powers, cp, 3)
    if not _project(cx, n, cb, cp):
        return None
    return [cx[i] for i in range(n)]


def pattern_search(int kind, g, x0, block_of, powers, mask, double initial_step, double shrink,
                   double stop_step, long max_evals, int i4_mode):
    cdef int n = len(x0)
    cdef double cg[6]
    cdef double x[MAXN]
    cdef double y[MAXN]
    cdef int cb[MAXN]
    cdef int cm[MAXN]
    cdef double cp[3]
    cdef double sq[3]
    cdef double f, fy, step, sign
    cdef long evals
    cdef int i, j, s, improved
    if n > MAXN:
        raise ValueError("vector too long")
    _load(g, cg, 6)
    _load(x0, x, n)
    _load(powers, cp, 3)
    for i in range(n):
        cb[i] = block_of[i]
        cm[i] = 1 if mask[i] else 0
    if not _project(x, n, cb, cp):
        raise ValueError("starting point has a zero block on a node with positive power")
    with nogil:
        for i in range(3):
            sq[i] = sqrt(cp[i])
        f = _objective(kind, cg, x, cp, i4_mode)
        evals = 1
        step = initial_step
        while step >= stop_step and evals < max_evals:
            improved = 0
            for i in range(n):
                if cm[i] == 0 or sq[cb[i]] == 0.0:
                    continue
                for s in range(2):
                    sign = 1.0 if s == 0 else -1.0
                    for j in range(n):
                        y[j] = x[j]
                    y[i] += sign * step * sq[cb[i]]
                    if not _project(y, n, cb, cp):
                        continue
                    fy = _objective(kind, cg, y, cp, i4_mode)
                    evals += 1
                    if fy > f:
                        for j in range(n):
                            x[j] = y[j]
                        f = fy
                        improved = 1
                        break
                if evals >= max_evals:
                    break
            if not improved:
                step *= shrink
    return [x[i] for i in range(n)], f, evals
