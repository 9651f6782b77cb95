"""Pure-Python reference for the inner loops of the Gaussian optimizer.

``_ckernels.pyx`` mirrors this module operation for operation; keep the two
in sync. All values are in nats.

Layouts
-------
gains ``g``: ``g01, g02, g03, g12, g13, g23``
allocation ``a`` (13): ``a22 b22 | a11 a12 b11 | a00 a01 a02 b01 b02 f01 f02 f03``
covariance factor (9): rows ``l0 | l1 | l2`` with ``K = L L^T``
"""
import math

OBJ_COROLLARY = 0
OBJ_CUTSET = 1

ALLOC_BLOCKS = (2, 2, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0)
CUTSET_BLOCKS = (0, 0, 0, 1, 1, 1, 2, 2, 2)

COMBOS = ("I1+I4+I5", "I2+I3+I5", "I2+I7", "I4+I6", "I8")


def corollary_terms(g, a, p, i4_mode):
    g01, g02, g03, g12, g13, g23 = g[0], g[1], g[2], g[3], g[4], g[5]
    a22, b22, a11, a12, b11 = a[0], a[1], a[2], a[3], a[4]
    a00, a01, a02, b01, b02 = a[5], a[6], a[7], a[8], a[9]
    f01, f02, f03 = a[10], a[11], a[12]

    relay1_noise = g01 * g01 * (b02 * b02 + f02 * f02 + f03 * f03) + 1.0
    i1 = 0.5 * math.log1p(g01 * g01 * f01 * f01 / relay1_noise)
    i2 = 0.5 * math.log1p(g01 * g01 * (a00 * a00 + f01 * f01) / relay1_noise)

    c = g02 * b01 + g12 * b11
    relay2_noise = c * c + g02 * g02 * (f01 * f01 + f03 * f03) + 1.0
    i3 = 0.5 * math.log1p(g02 * g02 * f02 * f02 / relay2_noise)
    w1 = g02 * a01 + g12 * a11
    if i4_mode == 0:
        s = a00 + f02
        own = s * s
    else:
        own = a00 * a00 + f02 * f02
    i4 = 0.5 * math.log1p((g02 * g02 * own + w1 * w1) / relay2_noise)

    i5 = 0.5 * math.log1p(g03 * g03 * f03 * f03)
    c = g03 * b01 + g13 * b11
    i6 = 0.5 * math.log1p(c * c + g03 * g03 * (f01 * f01 + f03 * f03))
    c = g03 * b02 + g23 * b22
    i7 = 0.5 * math.log1p(c * c + g03 * g03 * (f02 * f02 + f03 * f03))
    v = (
        g03 * g03 * p[0]
        + g13 * g13 * p[1]
        + g23 * g23 * p[2]
        + 2.0 * g03 * g13 * (a01 * a11 + a02 * a12 + b01 * b11)
        + 2.0 * g03 * g23 * (a02 * a22 + b02 * b22)
        + 2.0 * g13 * g23 * a12 * a22
    )
    i8 = 0.5 * math.log1p(v)
    return [i1, i2, i3, i4, i5, i6, i7, i8]


def combine(t):
    """Five rate combinations and the index of the first minimum."""
    vals = (
        t[0] + t[3] + t[4],
        t[1] + t[2] + t[4],
        t[1] + t[6],
        t[3] + t[5],
        t[7],
    )
    best = 0
    for k in range(1, 5):
        if vals[k] < vals[best]:
            best = k
    return vals[best], best


def corollary_rate(g, a, p, i4_mode):
    return combine(corollary_terms(g, a, p, i4_mode))


def _residuals(targets, basis):
    """Components of ``targets`` orthogonal to ``span(basis)`` (3-vectors)."""
    q = []
    for u in basis:
        n0 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
        w = [u[0], u[1], u[2]]
        for e in q:
            d = w[0] * e[0] + w[1] * e[1] + w[2] * e[2]
            w[0] -= d * e[0]
            w[1] -= d * e[1]
            w[2] -= d * e[2]
        n = w[0] * w[0] + w[1] * w[1] + w[2] * w[2]
        if n > 1e-12 * n0 and n > 1e-300:
            s = 1.0 / math.sqrt(n)
            q.append([w[0] * s, w[1] * s, w[2] * s])
    out = []
    for u in targets:
        w = [u[0], u[1], u[2]]
        for e in q:
            d = w[0] * e[0] + w[1] * e[1] + w[2] * e[2]
            w[0] -= d * e[0]
            w[1] -= d * e[1]
            w[2] -= d * e[2]
        out.append(w)
    return out


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _two_receiver(y, z):
    m11 = 1.0 + _dot(y, y)
    m22 = 1.0 + _dot(z, z)
    m12 = _dot(y, z)
    return 0.5 * math.log(m11 * m22 - m12 * m12)


def cutset_cuts(g, rows):
    """Cut values for source sides {0}, {0,1}, {0,2}, {0,1,2}."""
    g01, g02, g03, g12, g13, g23 = g[0], g[1], g[2], g[3], g[4], g[5]
    l0 = [rows[0], rows[1], rows[2]]
    l1 = [rows[3], rows[4], rows[5]]
    l2 = [rows[6], rows[7], rows[8]]

    r0 = _residuals([l0], [l1, l2])[0]
    c0 = 0.5 * math.log1p((g01 * g01 + g02 * g02 + g03 * g03) * _dot(r0, r0))

    r0, r1 = _residuals([l0, l1], [l2])
    y2 = [g02 * r0[i] + g12 * r1[i] for i in range(3)]
    y3 = [g03 * r0[i] + g13 * r1[i] for i in range(3)]
    c01 = _two_receiver(y2, y3)

    r0, r2 = _residuals([l0, l2], [l1])
    y1 = [g01 * r0[i] for i in range(3)]
    y3 = [g03 * r0[i] + g23 * r2[i] for i in range(3)]
    c02 = _two_receiver(y1, y3)

    y3 = [g03 * l0[i] + g13 * l1[i] + g23 * l2[i] for i in range(3)]
    c012 = 0.5 * math.log1p(_dot(y3, y3))
    return [c0, c01, c02, c012]


def cutset_value(g, rows):
    c = cutset_cuts(g, rows)
    best = 0
    for k in range(1, 4):
        if c[k] < c[best]:
            best = k
    return c[best], best


def project(x, block_of, powers):
    """Rescale each node block onto its power sphere; None if impossible."""
    norms = [0.0, 0.0, 0.0]
    for i in range(len(x)):
        norms[block_of[i]] += x[i] * x[i]
    scale = [0.0, 0.0, 0.0]
    for b in range(3):
        if powers[b] > 0.0:
            if norms[b] <= 0.0:
                return None
            scale[b] = math.sqrt(powers[b] / norms[b])
    return [x[i] * scale[block_of[i]] for i in range(len(x))]


def _objective(kind, g, x, p, i4_mode):
    if kind == OBJ_COROLLARY:
        return corollary_rate(g, x, p, i4_mode)[0]
    return cutset_value(g, x)[0]


def pattern_search(kind, g, x0, block_of, powers, mask, initial_step, shrink, stop_step, max_evals, i4_mode):
    """Opportunistic compass search on the product of power spheres.

    Each coordinate is moved by ``+-step * sqrt(P_node)``, the point is
    reprojected and the move kept on strict improvement. A sweep without any
    accepted move multiplies the step by ``shrink``. Returns the final point,
    its objective value and the number of evaluations.
    """
    x = project(list(x0), block_of, powers)
    if x is None:
        raise ValueError("starting point has a zero block on a node with positive power")
    sq = [math.sqrt(p) for p in powers]
    f = _objective(kind, g, x, powers, i4_mode)
    evals = 1
    step = initial_step
    n = len(x)
    while step >= stop_step and evals < max_evals:
        improved = False
        for i in range(n):
            if not mask[i] or sq[block_of[i]] == 0.0:
                continue
            for sign in (1.0, -1.0):
                y = list(x)
                y[i] += sign * step * sq[block_of[i]]
                y = project(y, block_of, powers)
                if y is None:
                    continue
                fy = _objective(kind, g, y, powers, i4_mode)
                evals += 1
                if fy > f:
                    x, f = y, fy
                    improved = True
                    break
            if evals >= max_evals:
                break
        if not improved:
            step *= shrink
    return x, f, evals
