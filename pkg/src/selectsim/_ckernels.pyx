# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_py``; keep the two in lock-step."""
from libc.math cimport sqrt, fabs, ceil, floor, INFINITY
from libc.stdlib cimport malloc, free

DEF C_DISK = 0
DEF C_RECT = 1
DEF C_EPS = 1e-9

DISK = C_DISK
RECT = C_RECT
EPS = C_EPS
INF = INFINITY
SQRT2 = sqrt(2.0)


class PropagationError(RuntimeError):
    """Raised when a push chain is deeper than the number of active objects."""


cdef inline double _max(double a, double b) nogil:
    return b if b > a else a


cdef inline double _min(double a, double b) nogil:
    return b if b < a else a


cdef double _overlap(int k1, double a1, double b1, double x1, double y1,
                     int k2, double a2, double b2, double x2, double y2) nogil:
    cdef double dx, dy, d, ox, oy, r, cx, cy, hx, hy, rx, ry, qx, qy
    if k1 == C_DISK and k2 == C_DISK:
        dx = x2 - x1
        dy = y2 - y1
        d = sqrt(dx * dx + dy * dy)
        return _max(0.0, a1 + a2 - d)
    if k1 == C_RECT and k2 == C_RECT:
        ox = a1 + a2 - fabs(x2 - x1)
        oy = b1 + b2 - fabs(y2 - y1)
        if ox > 0.0 and oy > 0.0:
            return _min(ox, oy)
        return 0.0
    if k1 == C_DISK:
        r = a1; cx = x1; cy = y1; hx = a2; hy = b2; rx = x2; ry = y2
    else:
        r = a2; cx = x2; cy = y2; hx = a1; hy = b1; rx = x1; ry = y1
    dx = fabs(cx - rx)
    dy = fabs(cy - ry)
    if dx <= hx and dy <= hy:
        return r + _min(hx - dx, hy - dy)
    qx = _max(dx - hx, 0.0)
    qy = _max(dy - hy, 0.0)
    return _max(0.0, r - sqrt(qx * qx + qy * qy))


def footprint_overlap(int k1, double a1, double b1, double x1, double y1,
                      int k2, double a2, double b2, double x2, double y2):
    """Penetration depth between two footprints (0 when disjoint)."""
    return _overlap(k1, a1, b1, x1, y1, k2, a2, b2, x2, y2)


cdef double _point_segment_dist(double px, double py, double x0, double y0,
                                double x1, double y1) nogil:
    cdef double vx = x1 - x0
    cdef double vy = y1 - y0
    cdef double ll = vx * vx + vy * vy
    cdef double t, dx, dy
    if ll == 0.0:
        dx = px - x0
        dy = py - y0
        return sqrt(dx * dx + dy * dy)
    t = ((px - x0) * vx + (py - y0) * vy) / ll
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    dx = px - (x0 + t * vx)
    dy = py - (y0 + t * vy)
    return sqrt(dx * dx + dy * dy)


cdef double _point_box_dist(double px, double py, double cx, double cy,
                            double hx, double hy) nogil:
    cdef double qx = _max(fabs(px - cx) - hx, 0.0)
    cdef double qy = _max(fabs(py - cy) - hy, 0.0)
    return sqrt(qx * qx + qy * qy)


cdef bint _clip(double p, double q, double* t0, double* t1) nogil:
    cdef double r
    if p == 0.0:
        if q < 0.0:
            return False
    else:
        r = q / p
        if p < 0.0:
            if r > t1[0]:
                return False
            if r > t0[0]:
                t0[0] = r
        else:
            if r < t0[0]:
                return False
            if r < t1[0]:
                t1[0] = r
    return True


cdef bint _segment_hits_box(double x0, double y0, double x1, double y1,
                            double cx, double cy, double hx, double hy) nogil:
    cdef double t0 = 0.0
    cdef double t1 = 1.0
    cdef double dx = x1 - x0
    cdef double dy = y1 - y0
    if not _clip(-dx, x0 - (cx - hx), &t0, &t1):
        return False
    if not _clip(dx, (cx + hx) - x0, &t0, &t1):
        return False
    if not _clip(-dy, y0 - (cy - hy), &t0, &t1):
        return False
    if not _clip(dy, (cy + hy) - y0, &t0, &t1):
        return False
    return True


cdef double _segment_box_depth(double x0, double y0, double x1, double y1,
                               double cx, double cy, double hx, double hy) nogil:
    cdef double vx = x1 - x0
    cdef double vy = y1 - y0
    cdef double ts[8]
    cdef int nt = 2
    cdef int a, b, k
    cdef double sx, sy, den, t, d
    cdef double best = -INFINITY
    ts[0] = 0.0
    ts[1] = 1.0
    if vx != 0.0:
        ts[nt] = (cx - x0) / vx
        nt += 1
    if vy != 0.0:
        ts[nt] = (cy - y0) / vy
        nt += 1
    for a in range(2):
        sx = -1.0 if a == 0 else 1.0
        for b in range(2):
            sy = -1.0 if b == 0 else 1.0
            den = sy * vy - sx * vx
            if den != 0.0:
                ts[nt] = (hy - hx + sx * (x0 - cx) - sy * (y0 - cy)) / den
                nt += 1
    for k in range(nt):
        t = ts[k]
        if 0.0 <= t <= 1.0:
            d = _min(hx - fabs(x0 + t * vx - cx), hy - fabs(y0 + t * vy - cy))
            if d > best:
                best = d
    return best


cdef double _capsule_pen(double x0, double y0, double x1, double y1, double radius,
                         int kind, double ex, double ey, double cx, double cy) nogil:
    cdef double d
    cdef double sx, sy
    cdef int a, b
    if kind == C_DISK:
        return radius + ex - _point_segment_dist(cx, cy, x0, y0, x1, y1)
    if _segment_hits_box(x0, y0, x1, y1, cx, cy, ex, ey):
        return radius + _max(0.0, _segment_box_depth(x0, y0, x1, y1, cx, cy, ex, ey))
    d = _min(_point_box_dist(x0, y0, cx, cy, ex, ey),
             _point_box_dist(x1, y1, cx, cy, ex, ey))
    for a in range(2):
        sx = -1.0 if a == 0 else 1.0
        for b in range(2):
            sy = -1.0 if b == 0 else 1.0
            d = _min(d, _point_segment_dist(cx + sx * ex, cy + sy * ey, x0, y0, x1, y1))
    return radius - d


def capsule_penetration(double x0, double y0, double x1, double y1, double radius,
                        int kind, double ex, double ey, double cx, double cy):
    """How far a disk swept from (x0, y0) to (x1, y1) penetrates a footprint."""
    return _capsule_pen(x0, y0, x1, y1, radius, kind, ex, ey, cx, cy)


def capsule_hits(double x0, double y0, double x1, double y1, double radius,
                 kinds, xs, ys, exs, eys):
    """Indices of footprints strictly overlapped by the swept disk."""
    cdef Py_ssize_t i, n = len(kinds)
    out = []
    for i in range(n):
        if _capsule_pen(x0, y0, x1, y1, radius, kinds[i], exs[i], eys[i],
                        xs[i], ys[i]) > C_EPS:
            out.append(i)
    return out


cdef double _ray_circle(double px, double py, double ux, double uy,
                        double cx, double cy, double r) nogil:
    cdef double wx = cx - px
    cdef double wy = cy - py
    cdef double a = wx * ux + wy * uy
    cdef double h2 = wx * wx + wy * wy - a * a
    cdef double disc = r * r - h2
    cdef double sq
    if disc <= 0.0:
        return INFINITY
    sq = sqrt(disc)
    if a + sq <= 0.0:
        return INFINITY
    return _max(0.0, a - sq)


cdef double _ray_box(double px, double py, double ux, double uy,
                     double cx, double cy, double hx, double hy) nogil:
    cdef double tmin = -INFINITY
    cdef double tmax = INFINITY
    cdef double t1, t2, tt
    if hx <= 0.0 or hy <= 0.0:
        return INFINITY
    if ux == 0.0:
        if fabs(px - cx) >= hx:
            return INFINITY
    else:
        t1 = (cx - hx - px) / ux
        t2 = (cx + hx - px) / ux
        if t1 > t2:
            tt = t1; t1 = t2; t2 = tt
        tmin = _max(tmin, t1)
        tmax = _min(tmax, t2)
    if uy == 0.0:
        if fabs(py - cy) >= hy:
            return INFINITY
    else:
        t1 = (cy - hy - py) / uy
        t2 = (cy + hy - py) / uy
        if t1 > t2:
            tt = t1; t1 = t2; t2 = tt
        tmin = _max(tmin, t1)
        tmax = _min(tmax, t2)
    if tmax <= tmin or tmax <= 0.0:
        return INFINITY
    return _max(tmin, 0.0)


cdef double _ray_rounded_box(double px, double py, double ux, double uy,
                             double cx, double cy, double hx, double hy, double r) nogil:
    cdef double g, sx, sy
    cdef int a, b
    if r <= 0.0:
        return _ray_box(px, py, ux, uy, cx, cy, hx + r, hy + r)
    g = _min(_ray_box(px, py, ux, uy, cx, cy, hx + r, hy),
             _ray_box(px, py, ux, uy, cx, cy, hx, hy + r))
    for a in range(2):
        sx = -1.0 if a == 0 else 1.0
        for b in range(2):
            sy = -1.0 if b == 0 else 1.0
            g = _min(g, _ray_circle(px, py, ux, uy, cx + sx * hx, cy + sy * hy, r))
    return g


cdef double _sweep_gap(int kx, double ax, double bx, double px, double py,
                       int kb, double ab, double bb, double qx, double qy,
                       double ux, double uy) nogil:
    if _overlap(kx, ax, bx, px, py, kb, ab, bb, qx, qy) > C_EPS:
        if (qx - px) * ux + (qy - py) * uy > 0.0:
            return 0.0
        return INFINITY
    if kx == C_DISK and kb == C_DISK:
        return _ray_circle(px, py, ux, uy, qx, qy, ax + ab - C_EPS)
    if kx == C_RECT and kb == C_RECT:
        return _ray_box(px, py, ux, uy, qx, qy, ax + ab - C_EPS, bx + bb - C_EPS)
    if kx == C_DISK:
        return _ray_rounded_box(px, py, ux, uy, qx, qy, ab, bb, ax - C_EPS)
    return _ray_rounded_box(px, py, ux, uy, qx, qy, ax, bx, ab - C_EPS)


def sweep_gap(int kx, double ax, double bx, double px, double py,
              int kb, double ab, double bb, double qx, double qy,
              double ux, double uy):
    """Free travel of footprint X along unit ``u`` before it pushes footprint B."""
    return _sweep_gap(kx, ax, bx, px, py, kb, ab, bb, qx, qy, ux, uy)


cdef inline double _quantize(double t, double step) nogil:
    if step <= 0.0:
        return t
    return ceil(t / step - 1e-9) * step


cdef struct Scratch:
    int n
    int* kind
    double* x
    double* y
    double* ex
    double* ey
    char* movable
    double* cap
    int* depth
    int* queue
    int qcap
    double* gaps    # (n + 1) x n, row 0 is the robot


cdef double _gap(Scratch* s, int i, int j, double x0, double y0, double rr,
                 double ux, double uy) nogil:
    cdef double* slot = &s.gaps[(i + 1) * s.n + j]
    if slot[0] < 0.0:
        if i < 0:
            slot[0] = _sweep_gap(C_DISK, rr, rr, x0, y0, s.kind[j], s.ex[j], s.ey[j],
                                 s.x[j], s.y[j], ux, uy)
        else:
            slot[0] = _sweep_gap(s.kind[i], s.ex[i], s.ey[i], s.x[i], s.y[i],
                                 s.kind[j], s.ex[j], s.ey[j], s.x[j], s.y[j], ux, uy)
    return slot[0]


cdef int _run(Scratch* s, double* disp, bint capped, double x0, double y0, double ux,
              double uy, double length, double rr, double step) nogil:
    # returns -1 when the chain-depth guard trips
    cdef int n = s.n
    cdef int i, j, d, head, tail
    cdef double t, want
    for i in range(n):
        disp[i] = 0.0
        s.depth[i] = 0
    s.queue[0] = -1
    head = 0
    tail = 1
    while head < tail:
        i = s.queue[head]
        head += 1
        if i < 0:
            t = length
            d = 0
        else:
            t = disp[i]
            d = s.depth[i]
        if t <= C_EPS:
            continue
        for j in range(n):
            if j == i or not s.movable[j]:
                continue
            want = t - _gap(s, i, j, x0, y0, rr, ux, uy)
            if want <= C_EPS:
                continue
            want = _quantize(want, step)
            if capped and s.cap[j] < want:
                want = s.cap[j]
            if want > disp[j] + C_EPS:
                if d + 1 > n or tail >= s.qcap:
                    return -1
                disp[j] = want
                s.depth[j] = d + 1
                s.queue[tail] = j
                tail += 1
    return 0


def propagate(double x0, double y0, double ux, double uy, double length, double robot_r,
              kinds, xs, ys, exs, eys, movable, double step):
    """Quasi-static push propagation for one straight robot move.

    Same contract as ``_kernels_py.propagate``.
    """
    cdef int n = len(kinds)
    cdef Scratch s
    cdef int i, j, f, k
    cdef double g
    cdef int m = n if n > 0 else 1
    s.n = n
    s.kind = <int*> malloc(m * sizeof(int))
    s.x = <double*> malloc(m * sizeof(double))
    s.y = <double*> malloc(m * sizeof(double))
    s.ex = <double*> malloc(m * sizeof(double))
    s.ey = <double*> malloc(m * sizeof(double))
    s.movable = <char*> malloc(m * sizeof(char))
    s.cap = <double*> malloc(m * sizeof(double))
    s.depth = <int*> malloc(m * sizeof(int))
    # every enqueue strictly raises a displacement bounded by depth <= n
    s.qcap = m * (m + 2) * (m + 2) + 1
    s.queue = <int*> malloc(s.qcap * sizeof(int))
    s.gaps = <double*> malloc((m + 1) * m * sizeof(double))
    cdef double* disp = <double*> malloc(m * sizeof(double))
    cdef double* free_ = <double*> malloc(m * sizeof(double))
    try:
        for i in range(n):
            s.kind[i] = kinds[i]
            s.x[i] = xs[i]
            s.y[i] = ys[i]
            s.ex[i] = exs[i]
            s.ey[i] = eys[i]
            s.movable[i] = 1 if movable[i] else 0
        for k in range((n + 1) * n):
            s.gaps[k] = -1.0
        for j in range(n):
            s.cap[j] = INFINITY
            if s.movable[j]:
                for f in range(n):
                    if f != j and not s.movable[f]:
                        g = _gap(&s, j, f, x0, y0, robot_r, ux, uy)
                        if g < s.cap[j]:
                            s.cap[j] = g
        if _run(&s, disp, True, x0, y0, ux, uy, length, robot_r, step) < 0:
            raise PropagationError("push chain deeper than active object count")
        if _run(&s, free_, False, x0, y0, ux, uy, length, robot_r, step) < 0:
            raise PropagationError("push chain deeper than active object count")

        pairs = set()
        for j in range(n):
            if length - _gap(&s, -1, j, x0, y0, robot_r, ux, uy) > C_EPS:
                pairs.add((-1, j))
        for i in range(n):
            if free_[i] <= C_EPS:
                continue
            for j in range(n):
                if j != i and free_[i] - _gap(&s, i, j, x0, y0, robot_r, ux, uy) > C_EPS:
                    pairs.add((i, j) if i < j else (j, i))
        out = [disp[i] for i in range(n)]
        return out, sorted(pairs)
    finally:
        free(s.kind); free(s.x); free(s.y); free(s.ex); free(s.ey)
        free(s.movable); free(s.cap); free(s.depth); free(s.queue); free(s.gaps)
        free(disp); free(free_)


def blocked_cells(int nx, int ny, double res, double radius, kinds, xs, ys, exs, eys):
    """Row-major ``(nx+1)*(ny+1)`` mask of lattice points where the robot disk
    overlaps any footprint."""
    cdef int w = nx + 1
    cdef int h = ny + 1
    cdef bytearray mask = bytearray(w * h)
    cdef unsigned char[:] mv = mask
    cdef Py_ssize_t k, n = len(kinds)
    cdef int i, j, i0, i1, j0, j1, kind
    cdef double reach, ex, ey, cx, cy
    for k in range(n):
        kind = kinds[k]
        ex = exs[k]
        ey = eys[k]
        cx = xs[k]
        cy = ys[k]
        reach = radius + (ex if kind == C_DISK else sqrt(ex * ex + ey * ey))
        i0 = <int> floor((cx - reach) / res)
        if i0 < 0:
            i0 = 0
        i1 = <int> ceil((cx + reach) / res)
        if i1 > nx:
            i1 = nx
        j0 = <int> floor((cy - reach) / res)
        if j0 < 0:
            j0 = 0
        j1 = <int> ceil((cy + reach) / res)
        if j1 > ny:
            j1 = ny
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                if mv[i * h + j]:
                    continue
                if _overlap(C_DISK, radius, radius, i * res, j * res, kind,
                            ex, ey, cx, cy) > C_EPS:
                    mv[i * h + j] = 1
    return mask


cdef struct HeapItem:
    double d
    int v


cdef void _sift_down(HeapItem* heap, int start, int pos) nogil:
    cdef HeapItem item = heap[pos]
    cdef int parent
    while pos > start:
        parent = (pos - 1) >> 1
        if item.d < heap[parent].d or (item.d == heap[parent].d and item.v < heap[parent].v):
            heap[pos] = heap[parent]
            pos = parent
            continue
        break
    heap[pos] = item


cdef void _sift_up(HeapItem* heap, int end, int pos) nogil:
    cdef int start = pos
    cdef HeapItem item = heap[pos]
    cdef int child = 2 * pos + 1
    cdef int right
    while child < end:
        right = child + 1
        if right < end and not (heap[child].d < heap[right].d or
                                (heap[child].d == heap[right].d and heap[child].v < heap[right].v)):
            child = right
        heap[pos] = heap[child]
        pos = child
        child = 2 * pos + 1
    heap[pos] = item
    _sift_down(heap, start, pos)


def grid_distances(int nx, int ny, blocked, sources):
    """Octile Dijkstra over the ``(nx+1) x (ny+1)`` lattice from ``sources``."""
    cdef int w = nx + 1
    cdef int h = ny + 1
    cdef int total = w * h
    cdef const unsigned char[:] bl = bytes(blocked)
    cdef double* dist = <double*> malloc(total * sizeof(double))
    cdef int cap = 8 * total + len(sources) + 1
    cdef HeapItem* heap = <HeapItem*> malloc(cap * sizeof(HeapItem))
    cdef int size = 0
    cdef int v, u, i, j, a, b, mi
    cdef double d, nd
    cdef int di[8]
    cdef int dj[8]
    cdef double dc[8]
    cdef HeapItem top
    di[:] = [1, -1, 0, 0, 1, 1, -1, -1]
    dj[:] = [0, 0, 1, -1, 1, -1, 1, -1]
    cdef double s2 = sqrt(2.0)
    dc[:] = [1.0, 1.0, 1.0, 1.0, s2, s2, s2, s2]
    try:
        for v in range(total):
            dist[v] = INFINITY
        for s in sources:
            v = s
            if not bl[v] and dist[v] > 0.0:
                dist[v] = 0.0
                heap[size].d = 0.0
                heap[size].v = v
                size += 1
                _sift_down(heap, 0, size - 1)
        while size > 0:
            top = heap[0]
            size -= 1
            if size > 0:
                heap[0] = heap[size]
                _sift_up(heap, size, 0)
            d = top.d
            v = top.v
            if d > dist[v]:
                continue
            i = v // h
            j = v % h
            for mi in range(8):
                a = i + di[mi]
                b = j + dj[mi]
                if a < 0 or a >= w or b < 0 or b >= h:
                    continue
                u = a * h + b
                if bl[u]:
                    continue
                nd = d + dc[mi]
                if nd < dist[u]:
                    dist[u] = nd
                    heap[size].d = nd
                    heap[size].v = u
                    size += 1
                    _sift_down(heap, 0, size - 1)
        return [dist[v] for v in range(total)]
    finally:
        free(dist)
        free(heap)
