"""Pure-Python geometry and push-propagation kernels.

This module is the reference implementation; ``_ckernels.pyx`` mirrors it
operation for operation so both backends produce bit-identical floats.

Shapes are passed as ``(kind, ex, ey)`` triples: ``kind == DISK`` uses ``ex``
as the radius, ``kind == RECT`` uses ``(ex, ey)`` as half-extents.
"""
from __future__ import annotations

import heapq
import math

DISK = 0
RECT = 1
EPS = 1e-9
INF = math.inf
SQRT2 = math.sqrt(2.0)


class PropagationError(RuntimeError):
    """Raised when a push chain is deeper than the number of active objects."""


def footprint_overlap(k1, a1, b1, x1, y1, k2, a2, b2, x2, y2):
    """Penetration depth between two footprints (0 when disjoint)."""
    if k1 == DISK and k2 == DISK:
        dx = x2 - x1
        dy = y2 - y1
        d = math.sqrt(dx * dx + dy * dy)
        return max(0.0, a1 + a2 - d)
    if k1 == RECT and k2 == RECT:
        ox = a1 + a2 - abs(x2 - x1)
        oy = b1 + b2 - abs(y2 - y1)
        if ox > 0.0 and oy > 0.0:
            return min(ox, oy)
        return 0.0
    if k1 == DISK:
        r, cx, cy, hx, hy, rx, ry = a1, x1, y1, a2, b2, x2, y2
    else:
        r, cx, cy, hx, hy, rx, ry = a2, x2, y2, a1, b1, x1, y1
    dx = abs(cx - rx)
    dy = abs(cy - ry)
    if dx <= hx and dy <= hy:
        return r + min(hx - dx, hy - dy)
    qx = max(dx - hx, 0.0)
    qy = max(dy - hy, 0.0)
    return max(0.0, r - math.sqrt(qx * qx + qy * qy))


def _point_segment_dist(px, py, x0, y0, x1, y1):
    vx = x1 - x0
    vy = y1 - y0
    ll = vx * vx + vy * vy
    if ll == 0.0:
        dx = px - x0
        dy = py - y0
        return math.sqrt(dx * dx + dy * dy)
    t = ((px - x0) * vx + (py - y0) * vy) / ll
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    dx = px - (x0 + t * vx)
    dy = py - (y0 + t * vy)
    return math.sqrt(dx * dx + dy * dy)


def _point_box_dist(px, py, cx, cy, hx, hy):
    qx = max(abs(px - cx) - hx, 0.0)
    qy = max(abs(py - cy) - hy, 0.0)
    return math.sqrt(qx * qx + qy * qy)


def _segment_hits_box(x0, y0, x1, y1, cx, cy, hx, hy):
    # Liang-Barsky clip against the closed box
    t0 = 0.0
    t1 = 1.0
    dx = x1 - x0
    dy = y1 - y0
    for p, q in ((-dx, x0 - (cx - hx)), (dx, (cx + hx) - x0),
                 (-dy, y0 - (cy - hy)), (dy, (cy + hy) - y0)):
        if p == 0.0:
            if q < 0.0:
                return False
        else:
            r = q / p
            if p < 0.0:
                if r > t1:
                    return False
                if r > t0:
                    t0 = r
            else:
                if r < t0:
                    return False
                if r < t1:
                    t1 = r
    return True


def _segment_box_depth(x0, y0, x1, y1, cx, cy, hx, hy):
    # deepest point of the segment inside the box, measured to the nearest edge
    vx = x1 - x0
    vy = y1 - y0
    ts = [0.0, 1.0]
    if vx != 0.0:
        ts.append((cx - x0) / vx)
    if vy != 0.0:
        ts.append((cy - y0) / vy)
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            den = sy * vy - sx * vx
            if den != 0.0:
                ts.append((hy - hx + sx * (x0 - cx) - sy * (y0 - cy)) / den)
    best = -INF
    for t in ts:
        if 0.0 <= t <= 1.0:
            d = min(hx - abs(x0 + t * vx - cx), hy - abs(y0 + t * vy - cy))
            if d > best:
                best = d
    return best


def capsule_penetration(x0, y0, x1, y1, radius, kind, ex, ey, cx, cy):
    """How far a disk swept from (x0, y0) to (x1, y1) penetrates a footprint."""
    if kind == DISK:
        return radius + ex - _point_segment_dist(cx, cy, x0, y0, x1, y1)
    if _segment_hits_box(x0, y0, x1, y1, cx, cy, ex, ey):
        return radius + max(0.0, _segment_box_depth(x0, y0, x1, y1, cx, cy, ex, ey))
    d = min(_point_box_dist(x0, y0, cx, cy, ex, ey),
            _point_box_dist(x1, y1, cx, cy, ex, ey))
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            d = min(d, _point_segment_dist(cx + sx * ex, cy + sy * ey, x0, y0, x1, y1))
    return radius - d


def capsule_hits(x0, y0, x1, y1, radius, kinds, xs, ys, exs, eys):
    """Indices of footprints strictly overlapped by the swept disk."""
    out = []
    for i in range(len(kinds)):
        if capsule_penetration(x0, y0, x1, y1, radius, kinds[i], exs[i], eys[i],
                               xs[i], ys[i]) > EPS:
            out.append(i)
    return out


def _ray_circle(px, py, ux, uy, cx, cy, r):
    wx = cx - px
    wy = cy - py
    a = wx * ux + wy * uy
    h2 = wx * wx + wy * wy - a * a
    disc = r * r - h2
    if disc <= 0.0:
        return INF
    sq = math.sqrt(disc)
    if a + sq <= 0.0:
        return INF
    return max(0.0, a - sq)


def _ray_box(px, py, ux, uy, cx, cy, hx, hy):
    if hx <= 0.0 or hy <= 0.0:
        return INF
    tmin = -INF
    tmax = INF
    if ux == 0.0:
        if abs(px - cx) >= hx:
            return INF
    else:
        t1 = (cx - hx - px) / ux
        t2 = (cx + hx - px) / ux
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
    if uy == 0.0:
        if abs(py - cy) >= hy:
            return INF
    else:
        t1 = (cy - hy - py) / uy
        t2 = (cy + hy - py) / uy
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
    if tmax <= tmin or tmax <= 0.0:
        return INF
    return max(tmin, 0.0)


def _ray_rounded_box(px, py, ux, uy, cx, cy, hx, hy, r):
    if r <= 0.0:
        return _ray_box(px, py, ux, uy, cx, cy, hx + r, hy + r)
    g = min(_ray_box(px, py, ux, uy, cx, cy, hx + r, hy),
            _ray_box(px, py, ux, uy, cx, cy, hx, hy + r))
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            g = min(g, _ray_circle(px, py, ux, uy, cx + sx * hx, cy + sy * hy, r))
    return g


def sweep_gap(kx, ax, bx, px, py, kb, ab, bb, qx, qy, ux, uy):
    """Free travel of footprint X along unit ``u`` before it pushes footprint B.

    Contact means penetrating deeper than ``EPS``, so the ray is cast against
    the Minkowski sum shrunk by ``EPS``; sliding along a face is not a push.
    Returns 0 when the two already overlap and B lies ahead, ``inf`` when X's
    sweep never reaches B.
    """
    if footprint_overlap(kx, ax, bx, px, py, kb, ab, bb, qx, qy) > EPS:
        if (qx - px) * ux + (qy - py) * uy > 0.0:
            return 0.0
        return INF
    if kx == DISK and kb == DISK:
        return _ray_circle(px, py, ux, uy, qx, qy, ax + ab - EPS)
    if kx == RECT and kb == RECT:
        return _ray_box(px, py, ux, uy, qx, qy, ax + ab - EPS, bx + bb - EPS)
    if kx == DISK:
        return _ray_rounded_box(px, py, ux, uy, qx, qy, ab, bb, ax - EPS)
    return _ray_rounded_box(px, py, ux, uy, qx, qy, ax, bx, ab - EPS)


def _quantize(t, step):
    if step <= 0.0:
        return t
    return math.ceil(t / step - 1e-9) * step


def propagate(x0, y0, ux, uy, length, robot_r, kinds, xs, ys, exs, eys, movable, step):
    """Quasi-static push propagation for one straight robot move.

    The robot disk travels ``length`` along unit ``(ux, uy)``. Every object
    moves along the same direction; its displacement is the largest demand
    placed on it by any pusher (robot or object), capped where a fixed object
    blocks it. ``step > 0`` rounds each demand up to a multiple of ``step``.

    Contacts are read off a second, uncapped pass so that the reported pairs
    only grow when objects are added.

    Returns ``(disp, pairs)``: per-object displacement along ``u`` and the
    sorted contact pairs ``(i, j)`` with ``i == -1`` for the robot.
    """
    n = len(kinds)
    gaps = {}

    def gap(i, j):
        key = (i, j)
        g = gaps.get(key)
        if g is None:
            if i < 0:
                g = sweep_gap(DISK, robot_r, robot_r, x0, y0, kinds[j], exs[j], eys[j],
                              xs[j], ys[j], ux, uy)
            else:
                g = sweep_gap(kinds[i], exs[i], eys[i], xs[i], ys[i], kinds[j], exs[j],
                              eys[j], xs[j], ys[j], ux, uy)
            gaps[key] = g
        return g

    cap = [INF] * n
    for j in range(n):
        if movable[j]:
            for f in range(n):
                if f != j and not movable[f]:
                    g = gap(j, f)
                    if g < cap[j]:
                        cap[j] = g

    def run(capped):
        disp = [0.0] * n
        depth = [0] * n
        queue = [-1]
        head = 0
        while head < len(queue):
            i = queue[head]
            head += 1
            if i < 0:
                t = length
                d = 0
            else:
                t = disp[i]
                d = depth[i]
            if t <= EPS:
                continue
            for j in range(n):
                if j == i or not movable[j]:
                    continue
                want = t - gap(i, j)
                if want <= EPS:
                    continue
                want = _quantize(want, step)
                if capped and cap[j] < want:
                    want = cap[j]
                if want > disp[j] + EPS:
                    if d + 1 > n:
                        raise PropagationError("push chain deeper than active object count")
                    disp[j] = want
                    depth[j] = d + 1
                    queue.append(j)
        return disp

    disp = run(True)
    free = run(False)

    pairs = set()
    for j in range(n):
        if length - gap(-1, j) > EPS:
            pairs.add((-1, j))
    for i in range(n):
        if free[i] <= EPS:
            continue
        for j in range(n):
            if j != i and free[i] - gap(i, j) > EPS:
                pairs.add((i, j) if i < j else (j, i))
    return disp, sorted(pairs)


def blocked_cells(nx, ny, res, radius, kinds, xs, ys, exs, eys):
    """Row-major ``(nx+1)*(ny+1)`` mask of lattice points where the robot disk
    overlaps any footprint."""
    w = nx + 1
    h = ny + 1
    mask = bytearray(w * h)
    for k in range(len(kinds)):
        reach = radius + (exs[k] if kinds[k] == DISK else math.sqrt(exs[k] * exs[k] + eys[k] * eys[k]))
        i0 = max(0, int(math.floor((xs[k] - reach) / res)))
        i1 = min(nx, int(math.ceil((xs[k] + reach) / res)))
        j0 = max(0, int(math.floor((ys[k] - reach) / res)))
        j1 = min(ny, int(math.ceil((ys[k] + reach) / res)))
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                if mask[i * h + j]:
                    continue
                if footprint_overlap(DISK, radius, radius, i * res, j * res, kinds[k],
                                     exs[k], eys[k], xs[k], ys[k]) > EPS:
                    mask[i * h + j] = 1
    return mask


def grid_distances(nx, ny, blocked, sources):
    """Octile Dijkstra over the ``(nx+1) x (ny+1)`` lattice from ``sources``."""
    w = nx + 1
    h = ny + 1
    dist = [INF] * (w * h)
    heap = []
    for s in sources:
        if not blocked[s] and dist[s] > 0.0:
            dist[s] = 0.0
            heap.append((0.0, s))
    heapq.heapify(heap)
    moves = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
             (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        i, j = divmod(v, h)
        for di, dj, c in moves:
            a = i + di
            b = j + dj
            if a < 0 or a >= w or b < 0 or b >= h:
                continue
            u = a * h + b
            if blocked[u]:
                continue
            nd = d + c
            if nd < dist[u]:
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return dist
