"""Numba @njit implementations of the hot kernels.

Twins of ``_kernels_numpy`` with identical signatures and selection rules.
Integer-valued kernels match the numpy backend bit for bit; the float SSD in
``mesh_refine`` accumulates sequentially (numpy sums pairwise), which only
matters if two candidates differ by under a few ulps.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def block_search(ref, cur, block_size, candidates):
    h, w = cur.shape
    nby = (h + block_size - 1) // block_size
    nbx = (w + block_size - 1) // block_size
    out = np.zeros((nby, nbx, 2), np.int32)
    for by in range(nby):
        y0 = by * block_size
        y1 = min(y0 + block_size, h)
        for bx in range(nbx):
            x0 = bx * block_size
            x1 = min(x0 + block_size, w)
            best = np.int64(1) << 62
            bdx = np.int32(0)
            bdy = np.int32(0)
            for c in range(candidates.shape[0]):
                dx = candidates[c, 0]
                dy = candidates[c, 1]
                ssd = np.int64(0)
                for y in range(y0, y1):
                    sy = y + dy
                    if sy < 0:
                        sy = 0
                    elif sy > h - 1:
                        sy = h - 1
                    for x in range(x0, x1):
                        sx = x + dx
                        if sx < 0:
                            sx = 0
                        elif sx > w - 1:
                            sx = w - 1
                        d = np.int64(cur[y, x]) - np.int64(ref[sy, sx])
                        ssd += d * d
                if ssd < best:
                    best = ssd
                    bdx = dx
                    bdy = dy
            out[by, bx, 0] = bdx
            out[by, bx, 1] = bdy
    return out


@njit(cache=True)
def _sample_bilinear(img, sx, sy, w, h):
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    xa = min(max(np.int64(x0), 0), w - 1)
    xb = min(max(np.int64(x0) + 1, 0), w - 1)
    ya = min(max(np.int64(y0), 0), h - 1)
    yb = min(max(np.int64(y0) + 1, 0), h - 1)
    top = (1.0 - fx) * img[ya, xa] + fx * img[ya, xb]
    bot = (1.0 - fx) * img[yb, xa] + fx * img[yb, xb]
    return (1.0 - fy) * top + fy * bot


@njit(cache=True)
def _quad_positive(vec, cx, cy, g):
    xtl = cx * g + vec[cy, cx, 0]
    ytl = cy * g + vec[cy, cx, 1]
    xtr = (cx + 1) * g + vec[cy, cx + 1, 0]
    ytr = cy * g + vec[cy, cx + 1, 1]
    xbr = (cx + 1) * g + vec[cy + 1, cx + 1, 0]
    ybr = (cy + 1) * g + vec[cy + 1, cx + 1, 1]
    xbl = cx * g + vec[cy + 1, cx, 0]
    ybl = (cy + 1) * g + vec[cy + 1, cx, 1]
    area2 = (xtl * (ytr - ybl) + xtr * (ybr - ytl)
             + xbr * (ybl - ytr) + xbl * (ytl - ybr))
    return area2 > 0


@njit(cache=True)
def _incident_valid(vec, gx, gy, g, ncx, ncy):
    for cy in range(gy - 1, gy + 1):
        if cy < 0 or cy >= ncy:
            continue
        for cx in range(gx - 1, gx + 1):
            if cx < 0 or cx >= ncx:
                continue
            if not _quad_positive(vec, cx, cy, g):
                return False
    return True


@njit(cache=True)
def _cell_ssd(ref_f, cur_f, vec, cx, cy, g, width, height, ncx, ncy):
    x0 = cx * g
    y0 = cy * g
    x1 = width if cx == ncx - 1 else (cx + 1) * g
    y1 = height if cy == ncy - 1 else (cy + 1) * g
    vax = np.int64(vec[cy, cx, 0])
    vay = np.int64(vec[cy, cx, 1])
    vbx = np.int64(vec[cy, cx + 1, 0])
    vby = np.int64(vec[cy, cx + 1, 1])
    vcx_ = np.int64(vec[cy + 1, cx, 0])
    vcy_ = np.int64(vec[cy + 1, cx, 1])
    vdx = np.int64(vec[cy + 1, cx + 1, 0])
    vdy = np.int64(vec[cy + 1, cx + 1, 1])
    g2 = float(g * g)
    total = 0.0
    for y in range(y0, y1):
        b = np.int64(y - y0)
        for x in range(x0, x1):
            a = np.int64(x - x0)
            waa = (g - a) * (g - b)
            wab = a * (g - b)
            wac = (g - a) * b
            wad = a * b
            sx = float(x) + (waa * vax + wab * vbx + wac * vcx_ + wad * vdx) / g2
            sy = float(y) + (waa * vay + wab * vby + wac * vcy_ + wad * vdy) / g2
            warped = _sample_bilinear(ref_f, sx, sy, width, height)
            diff = cur_f[y, x] - warped
            total += diff * diff
    return total


@njit(cache=True)
def _incident_ssd(ref_f, cur_f, vec, gx, gy, g, width, height, ncx, ncy):
    total = 0.0
    for cy in range(gy - 1, gy + 1):
        if cy < 0 or cy >= ncy:
            continue
        for cx in range(gx - 1, gx + 1):
            if cx < 0 or cx >= ncx:
                continue
            total += _cell_ssd(ref_f, cur_f, vec, cx, cy, g, width, height, ncx, ncy)
    return total


@njit(cache=True)
def mesh_refine(ref, cur, init, grid_size, search_range, passes, offsets):
    h, w = ref.shape
    gpy = init.shape[0]
    gpx = init.shape[1]
    ncx = gpx - 1
    ncy = gpy - 1
    ref_f = ref.astype(np.float64)
    cur_f = cur.astype(np.float64)
    vec = np.zeros((gpy, gpx, 2), np.int32)
    for gy in range(gpy):
        for gx in range(gpx):
            vec[gy, gx, 0] = init[gy, gx, 0]
            vec[gy, gx, 1] = init[gy, gx, 1]
            if not _incident_valid(vec, gx, gy, grid_size, ncx, ncy):
                vec[gy, gx, 0] = 0
                vec[gy, gx, 1] = 0
    for _ in range(passes):
        for gy in range(gpy):
            for gx in range(gpx):
                bdx = vec[gy, gx, 0]
                bdy = vec[gy, gx, 1]
                best = _incident_ssd(ref_f, cur_f, vec, gx, gy, grid_size, w, h, ncx, ncy)
                kdx = bdx
                kdy = bdy
                for t in range(1, offsets.shape[0]):
                    cdx = bdx + offsets[t, 0]
                    cdy = bdy + offsets[t, 1]
                    if abs(cdx) > search_range or abs(cdy) > search_range:
                        continue
                    vec[gy, gx, 0] = cdx
                    vec[gy, gx, 1] = cdy
                    if not _incident_valid(vec, gx, gy, grid_size, ncx, ncy):
                        continue
                    ssd = _incident_ssd(ref_f, cur_f, vec, gx, gy, grid_size, w, h, ncx, ncy)
                    if ssd < best:
                        best = ssd
                        kdx = cdx
                        kdy = cdy
                vec[gy, gx, 0] = kdx
                vec[gy, gx, 1] = kdy
    return vec


@njit(cache=True)
def upsample_positions(vec, grid_size, width, height):
    g = grid_size
    gpy = vec.shape[0]
    gpx = vec.shape[1]
    ncx = gpx - 1
    ncy = gpy - 1
    sub_x = np.empty((height, width), np.float64)
    sub_y = np.empty((height, width), np.float64)
    g2 = float(g * g)
    for y in range(height):
        cy = min(y // g, ncy - 1)
        b = np.int64(y - cy * g)
        for x in range(width):
            cx = min(x // g, ncx - 1)
            a = np.int64(x - cx * g)
            waa = (g - a) * (g - b)
            wab = a * (g - b)
            wac = (g - a) * b
            wad = a * b
            nx = (waa * vec[cy, cx, 0] + wab * vec[cy, cx + 1, 0]
                  + wac * vec[cy + 1, cx, 0] + wad * vec[cy + 1, cx + 1, 0])
            ny = (waa * vec[cy, cx, 1] + wab * vec[cy, cx + 1, 1]
                  + wac * vec[cy + 1, cx, 1] + wad * vec[cy + 1, cx + 1, 1])
            sub_x[y, x] = float(x) + nx / g2
            sub_y[y, x] = float(y) + ny / g2
    return sub_x, sub_y


@njit(cache=True)
def warp_bilinear(img, sx, sy):
    h, w = img.shape
    out = np.empty((sx.shape[0], sx.shape[1]), np.float64)
    for y in range(sx.shape[0]):
        for x in range(sx.shape[1]):
            out[y, x] = _sample_bilinear(img, sx[y, x], sy[y, x], w, h)
    return out


@njit(cache=True)
def _kth_smallest(buf, cnt, k):
    tmp = buf[:cnt].copy()
    part = np.partition(tmp, k - 1)
    return part[k - 1]


@njit(cache=True)
def knn_select(xi, yi, k):
    h, w = xi.shape
    n = h * w
    # bucket node ids by rounded cell, CSR-style over pixels
    counts = np.zeros(n + 1, np.int64)
    for i in range(h):
        for j in range(w):
            cell = np.int64(yi[i, j]) * w + np.int64(xi[i, j])
            counts[cell + 1] += 1
    starts = np.cumsum(counts)
    cursor = starts[:-1].copy()
    order = np.empty(n, np.int64)
    for i in range(h):
        for j in range(w):
            cell = np.int64(yi[i, j]) * w + np.int64(xi[i, j])
            order[cursor[cell]] = i * w + j
            cursor[cell] += 1
    out = np.empty((n, k), np.int32)
    buf = np.empty(n, np.int64)
    n64 = np.int64(n)
    for py in range(h):
        for px in range(w):
            cnt = 0
            r = 0
            while True:
                # collect candidates on the Chebyshev ring of radius r
                if r == 0:
                    cell = py * w + px
                    for t in range(starts[cell], starts[cell + 1]):
                        buf[cnt] = order[t]  # d2 == 0
                        cnt += 1
                else:
                    for cx in range(px - r, px + r + 1):
                        if cx < 0 or cx >= w:
                            continue
                        for cy in (py - r, py + r):
                            if cy < 0 or cy >= h:
                                continue
                            d2 = np.int64(cx - px) ** 2 + np.int64(cy - py) ** 2
                            cell = cy * w + cx
                            for t in range(starts[cell], starts[cell + 1]):
                                buf[cnt] = d2 * n64 + order[t]
                                cnt += 1
                    for cy in range(py - r + 1, py + r):
                        if cy < 0 or cy >= h:
                            continue
                        for cx in (px - r, px + r):
                            if cx < 0 or cx >= w:
                                continue
                            d2 = np.int64(cx - px) ** 2 + np.int64(cy - py) ** 2
                            cell = cy * w + cx
                            for t in range(starts[cell], starts[cell + 1]):
                                buf[cnt] = d2 * n64 + order[t]
                                cnt += 1
                if cnt >= k:
                    d2k = _kth_smallest(buf, cnt, k) // n64
                    # an equal-distance node with a smaller id may still lie
                    # on a farther ring; stop only once the next ring cannot
                    # reach the kth distance
                    if np.int64(r + 1) ** 2 > d2k:
                        break
                r += 1
                if r > w + h:
                    break
            keys = np.sort(buf[:cnt])
            node = py * w + px
            for t in range(k):
                out[node, t] = np.int32(keys[t] % n64)
    return out


@njit(cache=True)
def nn_fill(values, written):
    h, w = values.shape
    out = values.copy()
    total = 0
    for i in range(h):
        for j in range(w):
            if written[i, j]:
                total += 1
    if total == 0 or total == h * w:
        return out
    cy = np.empty(total, np.int64)
    cx = np.empty(total, np.int64)
    t = 0
    for i in range(h):
        for j in range(w):
            if written[i, j]:
                cy[t] = i
                cx[t] = j
                t += 1
    for i in range(h):
        for j in range(w):
            if written[i, j]:
                continue
            best = 0
            bestd = np.int64(1) << 62
            for t in range(total):
                d = (cy[t] - i) ** 2 + (cx[t] - j) ** 2
                if d < bestd:
                    bestd = d
                    best = t
            out[i, j] = values[cy[best], cx[best]]
    return out


@njit(cache=True)
def csr_matvec(indptr, indices, data, x, n_rows):
    y = np.zeros(n_rows, np.float64)
    for r in range(n_rows):
        acc = 0.0
        for t in range(indptr[r], indptr[r + 1]):
            acc += data[t] * x[indices[t]]
        y[r] = acc
    return y
