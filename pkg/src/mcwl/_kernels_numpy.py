"""Pure-numpy implementations of the hot kernels.

Reference semantics for the numba backend in ``_kernels_numba``: every
function here has a twin with the same signature and, for the integer-valued
kernels, bit-identical output. Selection/tie rules are encoded in candidate
ordering plus strict-less comparisons so both backends agree exactly.
"""
import numpy as np


def block_search(ref, cur, block_size, candidates):
    """Exhaustive per-block SSD search.

    ``candidates`` is an (n, 2) int32 array of (dx, dy) shifts pre-sorted by
    tie priority; the first strict SSD minimum in that order wins. Reference
    samples outside the frame are edge-clamped. Returns (nby, nbx, 2) int32.
    """
    h, w = cur.shape
    nby = -(-h // block_size)
    nbx = -(-w // block_size)
    row_starts = np.arange(0, h, block_size)
    col_starts = np.arange(0, w, block_size)
    ys = np.arange(h)
    xs = np.arange(w)
    cur64 = cur.astype(np.int64)
    best_ssd = np.full((nby, nbx), np.iinfo(np.int64).max, np.int64)
    best = np.zeros((nby, nbx, 2), np.int32)
    for dx, dy in candidates:
        sy = np.clip(ys + dy, 0, h - 1)
        sx = np.clip(xs + dx, 0, w - 1)
        d = cur64 - ref[np.ix_(sy, sx)]
        d *= d
        ssd = np.add.reduceat(np.add.reduceat(d, row_starts, axis=0), col_starts, axis=1)
        better = ssd < best_ssd
        best_ssd = np.where(better, ssd, best_ssd)
        best[better, 0] = dx
        best[better, 1] = dy
    return best


def _cell_bounds(cx, cy, grid_size, width, height, ncx, ncy):
    x0 = cx * grid_size
    y0 = cy * grid_size
    x1 = width if cx == ncx - 1 else (cx + 1) * grid_size
    y1 = height if cy == ncy - 1 else (cy + 1) * grid_size
    return x0, x1, y0, y1


def _quad_positive(vec, cx, cy, grid_size):
    # Shoelace of the deformed quad in TL, TR, BR, BL order must stay > 0.
    g = grid_size
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


def _incident_cells(gx, gy, ncx, ncy):
    cells = []
    for cy in (gy - 1, gy):
        for cx in (gx - 1, gx):
            if 0 <= cx < ncx and 0 <= cy < ncy:
                cells.append((cx, cy))
    return cells


def _incident_valid(vec, gx, gy, grid_size, ncx, ncy):
    for cx, cy in _incident_cells(gx, gy, ncx, ncy):
        if not _quad_positive(vec, cx, cy, grid_size):
            return False
    return True


def _cell_ssd(ref_f, cur_f, vec, cx, cy, grid_size, width, height, ncx, ncy):
    g = grid_size
    x0, x1, y0, y1 = _cell_bounds(cx, cy, g, width, height, ncx, ncy)
    a = np.arange(x0, x1, dtype=np.int64) - x0
    b = np.arange(y0, y1, dtype=np.int64)[:, None] - y0
    vax, vay = int(vec[cy, cx, 0]), int(vec[cy, cx, 1])
    vbx, vby = int(vec[cy, cx + 1, 0]), int(vec[cy, cx + 1, 1])
    vcx_, vcy_ = int(vec[cy + 1, cx, 0]), int(vec[cy + 1, cx, 1])
    vdx, vdy = int(vec[cy + 1, cx + 1, 0]), int(vec[cy + 1, cx + 1, 1])
    waa = (g - a) * (g - b)
    wab = a * (g - b)
    wac = (g - a) * b
    wad = a * b
    g2 = float(g * g)
    sx = np.arange(x0, x1, dtype=np.float64) + (waa * vax + wab * vbx + wac * vcx_ + wad * vdx) / g2
    sy = np.arange(y0, y1, dtype=np.float64)[:, None] + (waa * vay + wab * vby + wac * vcy_ + wad * vdy) / g2
    sx = np.broadcast_to(sx, (y1 - y0, x1 - x0))
    sy = np.broadcast_to(sy, (y1 - y0, x1 - x0))
    warped = warp_bilinear(ref_f, sx, sy)
    diff = cur_f[y0:y1, x0:x1] - warped
    return float(np.sum(diff * diff))


def _incident_ssd(ref_f, cur_f, vec, gx, gy, grid_size, width, height, ncx, ncy):
    total = 0.0
    for cx, cy in _incident_cells(gx, gy, ncx, ncy):
        total += _cell_ssd(ref_f, cur_f, vec, cx, cy, grid_size, width, height, ncx, ncy)
    return total


def mesh_refine(ref, cur, init, grid_size, search_range, passes, offsets):
    """Raster-order local mesh refinement.

    Starts from the all-zero lattice, accepts each init vector only if every
    incident quad keeps positive area, then runs ``passes`` raster sweeps
    testing ``offsets`` around the current vector and accepting strict SSD
    improvements over the incident quads. Returns (gpy, gpx, 2) int32.
    """
    h, w = ref.shape
    gpy, gpx = init.shape[0], init.shape[1]
    ncx, ncy = gpx - 1, gpy - 1
    ref_f = ref.astype(np.float64)
    cur_f = cur.astype(np.float64)
    vec = np.zeros((gpy, gpx, 2), np.int32)
    for gy in range(gpy):
        for gx in range(gpx):
            vec[gy, gx] = init[gy, gx]
            if not _incident_valid(vec, gx, gy, grid_size, ncx, ncy):
                vec[gy, gx] = 0
    for _ in range(passes):
        for gy in range(gpy):
            for gx in range(gpx):
                bdx, bdy = int(vec[gy, gx, 0]), int(vec[gy, gx, 1])
                best = _incident_ssd(ref_f, cur_f, vec, gx, gy, grid_size, w, h, ncx, ncy)
                keep = (bdx, bdy)
                for t in range(1, offsets.shape[0]):
                    cdx = bdx + int(offsets[t, 0])
                    cdy = bdy + int(offsets[t, 1])
                    if abs(cdx) > search_range or abs(cdy) > search_range:
                        continue
                    vec[gy, gx, 0], vec[gy, gx, 1] = cdx, cdy
                    if not _incident_valid(vec, gx, gy, grid_size, ncx, ncy):
                        continue
                    ssd = _incident_ssd(ref_f, cur_f, vec, gx, gy, grid_size, w, h, ncx, ncy)
                    if ssd < best:
                        best = ssd
                        keep = (cdx, cdy)
                vec[gy, gx, 0], vec[gy, gx, 1] = keep
    return vec


def upsample_positions(vec, grid_size, width, height):
    """Dense subpixel positions from per-grid-point displacements.

    Bilinear interpolation of the four enclosing grid-point vectors; the
    numerator is integer-exact so both backends produce identical floats.
    Returns (sub_x, sub_y) float64 arrays of shape (height, width).
    """
    g = grid_size
    gpy, gpx = vec.shape[0], vec.shape[1]
    ncx, ncy = gpx - 1, gpy - 1
    xs = np.arange(width, dtype=np.int64)
    ys = np.arange(height, dtype=np.int64)
    cx = np.minimum(xs // g, ncx - 1)
    cy = np.minimum(ys // g, ncy - 1)
    a = (xs - cx * g)[None, :]
    b = (ys - cy * g)[:, None]
    cxg, cyg = np.meshgrid(cx, cy)
    v = vec.astype(np.int64)
    vax = v[cyg, cxg, 0]
    vay = v[cyg, cxg, 1]
    vbx = v[cyg, cxg + 1, 0]
    vby = v[cyg, cxg + 1, 1]
    vcx_ = v[cyg + 1, cxg, 0]
    vcy_ = v[cyg + 1, cxg, 1]
    vdx = v[cyg + 1, cxg + 1, 0]
    vdy = v[cyg + 1, cxg + 1, 1]
    waa = (g - a) * (g - b)
    wab = a * (g - b)
    wac = (g - a) * b
    wad = a * b
    g2 = float(g * g)
    sub_x = xs[None, :].astype(np.float64) + (waa * vax + wab * vbx + wac * vcx_ + wad * vdx) / g2
    sub_y = ys[:, None].astype(np.float64) + (waa * vay + wab * vby + wac * vcy_ + wad * vdy) / g2
    return sub_x, sub_y


def warp_bilinear(img, sx, sy):
    """Sample ``img`` at float positions (sx, sy), edge-clamped. float64 out."""
    h, w = img.shape
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    xa = np.clip(x0.astype(np.int64), 0, w - 1)
    xb = np.clip(x0.astype(np.int64) + 1, 0, w - 1)
    ya = np.clip(y0.astype(np.int64), 0, h - 1)
    yb = np.clip(y0.astype(np.int64) + 1, 0, h - 1)
    top = (1.0 - fx) * img[ya, xa] + fx * img[ya, xb]
    bot = (1.0 - fx) * img[yb, xa] + fx * img[yb, xb]
    return (1.0 - fy) * top + fy * bot


def knn_select(xi, yi, k):
    """For every pixel, the k odd-frame nodes nearest by rounded position.

    Node j's position is (xi, yi) at its own pixel; the query point is the
    pixel's regular coordinate. Selection key is (squared distance, node id)
    ascending, so ties go to the smaller id. Returns (n, k) int32.
    """
    h, w = xi.shape
    n = h * w
    fx = xi.ravel().astype(np.int64)
    fy = yi.ravel().astype(np.int64)
    px = np.tile(np.arange(w, dtype=np.int64), h)
    py = np.repeat(np.arange(h, dtype=np.int64), w)
    ids = np.arange(n, dtype=np.int64)
    out = np.empty((n, k), np.int32)
    chunk = max(1, 4_000_000 // n)
    for s in range(0, n, chunk):
        e = min(s + chunk, n)
        dx = fx[None, :] - px[s:e, None]
        dy = fy[None, :] - py[s:e, None]
        key = (dx * dx + dy * dy) * n + ids[None, :]
        if k < n:
            part = np.argpartition(key, k - 1, axis=1)[:, :k]
            sel = np.take_along_axis(key, part, axis=1)
        else:
            sel = key
        sel = np.sort(sel, axis=1)
        out[s:e] = (sel[:, :k] % n).astype(np.int32)
    return out


def nn_fill(values, written):
    """Fill unwritten pixels from the nearest written one.

    Euclidean distance, ties resolved by raster order of the written pixels.
    """
    h, w = values.shape
    out = values.copy()
    wy, wx = np.nonzero(written)
    uy, ux = np.nonzero(~written)
    if uy.size == 0 or wy.size == 0:
        return out
    cy = wy.astype(np.int64)
    cx = wx.astype(np.int64)
    for s in range(0, uy.size, 1024):
        e = min(s + 1024, uy.size)
        d = (cx[None, :] - ux[s:e, None]) ** 2 + (cy[None, :] - uy[s:e, None]) ** 2
        nearest = np.argmin(d, axis=1)
        out[uy[s:e], ux[s:e]] = values[wy[nearest], wx[nearest]]
    return out


def csr_matvec(indptr, indices, data, x, n_rows):
    """Row-wise CSR matrix-vector product in float64."""
    prod = data * x[indices]
    rows = np.repeat(np.arange(n_rows), np.diff(indptr))
    return np.bincount(rows, weights=prod, minlength=n_rows)
