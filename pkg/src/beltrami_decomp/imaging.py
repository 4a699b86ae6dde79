"""Push-forward warping of images by piecewise-linear maps.

Images are ``(n, m)`` arrays with ``image[j, i]`` the pixel at vertex
``(i, j)`` of the domain.
"""

import numpy as np

from .errors import DimensionError, SingularityError

_INSIDE_EPS = 1e-9


def _pullback(fmap, domain):
    """Source position of every pixel covered by the deformed mesh.

    Each deformed triangle is rasterised over the integer pixels in its
    bounding box; a pixel inside it is pulled back through the same
    barycentric weights onto the undeformed triangle.
    """
    fmap = np.asarray(fmap, dtype=complex)
    if fmap.shape != (domain.n_vertices,):
        raise DimensionError(f"map has shape {fmap.shape}, expected ({domain.n_vertices},)")
    if not np.all(np.isfinite(fmap)):
        raise SingularityError("map contains non-finite values")
    m, n = domain.m, domain.n
    f = domain.faces
    wx, wy = fmap.real[f], fmap.imag[f]
    src = domain.positions[f]

    det = (wx[:, 1] - wx[:, 0]) * (wy[:, 2] - wy[:, 0]) - (wx[:, 2] - wx[:, 0]) * (wy[:, 1] - wy[:, 0])
    x0 = np.clip(np.ceil(wx.min(1) - _INSIDE_EPS), 0, m - 1).astype(np.int64)
    x1 = np.clip(np.floor(wx.max(1) + _INSIDE_EPS), 0, m - 1).astype(np.int64)
    y0 = np.clip(np.ceil(wy.min(1) - _INSIDE_EPS), 0, n - 1).astype(np.int64)
    y1 = np.clip(np.floor(wy.max(1) + _INSIDE_EPS), 0, n - 1).astype(np.int64)
    nx = np.maximum(x1 - x0 + 1, 0)
    ny = np.maximum(y1 - y0 + 1, 0)
    # bounding boxes that fell entirely outside the image after clipping
    nx[wx.max(1) < -_INSIDE_EPS] = 0
    ny[wy.max(1) < -_INSIDE_EPS] = 0
    nx[wx.min(1) > m - 1 + _INSIDE_EPS] = 0
    ny[wy.min(1) > n - 1 + _INSIDE_EPS] = 0
    count = np.where(np.abs(det) > 1e-14, nx * ny, 0)

    face = np.repeat(np.arange(f.shape[0]), count)
    start = np.repeat(np.cumsum(count) - count, count)
    local = np.arange(face.size) - start
    px = x0[face] + local % nx[face]
    py = y0[face] + local // nx[face]

    ax, ay = wx[face, 0], wy[face, 0]
    dx, dy = px - ax, py - ay
    d = det[face]
    l1 = (dx * (wy[face, 2] - ay) - (wx[face, 2] - ax) * dy) / d
    l2 = ((wx[face, 1] - ax) * dy - dx * (wy[face, 1] - ay)) / d
    l0 = 1.0 - l1 - l2
    inside = (l0 >= -_INSIDE_EPS) & (l1 >= -_INSIDE_EPS) & (l2 >= -_INSIDE_EPS)
    face, px, py = face[inside], px[inside], py[inside]
    l0, l1, l2 = l0[inside], l1[inside], l2[inside]
    s = l0 * src[face, 0] + l1 * src[face, 1] + l2 * src[face, 2]

    covered = np.zeros((n, m), dtype=bool)
    source = np.zeros((n, m), dtype=complex)
    covered[py, px] = True
    source[py, px] = s
    return covered, source


def _bilinear(image, x, y):
    n, m = image.shape
    x = np.clip(x, 0, m - 1)
    y = np.clip(y, 0, n - 1)
    i0 = np.floor(x).astype(np.int64)
    j0 = np.floor(y).astype(np.int64)
    i1 = np.minimum(i0 + 1, m - 1)
    j1 = np.minimum(j0 + 1, n - 1)
    fx = x - i0
    fy = y - j0
    img = image.astype(float, copy=False)
    return (
        (1 - fx) * (1 - fy) * img[j0, i0]
        + fx * (1 - fy) * img[j0, i1]
        + (1 - fx) * fy * img[j1, i0]
        + fx * fy * img[j1, i1]
    )


def warp_image(image, fmap, domain):
    """Deform ``image`` by pushing it forward through ``fmap``.

    Output pixel ``p`` takes the bilinearly sampled source value at
    ``fmap^{-1}(p)``; pixels outside the deformed mesh keep their original
    value.  Integer images come back rounded in their own dtype.
    """
    image = np.asarray(image)
    if image.shape != (domain.n, domain.m):
        raise DimensionError(f"image shape {image.shape} does not match the {domain.m}x{domain.n} grid")
    covered, source = _pullback(fmap, domain)
    out = image.astype(float)
    out[covered] = _bilinear(image, source.real[covered], source.imag[covered])
    if np.issubdtype(image.dtype, np.integer):
        info = np.iinfo(image.dtype)
        return np.clip(np.rint(out), info.min, info.max).astype(image.dtype)
    return out.astype(image.dtype, copy=False)


def invert_map(fmap, domain):
    """Numerical inverse of a bijective piecewise-linear map, sampled at the vertices."""
    covered, source = _pullback(fmap, domain)
    inv = domain.positions.copy()
    flat_cov = covered.ravel()
    inv[flat_cov] = source.ravel()[flat_cov]
    return inv
