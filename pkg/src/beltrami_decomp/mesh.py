"""Regular triangulation of an image grid and per-face derivatives of
piecewise-linear maps.

Vertices sit at pixel centres with unit spacing, origin at the lower-left
pixel: vertex ``j * m + i`` is the point ``(x, y) = (i, j)``.  Every grid
cell is split along its lower-left to upper-right diagonal into a lower
triangle ``(p00, p10, p11)`` and an upper triangle ``(p00, p11, p01)``;
both are counterclockwise.  Cells are visited row by row, lower triangle
first, so face indices (and therefore descriptor rows) are reproducible.

Maps are plain complex arrays of length ``|V|`` holding ``u + i v``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularityError

# below this |signed area| a face is treated as degenerate
AREA_EPS = 1e-14


@dataclass(frozen=True, eq=False)
class TriangulatedDomain:
    """Immutable triangulated ``m x n`` pixel grid.

    Attributes
    ----------
    m, n : int
        Width and height in pixels.
    vertices : ndarray, shape (m*n, 2)
        Pixel-centre coordinates.
    faces : ndarray, shape (2(m-1)(n-1), 3)
        Counterclockwise vertex triples.
    boundary : ndarray
        Sorted indices of the vertices on the rectangle border.
    areas : ndarray, shape (|F|,)
        Face areas (all 1/2 on this grid).
    grad_x, grad_y : ndarray, shape (|F|, 3)
        x- and y-derivatives of the three hat functions on every face.
    """

    m: int
    n: int
    vertices: np.ndarray
    faces: np.ndarray
    boundary: np.ndarray
    boundary_mask: np.ndarray
    areas: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray

    @property
    def n_vertices(self):
        return self.m * self.n

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def interior(self):
        return np.flatnonzero(~self.boundary_mask)

    @property
    def positions(self):
        """Identity embedding as a complex vector."""
        return self.vertices[:, 0] + 1j * self.vertices[:, 1]

    def identity_map(self):
        return self.positions.copy()

    def face_centroids(self):
        return self.vertices[self.faces].mean(axis=1)


def build_domain(m, n):
    """Triangulate an ``m x n`` pixel grid (``m, n >= 2``)."""
    if int(m) != m or int(n) != n:
        raise DimensionError(f"grid dimensions must be integers, got {m}x{n}")
    m, n = int(m), int(n)
    if m < 2 or n < 2:
        raise DimensionError(f"grid must be at least 2x2, got {m}x{n}")

    jj, ii = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
    vertices = np.column_stack([ii.ravel(), jj.ravel()]).astype(float)

    ci, cj = np.meshgrid(np.arange(m - 1), np.arange(n - 1), indexing="xy")
    p00 = (cj * m + ci).ravel()
    p10 = p00 + 1
    p01 = p00 + m
    p11 = p00 + m + 1
    lower = np.column_stack([p00, p10, p11])
    upper = np.column_stack([p00, p11, p01])
    faces = np.empty((2 * p00.size, 3), dtype=np.int64)
    faces[0::2] = lower
    faces[1::2] = upper

    mask = np.zeros(m * n, dtype=bool)
    mask[(ii.ravel() == 0) | (ii.ravel() == m - 1)] = True
    mask[(jj.ravel() == 0) | (jj.ravel() == n - 1)] = True

    areas, gx, gy = _hat_gradients(vertices, faces)
    for arr in (vertices, faces, mask, areas, gx, gy):
        arr.flags.writeable = False
    boundary = np.flatnonzero(mask)
    boundary.flags.writeable = False
    return TriangulatedDomain(m, n, vertices, faces, boundary, mask, areas, gx, gy)


def _hat_gradients(vertices, faces):
    # grad(phi_i) = rot90(v_{i+2} - v_{i+1}) / (2A): inward normal of the opposite edge
    x = vertices[faces, 0]
    y = vertices[faces, 1]
    signed2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    nxt = [1, 2, 0]
    prv = [2, 0, 1]
    gx = (y[:, nxt] - y[:, prv]) / signed2[:, None]
    gy = (x[:, prv] - x[:, nxt]) / signed2[:, None]
    return 0.5 * signed2, gx, gy


def face_jacobian(fmap, domain):
    """Affine Jacobian of a piecewise-linear map on every face.

    Solves, per face, ``[v1 - v0, v2 - v0]^T [[a, b], [c, d]]^T`` equal to the
    image edge differences, i.e. ``J E = W`` with ``E`` the domain edge
    matrix and ``W`` the image edge matrix.

    Returns
    -------
    (a, b, c, d) : tuple of ndarray, each shape (|F|,)
        ``u = a x + b y + r`` and ``v = c x + d y + q`` on each face.
    """
    fmap = _as_map(fmap, domain)
    f = domain.faces
    p = domain.vertices
    e1 = p[f[:, 1]] - p[f[:, 0]]
    e2 = p[f[:, 2]] - p[f[:, 0]]
    det = e1[:, 0] * e2[:, 1] - e2[:, 0] * e1[:, 1]
    bad = np.abs(det) < AREA_EPS
    if bad.any():
        face = int(np.flatnonzero(bad)[0])
        raise SingularityError(f"face {face} has zero area", face=face)
    w1 = fmap[f[:, 1]] - fmap[f[:, 0]]
    w2 = fmap[f[:, 2]] - fmap[f[:, 0]]
    # J = W E^{-1}, with E^{-1} = [[e2y, -e2x], [-e1y, e1x]] / det
    a = (w1.real * e2[:, 1] - w2.real * e1[:, 1]) / det
    b = (-w1.real * e2[:, 0] + w2.real * e1[:, 0]) / det
    c = (w1.imag * e2[:, 1] - w2.imag * e1[:, 1]) / det
    d = (-w1.imag * e2[:, 0] + w2.imag * e1[:, 0]) / det
    return a, b, c, d


def check_orientation(fmap, domain):
    """Per-face Jacobian determinants and a global orientation flag.

    The flag is True iff every determinant is strictly positive.
    """
    a, b, c, d = face_jacobian(fmap, domain)
    det = a * d - b * c
    return det, bool(np.all(det > 0))


def _as_map(fmap, domain):
    fmap = np.asarray(fmap)
    if fmap.ndim != 1 or fmap.shape[0] != domain.n_vertices:
        raise DimensionError(
            f"map has shape {fmap.shape}, expected ({domain.n_vertices},)"
        )
    return fmap.astype(complex, copy=False)
