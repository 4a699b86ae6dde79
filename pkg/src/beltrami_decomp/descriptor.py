"""Longitudinal deformation descriptors.

A :class:`BeltramiDescriptor` stacks the per-face Beltrami fields of a
sequence of maps as columns (|F| rows, one column per frame).  The
:class:`DisplacementDescriptor` is the vector-field baseline: per-vertex
displacements ``f_j - id`` as complex numbers.
"""

from dataclasses import dataclass

import numpy as np

from .beltrami import compute_beltrami
from .errors import ConformalitySingularityError, DimensionError, ReconstructionError
from .lbs import clamp_field, solve_lbs
from .mesh import build_domain


@dataclass(frozen=True, eq=False)
class _Descriptor:
    matrix: np.ndarray
    m: int
    n: int

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def n_frames(self):
        return self.matrix.shape[1]

    def domain(self):
        return build_domain(self.m, self.n)

    def column(self, j):
        return self.matrix[:, j]

    def __post_init__(self):
        rows = self.expected_rows(self.m, self.n)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != rows:
            raise DimensionError(
                f"{self.kind} descriptor for a {self.m}x{self.n} grid needs {rows} rows, "
                f"got shape {self.matrix.shape}"
            )

    def permute(self, order):
        return type(self)(self.matrix[:, list(order)], self.m, self.n)


class BeltramiDescriptor(_Descriptor):
    """|F| x t complex matrix of per-face Beltrami coefficients."""

    kind = "beltrami"

    @staticmethod
    def expected_rows(m, n):
        return 2 * (m - 1) * (n - 1)

    @property
    def sup_norm(self):
        return float(np.abs(self.matrix).max()) if self.matrix.size else 0.0

    @property
    def admissible(self):
        return self.sup_norm < 1.0


class DisplacementDescriptor(_Descriptor):
    """|V| x t complex matrix of vertex displacements."""

    kind = "displacement"

    @staticmethod
    def expected_rows(m, n):
        return m * n


def build_descriptor(maps, domain):
    """Beltrami descriptor whose column ``j`` is the Beltrami field of ``maps[j]``."""
    cols = np.empty((domain.n_faces, len(maps)), dtype=complex)
    for j, fmap in enumerate(maps):
        try:
            cols[:, j] = compute_beltrami(fmap, domain)
        except ConformalitySingularityError as exc:
            raise ConformalitySingularityError(
                f"frame {j}: {exc}", face=exc.face, frame=j
            ) from exc
    return BeltramiDescriptor(cols, domain.m, domain.n)


def build_displacement_descriptor(maps, domain):
    base = domain.positions
    cols = np.empty((domain.n_vertices, len(maps)), dtype=complex)
    for j, fmap in enumerate(maps):
        fmap = np.asarray(fmap)
        if fmap.shape != base.shape:
            raise DimensionError(f"map {j} has shape {fmap.shape}, expected {base.shape}")
        cols[:, j] = fmap - base
    return DisplacementDescriptor(cols, domain.m, domain.n)


def reconstruct_maps(descriptor, domain=None, boundary=None, clamp=True):
    """Solve the LBS column by column (identity boundary unless ``boundary`` is given).

    Entries with ``|mu| >= 1`` are clamped radially when ``clamp`` is set;
    use :func:`beltrami_decomp.lbs.clamp_field` beforehand to count them.
    A failing column raises :class:`ReconstructionError` naming the column.
    """
    matrix = np.asarray(getattr(descriptor, "matrix", descriptor))
    if domain is None:
        domain = descriptor.domain()
    if matrix.ndim != 2 or matrix.shape[0] != domain.n_faces:
        raise DimensionError(f"descriptor shape {matrix.shape} does not match {domain.n_faces} faces")
    maps = []
    for j in range(matrix.shape[1]):
        col = matrix[:, j]
        if clamp:
            col, _ = clamp_field(col)
        try:
            maps.append(solve_lbs(domain, col, boundary))
        except Exception as exc:
            raise ReconstructionError(
                f"column {j}: {exc}", column=j, residual=getattr(exc, "residual", None)
            ) from exc
    return maps


def displacement_maps(descriptor, domain=None):
    """Maps ``id + column`` of a displacement descriptor."""
    if domain is None:
        domain = descriptor.domain()
    matrix = np.asarray(getattr(descriptor, "matrix", descriptor))
    return [domain.positions + matrix[:, j] for j in range(matrix.shape[1])]


def descriptor_distance(L1, L2):
    """Frobenius distance between two descriptors (or plain matrices)."""
    a = np.asarray(getattr(L1, "matrix", L1))
    b = np.asarray(getattr(L2, "matrix", L2))
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))
