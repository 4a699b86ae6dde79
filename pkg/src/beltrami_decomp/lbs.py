"""Linear Beltrami Solver.

Given a Beltrami field on the faces of a :class:`TriangulatedDomain` and
Dirichlet data on the rectangle border, the coordinate functions ``u`` and
``v`` of the reconstructed map both solve ``div(A grad w) = 0`` with the
per-face symmetric tensor ``A = [[g1, g2], [g2, g3]]`` built from mu.  The
discretisation is the area-weighted P1 stiffness matrix, so a piecewise
linear map is reproduced exactly from its own Beltrami field.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BoundaryMismatchError, DimensionError, InadmissibleError, ReconstructionError

log = logging.getLogger(__name__)

CLAMP_RADIUS = 0.999
CONDITIONING_LIMIT = 0.95
RESIDUAL_TOL = 1e-10


class ConditioningWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LbsSystem:
    """Assembled LBS system over all vertices.

    ``matrix`` holds identity rows on boundary vertices; ``rhs`` is complex so
    that the real and imaginary parts are the right-hand sides of the ``u``
    and ``v`` channels, which share the matrix.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    boundary_values: np.ndarray
    stiffness: sp.csr_matrix

    @property
    def rhs_u(self):
        return self.rhs.real

    @property
    def rhs_v(self):
        return self.rhs.imag


def gamma_coefficients(mu):
    """Entries ``(g1, g2, g3)`` of the LBS tensor for ``mu = rho + i tau``.

    Works elementwise on arrays.
    """
    mu = np.asarray(mu, dtype=complex)
    rho, tau = mu.real, mu.imag
    den = 1.0 - rho**2 - tau**2
    if np.any(den <= 0):
        raise InadmissibleError(f"|mu| >= 1 (max |mu| = {np.abs(mu).max():.6g})")
    g1 = ((rho - 1.0) ** 2 + tau**2) / den
    g2 = -2.0 * tau / den
    g3 = ((1.0 + rho) ** 2 + tau**2) / den
    if mu.ndim == 0:
        return float(g1), float(g2), float(g3)
    return g1, g2, g3


def clamp_field(field, radius=CLAMP_RADIUS):
    """Radially pull entries with ``|mu| >= 1`` back to modulus ``radius``.

    Returns the clamped copy and the number of entries that were moved.
    Works on fields and on whole descriptor matrices.
    """
    field = np.array(field, dtype=complex, copy=True)
    mag = np.abs(field)
    hit = mag >= 1.0
    count = int(hit.sum())
    if count:
        field[hit] *= radius / mag[hit]
        log.warning("clamped %d Beltrami entries with |mu| >= 1 to %.3f", count, radius)
    return field, count


def stiffness_matrix(domain, field):
    """Area-weighted ``sum_T A_T grad(phi_i)^T A(mu_T) grad(phi_j)``."""
    field = np.asarray(field, dtype=complex)
    if field.shape != (domain.n_faces,):
        raise DimensionError(f"field has shape {field.shape}, expected ({domain.n_faces},)")
    g1, g2, g3 = gamma_coefficients(field)
    gx, gy = domain.grad_x, domain.grad_y
    w = domain.areas
    # local 3x3 blocks, shape (|F|, 3, 3)
    loc = (
        g1[:, None, None] * gx[:, :, None] * gx[:, None, :]
        + g2[:, None, None] * (gx[:, :, None] * gy[:, None, :] + gy[:, :, None] * gx[:, None, :])
        + g3[:, None, None] * gy[:, :, None] * gy[:, None, :]
    ) * w[:, None, None]
    f = domain.faces
    rows = np.repeat(f, 3, axis=1).ravel()
    cols = np.tile(f, (1, 3)).ravel()
    nv = domain.n_vertices
    return sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()


def _boundary_values(domain, boundary):
    """Normalise the boundary spec to a complex array aligned with ``domain.boundary``."""
    if boundary is None:
        return domain.positions[domain.boundary]
    if isinstance(boundary, dict):
        keys = set(int(k) for k in boundary)
        expected = set(domain.boundary.tolist())
        if keys != expected:
            missing = len(expected - keys)
            extra = len(keys - expected)
            raise BoundaryMismatchError(
                f"boundary data must cover exactly the {len(expected)} boundary vertices "
                f"({missing} missing, {extra} not on the boundary)"
            )
        return np.array([boundary[int(k)] for k in domain.boundary], dtype=complex)
    values = np.asarray(boundary, dtype=complex)
    if values.shape == (domain.n_vertices,):
        return values[domain.boundary]
    if values.shape != domain.boundary.shape:
        raise BoundaryMismatchError(
            f"boundary array has shape {values.shape}; expected {domain.boundary.shape} "
            f"or ({domain.n_vertices},)"
        )
    return values


def _check_field(field, clamp):
    field = np.asarray(field, dtype=complex)
    peak = np.abs(field).max() if field.size else 0.0
    if peak >= 1.0:
        if not clamp:
            raise InadmissibleError(f"max |mu| = {peak:.6g} >= 1")
        field, _ = clamp_field(field)
        peak = np.abs(field).max()
    if peak > CONDITIONING_LIMIT:
        warnings.warn(
            f"max |mu| = {peak:.4f} > {CONDITIONING_LIMIT}; LBS system is ill-conditioned",
            ConditioningWarning,
            stacklevel=3,
        )
    return field


def assemble_lbs(domain, field, boundary=None):
    """Assemble the Dirichlet LBS system for one Beltrami field.

    ``boundary`` may be None (identity on the border), a dict keyed by
    boundary vertex index, an array aligned with ``domain.boundary`` or a
    full-length map whose border values are used.
    """
    field = _check_field(field, clamp=False)
    bvals = _boundary_values(domain, boundary)
    K = stiffness_matrix(domain, field)
    mask = domain.boundary_mask
    keep = sp.diags((~mask).astype(float))
    ident = sp.diags(mask.astype(float))
    matrix = (keep @ K + ident).tocsr()
    rhs = np.zeros(domain.n_vertices, dtype=complex)
    rhs[domain.boundary] = bvals
    return LbsSystem(matrix, rhs, bvals, K)


def solve_lbs(domain, field, boundary=None, clamp=False):
    """Reconstruct the boundary-fixed piecewise-linear map with Beltrami field ``field``.

    Interior unknowns are obtained from the symmetric interior block by a
    sparse LU factorisation; both channels reuse the same factors.
    """
    field = _check_field(field, clamp=clamp)
    bvals = _boundary_values(domain, boundary)
    K = stiffness_matrix(domain, field)
    inner = domain.interior
    out = np.empty(domain.n_vertices, dtype=complex)
    out[domain.boundary] = bvals
    if inner.size == 0:
        return out

    K = K.tocsc()
    K_ii = K[inner][:, inner]
    K_ib = K[inner][:, domain.boundary]
    rhs = -(K_ib @ bvals)
    try:
        lu = spla.splu(K_ii.tocsc())
        x = lu.solve(rhs.real) + 1j * lu.solve(rhs.imag)
    except RuntimeError as exc:
        raise ReconstructionError(f"LBS factorisation failed: {exc}") from exc
    out[inner] = x

    resid = K_ii @ x - rhs
    scale = max(np.linalg.norm(rhs), np.abs(K_ii).max() * np.linalg.norm(x), 1e-300)
    rel = float(np.linalg.norm(resid) / scale)
    if not np.all(np.isfinite(x)) or rel > RESIDUAL_TOL:
        raise ReconstructionError(f"LBS solve residual {rel:.3e} above {RESIDUAL_TOL}", residual=rel)
    return out
