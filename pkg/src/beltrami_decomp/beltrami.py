"""Beltrami coefficients, Wirtinger derivatives and distortion diagnostics
of piecewise-linear maps."""

from collections import namedtuple

import numpy as np

from .errors import ConformalitySingularityError, InadmissibleError
from .mesh import face_jacobian

# |f_z| below this on a face means mu is undefined there
DENOM_EPS = 1e-14

WirtingerPair = namedtuple("WirtingerPair", ["dz", "dzbar"])


def wirtinger_derivatives(fmap, domain):
    """Per-face ``f_z`` and ``f_zbar`` of a piecewise-linear map."""
    a, b, c, d = face_jacobian(fmap, domain)
    dz = 0.5 * ((a + d) + 1j * (c - b))
    dzbar = 0.5 * ((a - d) + 1j * (c + b))
    return WirtingerPair(dz, dzbar)


def compute_beltrami(fmap, domain):
    """Beltrami coefficient of ``fmap`` on every face of ``domain``.

    Raises
    ------
    ConformalitySingularityError
        If ``|(a + d) + i(c - b)| < 1e-14`` on some face.
    """
    a, b, c, d = face_jacobian(fmap, domain)
    num = (a - d) + 1j * (c + b)
    den = (a + d) + 1j * (c - b)
    bad = np.abs(den) < DENOM_EPS
    if bad.any():
        face = int(np.flatnonzero(bad)[0])
        raise ConformalitySingularityError(
            f"Beltrami coefficient undefined on face {face} (f_z = 0)", face=face
        )
    return num / den


def sup_norm(field):
    field = np.asarray(field)
    return float(np.abs(field).max()) if field.size else 0.0


def is_admissible(field):
    return sup_norm(field) < 1.0


def max_dilation(field):
    """Maximal dilation ``K = (1 + |mu|_inf) / (1 - |mu|_inf)``."""
    k = sup_norm(field)
    if k >= 1.0:
        raise InadmissibleError(f"max |mu| = {k:.6g} >= 1")
    return (1.0 + k) / (1.0 - k)


def distortion_profile(mu):
    """Directions and factors of maximal magnification and shrinking.

    Returns ``(angle_magnify, factor_magnify, angle_shrink, factor_shrink)``.
    """
    mu = complex(mu)
    r = abs(mu)
    if r >= 1.0:
        raise InadmissibleError(f"|mu| = {r:.6g} >= 1")
    theta = np.angle(mu)
    return theta / 2.0, 1.0 + r, (theta - np.pi) / 2.0, 1.0 - r
