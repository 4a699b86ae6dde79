import numpy as np
import pytest

from beltrami_decomp.beltrami import (
    compute_beltrami,
    distortion_profile,
    is_admissible,
    max_dilation,
    sup_norm,
    wirtinger_derivatives,
)
from beltrami_decomp.errors import ConformalitySingularityError, InadmissibleError
from beltrami_decomp.mesh import check_orientation
from beltrami_decomp.synth import random_smooth_map

from conftest import affine_map


def test_identity_is_conformal(small):
    assert np.all(compute_beltrami(small.identity_map(), small) == 0)


def test_stretch_map(small):
    z = small.positions
    np.testing.assert_allclose(compute_beltrami(z + 0.5 * np.conj(z), small), 0.5, atol=1e-14)


def test_horizontal_scaling(small):
    np.testing.assert_allclose(compute_beltrami(affine_map(small, 2, 0, 0, 1), small), 1 / 3, atol=1e-14)


def test_wirtinger_of_z_and_conj(small):
    w = wirtinger_derivatives(small.positions, small)
    assert np.allclose(w.dz, 1) and np.allclose(w.dzbar, 0)
    w = wirtinger_derivatives(np.conj(small.positions), small)
    assert np.allclose(w.dz, 0) and np.allclose(w.dzbar, 1)


def test_wirtinger_ratio(small, rng):
    f = random_smooth_map(small, rng, max_mu=0.6)
    w = wirtinger_derivatives(f, small)
    np.testing.assert_allclose(w.dzbar / w.dz, compute_beltrami(f, small), atol=1e-12)


def test_anticonformal_is_singular(small):
    with pytest.raises(ConformalitySingularityError) as err:
        compute_beltrami(np.conj(small.positions), small)
    assert err.value.face == 0


def test_similarity_has_zero_mu(small, rng):
    p, q = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
    assert np.abs(compute_beltrami(p * small.positions + q, small)).max() < 1e-13


def test_invariant_under_postcomposed_similarity(small, rng):
    f = random_smooth_map(small, rng, max_mu=0.5)
    p, q = 0.7 - 1.3j, 4 + 2j
    np.testing.assert_allclose(compute_beltrami(p * f + q, small), compute_beltrami(f, small), atol=1e-12)


def test_modulus_below_one_iff_positive_determinant(small, rng):
    for _ in range(10):
        f = small.positions + 0.6 * (rng.normal(size=small.n_vertices) + 1j * rng.normal(size=small.n_vertices))
        det, _ = check_orientation(f, small)
        mu = compute_beltrami(f, small)
        assert np.array_equal(np.abs(mu) < 1, det > 0)


@pytest.mark.parametrize("peak,k", [(0.0, 1.0), (1 / 3, 2.0), (0.5, 3.0)])
def test_max_dilation(peak, k):
    assert max_dilation(np.array([0.1 * peak, peak * 1j])) == pytest.approx(k)


def test_max_dilation_rejects_inadmissible():
    with pytest.raises(InadmissibleError):
        max_dilation(np.array([0.2, 1.0]))


def test_admissibility_helpers():
    assert sup_norm(np.array([0.3, -0.4j])) == pytest.approx(0.4)
    assert is_admissible(np.array([0.99]))
    assert not is_admissible(np.array([1.0]))


@pytest.mark.parametrize("mu,want", [
    (0, (0, 1, -np.pi / 2, 1)),
    (0.5, (0, 1.5, -np.pi / 2, 0.5)),
    (0.3j, (np.pi / 4, 1.3, -np.pi / 4, 0.7)),
])
def test_distortion_profile(mu, want):
    assert distortion_profile(mu) == pytest.approx(want)


def test_distortion_profile_rejects_unit_modulus():
    with pytest.raises(InadmissibleError):
        distortion_profile(1j)
