"""Model pmfs and grid construction."""

import math

import numpy as np
import pytest
from scipy.special import ndtr

import consist
from consist.models import step_axis


# --- gsd pmf ---------------------------------------------------------------

def test_gsd_point_masses_at_scale_ends():
    assert np.array_equal(consist.gsd_pmf(1.0, 0.3), [1, 0, 0, 0, 0])
    assert np.array_equal(consist.gsd_pmf(5.0, 1.0), [0, 0, 0, 0, 1])


def test_gsd_max_variance_is_endpoint_split():
    # rho=0 at mean 3: all mass on {1, 5}
    assert np.allclose(consist.gsd_pmf(3.0, 0.0), [0.5, 0, 0, 0, 0.5], atol=1e-15)


def test_gsd_min_variance_is_adjacent_split():
    assert np.allclose(consist.gsd_pmf(2.5, 1.0), [0, 0.5, 0.5, 0, 0], atol=1e-15)


def test_gsd_binomial_interior_point():
    expected = np.array([1, 4, 6, 4, 1]) / 16.0
    assert np.allclose(consist.gsd_pmf(3.0, 0.75), expected, atol=1e-15)


def test_gsd_moments_sweep():
    scores = np.arange(1, 6)
    rng = np.random.default_rng(1830)
    for _ in range(2000):
        psi = rng.uniform(1.0, 5.0)
        rho = rng.uniform(0.0, 1.0)
        p = consist.gsd_pmf(psi, rho)
        vmin, vmax = consist.gsd_variance_bounds(psi)
        target_var = rho * vmin + (1.0 - rho) * vmax
        mean = float(scores @ p)
        var = float((scores - mean) ** 2 @ p)
        assert p.min() >= 0.0 and abs(p.sum() - 1.0) < 1e-12
        assert abs(mean - psi) <= 1e-9
        assert abs(var - target_var) <= 1e-9


def test_gsd_integer_mean_reaches_zero_variance():
    for psi in (2.0, 3.0, 4.0):
        p = consist.gsd_pmf(psi, 1.0)
        assert np.allclose(p, np.eye(5)[int(psi) - 1], atol=1e-15)


def test_gsd_variance_bounds():
    assert consist.gsd_variance_bounds(3.0) == (0.0, 4.0)
    assert consist.gsd_variance_bounds(2.5) == (0.25, 3.75)
    assert consist.gsd_variance_bounds(1.0) == (0.0, 0.0)


def test_gsd_domain_errors():
    with pytest.raises(ValueError):
        consist.gsd_pmf(0.5, 0.5)
    with pytest.raises(ValueError):
        consist.gsd_pmf(3.0, 1.2)
    with pytest.raises(ValueError):
        consist.gsd_variance_bounds(5.5)


# --- qnormal pmf -----------------------------------------------------------

def _qnormal_quad(mu, sigma):
    # independent check through the normal CDF at the bin edges
    cuts = [-math.inf, 1.5, 2.5, 3.5, 4.5, math.inf]
    cdf = [0.0 if c == -math.inf else 1.0 if c == math.inf else ndtr((c - mu) / sigma)
           for c in cuts]
    return np.diff(cdf)


def test_qnormal_centered_symmetric():
    p = consist.qnormal_pmf(3.0, 1.0)
    assert np.allclose(p, p[::-1], atol=0)
    assert abs(p[0] - 0.06680720126885807) < 1e-15
    assert abs(p[2] - 0.3829249225480262) < 1e-15


def test_qnormal_low_mean():
    p = consist.qnormal_pmf(1.0, 1.0)
    assert abs(p[0] - 0.6914624612740131) < 1e-15


def test_qnormal_tiny_sigma_keeps_tail_mass_positive():
    # naive CDF differences underflow to exactly zero here
    p = consist.qnormal_pmf(1.0, 0.1)
    assert p[0] > 0.99
    assert all(v > 0.0 for v in p[1:])
    assert abs(p.sum() - 1.0) < 1e-12


def test_qnormal_mirror_symmetry():
    for mu, sigma in [(2.5, 0.7), (1.25, 0.31), (4.0, 1.9)]:
        a = consist.qnormal_pmf(mu, sigma)
        b = consist.qnormal_pmf(6.0 - mu, sigma)
        # dyadic means mirror exactly, so no tolerance needed
        assert np.array_equal(a, b[::-1])


def test_qnormal_matches_cdf_differences():
    rng = np.random.default_rng(77)
    for _ in range(200):
        mu = rng.uniform(1.0, 5.0)
        sigma = rng.uniform(0.1, 2.0)
        assert np.allclose(
            consist.qnormal_pmf(mu, sigma), _qnormal_quad(mu, sigma), atol=1e-13
        )


def test_qnormal_sigma_floor():
    with pytest.raises(ValueError):
        consist.qnormal_pmf(3.0, 0.0)


# --- pmf validation --------------------------------------------------------

def test_validate_pmf_accepts_valid():
    consist.validate_pmf([0.2, 0.2, 0.2, 0.2, 0.2])


def test_validate_pmf_rejects_bad_rows():
    with pytest.raises(ValueError):
        consist.validate_pmf([0.5, 0.5, 0.0, 0.0, 0.1])  # sums to 1.1
    with pytest.raises(ValueError):
        consist.validate_pmf([-0.1, 0.5, 0.2, 0.2, 0.2])
    with pytest.raises(ValueError):
        consist.validate_pmf([1.0, 0.0, 0.0])


# --- grids -----------------------------------------------------------------

def test_axis_endpoints_exact():
    ax = step_axis(1.0, 5.0, 0.01)
    assert len(ax) == 401
    assert ax[0] == 1.0 and ax[-1] == 5.0


def test_build_grid_is_lexicographic():
    grid = consist.build_grid("gsd", [3.0, 1.0, 2.0], [0.5, 0.0])
    assert len(grid) == 6
    keys = list(map(tuple, grid.params))
    assert keys == sorted(keys)
    grid.validate()


def test_build_grid_rejects_unknown_model():
    with pytest.raises(ValueError):
        consist.build_grid("beta", [1.0], [0.5])


def test_grid_validate_catches_disorder():
    grid = consist.build_grid("gsd", [1.0, 2.0], [0.0, 1.0])
    grid.params = grid.params[::-1].copy()
    with pytest.raises(ValueError):
        grid.validate()


def test_default_grid_shapes():
    gsd = consist.default_gsd_grid()
    assert len(gsd) == 401 * 101
    qn = consist.default_qnormal_grid()
    assert len(qn) == 401 * 191


def test_default_gsd_grid_rows_are_valid_pmfs():
    grid = consist.default_gsd_grid()
    assert grid.pmfs.min() >= 0.0
    assert np.max(np.abs(grid.pmfs.sum(axis=1) - 1.0)) < 1e-12
    # moment contract holds across the whole lattice
    scores = np.arange(1, 6)
    means = grid.pmfs @ scores
    assert np.max(np.abs(means - grid.params[:, 0])) < 1e-9


def test_default_qnormal_grid_rows_are_valid_pmfs():
    grid = consist.default_qnormal_grid()
    assert grid.pmfs.min() >= 0.0
    assert np.max(np.abs(grid.pmfs.sum(axis=1) - 1.0)) < 1e-12
