import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cpa_velocity, rk4_flow
from timepoint.cpab import (
    CpabTransform,
    Tessellation,
    build_prior,
    grid,
    inverse_point,
    sample_theta,
    transform_point,
    warp_keypoints,
    warp_signal,
)


def test_tessellation_layout():
    t = Tessellation(16)
    assert t.dim == 15
    assert np.allclose(t.vertices, np.linspace(0, 1, 17))
    assert t.interior.shape == (15,)


def test_prior_kernel_entries():
    p = build_prior()
    assert p.covariance.shape == (15, 15)
    assert np.allclose(np.diag(p.covariance), 0.25)
    # neighbours one cell apart: 0.25 * exp(-1/2)
    assert p.covariance[0, 1] == pytest.approx(0.25 * np.exp(-0.5), abs=1e-12)
    assert p.covariance[0, 1] == pytest.approx(0.15163, abs=1e-5)
    assert np.allclose(p.cholesky_factor @ p.cholesky_factor.T, p.covariance, atol=1e-8)


def test_prior_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_prior(n_cells=1)
    with pytest.raises(ValueError):
        build_prior(sigma_var=0.0)


def test_sample_covariance_matches_prior():
    p = build_prior()
    rng = np.random.default_rng(0)
    draws = np.stack([sample_theta(p, rng) for _ in range(20000)])
    assert np.allclose(draws.var(axis=0), 0.25, rtol=0.05)
    emp = np.cov(draws.T)
    assert np.abs(emp - p.covariance).max() < 0.02


def test_sample_theta_is_seeded():
    p = build_prior()
    assert np.array_equal(sample_theta(p, 5), sample_theta(p, 5))
    assert not np.array_equal(sample_theta(p, 5), sample_theta(p, 6))


def test_identity_at_zero_theta():
    t = CpabTransform(np.zeros(15))
    x = grid(4096)
    assert np.array_equal(t(x), x)
    assert np.array_equal(t.inverse(x), x)


def test_theta_size_checked():
    with pytest.raises(ValueError):
        CpabTransform(np.zeros(4))


def test_boundaries_are_fixed(prior):
    t = CpabTransform(sample_theta(prior, 3))
    assert transform_point(t, 0.0) == 0.0
    assert transform_point(t, 1.0) == 1.0


def test_domain_checked(prior):
    t = CpabTransform(sample_theta(prior, 3))
    with pytest.raises(ValueError):
        transform_point(t, 1.5)
    with pytest.raises(ValueError):
        inverse_point(t, -0.1)


def test_scalar_in_scalar_out(prior):
    t = CpabTransform(sample_theta(prior, 3))
    assert isinstance(transform_point(t, 0.3), float)


def test_matches_rk4(prior):
    theta = sample_theta(prior, 11)
    t = CpabTransform(theta)
    x = np.linspace(0.0, 1.0, 41)
    ref = rk4_flow(cpa_velocity(theta, 16), x, h=1e-4)
    assert np.abs(t(x) - ref).max() < 1e-6


def test_constant_velocity_cell_has_linear_flow():
    # equal interior velocities give zero slope in the middle cells
    theta = np.zeros(15)
    theta[5:9] = 0.4
    t = CpabTransform(theta)
    v = 0.4 / 16
    x0 = 7.2 / 16
    # stays inside the flat region for one unit of time
    assert t(x0) == pytest.approx(x0 + v, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_monotone_and_invertible(seed):
    t = CpabTransform(sample_theta(build_prior(), seed))
    x = grid(513)
    y = t(x)
    assert np.all(np.diff(y) > 0)
    assert np.abs(t.inverse(y) - x).max() < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 0.9))
def test_flow_is_a_semigroup(seed, s):
    t = CpabTransform(sample_theta(build_prior(), seed))
    x = grid(101)
    two_step = transform_point(t, transform_point(t, x, s), 1.0 - s)
    assert np.abs(two_step - t(x)).max() < 1e-10


def test_negated_theta_is_inverse(prior):
    t = CpabTransform(sample_theta(prior, 2))
    x = grid(257)
    assert np.allclose(t.negated()(t(x)), x, atol=1e-10)


def test_warp_signal_identity_and_shape(prior):
    x = np.sin(np.linspace(0, 6, 512))
    assert np.array_equal(warp_signal(x, CpabTransform(np.zeros(15))), x)
    out = warp_signal(x, CpabTransform(sample_theta(prior, 4)))
    assert out.shape == x.shape
    assert out[0] == x[0] and out[-1] == x[-1]


def test_warp_keypoints_follow_the_signal(prior):
    n = 512
    t = CpabTransform(sample_theta(prior, 9))
    mask = np.zeros(n, dtype=np.uint8)
    mask[[40, 200, 333, 480]] = 1
    new_mask, pairs = warp_keypoints(mask, t)
    assert new_mask.sum() == len(pairs) == 4
    for p, q in pairs:
        # the warped signal at q samples the original near p
        assert abs(t(q / (n - 1)) * (n - 1) - p) < 3.0
        assert abs(t.inverse(p / (n - 1)) * (n - 1) - q) <= 0.5


def test_warp_keypoints_collision_keeps_lowest_source():
    # a strong compression squeezes neighbouring keypoints together
    theta = np.zeros(15)
    theta[6] = 6.0
    t = CpabTransform(theta)
    mask = np.zeros(64, dtype=np.uint8)
    mask[[26, 27, 28]] = 1
    new_mask, pairs = warp_keypoints(mask, t)
    sources = [p for p, _ in pairs]
    targets = [q for _, q in pairs]
    assert len(set(targets)) == len(targets)
    assert sources == sorted(sources)
    assert new_mask.sum() == len(pairs) <= 3
